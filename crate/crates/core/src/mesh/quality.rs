use crate::geometry::{det3, Point3};
use crate::mesh::{QualityStats, TetMesh};
use crate::{Error, Real, Result};

/// Scaled Jacobian of one element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledJacobian<T> {
    pub value: T,
    /// Set when an edge from corner 0 has zero length; `value` is then 0.
    pub degenerate: bool,
}

/// Scaled Jacobian evaluated at corner 0: `det[v1 v2 v3] / (|v1| |v2| |v3|)`
/// with `vj = xj - x0`.
///
/// The right-corner unit tet scores 1, a regular tet `1/sqrt(2)`, a flat
/// element 0, and the sign flips when the vertex order is inverted.
pub fn scaled_jacobian<T: Real>(p: &[Point3<T>; 4]) -> ScaledJacobian<T> {
    let v1 = p[1] - p[0];
    let v2 = p[2] - p[0];
    let v3 = p[3] - p[0];
    let denom = v1.norm() * v2.norm() * v3.norm();
    if !(denom > T::zero()) {
        return ScaledJacobian { value: T::zero(), degenerate: true };
    }
    ScaledJacobian { value: det3(v1, v2, v3) / denom, degenerate: false }
}

/// Scaled Jacobian of every element.
pub fn element_quality<T: Real>(mesh: &TetMesh<T>) -> Vec<ScaledJacobian<T>> {
    (0..mesh.tets.len()).map(|t| scaled_jacobian(&mesh.tet_points(t))).collect()
}

/// Statistics of the raw scaled Jacobian.
pub fn quality_stats<T: Real>(mesh: &TetMesh<T>) -> Result<QualityStats<T>> {
    let q = element_quality(mesh);
    let degenerate = q.iter().filter(|s| s.degenerate).count();
    let values: Vec<T> = q.into_iter().map(|s| s.value).collect();
    QualityStats::from_values(&values, degenerate)
}

/// Per-element ratio of deformed to baseline scaled Jacobian.
pub fn normalized_quality<T: Real>(
    deformed: &TetMesh<T>,
    baseline: &TetMesh<T>,
) -> Result<(Vec<T>, usize)> {
    if !deformed.same_connectivity(baseline) {
        return Err(Error::ConnectivityMismatch(format!(
            "deformed mesh has {} vertices / {} tets, baseline {} / {}",
            deformed.vertices.len(),
            deformed.tets.len(),
            baseline.vertices.len(),
            baseline.tets.len()
        )));
    }
    let mut degenerate = 0;
    let mut out = Vec::with_capacity(deformed.tets.len());
    for t in 0..deformed.tets.len() {
        let base = scaled_jacobian(&baseline.tet_points(t));
        if base.degenerate || base.value == T::zero() {
            return Err(Error::InvalidArgument(format!(
                "baseline element {t} has zero scaled Jacobian"
            )));
        }
        let cur = scaled_jacobian(&deformed.tet_points(t));
        if cur.degenerate {
            degenerate += 1;
        }
        out.push(cur.value / base.value);
    }
    Ok((out, degenerate))
}

/// Mean, min and max of the normalized scaled Jacobian over all elements.
pub fn normalized_quality_stats<T: Real>(
    deformed: &TetMesh<T>,
    baseline: &TetMesh<T>,
) -> Result<QualityStats<T>> {
    let (values, degenerate) = normalized_quality(deformed, baseline)?;
    QualityStats::from_values(&values, degenerate)
}
