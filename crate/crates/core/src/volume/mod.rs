//! Propagation of a boundary displacement through a tetrahedral volume,
//! either by a harmonic map per axis or by linear elasticity with
//! volume-based stiffening, plus deformation scheduling.

mod partition;

use std::time::{Duration, Instant};

use crate::geometry::{Point3, Vec3};
use crate::mesh::{normalized_quality_stats, DisplacementField, QualityStats, SurfaceMesh, TetMesh};
use crate::operators::{tet_gradients, tet_stiffness};
use crate::solve::{ReducedSolver, SolveConfig};
use crate::sparse::{SparseMatrix, TripletBuilder};
use crate::{Error, Real, Result};

pub use partition::{partition, Part, PartitionedMesh, CUT_FACE_TAG};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElasticParams<T> {
    /// Exponent of the volume stiffening `E_e = (mean V / V_e)^chi`.
    pub chi: T,
    pub poisson: T,
}

impl<T: Real> Default for ElasticParams<T> {
    fn default() -> Self {
        Self { chi: T::one(), poisson: T::lit(0.3) }
    }
}

impl<T: Real> ElasticParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.poisson > -T::one() && self.poisson < T::lit(0.5)) {
            return Err(Error::InvalidArgument(format!("Poisson ratio {} is outside (-1, 0.5)", self.poisson)));
        }
        if !(self.chi >= T::zero()) || !self.chi.is_finite() {
            return Err(Error::InvalidArgument(format!("stiffening exponent {} must be >= 0", self.chi)));
        }
        Ok(())
    }

    /// Lame parameters for Young's modulus `e`.
    pub fn lame(&self, e: T) -> (T, T) {
        let nu = self.poisson;
        let lambda = e * nu / ((T::one() + nu) * (T::one() - T::lit(2.0) * nu));
        let mu = e / (T::lit(2.0) * (T::one() + nu));
        (lambda, mu)
    }
}

/// Wall time spent in the phases of one volume solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DeformTimings {
    /// Element formation and assembly into the global matrix.
    pub assembly: Duration,
    /// Reduced-system extraction and factorization or preconditioner setup.
    pub setup: Duration,
    pub solve: Duration,
}

impl DeformTimings {
    pub fn total(&self) -> Duration {
        self.assembly + self.setup + self.solve
    }
}

impl std::ops::AddAssign for DeformTimings {
    fn add_assign(&mut self, o: Self) {
        self.assembly += o.assembly;
        self.setup += o.setup;
        self.solve += o.solve;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeformMethod<T> {
    Harmonic,
    Elasticity(ElasticParams<T>),
}

/// Boundary displacement expressed on volume vertices.
fn boundary_values<T: Real>(
    mesh: &TetMesh<T>,
    surface: &SurfaceMesh<T>,
    bc: &DisplacementField<T>,
) -> Result<(Vec<bool>, Vec<Vec3<T>>)> {
    bc.check_len(surface.vertex_count())?;
    let n = mesh.vertex_count();
    let mut constrained = vec![false; n];
    let mut values = vec![Vec3::zero(); n];
    for (s, &v) in surface.volume_vertex_of.iter().enumerate() {
        if v >= n {
            return Err(Error::ConnectivityMismatch(format!("surface vertex {s} maps to missing volume vertex {v}")));
        }
        constrained[v] = true;
        values[v] = bc.values[s];
    }
    if let Some(v) = mesh.boundary_mask().iter().zip(&constrained).position(|(b, c)| *b && !*c) {
        return Err(Error::InvalidArgument(format!("boundary vertex {v} has no prescribed displacement")));
    }
    Ok((constrained, values))
}

fn element_gradients<T: Real>(mesh: &TetMesh<T>, t: usize) -> Result<([Vec3<T>; 4], T)> {
    tet_gradients(&mesh.tet_points(t)).ok_or(Error::BadTet(t))
}

/// Scalar P1 stiffness assembled part by part into global numbering.
pub fn assemble_stiffness<T: Real>(pmesh: &PartitionedMesh<T>) -> Result<SparseMatrix<T>> {
    let n = pmesh.vertex_count();
    let mut b = TripletBuilder::with_capacity(n, n, 16 * pmesh.global.tet_count());
    for part in &pmesh.parts {
        let map = &part.local_to_global;
        for t in 0..part.mesh.tet_count() {
            let (g, vol) = element_gradients(&part.mesh, t).map_err(|_| Error::BadTet(part.global_tets[t]))?;
            let k = tet_stiffness(&g, vol);
            let tet = part.mesh.tets[t];
            for a in 0..4 {
                for c in 0..4 {
                    b.push(map[tet[a]], map[tet[c]], k[a][c]);
                }
            }
        }
    }
    Ok(b.build())
}

fn mean_abs_volume<T: Real>(mesh: &TetMesh<T>) -> T {
    let total: T = (0..mesh.tet_count()).map(|t| mesh.tet_volume(t).abs()).sum();
    total / T::count(mesh.tet_count().max(1))
}

/// Coupled linear-elasticity stiffness with unknowns ordered `3 v + axis`.
pub fn assemble_elasticity<T: Real>(pmesh: &PartitionedMesh<T>, params: &ElasticParams<T>) -> Result<SparseMatrix<T>> {
    params.validate()?;
    let n = 3 * pmesh.vertex_count();
    let vbar = mean_abs_volume(&pmesh.global);
    let mut b = TripletBuilder::with_capacity(n, n, 144 * pmesh.global.tet_count());
    for part in &pmesh.parts {
        let map = &part.local_to_global;
        for t in 0..part.mesh.tet_count() {
            let (g, vol) = element_gradients(&part.mesh, t).map_err(|_| Error::BadTet(part.global_tets[t]))?;
            let v = vol.abs();
            let e = if params.chi == T::zero() { T::one() } else { (vbar / v).powf(params.chi) };
            let (lambda, mu) = params.lame(e);
            let tet = part.mesh.tets[t];
            for a in 0..4 {
                for c in 0..4 {
                    let gg = g[a].dot(g[c]);
                    for i in 0..3 {
                        for j in 0..3 {
                            let mut k = lambda * g[a][i] * g[c][j] + mu * g[a][j] * g[c][i];
                            if i == j {
                                k += mu * gg;
                            }
                            b.push(3 * map[tet[a]] + i, 3 * map[tet[c]] + j, k * v);
                        }
                    }
                }
            }
        }
    }
    Ok(b.build())
}

/// Harmonic extension of `bc` (indexed like `surface`) into the volume,
/// one scalar solve per axis.
pub fn deform_harmonic<T: Real>(
    pmesh: &PartitionedMesh<T>,
    surface: &SurfaceMesh<T>,
    bc: &DisplacementField<T>,
    config: &SolveConfig<T>,
) -> Result<DisplacementField<T>> {
    harmonic_timed(pmesh, surface, bc, config).map(|(d, _)| d)
}

fn harmonic_timed<T: Real>(
    pmesh: &PartitionedMesh<T>,
    surface: &SurfaceMesh<T>,
    bc: &DisplacementField<T>,
    config: &SolveConfig<T>,
) -> Result<(DisplacementField<T>, DeformTimings)> {
    let (constrained, known) = boundary_values(&pmesh.global, surface, bc)?;
    if !constrained.iter().any(|&c| c) {
        return Err(Error::Singular("no boundary vertices to constrain".into()));
    }
    let mut timings = DeformTimings::default();
    let clock = Instant::now();
    let k = assemble_stiffness(pmesh)?;
    timings.assembly = clock.elapsed();
    let clock = Instant::now();
    let solver = ReducedSolver::new(&k, &constrained, config)?;
    timings.setup = clock.elapsed();
    let clock = Instant::now();
    let n = pmesh.vertex_count();
    let zero = vec![T::zero(); n];
    let mut comps: [Vec<T>; 3] = Default::default();
    for (axis, comp) in comps.iter_mut().enumerate() {
        let kn: Vec<T> = known.iter().map(|v| v[axis]).collect();
        *comp = solver.solve(&zero, &kn, None)?.x;
    }
    timings.solve = clock.elapsed();
    Ok((DisplacementField::from_components(&comps), timings))
}

/// Linear elastic extension of `bc` with a single coupled solve.
pub fn deform_elastic<T: Real>(
    pmesh: &PartitionedMesh<T>,
    surface: &SurfaceMesh<T>,
    bc: &DisplacementField<T>,
    params: &ElasticParams<T>,
    config: &SolveConfig<T>,
) -> Result<DisplacementField<T>> {
    elastic_timed(pmesh, surface, bc, params, config).map(|(d, _)| d)
}

fn elastic_timed<T: Real>(
    pmesh: &PartitionedMesh<T>,
    surface: &SurfaceMesh<T>,
    bc: &DisplacementField<T>,
    params: &ElasticParams<T>,
    config: &SolveConfig<T>,
) -> Result<(DisplacementField<T>, DeformTimings)> {
    let (constrained, known) = boundary_values(&pmesh.global, surface, bc)?;
    if !constrained.iter().any(|&c| c) {
        return Err(Error::Singular("no boundary vertices to constrain".into()));
    }
    let mut timings = DeformTimings::default();
    let clock = Instant::now();
    let k = assemble_elasticity(pmesh, params)?;
    timings.assembly = clock.elapsed();
    let clock = Instant::now();
    let mask: Vec<bool> = constrained.iter().flat_map(|&c| [c; 3]).collect();
    let flat: Vec<T> = known.iter().flat_map(|v| [v.x, v.y, v.z]).collect();
    let solver = ReducedSolver::new(&k, &mask, config)?;
    timings.setup = clock.elapsed();
    let clock = Instant::now();
    let x = solver.solve(&vec![T::zero(); flat.len()], &flat, None)?.x;
    timings.solve = clock.elapsed();
    let values = x.chunks_exact(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect();
    Ok((DisplacementField { values }, timings))
}

pub fn deform<T: Real>(
    pmesh: &PartitionedMesh<T>,
    surface: &SurfaceMesh<T>,
    bc: &DisplacementField<T>,
    method: &DeformMethod<T>,
    config: &SolveConfig<T>,
) -> Result<DisplacementField<T>> {
    deform_timed(pmesh, surface, bc, method, config).map(|(d, _)| d)
}

/// [`deform`] that also reports where the time went.
pub fn deform_timed<T: Real>(
    pmesh: &PartitionedMesh<T>,
    surface: &SurfaceMesh<T>,
    bc: &DisplacementField<T>,
    method: &DeformMethod<T>,
    config: &SolveConfig<T>,
) -> Result<(DisplacementField<T>, DeformTimings)> {
    match method {
        DeformMethod::Harmonic => harmonic_timed(pmesh, surface, bc, config),
        DeformMethod::Elasticity(p) => elastic_timed(pmesh, surface, bc, p, config),
    }
}

/// Elastic energy `u^T K u / 2` of a displacement under the given stiffness.
pub fn elastic_energy<T: Real>(k: &SparseMatrix<T>, u: &DisplacementField<T>) -> T {
    let flat: Vec<T> = u.values.iter().flat_map(|v| [v.x, v.y, v.z]).collect();
    k.quadratic_form(&flat) * T::lit(0.5)
}

/// Absolute targets `(i / n) d` for `i = 1..=n`; the last is `d` itself.
pub fn make_schedule<T: Real>(d: &DisplacementField<T>, n: usize) -> Result<Vec<DisplacementField<T>>> {
    if n == 0 {
        return Err(Error::InvalidArgument("a schedule needs at least one step".into()));
    }
    let nt = T::count(n);
    let mut out: Vec<DisplacementField<T>> = (1..n).map(|i| d.scaled(T::count(i) / nt)).collect();
    out.push(d.clone());
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct StepOutcome<T> {
    /// Volume displacement applied by this step.
    pub increment: DisplacementField<T>,
    /// Normalized quality of the updated mesh against the reference mesh.
    pub quality: QualityStats<T>,
    /// Elements with a non-positive volume after the update.
    pub inverted: usize,
    pub timings: DeformTimings,
}

/// Moves the mesh from `current_offset` to `target`, both surface fields
/// relative to `surface` (the boundary before the order started).
///
/// The increment is solved on the current, already deformed mesh. Boundary
/// vertices are then placed at exactly `surface + target`; interior vertices
/// move by the solved increment. Inverted elements are tolerated during
/// assembly and counted in the outcome.
#[allow(clippy::too_many_arguments)]
pub fn apply_deformation_step<T: Real>(
    pmesh: &mut PartitionedMesh<T>,
    surface: &SurfaceMesh<T>,
    current_offset: &DisplacementField<T>,
    target: &DisplacementField<T>,
    method: &DeformMethod<T>,
    reference: &TetMesh<T>,
    config: &SolveConfig<T>,
) -> Result<StepOutcome<T>> {
    let incr_bc = target.sub(current_offset)?;
    if !reference.same_connectivity(&pmesh.global) {
        return Err(Error::ConnectivityMismatch("reference mesh differs from the deformed mesh".into()));
    }
    let (increment, timings) = if incr_bc.is_zero() {
        (DisplacementField::zeros(pmesh.vertex_count()), DeformTimings::default())
    } else {
        deform_timed(pmesh, surface, &incr_bc, method, config)?
    };
    let mut positions: Vec<Point3<T>> =
        pmesh.global.vertices.iter().zip(&increment.values).map(|(p, u)| *p + *u).collect();
    if !incr_bc.is_zero() {
        for (s, &v) in surface.volume_vertex_of.iter().enumerate() {
            positions[v] = surface.vertices[s] + target.values[s];
        }
    }
    pmesh.set_positions(&positions)?;
    let quality = normalized_quality_stats(&pmesh.global, reference)?;
    let inverted = (0..pmesh.global.tet_count()).filter(|&t| !(pmesh.global.tet_volume(t) > T::zero())).count();
    Ok(StepOutcome { increment, quality, inverted, timings })
}
