//! Discrete Laplacians and mass matrices on triangle surfaces and
//! tetrahedral volumes.
//!
//! Every Laplacian here is negative semi-definite: off-diagonal weights are
//! positive on well-shaped meshes and each diagonal is minus its row's
//! off-diagonal sum.

use crate::geometry::{Point3, Vec3};
use crate::mesh::{SurfaceMesh, TetMesh};
use crate::sparse::{SparseMatrix, TripletBuilder};
use crate::{Error, Real, Result};

/// Treatment of negative cotangent weights from obtuse triangles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CotanWeights {
    #[default]
    Raw,
    /// Negative per-edge weights are replaced by zero.
    Clamped,
}

pub fn surface_cotan_laplacian<T: Real>(surface: &SurfaceMesh<T>) -> Result<SparseMatrix<T>> {
    surface_cotan_laplacian_with(surface, CotanWeights::Raw)
}

pub fn surface_cotan_laplacian_with<T: Real>(
    surface: &SurfaceMesh<T>,
    weights: CotanWeights,
) -> Result<SparseMatrix<T>> {
    let n = surface.vertex_count();
    let edge_w = cotan_edge_weights(surface)?;
    let mut b = TripletBuilder::with_capacity(n, n, 4 * edge_w.len() + n);
    let mut diag = vec![T::zero(); n];
    for ((i, j), w) in edge_w {
        let w = match weights {
            CotanWeights::Clamped if w < T::zero() => T::zero(),
            _ => w,
        };
        b.push(i, j, w);
        b.push(j, i, w);
        diag[i] -= w;
        diag[j] -= w;
    }
    for (i, d) in diag.into_iter().enumerate() {
        b.push(i, i, d);
    }
    Ok(b.build())
}

/// Half-sum of the cotangents opposite each undirected edge, sorted by edge.
fn cotan_edge_weights<T: Real>(surface: &SurfaceMesh<T>) -> Result<Vec<((usize, usize), T)>> {
    let half = T::lit(0.5);
    let mut w = Vec::with_capacity(3 * surface.triangle_count());
    for (t, tri) in surface.triangles.iter().enumerate() {
        let p = surface.triangle_points(t);
        let scale = (0..3).map(|k| (p[(k + 1) % 3] - p[k]).norm_squared()).fold(T::zero(), T::max);
        let twice_area = (p[1] - p[0]).cross(p[2] - p[0]).norm();
        if !(twice_area > T::epsilon() * scale) {
            return Err(Error::DegenerateTriangle(t));
        }
        for k in 0..3 {
            let (a, b, c) = (k, (k + 1) % 3, (k + 2) % 3);
            let u = p[a] - p[c];
            let v = p[b] - p[c];
            let cot = u.dot(v) / twice_area;
            let (i, j) = (tri[a].min(tri[b]), tri[a].max(tri[b]));
            w.push(((i, j), half * cot));
        }
    }
    w.sort_by_key(|e| e.0);
    let mut merged: Vec<((usize, usize), T)> = Vec::with_capacity(w.len());
    for (e, v) in w {
        match merged.last_mut() {
            Some(last) if last.0 == e => last.1 += v,
            _ => merged.push((e, v)),
        }
    }
    Ok(merged)
}

/// Barycentric lumped mass: one third of the incident triangle areas.
pub fn lumped_mass<T: Real>(surface: &SurfaceMesh<T>) -> Result<SparseMatrix<T>> {
    let areas = surface.vertex_areas();
    if let Some(v) = areas.iter().position(|a| !(*a > T::zero())) {
        return Err(Error::InvalidMesh(format!("vertex {v} has a zero-area star")));
    }
    Ok(SparseMatrix::from_diagonal(&areas))
}

/// `L (M^-1 L)^(k-1)` for `k` in 1..=3.
pub fn polyharmonic_operator<T: Real>(
    l: &SparseMatrix<T>,
    m: &SparseMatrix<T>,
    k: u32,
) -> Result<SparseMatrix<T>> {
    if !(1..=3).contains(&k) {
        return Err(Error::InvalidArgument(format!("harmonic order {k} is outside 1..=3")));
    }
    if !l.is_square() || m.nrows() != l.nrows() || m.ncols() != l.ncols() {
        return Err(Error::InvalidArgument("operator and mass dimensions differ".into()));
    }
    if m.nnz() != m.nrows() || m.triplets().any(|(i, j, v)| i != j || !(v > T::zero())) {
        return Err(Error::InvalidArgument("mass matrix must be diagonal and positive".into()));
    }
    let inv: Vec<T> = m.diagonal().iter().map(|d| T::one() / *d).collect();
    let minv_l = l.scale_rows(&inv);
    let mut b = l.clone();
    for _ in 1..k {
        b = b.matmul(&minv_l)?;
    }
    Ok(b)
}

/// Gradients of the four barycentric basis functions and the signed volume.
/// `None` for a flat element.
pub(crate) fn tet_gradients<T: Real>(p: &[Point3<T>; 4]) -> Option<([Vec3<T>; 4], T)> {
    let e1 = p[1] - p[0];
    let e2 = p[2] - p[0];
    let e3 = p[3] - p[0];
    let six_v = e1.dot(e2.cross(e3));
    let scale = e1.norm() * e2.norm() * e3.norm();
    if !(six_v.abs() > T::epsilon() * scale) {
        return None;
    }
    let g1 = e2.cross(e3) * (T::one() / six_v);
    let g2 = e3.cross(e1) * (T::one() / six_v);
    let g3 = e1.cross(e2) * (T::one() / six_v);
    let g0 = -(g1 + g2 + g3);
    Some(([g0, g1, g2, g3], six_v / T::lit(6.0)))
}

/// Element stiffness `|V| grad(phi_i) . grad(phi_j)`, the P1 Galerkin form of
/// minus the Laplacian.
pub(crate) fn tet_stiffness<T: Real>(g: &[Vec3<T>; 4], volume: T) -> [[T; 4]; 4] {
    let v = volume.abs();
    let mut k = [[T::zero(); 4]; 4];
    for i in 0..4 {
        for j in i..4 {
            let s = g[i].dot(g[j]) * v;
            k[i][j] = s;
            k[j][i] = s;
        }
    }
    k
}

/// Adds `-K_e` of the listed elements into `b`, with local vertices mapped
/// through `map`. Inverted elements are assembled with `|V|` when
/// `allow_inverted` is set; flat ones are always an error.
pub(crate) fn assemble_volume_laplacian<T: Real>(
    mesh: &TetMesh<T>,
    elements: impl Iterator<Item = usize>,
    map: &dyn Fn(usize) -> usize,
    allow_inverted: bool,
    b: &mut TripletBuilder<T>,
) -> Result<()> {
    for t in elements {
        let (g, vol) = tet_gradients(&mesh.tet_points(t)).ok_or(Error::BadTet(t))?;
        if vol < T::zero() && !allow_inverted {
            return Err(Error::BadTet(t));
        }
        let k = tet_stiffness(&g, vol);
        let tet = mesh.tets[t];
        for a in 0..4 {
            for c in 0..4 {
                b.push(map(tet[a]), map(tet[c]), -k[a][c]);
            }
        }
    }
    Ok(())
}

/// Piecewise-linear Galerkin Laplacian of a tetrahedral mesh (the negated
/// stiffness matrix, so the quadratic form is non-positive).
pub fn volume_laplacian<T: Real>(mesh: &TetMesh<T>) -> Result<SparseMatrix<T>> {
    let n = mesh.vertex_count();
    let mut b = TripletBuilder::with_capacity(n, n, 16 * mesh.tet_count());
    assemble_volume_laplacian(mesh, 0..mesh.tet_count(), &|v| v, false, &mut b)?;
    Ok(b.build())
}
