//! Handle-based polyharmonic surface deformation and sharp-edge feature
//! detection.

use std::collections::{BTreeMap, BTreeSet};

use crate::geometry::Vec3;
use crate::mesh::{DisplacementField, SurfaceMesh};
use crate::operators::{lumped_mass, polyharmonic_operator, surface_cotan_laplacian};
use crate::solve::{ReducedSolver, SolveConfig};
use crate::{Error, Real, Result};

/// Which features move, which stay put, and the harmonic order `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HandleSpec {
    pub handle_features: BTreeSet<i64>,
    pub fixed_features: BTreeSet<i64>,
    pub order: u32,
}

impl HandleSpec {
    pub fn new(
        handles: impl IntoIterator<Item = i64>,
        fixed: impl IntoIterator<Item = i64>,
        order: u32,
    ) -> Result<Self> {
        let handle_features: BTreeSet<i64> = handles.into_iter().collect();
        let fixed_features: BTreeSet<i64> = fixed.into_iter().collect();
        if let Some(t) = handle_features.intersection(&fixed_features).next() {
            return Err(Error::InvalidArgument(format!("feature {t} is both handle and fixed")));
        }
        if handle_features.is_empty() && fixed_features.is_empty() {
            return Err(Error::InvalidArgument("no handle or fixed features given".into()));
        }
        if !(1..=3).contains(&order) {
            return Err(Error::InvalidArgument(format!("harmonic order {order} is outside 1..=3")));
        }
        Ok(Self { handle_features, fixed_features, order })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SurfaceAction<T> {
    Translate(Vec3<T>),
    /// Per-axis scale factors about the handle's area-weighted centroid.
    ScaleByDirection(Vec3<T>),
    /// Offset along the area-weighted vertex normal.
    ScaleByNormals(T),
}

impl<T: Real> SurfaceAction<T> {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Self::Translate(v) | Self::ScaleByDirection(v) => v.is_finite(),
            Self::ScaleByNormals(s) => s.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument("action parameters must be finite".into()))
        }
    }
}

/// Retags triangles into regions bounded by sharp edges. An edge is sharp
/// when the angle between its two triangle normals exceeds the threshold or
/// when more than two triangles share it.
pub fn detect_features<T: Real>(surface: &SurfaceMesh<T>, dihedral_threshold_deg: T) -> Result<SurfaceMesh<T>> {
    let thr = dihedral_threshold_deg;
    if !(thr > T::zero() && thr <= T::lit(180.0)) {
        return Err(Error::InvalidArgument(format!("dihedral threshold {thr} is outside (0, 180]")));
    }
    let cos_thr = thr.to_radians().cos();
    let normals: Vec<Vec3<T>> =
        (0..surface.triangle_count()).map(|t| surface.triangle_area_normal(t).normalized()).collect();
    let nt = surface.triangle_count();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nt];
    for tris in surface.edge_triangles().values() {
        if tris.len() != 2 {
            continue;
        }
        let (a, b) = (tris[0], tris[1]);
        // Deviation from flat is the angle between the two normals.
        if normals[a].dot(normals[b]) >= cos_thr || thr >= T::lit(180.0) {
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    let mut tag = vec![-1i64; nt];
    let mut next = 0;
    for seed in 0..nt {
        if tag[seed] >= 0 {
            continue;
        }
        tag[seed] = next;
        let mut stack = vec![seed];
        while let Some(t) = stack.pop() {
            for &u in &adj[t] {
                if tag[u] < 0 {
                    tag[u] = next;
                    stack.push(u);
                }
            }
        }
        next += 1;
    }
    let mut out = surface.clone();
    out.feature = tag;
    Ok(out)
}

/// Vertex roles under a handle specification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VertexRole {
    Free,
    Handle,
    /// Vertices touching both a handle and a fixed feature are fixed.
    Fixed,
}

pub fn vertex_roles<T: Real>(surface: &SurfaceMesh<T>, spec: &HandleSpec) -> Result<Vec<VertexRole>> {
    let present: BTreeSet<i64> = surface.feature.iter().copied().collect();
    if let Some(&t) = spec.handle_features.iter().chain(&spec.fixed_features).find(|t| !present.contains(t)) {
        return Err(Error::UnknownFeature(t));
    }
    let mut roles = vec![VertexRole::Free; surface.vertex_count()];
    for (tri, &f) in surface.triangles.iter().zip(&surface.feature) {
        let role = if spec.fixed_features.contains(&f) {
            VertexRole::Fixed
        } else if spec.handle_features.contains(&f) {
            VertexRole::Handle
        } else {
            continue;
        };
        for &v in tri {
            if roles[v] != VertexRole::Fixed {
                roles[v] = role;
            }
        }
    }
    Ok(roles)
}

fn prescribed_handle_values<T: Real>(
    surface: &SurfaceMesh<T>,
    roles: &[VertexRole],
    action: &SurfaceAction<T>,
) -> Vec<Vec3<T>> {
    let n = surface.vertex_count();
    let handle: Vec<usize> = (0..n).filter(|&v| roles[v] == VertexRole::Handle).collect();
    match *action {
        SurfaceAction::Translate(t) => vec![t; n],
        SurfaceAction::ScaleByDirection(s) => {
            let areas = surface.vertex_areas();
            let total: T = handle.iter().map(|&v| areas[v]).sum();
            let c = if total > T::zero() {
                handle.iter().map(|&v| surface.vertices[v] * areas[v]).sum::<Vec3<T>>() * (T::one() / total)
            } else if handle.is_empty() {
                Vec3::zero()
            } else {
                handle.iter().map(|&v| surface.vertices[v]).sum::<Vec3<T>>()
                    * (T::one() / T::count(handle.len()))
            };
            surface
                .vertices
                .iter()
                .map(|&x| {
                    let r = x - c;
                    r.hadamard(s) - r
                })
                .collect()
        }
        SurfaceAction::ScaleByNormals(offset) => {
            surface.vertex_normals().into_iter().map(|nrm| nrm * offset).collect()
        }
    }
}

/// Solves `B_k d = 0` per coordinate with handle and fixed vertices
/// prescribed by row replacement.
pub fn compute_handle_displacement<T: Real>(
    surface: &SurfaceMesh<T>,
    spec: &HandleSpec,
    action: &SurfaceAction<T>,
) -> Result<DisplacementField<T>> {
    compute_handle_displacement_with(surface, spec, action, &SolveConfig::default())
}

pub fn compute_handle_displacement_with<T: Real>(
    surface: &SurfaceMesh<T>,
    spec: &HandleSpec,
    action: &SurfaceAction<T>,
    config: &SolveConfig<T>,
) -> Result<DisplacementField<T>> {
    action.validate()?;
    let roles = vertex_roles(surface, spec)?;
    let n = surface.vertex_count();
    let handle_vals = prescribed_handle_values(surface, &roles, action);
    let mut known = vec![Vec3::zero(); n];
    for v in 0..n {
        if roles[v] == VertexRole::Handle {
            known[v] = handle_vals[v];
        }
    }
    let constrained: Vec<bool> = roles.iter().map(|r| *r != VertexRole::Free).collect();
    if constrained.iter().all(|&c| c) {
        return DisplacementField::new(known);
    }
    if spec.fixed_features.is_empty() {
        return Err(Error::Singular("free vertices remain but no feature is fixed".into()));
    }
    check_every_free_region_anchored(surface, &constrained)?;
    let l = surface_cotan_laplacian(surface)?;
    let m = lumped_mass(surface)?;
    let b = polyharmonic_operator(&l, &m, spec.order)?;
    let solver = ReducedSolver::new(&b, &constrained, config)?;
    let zero = vec![T::zero(); n];
    let mut comps: [Vec<T>; 3] = Default::default();
    for (axis, comp) in comps.iter_mut().enumerate() {
        let k: Vec<T> = known.iter().map(|v| v[axis]).collect();
        *comp = solver.solve(&zero, &k, None)?.x;
    }
    DisplacementField::new(DisplacementField::from_components(&comps).values)
}

/// A connected set of free vertices that touches no constrained vertex makes
/// the reduced system singular.
fn check_every_free_region_anchored<T: Real>(surface: &SurfaceMesh<T>, constrained: &[bool]) -> Result<()> {
    let nbrs = surface.vertex_neighbors();
    let mut seen = vec![false; constrained.len()];
    for s in 0..constrained.len() {
        if constrained[s] || seen[s] {
            continue;
        }
        seen[s] = true;
        let mut stack = vec![s];
        let mut anchored = false;
        while let Some(v) = stack.pop() {
            for &w in &nbrs[v] {
                if constrained[w] {
                    anchored = true;
                } else if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        if !anchored {
            return Err(Error::Singular(format!("free region containing vertex {s} has no constrained vertex")));
        }
    }
    Ok(())
}

/// Tangency proxy for one connected ring of constrained vertices that border
/// free vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryLoopReport<T> {
    /// Constrained vertices of the loop, ascending.
    pub vertices: Vec<usize>,
    pub role: VertexRole,
    /// Largest `|d_free - d_constrained|` over edges leaving the loop.
    pub max_jump: T,
}

pub fn smoothness_report<T: Real>(
    surface: &SurfaceMesh<T>,
    field: &DisplacementField<T>,
    spec: &HandleSpec,
) -> Result<Vec<BoundaryLoopReport<T>>> {
    field.check_len(surface.vertex_count())?;
    let roles = vertex_roles(surface, spec)?;
    let nbrs = surface.vertex_neighbors();
    let n = surface.vertex_count();
    let rim: Vec<bool> = (0..n)
        .map(|v| roles[v] != VertexRole::Free && nbrs[v].iter().any(|&w| roles[w] == VertexRole::Free))
        .collect();
    let mut group = vec![usize::MAX; n];
    let mut loops: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for s in 0..n {
        if !rim[s] || group[s] != usize::MAX {
            continue;
        }
        group[s] = s;
        let mut members = vec![s];
        let mut stack = vec![s];
        while let Some(v) = stack.pop() {
            for &w in &nbrs[v] {
                if rim[w] && group[w] == usize::MAX && roles[w] == roles[s] {
                    group[w] = s;
                    members.push(w);
                    stack.push(w);
                }
            }
        }
        members.sort_unstable();
        loops.insert(s, members);
    }
    Ok(loops
        .into_values()
        .map(|vertices| {
            let mut max_jump = T::zero();
            for &c in &vertices {
                for &f in &nbrs[c] {
                    if roles[f] == VertexRole::Free {
                        max_jump = max_jump.max((field.values[f] - field.values[c]).norm());
                    }
                }
            }
            let role = roles[vertices[0]];
            BoundaryLoopReport { vertices, role, max_jump }
        })
        .collect())
}
