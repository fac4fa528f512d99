use std::collections::BTreeMap;

use crate::mesh::{SurfaceMesh, TetMesh};
use crate::Real;

/// Boundary surface of a tet mesh.
///
/// Triangles follow the order of `mesh.boundary_faces` and keep its outward
/// orientation and tags. Surface vertices are numbered by ascending volume
/// index, so `volume_vertex_of` is strictly increasing.
pub fn extract_surface<T: Real>(mesh: &TetMesh<T>) -> SurfaceMesh<T> {
    let mut local: BTreeMap<usize, usize> = BTreeMap::new();
    for f in &mesh.boundary_faces {
        for v in f.verts {
            local.insert(v, 0);
        }
    }
    let mut volume_vertex_of = Vec::with_capacity(local.len());
    for (i, (v, slot)) in local.iter_mut().enumerate() {
        *slot = i;
        volume_vertex_of.push(*v);
    }
    let vertices = volume_vertex_of.iter().map(|&v| mesh.vertices[v]).collect();
    let triangles = mesh.boundary_faces.iter().map(|f| f.verts.map(|v| local[&v])).collect();
    let feature = mesh.boundary_faces.iter().map(|f| f.tag).collect();
    SurfaceMesh { vertices, triangles, feature, volume_vertex_of }
}
