use std::collections::BTreeMap;

use steer_core::volume::{PartitionedMesh, CUT_FACE_TAG};
use steer_core::{SurfaceMesh64, TetMesh64};
use steer_wire::SurfaceMeshMsg;

/// Collects the boundary faces of every part into one surface in global
/// numbering. Faces created by the partition cut are skipped.
///
/// Vertices are numbered by ascending global index, as in
/// [`steer_core::mesh::extract_surface`]; triangles come part by part.
pub fn gather_surface(pmesh: &PartitionedMesh<f64>) -> SurfaceMesh64 {
    let mut faces = Vec::new();
    for part in &pmesh.parts {
        for f in part.mesh.boundary_faces.iter().filter(|f| f.tag != CUT_FACE_TAG) {
            faces.push((f.verts.map(|l| part.local_to_global[l]), f.tag));
        }
    }
    let mut local: BTreeMap<usize, usize> = faces.iter().flat_map(|(v, _)| *v).map(|v| (v, 0)).collect();
    let mut volume_vertex_of = Vec::with_capacity(local.len());
    for (i, (v, slot)) in local.iter_mut().enumerate() {
        *slot = i;
        volume_vertex_of.push(*v);
    }
    SurfaceMesh64 {
        vertices: volume_vertex_of.iter().map(|&v| pmesh.global.vertices[v]).collect(),
        triangles: faces.iter().map(|(f, _)| f.map(|v| local[&v])).collect(),
        feature: faces.iter().map(|(_, t)| *t).collect(),
        volume_vertex_of,
    }
}

/// Current positions of the surface vertices in `mesh`.
pub fn surface_at(surface: &SurfaceMesh64, mesh: &TetMesh64) -> SurfaceMesh64 {
    let mut s = surface.clone();
    for (p, &v) in s.vertices.iter_mut().zip(&surface.volume_vertex_of) {
        *p = mesh.vertices[v];
    }
    s
}

pub fn surface_message(surface: &SurfaceMesh64) -> SurfaceMeshMsg {
    SurfaceMeshMsg {
        vertices: surface.vertices.iter().map(|p| [p.x, p.y, p.z]).collect(),
        triangles: surface.triangles.iter().map(|t| t.map(|v| v as u64)).collect(),
        tags: surface.feature.clone(),
        volume_ids: surface.volume_vertex_of.iter().map(|&v| v as u64).collect(),
    }
}
