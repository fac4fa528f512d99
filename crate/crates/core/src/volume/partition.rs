use std::collections::HashMap;

use crate::geometry::{Point3, Vec3};
use crate::mesh::{face_key, BoundaryFace, TetMesh};
use crate::{Error, Real, Result};

/// Tag of part faces that lie inside the global mesh.
pub const CUT_FACE_TAG: i64 = -1;

/// One block of elements with its own vertex numbering.
#[derive(Debug, Clone, PartialEq)]
pub struct Part<T> {
    pub mesh: TetMesh<T>,
    pub local_to_global: Vec<usize>,
    /// Global index of each local element.
    pub global_tets: Vec<usize>,
}

/// A tetrahedral mesh split into element blocks. The global mesh is kept
/// alongside the parts and is the authority for coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionedMesh<T> {
    pub global: TetMesh<T>,
    pub parts: Vec<Part<T>>,
    /// Lowest part id touching each global vertex.
    pub owner: Vec<usize>,
}

/// Splits elements into `nparts` contiguous blocks of a centroid sweep along
/// the longest bounding-box axis. Block sizes differ by at most one.
pub fn partition<T: Real>(mesh: &TetMesh<T>, nparts: usize) -> Result<PartitionedMesh<T>> {
    let nt = mesh.tet_count();
    if nparts == 0 || nparts > nt {
        return Err(Error::InvalidArgument(format!("cannot split {nt} elements into {nparts} parts")));
    }
    let (lo, hi) = mesh.bounding_box();
    let ext = hi - lo;
    let axis = if ext.x >= ext.y && ext.x >= ext.z {
        0
    } else if ext.y >= ext.z {
        1
    } else {
        2
    };
    let key: Vec<T> = (0..nt)
        .map(|t| mesh.tet_points(t).iter().map(|p| p[axis]).sum::<T>())
        .collect();
    let mut order: Vec<usize> = (0..nt).collect();
    order.sort_by(|&a, &b| key[a].partial_cmp(&key[b]).unwrap().then(a.cmp(&b)));

    let tags: HashMap<[usize; 3], i64> =
        mesh.boundary_faces.iter().map(|f| (face_key(f.verts), f.tag)).collect();
    let mut owner = vec![usize::MAX; mesh.vertex_count()];
    let mut parts = Vec::with_capacity(nparts);
    let mut begin = 0;
    for p in 0..nparts {
        let size = nt / nparts + usize::from(p < nt % nparts);
        let mut global_tets = order[begin..begin + size].to_vec();
        global_tets.sort_unstable();
        begin += size;
        let mut verts: Vec<usize> = global_tets.iter().flat_map(|&t| mesh.tets[t]).collect();
        verts.sort_unstable();
        verts.dedup();
        let mut local = HashMap::with_capacity(verts.len());
        for (l, &g) in verts.iter().enumerate() {
            local.insert(g, l);
            if owner[g] == usize::MAX {
                owner[g] = p;
            }
        }
        let verts_of = &verts;
        let tets: Vec<[usize; 4]> = global_tets.iter().map(|&t| mesh.tets[t].map(|g| local[&g])).collect();
        let coords = verts.iter().map(|&g| mesh.vertices[g]).collect();
        let local_mesh = if nparts == 1 {
            mesh.clone()
        } else {
            let faces = TetMesh::<T>::boundary_from_tets(&tets)
                .into_iter()
                .map(|verts| {
                    let global = face_key(verts.map(|l| verts_of[l]));
                    BoundaryFace { verts, tag: tags.get(&global).copied().unwrap_or(CUT_FACE_TAG) }
                })
                .collect();
            TetMesh::new(coords, tets, Some(faces))?
        };
        parts.push(Part { mesh: local_mesh, local_to_global: verts, global_tets });
    }
    if let Some(v) = owner.iter().position(|&o| o == usize::MAX) {
        return Err(Error::InvalidMesh(format!("vertex {v} belongs to no element")));
    }
    Ok(PartitionedMesh { global: mesh.clone(), parts, owner })
}

impl<T: Real> PartitionedMesh<T> {
    pub fn nparts(&self) -> usize {
        self.parts.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.global.vertex_count()
    }

    /// Vertices touched by more than one part.
    pub fn shared_vertices(&self) -> Vec<usize> {
        let mut count = vec![0u32; self.vertex_count()];
        for part in &self.parts {
            for &g in &part.local_to_global {
                count[g] += 1;
            }
        }
        (0..count.len()).filter(|&v| count[v] > 1).collect()
    }

    /// Overwrites coordinates in the global mesh and every part.
    pub fn set_positions(&mut self, positions: &[Point3<T>]) -> Result<()> {
        if positions.len() != self.vertex_count() {
            return Err(Error::CountMismatch { expected: self.vertex_count(), found: positions.len() });
        }
        self.global.vertices.copy_from_slice(positions);
        for part in &mut self.parts {
            for (l, &g) in part.local_to_global.iter().enumerate() {
                part.mesh.vertices[l] = positions[g];
            }
        }
        Ok(())
    }

    pub fn displace(&mut self, d: &[Vec3<T>]) -> Result<()> {
        if d.len() != self.vertex_count() {
            return Err(Error::CountMismatch { expected: self.vertex_count(), found: d.len() });
        }
        let moved: Vec<Point3<T>> = self.global.vertices.iter().zip(d).map(|(p, u)| *p + *u).collect();
        self.set_positions(&moved)
    }
}
