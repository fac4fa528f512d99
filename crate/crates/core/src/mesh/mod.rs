//! Volume and surface mesh types, file formats, generators and quality metrics.

mod generate;
mod implicit;
pub mod io;
mod quality;
mod surface;

use std::collections::{BTreeSet, HashMap};

pub use generate::{
    generate_box_channel, generate_cylinder, BoundaryLayer, BoxFace, CylinderSpec, CylinderTag,
};
pub use implicit::{capsule_distance, implicit_surface, polytube_surface, torus_surface};
pub use quality::{
    element_quality, normalized_quality, normalized_quality_stats, quality_stats, scaled_jacobian,
    ScaledJacobian,
};
pub use surface::extract_surface;

use crate::geometry::{tet_signed_volume, triangle_area, Point3, Vec3};
use crate::{Error, Real, Result};

/// Outward-facing local faces of a positively oriented tetrahedron.
pub(crate) const TET_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 3, 2], [0, 1, 3], [0, 2, 1]];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BoundaryFace {
    pub verts: [usize; 3],
    pub tag: i64,
}

/// Tetrahedral volume mesh.
///
/// Construction through [`TetMesh::new`] validates connectivity and
/// orientation. Coordinates stay public so deformation can move them in place;
/// after that, elements may legitimately invert.
#[derive(Debug, Clone, PartialEq)]
pub struct TetMesh<T> {
    pub vertices: Vec<Point3<T>>,
    pub tets: Vec<[usize; 4]>,
    /// Outward oriented boundary faces with their feature tag.
    pub boundary_faces: Vec<BoundaryFace>,
    pub part_of: Option<Vec<usize>>,
}

#[inline]
pub(crate) fn face_key(f: [usize; 3]) -> [usize; 3] {
    let mut k = f;
    k.sort_unstable();
    k
}

impl<T: Real> TetMesh<T> {
    /// Builds and validates a mesh. When `boundary_faces` is `None` the
    /// boundary is recomputed from the connectivity and every face gets tag 0.
    pub fn new(
        vertices: Vec<Point3<T>>,
        tets: Vec<[usize; 4]>,
        boundary_faces: Option<Vec<BoundaryFace>>,
    ) -> Result<Self> {
        let nv = vertices.len();
        if let Some(i) = vertices.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidMesh(format!("vertex {i} has non-finite coordinates")));
        }
        for (t, tet) in tets.iter().enumerate() {
            if let Some(&v) = tet.iter().find(|&&v| v >= nv) {
                return Err(Error::InvalidMesh(format!(
                    "tet {t} references vertex {v} but the mesh has {nv} vertices"
                )));
            }
            let p = tet.map(|v| vertices[v]);
            if !(tet_signed_volume(&p) > T::zero()) {
                return Err(Error::BadTet(t));
            }
        }

        let computed = Self::boundary_from_tets(&tets);
        let boundary_faces = match boundary_faces {
            None => computed.into_iter().map(|verts| BoundaryFace { verts, tag: 0 }).collect(),
            Some(given) => {
                let oriented: HashMap<[usize; 3], [usize; 3]> =
                    computed.iter().map(|f| (face_key(*f), *f)).collect();
                let mut seen = BTreeSet::new();
                let mut out = Vec::with_capacity(given.len());
                for (i, f) in given.iter().enumerate() {
                    if let Some(&v) = f.verts.iter().find(|&&v| v >= nv) {
                        return Err(Error::InvalidMesh(format!(
                            "boundary face {i} references vertex {v} but the mesh has {nv} vertices"
                        )));
                    }
                    let key = face_key(f.verts);
                    let Some(&verts) = oriented.get(&key) else {
                        return Err(Error::InvalidMesh(format!(
                            "boundary face {i} {:?} is not a face of exactly one tet",
                            f.verts
                        )));
                    };
                    if !seen.insert(key) {
                        return Err(Error::InvalidMesh(format!("boundary face {i} listed twice")));
                    }
                    out.push(BoundaryFace { verts, tag: f.tag });
                }
                if out.len() != computed.len() {
                    return Err(Error::InvalidMesh(format!(
                        "{} boundary faces listed but the connectivity has {}",
                        out.len(),
                        computed.len()
                    )));
                }
                out
            }
        };

        Ok(Self { vertices, tets, boundary_faces, part_of: None })
    }

    /// Faces owned by exactly one tet, outward oriented, in tet order.
    pub(crate) fn boundary_from_tets(tets: &[[usize; 4]]) -> Vec<[usize; 3]> {
        let mut count: HashMap<[usize; 3], (usize, [usize; 3], usize)> = HashMap::new();
        let mut order = 0usize;
        for tet in tets {
            for lf in TET_FACES {
                let f = lf.map(|i| tet[i]);
                let e = count.entry(face_key(f)).or_insert((0, f, order));
                e.0 += 1;
                order += 1;
            }
        }
        let mut faces: Vec<_> = count.into_values().filter(|(c, _, _)| *c == 1).collect();
        faces.sort_unstable_by_key(|(_, _, o)| *o);
        faces.into_iter().map(|(_, f, _)| f).collect()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn tet_count(&self) -> usize {
        self.tets.len()
    }

    #[inline]
    pub fn tet_points(&self, t: usize) -> [Point3<T>; 4] {
        self.tets[t].map(|v| self.vertices[v])
    }

    pub fn tet_volume(&self, t: usize) -> T {
        tet_signed_volume(&self.tet_points(t))
    }

    /// Sorted list of vertices lying on the boundary.
    pub fn boundary_vertices(&self) -> Vec<usize> {
        let mut set: Vec<usize> = self.boundary_faces.iter().flat_map(|f| f.verts).collect();
        set.sort_unstable();
        set.dedup();
        set
    }

    /// Per-vertex boundary flag.
    pub fn boundary_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.vertices.len()];
        for f in &self.boundary_faces {
            for v in f.verts {
                mask[v] = true;
            }
        }
        mask
    }

    pub fn same_connectivity(&self, other: &Self) -> bool {
        self.vertices.len() == other.vertices.len() && self.tets == other.tets
    }

    /// Copy with every vertex moved by the matching displacement.
    pub fn displaced(&self, field: &DisplacementField<T>) -> Result<Self> {
        field.check_len(self.vertices.len())?;
        let mut out = self.clone();
        for (p, d) in out.vertices.iter_mut().zip(&field.values) {
            *p += *d;
        }
        Ok(out)
    }

    pub fn bounding_box(&self) -> (Point3<T>, Point3<T>) {
        bounding_box(&self.vertices)
    }
}

pub(crate) fn bounding_box<T: Real>(points: &[Point3<T>]) -> (Point3<T>, Point3<T>) {
    let mut lo = Vec3::splat(T::infinity());
    let mut hi = Vec3::splat(T::neg_infinity());
    for p in points {
        for a in 0..3 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    (lo, hi)
}

/// Triangulated boundary surface with feature tags and the map back to the
/// volume mesh it was extracted from.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceMesh<T> {
    pub vertices: Vec<Point3<T>>,
    pub triangles: Vec<[usize; 3]>,
    pub feature: Vec<i64>,
    pub volume_vertex_of: Vec<usize>,
}

impl<T: Real> SurfaceMesh<T> {
    pub fn new(
        vertices: Vec<Point3<T>>,
        triangles: Vec<[usize; 3]>,
        feature: Vec<i64>,
        volume_vertex_of: Vec<usize>,
    ) -> Result<Self> {
        let nv = vertices.len();
        if feature.len() != triangles.len() {
            return Err(Error::CountMismatch { expected: triangles.len(), found: feature.len() });
        }
        if volume_vertex_of.len() != nv {
            return Err(Error::CountMismatch { expected: nv, found: volume_vertex_of.len() });
        }
        for (i, t) in triangles.iter().enumerate() {
            if t.iter().any(|&v| v >= nv) {
                return Err(Error::InvalidMesh(format!("triangle {i} has an out-of-range vertex")));
            }
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(Error::InvalidMesh(format!("triangle {i} repeats a vertex")));
            }
        }
        let mut ids = volume_vertex_of.clone();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidMesh("volume_vertex_of is not injective".into()));
        }
        Ok(Self { vertices, triangles, feature, volume_vertex_of })
    }

    /// Surface whose `volume_vertex_of` is the identity; convenient for
    /// standalone surfaces.
    pub fn standalone(
        vertices: Vec<Point3<T>>,
        triangles: Vec<[usize; 3]>,
        feature: Vec<i64>,
    ) -> Result<Self> {
        let n = vertices.len();
        Self::new(vertices, triangles, feature, (0..n).collect())
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_points(&self, t: usize) -> [Point3<T>; 3] {
        self.triangles[t].map(|v| self.vertices[v])
    }

    /// Unnormalized normal: twice the area times the unit normal.
    pub fn triangle_area_normal(&self, t: usize) -> Vec3<T> {
        let [a, b, c] = self.triangle_points(t);
        (b - a).cross(c - a)
    }

    pub fn triangle_area(&self, t: usize) -> T {
        let [a, b, c] = self.triangle_points(t);
        triangle_area(a, b, c)
    }

    pub fn total_area(&self) -> T {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Undirected edges mapped to their incident triangles.
    pub fn edge_triangles(&self) -> HashMap<(usize, usize), Vec<usize>> {
        let mut map: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                map.entry((a.min(b), a.max(b))).or_default().push(t);
            }
        }
        map
    }

    /// Every edge has exactly two incident triangles.
    pub fn is_closed_manifold(&self) -> bool {
        self.edge_triangles().values().all(|ts| ts.len() == 2)
    }

    /// Sorted neighbor lists.
    pub fn vertex_neighbors(&self) -> Vec<Vec<usize>> {
        let mut nb: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); self.vertices.len()];
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                nb[a].insert(b);
                nb[b].insert(a);
            }
        }
        nb.into_iter().map(|s| s.into_iter().collect()).collect()
    }

    /// Distinct feature tags in ascending order.
    pub fn feature_tags(&self) -> Vec<i64> {
        let set: BTreeSet<i64> = self.feature.iter().copied().collect();
        set.into_iter().collect()
    }

    /// Area-weighted vertex normals (unit length; zero for isolated vertices).
    pub fn vertex_normals(&self) -> Vec<Vec3<T>> {
        let mut n = vec![Vec3::zero(); self.vertices.len()];
        for (t, tri) in self.triangles.iter().enumerate() {
            let an = self.triangle_area_normal(t);
            for &v in tri {
                n[v] += an;
            }
        }
        n.into_iter().map(Vec3::normalized).collect()
    }

    /// One third of the incident triangle area per vertex.
    pub fn vertex_areas(&self) -> Vec<T> {
        let mut a = vec![T::zero(); self.vertices.len()];
        let third = T::lit(1.0 / 3.0);
        for (t, tri) in self.triangles.iter().enumerate() {
            let at = self.triangle_area(t) * third;
            for &v in tri {
                a[v] += at;
            }
        }
        a
    }

    pub fn displaced(&self, field: &DisplacementField<T>) -> Result<Self> {
        field.check_len(self.vertices.len())?;
        let mut out = self.clone();
        for (p, d) in out.vertices.iter_mut().zip(&field.values) {
            *p += *d;
        }
        Ok(out)
    }

    pub fn bounding_box(&self) -> (Point3<T>, Point3<T>) {
        bounding_box(&self.vertices)
    }
}

/// Per-vertex displacement vectors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DisplacementField<T> {
    pub values: Vec<Vec3<T>>,
}

impl<T: Real> DisplacementField<T> {
    pub fn new(values: Vec<Vec3<T>>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("displacement {i} is not finite")));
        }
        Ok(Self { values })
    }

    pub fn zeros(n: usize) -> Self {
        Self { values: vec![Vec3::zero(); n] }
    }

    pub fn uniform(n: usize, v: Vec3<T>) -> Self {
        Self { values: vec![v; n] }
    }

    pub fn vertex_count(&self) -> usize {
        self.values.len()
    }

    pub fn check_len(&self, n: usize) -> Result<()> {
        if self.values.len() != n {
            return Err(Error::CountMismatch { expected: n, found: self.values.len() });
        }
        Ok(())
    }

    pub fn scaled(&self, s: T) -> Self {
        Self { values: self.values.iter().map(|v| *v * s).collect() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        other.check_len(self.values.len())?;
        Ok(Self { values: self.values.iter().zip(&other.values).map(|(a, b)| *a + *b).collect() })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        other.check_len(self.values.len())?;
        Ok(Self { values: self.values.iter().zip(&other.values).map(|(a, b)| *a - *b).collect() })
    }

    pub fn max_norm(&self) -> T {
        self.values.iter().map(|v| v.norm()).fold(T::zero(), T::max)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == Vec3::zero())
    }

    /// Splits into the three coordinate components.
    pub fn components(&self) -> [Vec<T>; 3] {
        [0, 1, 2].map(|a| self.values.iter().map(|v| v[a]).collect())
    }

    pub fn from_components(c: &[Vec<T>; 3]) -> Self {
        let values = (0..c[0].len()).map(|i| Vec3::new(c[0][i], c[1][i], c[2][i])).collect();
        Self { values }
    }
}

/// Summary of per-element (normalized) scaled Jacobians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityStats<T> {
    pub mean: T,
    pub min: T,
    pub max: T,
    /// Elements with a negative value.
    pub inverted_count: usize,
    /// Elements with coincident vertices, scored 0.
    pub degenerate_count: usize,
}

impl<T: Real> QualityStats<T> {
    pub fn from_values(values: &[T], degenerate_count: usize) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("no elements to summarize".into()));
        }
        let mut min = T::infinity();
        let mut max = T::neg_infinity();
        let mut sum = T::zero();
        let mut inverted = 0;
        for &v in values {
            min = min.min(v);
            max = max.max(v);
            sum += v;
            if v < T::zero() {
                inverted += 1;
            }
        }
        // Summation rounding can push the mean a hair outside [min, max].
        let mean = (sum / T::count(values.len())).max(min).min(max);
        Ok(Self { mean, min, max, inverted_count: inverted, degenerate_count })
    }
}
