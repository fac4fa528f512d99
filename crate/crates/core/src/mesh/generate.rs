//! Structured tetrahedral mesh generators for test geometries.


use crate::geometry::{tet_signed_volume, Point3, Vec3};
use crate::mesh::{BoundaryFace, TetMesh};
use crate::{Error, Real, Result};

/// Face tags of [`generate_box_channel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoxFace {
    XMin = 0,
    XMax = 1,
    YMin = 2,
    YMax = 3,
    ZMin = 4,
    ZMax = 5,
}

impl BoxFace {
    pub const ALL: [BoxFace; 6] =
        [BoxFace::XMin, BoxFace::XMax, BoxFace::YMin, BoxFace::YMax, BoxFace::ZMin, BoxFace::ZMax];

    pub fn tag(self) -> i64 {
        self as i64
    }
}

/// Geometric grading of the last `layers` cells in y towards the `y = max`
/// face. Each layer is `ratio` times as thick as the one below it, and the
/// layers together span `thickness`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryLayer<T> {
    pub layers: usize,
    pub thickness: T,
    pub ratio: T,
}

impl<T: Real> BoundaryLayer<T> {
    /// Layer thicknesses from the deepest layer up to the face.
    pub fn layer_thicknesses(&self) -> Vec<T> {
        let n = self.layers;
        let r = self.ratio;
        let denom: T = (0..n).map(|k| r.powi(k as i32)).sum();
        let deepest = self.thickness / denom;
        (0..n).map(|k| deepest * r.powi(k as i32)).collect()
    }
}

fn axis_coords<T: Real>(n: usize, len: T) -> Vec<T> {
    (0..=n).map(|i| len * T::count(i) / T::count(n)).collect()
}

/// Axis-aligned box `[0, dims.x] x [0, dims.y] x [0, dims.z]` split into
/// `nx * ny * nz` hexahedra, each cut into 6 tets along its main diagonal.
///
/// With `grading`, the top `layers` of the `ny` cells form a boundary layer
/// under the `y = dims.y` face; the remaining cells are uniform.
pub fn generate_box_channel<T: Real>(
    nx: usize,
    ny: usize,
    nz: usize,
    dims: [T; 3],
    grading: Option<BoundaryLayer<T>>,
) -> Result<TetMesh<T>> {
    if nx == 0 || ny == 0 || nz == 0 {
        return Err(Error::InvalidArgument(format!("cell counts must be >= 1, got {nx}x{ny}x{nz}")));
    }
    if dims.iter().any(|d| !(*d > T::zero()) || !d.is_finite()) {
        return Err(Error::InvalidArgument("box dimensions must be positive".into()));
    }
    let xs = axis_coords(nx, dims[0]);
    let zs = axis_coords(nz, dims[2]);
    let ys = match grading {
        None => axis_coords(ny, dims[1]),
        Some(bl) => {
            if !(bl.ratio > T::zero() && bl.ratio <= T::one()) {
                return Err(Error::InvalidArgument(format!("grading ratio {} not in (0, 1]", bl.ratio)));
            }
            if bl.layers == 0 || bl.layers >= ny {
                return Err(Error::InvalidArgument(format!(
                    "boundary layer count {} must be in [1, ny={ny})",
                    bl.layers
                )));
            }
            if !(bl.thickness > T::zero() && bl.thickness < dims[1]) {
                return Err(Error::InvalidArgument("boundary layer thickness must be inside the box".into()));
            }
            let core = ny - bl.layers;
            let mut ys = axis_coords(core, dims[1] - bl.thickness);
            let mut y = dims[1] - bl.thickness;
            for t in bl.layer_thicknesses() {
                y += t;
                ys.push(y);
            }
            *ys.last_mut().unwrap() = dims[1];
            ys
        }
    };

    let id = |i: usize, j: usize, k: usize| (k * (ny + 1) + j) * (nx + 1) + i;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1) * (nz + 1));
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                vertices.push(Vec3::new(xs[i], ys[j], zs[k]));
            }
        }
    }

    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut tets = Vec::with_capacity(6 * nx * ny * nz);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                for perm in PERMS {
                    let mut c = [i, j, k];
                    let mut tet = [id(c[0], c[1], c[2]); 4];
                    for (s, &axis) in perm.iter().enumerate() {
                        c[axis] += 1;
                        tet[s + 1] = id(c[0], c[1], c[2]);
                    }
                    orient(&vertices, &mut tet);
                    tets.push(tet);
                }
            }
        }
    }

    let grid_of = |v: usize| {
        let i = v % (nx + 1);
        let j = (v / (nx + 1)) % (ny + 1);
        let k = v / ((nx + 1) * (ny + 1));
        [i, j, k]
    };
    let maxes = [nx, ny, nz];
    let faces = TetMesh::<T>::boundary_from_tets(&tets)
        .into_iter()
        .map(|verts| {
            let g = verts.map(grid_of);
            let mut tag = None;
            for axis in 0..3 {
                if g.iter().all(|c| c[axis] == 0) {
                    tag = Some(BoxFace::ALL[2 * axis]);
                } else if g.iter().all(|c| c[axis] == maxes[axis]) {
                    tag = Some(BoxFace::ALL[2 * axis + 1]);
                }
            }
            BoundaryFace { verts, tag: tag.expect("boundary face lies on a box face").tag() }
        })
        .collect();
    TetMesh::new(vertices, tets, Some(faces))
}

fn orient<T: Real>(vertices: &[Point3<T>], tet: &mut [usize; 4]) {
    if tet_signed_volume(&tet.map(|v| vertices[v])) < T::zero() {
        tet.swap(2, 3);
    }
}

/// Face tags of [`generate_cylinder`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CylinderTag {
    /// Cap at `z = -length / 2`.
    CapLow = 0,
    /// Cap at `z = +length / 2`.
    CapHigh = 1,
    /// Wall below the split plane.
    WallFixed = 2,
    /// Wall above the split plane.
    WallShear = 3,
}

impl CylinderTag {
    pub fn tag(self) -> i64 {
        self as i64
    }
}

/// Body-fitted cylinder along z, centered at the origin.
///
/// The cross-section is a disk of `radial` concentric rings; ring `k` holds
/// `max(3, round(circumferential * k / radial))` points, so `circumferential`
/// is the point count on the wall. The disk is extruded through `axial`
/// layers and each triangular prism is cut into 3 tets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylinderSpec<T> {
    pub radial: usize,
    pub circumferential: usize,
    pub axial: usize,
    pub radius: T,
    pub length: T,
    /// Axial position separating the fixed and shear wall regions; snapped to
    /// the nearest layer plane.
    pub split_z: T,
}

impl<T: Real> CylinderSpec<T> {
    pub fn new(radial: usize, circumferential: usize, axial: usize, radius: T, length: T) -> Self {
        Self { radial, circumferential, axial, radius, length, split_z: length * T::lit(0.02) }
    }

    pub fn ring_counts(&self) -> Vec<usize> {
        (1..=self.radial)
            .map(|k| {
                let n = (self.circumferential as f64 * k as f64 / self.radial as f64).round() as usize;
                n.max(3)
            })
            .collect()
    }

    /// Closed-form vertex count.
    pub fn vertex_count(&self) -> usize {
        (1 + self.ring_counts().iter().sum::<usize>()) * (self.axial + 1)
    }

    /// Index of the layer plane used as the wall split.
    pub fn split_layer(&self) -> usize {
        let half = self.length * T::lit(0.5);
        let rel = ((self.split_z + half) / self.length * T::count(self.axial)).as_f64();
        (rel.round().max(0.0) as usize).min(self.axial)
    }

    pub fn split_plane_z(&self) -> T {
        let half = self.length * T::lit(0.5);
        -half + self.length * T::count(self.split_layer()) / T::count(self.axial)
    }
}

/// Disk triangulation: center point plus rings, CCW triangles.
fn disk<T: Real>(spec: &CylinderSpec<T>) -> (Vec<(T, T)>, Vec<[usize; 3]>, Vec<usize>) {
    let counts = spec.ring_counts();
    let mut pts = vec![(T::zero(), T::zero())];
    let mut ring_start = Vec::with_capacity(counts.len());
    for (k, &n) in counts.iter().enumerate() {
        ring_start.push(pts.len());
        let r = if k + 1 == spec.radial {
            spec.radius
        } else {
            spec.radius * T::count(k + 1) / T::count(spec.radial)
        };
        for i in 0..n {
            let a = T::TAU() * T::count(i) / T::count(n);
            pts.push((r * a.cos(), r * a.sin()));
        }
    }
    let mut tris = Vec::new();
    let n1 = counts[0];
    for i in 0..n1 {
        tris.push([0, ring_start[0] + i, ring_start[0] + (i + 1) % n1]);
    }
    for k in 0..counts.len() - 1 {
        let (na, nb) = (counts[k], counts[k + 1]);
        let (sa, sb) = (ring_start[k], ring_start[k + 1]);
        let (mut i, mut j) = (0usize, 0usize);
        while i < na || j < nb {
            // Advance along whichever ring has the smaller next angle.
            let next_a = (i + 1) as f64 / na as f64;
            let next_b = (j + 1) as f64 / nb as f64;
            if j >= nb || (i < na && next_a < next_b) {
                tris.push([sa + i % na, sb + j % nb, sa + (i + 1) % na]);
                i += 1;
            } else {
                tris.push([sa + i % na, sb + j % nb, sb + (j + 1) % nb]);
                j += 1;
            }
        }
    }
    for t in &mut tris {
        let (a, b, c) = (pts[t[0]], pts[t[1]], pts[t[2]]);
        let cross = (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0);
        if cross < T::zero() {
            t.swap(1, 2);
        }
    }
    let wall = (ring_start[counts.len() - 1]..pts.len()).collect();
    (pts, tris, wall)
}

pub fn generate_cylinder<T: Real>(spec: &CylinderSpec<T>) -> Result<TetMesh<T>> {
    if spec.radial == 0 || spec.circumferential < 3 || spec.axial == 0 {
        return Err(Error::InvalidArgument(format!(
            "cylinder counts must be radial >= 1, circumferential >= 3, axial >= 1; got {}/{}/{}",
            spec.radial, spec.circumferential, spec.axial
        )));
    }
    if !(spec.radius > T::zero()) || !(spec.length > T::zero()) {
        return Err(Error::InvalidArgument("cylinder radius and length must be positive".into()));
    }
    let (pts, tris, _) = disk(spec);
    let np = pts.len();
    let half = spec.length * T::lit(0.5);
    let zs: Vec<T> = (0..=spec.axial)
        .map(|l| {
            if l == spec.axial {
                half
            } else {
                -half + spec.length * T::count(l) / T::count(spec.axial)
            }
        })
        .collect();
    let mut vertices = Vec::with_capacity(np * (spec.axial + 1));
    for &z in &zs {
        for &(x, y) in &pts {
            vertices.push(Vec3::new(x, y, z));
        }
    }

    let mut tets = Vec::with_capacity(3 * tris.len() * spec.axial);
    for l in 0..spec.axial {
        let lo = l * np;
        let hi = (l + 1) * np;
        for tri in &tris {
            // Ordering prism corners by disk index makes the quad diagonals
            // agree between neighbouring prisms.
            let mut s = *tri;
            s.sort_unstable();
            let [a, b, c] = s;
            let cand = [
                [lo + a, lo + b, lo + c, hi + a],
                [lo + b, lo + c, hi + a, hi + b],
                [lo + c, hi + a, hi + b, hi + c],
            ];
            for mut t in cand {
                orient(&vertices, &mut t);
                tets.push(t);
            }
        }
    }

    let split = spec.split_layer();
    let faces = TetMesh::<T>::boundary_from_tets(&tets)
        .into_iter()
        .map(|verts| {
            let layers = verts.map(|v| v / np);
            let tag = if layers.iter().all(|&l| l == 0) {
                CylinderTag::CapLow
            } else if layers.iter().all(|&l| l == spec.axial) {
                CylinderTag::CapHigh
            } else if layers.iter().all(|&l| l <= split) {
                CylinderTag::WallFixed
            } else {
                CylinderTag::WallShear
            };
            BoundaryFace { verts, tag: tag.tag() }
        })
        .collect();
    TetMesh::new(vertices, tets, Some(faces))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{element_quality, extract_surface};

    /// Counts distinct positions; used to cross-check closed-form vertex counts.
    fn distinct_positions<T: Real>(points: &[Point3<T>], quantum: f64) -> usize {
        let mut set = std::collections::HashSet::new();
        for p in points {
            let key = p.to_f64().map(|c| (c / quantum).round() as i64);
            set.insert(key);
        }
        set.len()
    }

    #[test]
    fn unit_cube_has_six_positive_tets() {
        let m = generate_box_channel(1, 1, 1, [1.0, 1.0, 1.0], None).unwrap();
        assert_eq!(m.vertices.len(), 8);
        assert_eq!(m.tets.len(), 6);
        assert!(element_quality(&m).iter().all(|q| q.value > 0.0));
    }

    #[test]
    fn box_counts_follow_grid_formula() {
        for (nx, ny, nz) in [(2, 2, 2), (3, 1, 2), (4, 3, 1)] {
            let m = generate_box_channel(nx, ny, nz, [1.0, 0.5, 2.0], None).unwrap();
            assert_eq!(m.vertices.len(), (nx + 1) * (ny + 1) * (nz + 1));
            assert_eq!(m.tets.len(), 6 * nx * ny * nz);
            let expected_faces = 4 * (nx * ny + ny * nz + nx * nz);
            assert_eq!(m.boundary_faces.len(), expected_faces);
        }
    }

    #[test]
    fn box_tags_partition_the_six_faces() {
        let m = generate_box_channel(2, 3, 2, [2.0, 1.0, 1.0], None).unwrap();
        for face in BoxFace::ALL {
            let n = m.boundary_faces.iter().filter(|f| f.tag == face.tag()).count();
            assert!(n > 0, "{face:?}");
        }
        let s = extract_surface(&m);
        assert!(s.is_closed_manifold());
    }

    #[test]
    fn graded_layers_thin_toward_the_top() {
        let bl = BoundaryLayer { layers: 20, thickness: 0.04, ratio: 0.85 };
        let m = generate_box_channel(4, 30, 2, [1.05, 0.1, 0.05], Some(bl)).unwrap();
        let mut ys: Vec<f64> = m.vertices.iter().map(|p| p.y).collect();
        ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ys.dedup();
        assert_eq!(ys.len(), 31);
        let top = ys[30] - ys[29];
        let bottom_of_layer = ys[11] - ys[10];
        assert!(top < bottom_of_layer);
        assert!((ys[10] - 0.06).abs() < 1e-12);
        assert!(element_quality(&m).iter().all(|q| q.value > 0.0));
    }

    #[test]
    fn invalid_box_arguments() {
        assert!(generate_box_channel::<f64>(0, 1, 1, [1.0; 3], None).is_err());
        assert!(generate_box_channel::<f64>(1, 1, 1, [1.0, -1.0, 1.0], None).is_err());
        let bad = BoundaryLayer { layers: 2, thickness: 0.1, ratio: 1.5 };
        assert!(generate_box_channel::<f64>(1, 4, 1, [1.0; 3], Some(bad)).is_err());
    }

    #[test]
    fn cylinder_wall_points_lie_on_the_radius() {
        let spec = CylinderSpec::<f64>::new(3, 18, 10, 0.15, 1.25);
        let m = generate_cylinder(&spec).unwrap();
        let wall: Vec<usize> = m
            .boundary_faces
            .iter()
            .filter(|f| f.tag == CylinderTag::WallFixed.tag() || f.tag == CylinderTag::WallShear.tag())
            .flat_map(|f| f.verts)
            .collect();
        assert!(!wall.is_empty());
        for v in wall {
            let p: Vec3<f64> = m.vertices[v];
            assert!(((p.x * p.x + p.y * p.y).sqrt() - 0.15).abs() <= 1e-12);
        }
    }

    #[test]
    fn cylinder_has_no_inverted_elements_and_closed_boundary() {
        for (r, c, a) in [(1, 3, 1), (2, 12, 4), (4, 25, 9)] {
            let spec = CylinderSpec::new(r, c, a, 0.15, 1.25);
            let m = generate_cylinder(&spec).unwrap();
            assert!(element_quality(&m).iter().all(|q| q.value > 0.0));
            assert!(extract_surface(&m).is_closed_manifold());
            assert_eq!(m.vertices.len(), spec.vertex_count());
            assert_eq!(distinct_positions(&m.vertices, 1e-9), spec.vertex_count());
        }
    }

    #[test]
    fn cylinder_tags_cover_four_regions() {
        let spec = CylinderSpec::<f64>::new(3, 18, 10, 0.15, 1.25);
        let m = generate_cylinder(&spec).unwrap();
        for tag in [CylinderTag::CapLow, CylinderTag::CapHigh, CylinderTag::WallFixed, CylinderTag::WallShear] {
            assert!(m.boundary_faces.iter().any(|f| f.tag == tag.tag()), "{tag:?}");
        }
        assert!((spec.split_plane_z() - 0.0).abs() < 0.0626);
    }
}
