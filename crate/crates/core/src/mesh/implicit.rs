//! Closed triangle surfaces of implicit shapes, by marching tetrahedra over a
//! Kuhn-split grid.

use std::collections::HashMap;

use crate::geometry::{Point3, Vec3};
use crate::mesh::SurfaceMesh;
use crate::{Error, Real, Result};

const KUHN_PERMUTATIONS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

/// Zero level set of `f` (negative inside) sampled on a grid of cubes of
/// edge `h` covering `[lo, hi]`. The shape must stay strictly inside the box
/// for the result to be closed. Samples closer than `h / 20` to zero are
/// pushed away from it so no output triangle collapses.
pub fn implicit_surface<T: Real>(
    f: impl Fn(Point3<T>) -> T,
    lo: Point3<T>,
    hi: Point3<T>,
    h: T,
) -> Result<SurfaceMesh<T>> {
    if !(h > T::zero()) {
        return Err(Error::InvalidArgument("grid spacing must be positive".into()));
    }
    let ext = hi - lo;
    let cells = [ext.x, ext.y, ext.z].map(|e| (e / h).ceil().to_usize().unwrap_or(0).max(1));
    let [nx, ny, nz] = cells;
    let node = |i: usize, j: usize, k: usize| (i * (ny + 1) + j) * (nz + 1) + k;
    let pos = |i: usize, j: usize, k: usize| lo + Vec3::new(T::count(i), T::count(j), T::count(k)) * h;
    let snap = h * T::lit(0.05);
    let mut val = vec![T::zero(); (nx + 1) * (ny + 1) * (nz + 1)];
    for i in 0..=nx {
        for j in 0..=ny {
            for k in 0..=nz {
                let v = f(pos(i, j, k));
                val[node(i, j, k)] = if v.abs() < snap {
                    if v < T::zero() { -snap } else { snap }
                } else {
                    v
                };
            }
        }
    }
    let mut vertices = Vec::new();
    let mut edge_vertex: HashMap<(usize, usize), usize> = HashMap::new();
    let mut triangles = Vec::new();
    for i in 0..nx {
        for j in 0..ny {
            for k in 0..nz {
                for perm in KUHN_PERMUTATIONS {
                    let mut c = [i, j, k];
                    let mut ids = [node(c[0], c[1], c[2]); 4];
                    let mut pts = [pos(c[0], c[1], c[2]); 4];
                    for (s, &axis) in perm.iter().enumerate() {
                        c[axis] += 1;
                        ids[s + 1] = node(c[0], c[1], c[2]);
                        pts[s + 1] = pos(c[0], c[1], c[2]);
                    }
                    let inside: Vec<usize> = (0..4).filter(|&a| val[ids[a]] < T::zero()).collect();
                    let outside: Vec<usize> = (0..4).filter(|&a| val[ids[a]] >= T::zero()).collect();
                    if inside.is_empty() || outside.is_empty() {
                        continue;
                    }
                    let mut cross = |a: usize, b: usize| -> usize {
                        let key = (ids[a].min(ids[b]), ids[a].max(ids[b]));
                        *edge_vertex.entry(key).or_insert_with(|| {
                            let (fa, fb) = (val[ids[a]], val[ids[b]]);
                            let t = fa / (fa - fb);
                            vertices.push(pts[a] + (pts[b] - pts[a]) * t);
                            vertices.len() - 1
                        })
                    };
                    let polys: Vec<[usize; 3]> = match (inside.len(), outside.len()) {
                        (1, 3) => {
                            let a = inside[0];
                            vec![[cross(a, outside[0]), cross(a, outside[1]), cross(a, outside[2])]]
                        }
                        (3, 1) => {
                            let a = outside[0];
                            vec![[cross(inside[0], a), cross(inside[1], a), cross(inside[2], a)]]
                        }
                        _ => {
                            let (a, b) = (inside[0], inside[1]);
                            let (c2, d) = (outside[0], outside[1]);
                            let (ac, ad, bd, bc) = (cross(a, c2), cross(a, d), cross(b, d), cross(b, c2));
                            vec![[ac, ad, bd], [ac, bd, bc]]
                        }
                    };
                    let mean = |set: &[usize]| {
                        set.iter().map(|&a| pts[a]).sum::<Vec3<T>>() * (T::one() / T::count(set.len()))
                    };
                    let outward = mean(&outside) - mean(&inside);
                    for mut t in polys {
                        let n = (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]);
                        if n.dot(outward) < T::zero() {
                            t.swap(1, 2);
                        }
                        triangles.push(t);
                    }
                }
            }
        }
    }
    if triangles.is_empty() {
        return Err(Error::InvalidArgument("the shape does not cross the sampling grid".into()));
    }
    let nt = triangles.len();
    SurfaceMesh::standalone(vertices, triangles, vec![0; nt])
}

/// Signed distance to a capsule (segment swept by a ball of `radius`).
pub fn capsule_distance<T: Real>(p: Point3<T>, a: Point3<T>, b: Point3<T>, radius: T) -> T {
    let ab = b - a;
    let t = ((p - a).dot(ab) / ab.norm_squared()).max(T::zero()).min(T::one());
    (p - (a + ab * t)).norm() - radius
}

/// Union of capsules of a common radius around the given segments.
pub fn polytube_surface<T: Real>(segments: &[(Point3<T>, Point3<T>)], radius: T, h: T) -> Result<SurfaceMesh<T>> {
    if segments.is_empty() {
        return Err(Error::InvalidArgument("no segments".into()));
    }
    let mut lo = Vec3::splat(T::infinity());
    let mut hi = Vec3::splat(T::neg_infinity());
    for &(a, b) in segments {
        for p in [a, b] {
            lo = Vec3::new(lo.x.min(p.x), lo.y.min(p.y), lo.z.min(p.z));
            hi = Vec3::new(hi.x.max(p.x), hi.y.max(p.y), hi.z.max(p.z));
        }
    }
    let pad = Vec3::splat(radius + T::lit(1.5) * h);
    // Offsetting the grid by an irrational fraction of `h` keeps symmetric
    // shapes from lining up with grid nodes.
    let shift = Vec3::splat(h * T::lit(0.3819660112501051));
    let f = |p: Point3<T>| {
        segments.iter().map(|&(a, b)| capsule_distance(p, a, b, radius)).fold(T::infinity(), T::min)
    };
    implicit_surface(f, lo - pad - shift, hi + pad, h)
}

/// Torus around the z axis with major radius `major` and tube radius `minor`.
pub fn torus_surface<T: Real>(major: T, minor: T, h: T) -> Result<SurfaceMesh<T>> {
    let f = |p: Point3<T>| {
        let q = (p.x * p.x + p.y * p.y).sqrt() - major;
        (q * q + p.z * p.z).sqrt() - minor
    };
    let e = major + minor + T::lit(1.5) * h;
    let shift = Vec3::splat(h * T::lit(0.3819660112501051));
    let lo = Vec3::new(-e, -e, -(minor + T::lit(1.5) * h)) - shift;
    let hi = Vec3::new(e, e, minor + T::lit(1.5) * h);
    implicit_surface(f, lo, hi, h)
}
