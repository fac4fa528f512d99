//! Polyline curve skeletons: extraction from a closed surface, the curve
//! biharmonic deformation of joints, and rigid skinning back to the surface.

mod contract;
mod io;

use crate::geometry::{Point3, Vec3};
use crate::mesh::{DisplacementField, SurfaceMesh};
use crate::solve::{ReducedSolver, SolveConfig};
use crate::sparse::{SparseMatrix, TripletBuilder};
use crate::{Error, Real, Result};

pub use contract::{skeletonize, SkeletonParams};
pub use io::{format_skeleton, load_skeleton, parse_skeleton, write_skeleton};

/// Maximal chain of bones whose interior joints all have degree 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Curve {
    /// Joints in chain order. For a closed curve the first joint is not
    /// repeated at the end.
    pub joints: Vec<usize>,
    pub closed: bool,
}

impl Curve {
    /// Joints strictly inside an open chain, or every joint of a loop.
    pub fn interior(&self) -> &[usize] {
        if self.closed {
            &self.joints
        } else if self.joints.len() <= 2 {
            &[]
        } else {
            &self.joints[1..self.joints.len() - 1]
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveSkeleton<T> {
    pub joints: Vec<Point3<T>>,
    pub bones: Vec<[usize; 2]>,
    pub curves: Vec<Curve>,
    /// Joint of each surface vertex.
    pub bind: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointConstraint<T> {
    pub joint: usize,
    pub displacement: Vec3<T>,
}

impl<T: Real> JointConstraint<T> {
    pub fn pinned(joint: usize) -> Self {
        Self { joint, displacement: Vec3::zero() }
    }

    pub fn moved(joint: usize, displacement: Vec3<T>) -> Self {
        Self { joint, displacement }
    }
}

impl<T: Real> CurveSkeleton<T> {
    /// Validates the bone list and derives the curve decomposition.
    pub fn new(joints: Vec<Point3<T>>, bones: Vec<[usize; 2]>, bind: Vec<usize>) -> Result<Self> {
        let nj = joints.len();
        if let Some(i) = joints.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument(format!("joint {i} is not finite")));
        }
        let mut seen = std::collections::HashSet::new();
        for (b, &[i, j]) in bones.iter().enumerate() {
            if i >= nj || j >= nj {
                return Err(Error::InvalidArgument(format!("bone {b} references a missing joint")));
            }
            if i == j {
                return Err(Error::InvalidArgument(format!("bone {b} is a self loop")));
            }
            if !seen.insert((i.min(j), i.max(j))) {
                return Err(Error::InvalidArgument(format!("bone {b} is duplicated")));
            }
        }
        if let Some(v) = bind.iter().position(|&j| j >= nj) {
            return Err(Error::InvalidArgument(format!("surface vertex {v} is bound to a missing joint")));
        }
        let curves = decompose_curves(nj, &bones);
        Ok(Self { joints, bones, curves, bind })
    }

    pub fn joint_count(&self) -> usize {
        self.joints.len()
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        adjacency(self.joints.len(), &self.bones)
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency().iter().map(Vec::len).collect()
    }

    /// Joints with other than two neighbours.
    pub fn is_boundary_joint(&self) -> Vec<bool> {
        self.degrees().into_iter().map(|d| d != 2).collect()
    }

    /// Number of surface vertices bound to each joint.
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut c = vec![0; self.joints.len()];
        for &j in &self.bind {
            c[j] += 1;
        }
        c
    }

    pub fn translated(&self, t: Vec3<T>) -> Self {
        let mut s = self.clone();
        for p in &mut s.joints {
            *p += t;
        }
        s
    }
}

fn adjacency(nj: usize, bones: &[[usize; 2]]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); nj];
    for &[i, j] in bones {
        adj[i].push(j);
        adj[j].push(i);
    }
    for a in &mut adj {
        a.sort_unstable();
    }
    adj
}

/// Splits the bone graph into maximal chains at joints of degree other than
/// two; the remaining bones form closed loops.
fn decompose_curves(nj: usize, bones: &[[usize; 2]]) -> Vec<Curve> {
    let adj = adjacency(nj, bones);
    let deg: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut used = std::collections::HashSet::new();
    let key = |a: usize, b: usize| (a.min(b), a.max(b));
    let mut curves = Vec::new();
    for s in 0..nj {
        if deg[s] == 2 {
            continue;
        }
        for &first in &adj[s] {
            if used.contains(&key(s, first)) {
                continue;
            }
            used.insert(key(s, first));
            let mut chain = vec![s, first];
            let (mut prev, mut cur) = (s, first);
            while deg[cur] == 2 {
                let next = if adj[cur][0] == prev { adj[cur][1] } else { adj[cur][0] };
                used.insert(key(cur, next));
                chain.push(next);
                prev = cur;
                cur = next;
            }
            curves.push(Curve { joints: chain, closed: false });
        }
    }
    for s in 0..nj {
        if deg[s] != 2 || adj[s].iter().all(|&n| used.contains(&key(s, n))) {
            continue;
        }
        let mut chain = vec![s];
        let (mut prev, mut cur) = (s, adj[s][0]);
        used.insert(key(s, cur));
        while cur != s {
            chain.push(cur);
            let next = if adj[cur][0] == prev { adj[cur][1] } else { adj[cur][0] };
            used.insert(key(cur, next));
            prev = cur;
            cur = next;
        }
        curves.push(Curve { joints: chain, closed: true });
    }
    curves
}

fn bone_length<T: Real>(skel: &CurveSkeleton<T>, i: usize, j: usize) -> Result<T> {
    let d = (skel.joints[i] - skel.joints[j]).norm();
    if !(d > T::zero()) {
        return Err(Error::InvalidArgument(format!("joints {i} and {j} coincide")));
    }
    Ok(d)
}

/// Inverse-distance chain Laplacian. Rows of boundary joints are empty.
pub fn curve_laplacian<T: Real>(skel: &CurveSkeleton<T>) -> Result<SparseMatrix<T>> {
    let nj = skel.joint_count();
    let adj = skel.adjacency();
    let mut b = TripletBuilder::new(nj, nj);
    for i in 0..nj {
        if adj[i].len() != 2 {
            continue;
        }
        let mut diag = T::zero();
        for &j in &adj[i] {
            let w = T::one() / bone_length(skel, i, j)?;
            b.push(i, j, w);
            diag -= w;
        }
        b.push(i, i, diag);
    }
    Ok(b.build())
}

/// Half the summed neighbour distances for chain joints, one elsewhere.
pub fn curve_mass<T: Real>(skel: &CurveSkeleton<T>) -> Result<SparseMatrix<T>> {
    let adj = skel.adjacency();
    let mut d = vec![T::one(); skel.joint_count()];
    for (i, nbrs) in adj.iter().enumerate() {
        if nbrs.len() == 2 {
            d[i] = (bone_length(skel, i, nbrs[0])? + bone_length(skel, i, nbrs[1])?) * T::lit(0.5);
        } else {
            for &j in nbrs {
                bone_length(skel, i, j)?;
            }
        }
    }
    Ok(SparseMatrix::from_diagonal(&d))
}

/// `Lc Mc^-1 Lc`.
pub fn curve_bilaplacian<T: Real>(skel: &CurveSkeleton<T>) -> Result<SparseMatrix<T>> {
    let l = curve_laplacian(skel)?;
    let inv: Vec<T> = curve_mass(skel)?.diagonal().iter().map(|m| T::one() / *m).collect();
    l.matmul(&l.scale_rows(&inv))
}

/// Biharmonic joint displacements. Boundary joints and constrained joints
/// get identity rows; curves without any constrained joint stay at zero.
pub fn solve_skeleton_deformation<T: Real>(
    skel: &CurveSkeleton<T>,
    constraints: &[JointConstraint<T>],
) -> Result<Vec<Vec3<T>>> {
    let nj = skel.joint_count();
    let mut prescribed: Vec<Option<Vec3<T>>> = vec![None; nj];
    for c in constraints {
        if c.joint >= nj {
            return Err(Error::ConstraintOutOfRange { index: c.joint, dim: nj });
        }
        if !c.displacement.is_finite() {
            return Err(Error::InvalidArgument(format!("constraint on joint {} is not finite", c.joint)));
        }
        if prescribed[c.joint].is_some() {
            return Err(Error::DuplicateConstraint(c.joint));
        }
        prescribed[c.joint] = Some(c.displacement);
    }
    let mut constrained = skel.is_boundary_joint();
    for (j, p) in prescribed.iter().enumerate() {
        if p.is_some() {
            constrained[j] = true;
        }
    }
    for curve in &skel.curves {
        if !curve.joints.iter().any(|&j| prescribed[j].is_some()) {
            for &j in &curve.joints {
                constrained[j] = true;
            }
        }
    }
    let known: Vec<Vec3<T>> = prescribed.iter().map(|p| p.unwrap_or_else(Vec3::zero)).collect();
    if constrained.iter().all(|&c| c) {
        return Ok(known);
    }
    let bc = curve_bilaplacian(skel)?;
    let solver = ReducedSolver::new(&bc, &constrained, &SolveConfig::direct())?;
    let zero = vec![T::zero(); nj];
    let mut comps: [Vec<T>; 3] = Default::default();
    for (axis, comp) in comps.iter_mut().enumerate() {
        let k: Vec<T> = known.iter().map(|v| v[axis]).collect();
        *comp = solver.solve(&zero, &k, None)?.x;
    }
    Ok((0..nj).map(|j| Vec3::new(comps[0][j], comps[1][j], comps[2][j])).collect())
}

/// Each surface vertex takes the displacement of its bound joint.
pub fn apply_skeleton_to_surface<T: Real>(
    surface: &SurfaceMesh<T>,
    skel: &CurveSkeleton<T>,
    joint_displacements: &[Vec3<T>],
) -> Result<DisplacementField<T>> {
    if skel.bind.len() != surface.vertex_count() {
        return Err(Error::ConnectivityMismatch(format!(
            "skeleton binds {} vertices, surface has {}",
            skel.bind.len(),
            surface.vertex_count()
        )));
    }
    if joint_displacements.len() != skel.joint_count() {
        return Err(Error::CountMismatch { expected: skel.joint_count(), found: joint_displacements.len() });
    }
    DisplacementField::new(skel.bind.iter().map(|&j| joint_displacements[j]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize, spacing: f64) -> CurveSkeleton<f64> {
        let joints = (0..n).map(|i| Vec3::new(i as f64 * spacing, 0.0, 0.0)).collect();
        let bones = (1..n).map(|i| [i - 1, i]).collect();
        CurveSkeleton::new(joints, bones, Vec::new()).unwrap()
    }

    #[test]
    fn decomposition_of_a_star_and_a_loop() {
        // Star with arms of length 2 around joint 0, plus a separate triangle loop.
        let joints = (0..10).map(|i| Vec3::new(i as f64, (i * i) as f64, 0.0)).collect();
        let bones = vec![[0, 1], [1, 2], [0, 3], [3, 4], [0, 5], [5, 6], [7, 8], [8, 9], [9, 7]];
        let s = CurveSkeleton::new(joints, bones, Vec::new()).unwrap();
        assert_eq!(s.curves.len(), 4);
        assert_eq!(s.curves[0], Curve { joints: vec![0, 1, 2], closed: false });
        assert_eq!(s.curves[3], Curve { joints: vec![7, 8, 9], closed: true });
        assert_eq!(s.curves[3].interior(), &[7, 8, 9]);
        let bone_total: usize = s.curves.iter().map(|c| c.joints.len() - usize::from(!c.closed)).sum();
        assert_eq!(bone_total, 9);
    }

    #[test]
    fn invalid_bones() {
        let j = vec![Vec3::zero(), Vec3::new(1.0, 0.0, 0.0)];
        assert!(CurveSkeleton::new(j.clone(), vec![[0, 2]], vec![]).is_err());
        assert!(CurveSkeleton::new(j.clone(), vec![[0, 0]], vec![]).is_err());
        assert!(CurveSkeleton::new(j.clone(), vec![[0, 1], [1, 0]], vec![]).is_err());
        assert!(CurveSkeleton::new(j, vec![[0, 1]], vec![5]).is_err());
    }

    #[test]
    fn stencils() {
        let l = curve_laplacian(&line(3, 1.0)).unwrap().to_dense();
        assert_eq!(l[1], vec![1.0, -2.0, 1.0]);
        assert_eq!(l[0], vec![0.0; 3]);
        let l = curve_laplacian(&line(3, 0.5)).unwrap().to_dense();
        assert_eq!(l[1], vec![2.0, -4.0, 2.0]);
        let joints = vec![Vec3::zero(), Vec3::new(0.5, 0.0, 0.0), Vec3::new(2.0, 0.0, 0.0)];
        let s = CurveSkeleton::new(joints, vec![[0, 1], [1, 2]], vec![]).unwrap();
        assert_eq!(curve_mass(&s).unwrap().diagonal(), vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn coincident_joints_rejected() {
        let s = CurveSkeleton::<f64>::new(vec![Vec3::zero(); 3], vec![[0, 1], [1, 2]], vec![]).unwrap();
        assert!(curve_laplacian(&s).is_err());
        assert!(curve_mass(&s).is_err());
    }

    #[test]
    fn untouched_curves_stay_put() {
        let s = line(7, 1.0);
        let t = Vec3::new(0.0, 1.0, 0.0);
        let d = solve_skeleton_deformation(&s, &[JointConstraint::moved(3, t)]).unwrap();
        assert_eq!(d[0], Vec3::zero());
        assert_eq!(d[6], Vec3::zero());
        assert_eq!(d[3], t);
        assert!(d[2].y > 0.0 && d[2].y < 1.0);
        assert!((d[2].y - d[4].y).abs() < 1e-12);
        assert!(solve_skeleton_deformation(&s, &[JointConstraint::moved(9, t)]).is_err());
        let dup = [JointConstraint::pinned(2), JointConstraint::pinned(2)];
        assert!(matches!(solve_skeleton_deformation(&s, &dup), Err(Error::DuplicateConstraint(2))));
    }
}
