use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use steer_core::geometry::Vec3;
use steer_core::mesh::{polytube_surface, torus_surface};
use steer_core::skeleton::{
    apply_skeleton_to_surface, skeletonize, solve_skeleton_deformation, CurveSkeleton, JointConstraint,
    SkeletonParams,
};
use steer_core::SurfaceMesh64;

fn census(s: &CurveSkeleton<f64>) -> (usize, usize, usize) {
    let d = s.degrees();
    let ends = d.iter().filter(|&&x| x == 1).count();
    let branches = d.iter().filter(|&&x| x >= 3).count();
    (s.joint_count(), ends, branches)
}

fn tube() -> SurfaceMesh64 {
    polytube_surface(&[(Vec3::new(0.0, 0.0, 0.0), Vec3::new(8.0, 0.0, 0.0))], 1.0, 0.25).unwrap()
}

#[test]
fn straight_tube_skeleton_follows_the_axis() {
    let surf = tube();
    let s = skeletonize(&surf, &SkeletonParams::default()).unwrap();
    let (n, ends, branches) = census(&s);
    eprintln!("tube: {n} joints, {ends} ends, {branches} branches");
    assert_eq!(ends, 2);
    assert_eq!(branches, 0);
    for p in &s.joints {
        assert!((p.y * p.y + p.z * p.z).sqrt() <= 0.25, "{p:?}");
    }
    assert_eq!(s.bind.len(), surf.vertex_count());
    assert_eq!(s.cluster_sizes().iter().sum::<usize>(), surf.vertex_count());
}

#[test]
fn torus_skeleton_is_one_loop() {
    let surf = torus_surface(3.0, 1.0, 0.25).unwrap();
    let s = skeletonize(&surf, &SkeletonParams::default()).unwrap();
    let (n, ends, branches) = census(&s);
    eprintln!("torus: {n} joints, {ends} ends, {branches} branches, {} curves", s.curves.len());
    assert!(s.degrees().iter().all(|&d| d == 2));
    assert_eq!(s.curves.len(), 1);
    assert!(s.curves[0].closed);
}

#[test]
fn y_tube_has_three_ends_and_a_branch() {
    let c = Vec3::new(0.0, 0.0, 0.0);
    let arms = [Vec3::new(-6.0, 0.0, 0.0), Vec3::new(5.0, 4.0, 0.0), Vec3::new(5.0, -4.0, 0.0)];
    let segs: Vec<_> = arms.iter().map(|&a| (c, a)).collect();
    let surf = polytube_surface(&segs, 1.0, 0.25).unwrap();
    let s = skeletonize(&surf, &SkeletonParams::default()).unwrap();
    let (n, ends, branches) = census(&s);
    eprintln!("Y: {n} joints, {ends} ends, {branches} branches");
    assert_eq!(ends, 3);
    assert!(s.degrees().iter().any(|&d| d == 3));
}

/// Row-replaced dense system, built straight from joint coordinates.
fn dense_oracle(s: &CurveSkeleton<f64>, constraints: &[JointConstraint<f64>]) -> Vec<Vec3<f64>> {
    let n = s.joint_count();
    let mut nbrs = vec![Vec::new(); n];
    for &[a, b] in &s.bones {
        nbrs[a].push(b);
        nbrs[b].push(a);
    }
    let dist = |a: usize, b: usize| (s.joints[a] - s.joints[b]).norm();
    let mut l = DMatrix::<f64>::zeros(n, n);
    let mut m = DMatrix::<f64>::identity(n, n);
    for i in 0..n {
        if nbrs[i].len() == 2 {
            let (a, b) = (nbrs[i][0], nbrs[i][1]);
            l[(i, a)] = 1.0 / dist(i, a);
            l[(i, b)] = 1.0 / dist(i, b);
            l[(i, i)] = -l[(i, a)] - l[(i, b)];
            m[(i, i)] = 0.5 * (dist(i, a) + dist(i, b));
        }
    }
    let bc = &l * m.try_inverse().unwrap() * &l;

    let mut fixed: Vec<Option<Vec3<f64>>> = vec![None; n];
    for c in constraints {
        fixed[c.joint] = Some(c.displacement);
    }
    for i in 0..n {
        if nbrs[i].len() != 2 && fixed[i].is_none() {
            fixed[i] = Some(Vec3::zero());
        }
    }
    // Components of chain-interior joints; with their end joints they form
    // the curves. A curve with no user constraint is pinned.
    let mut seen = vec![false; n];
    for start in 0..n {
        if seen[start] || nbrs[start].len() != 2 {
            continue;
        }
        let mut comp = vec![start];
        seen[start] = true;
        let mut k = 0;
        while k < comp.len() {
            for &w in &nbrs[comp[k]] {
                if nbrs[w].len() == 2 && !seen[w] {
                    seen[w] = true;
                    comp.push(w);
                }
            }
            k += 1;
        }
        let touched = comp.iter().any(|&j| constraints.iter().any(|c| c.joint == j))
            || comp.iter().flat_map(|&j| nbrs[j].clone()).any(|e| {
                nbrs[e].len() != 2 && constraints.iter().any(|c| c.joint == e && c.displacement != Vec3::zero())
            });
        if !touched {
            for j in comp {
                fixed[j].get_or_insert(Vec3::zero());
            }
        }
    }
    let mut a = bc.clone();
    for i in 0..n {
        if fixed[i].is_some() {
            a.row_mut(i).fill(0.0);
            a[(i, i)] = 1.0;
        }
    }
    let lu = a.lu();
    let mut out = vec![Vec3::zero(); n];
    for axis in 0..3 {
        let rhs = DVector::from_iterator(n, (0..n).map(|i| fixed[i].map_or(0.0, |v| v[axis])));
        let x = lu.solve(&rhs).unwrap();
        for i in 0..n {
            out[i][axis] = x[i];
        }
    }
    out
}

fn max_diff(a: &[Vec3<f64>], b: &[Vec3<f64>]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (*u - *v).norm()).fold(0.0, f64::max)
}

#[test]
fn seven_joint_line_matches_dense_oracle() {
    let joints: Vec<_> = (0..7).map(|i| Vec3::new(i as f64, 0.0, 0.0)).collect();
    let bones: Vec<_> = (0..6).map(|i| [i, i + 1]).collect();
    let s = CurveSkeleton::new(joints, bones, vec![]).unwrap();
    let t = Vec3::new(0.0, 1.0, 0.5);
    let constraints = [JointConstraint::pinned(0), JointConstraint::pinned(6), JointConstraint::moved(3, t)];
    let d = solve_skeleton_deformation(&s, &constraints).unwrap();
    let oracle = dense_oracle(&s, &constraints);
    assert!(max_diff(&d, &oracle) <= 1e-10);
    assert_eq!(d[3], t);
    assert_eq!((d[0], d[6]), (Vec3::zero(), Vec3::zero()));
    // Symmetric about the moved joint and bounded by it.
    for k in 1..3 {
        assert!((d[3 - k] - d[3 + k]).norm() < 1e-12);
        assert!(d[3 - k].norm() <= t.norm() + 1e-12);
    }
}

/// A random branched skeleton: a trunk with side chains, plus sometimes a
/// separate closed loop.
fn random_skeleton(rng: &mut ChaCha8Rng) -> CurveSkeleton<f64> {
    let mut joints = Vec::new();
    let mut bones = Vec::new();
    let chain = |joints: &mut Vec<Vec3<f64>>, bones: &mut Vec<[usize; 2]>, from: Option<usize>, len: usize, rng: &mut ChaCha8Rng| {
        let mut prev = from;
        let mut p = from.map_or(Vec3::zero(), |f| joints[f]);
        let dir = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        for _ in 0..len {
            let step = dir + Vec3::new(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3));
            p += step.normalized() * rng.gen_range(0.3..1.5);
            joints.push(p);
            let id = joints.len() - 1;
            if let Some(q) = prev {
                bones.push([q, id]);
            }
            prev = Some(id);
        }
    };
    let trunk = rng.gen_range(4..12);
    chain(&mut joints, &mut bones, None, trunk, rng);
    for _ in 0..rng.gen_range(0..3) {
        let at = rng.gen_range(1..trunk - 1);
        chain(&mut joints, &mut bones, Some(at), rng.gen_range(2..7), rng);
    }
    if rng.gen_bool(0.3) {
        let base = joints.len();
        let k = rng.gen_range(5..10);
        for i in 0..k {
            let a = std::f64::consts::TAU * i as f64 / k as f64;
            joints.push(Vec3::new(20.0 + 3.0 * a.cos(), 3.0 * a.sin(), rng.gen_range(-0.2..0.2)));
            bones.push([base + i, base + (i + 1) % k]);
        }
    }
    CurveSkeleton::new(joints, bones, vec![]).unwrap()
}

#[test]
fn randomized_skeletons_match_dense_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..50 {
        let s = random_skeleton(&mut rng);
        let n = s.joint_count();
        let mut constraints: Vec<JointConstraint<f64>> = Vec::new();
        for _ in 0..rng.gen_range(1..4) {
            let j = rng.gen_range(0..n);
            if constraints.iter().any(|c| c.joint == j) {
                continue;
            }
            let v = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            constraints.push(if rng.gen_bool(0.2) { JointConstraint::pinned(j) } else { JointConstraint::moved(j, v) });
        }
        let d = solve_skeleton_deformation(&s, &constraints).unwrap();
        let oracle = dense_oracle(&s, &constraints);
        let err = max_diff(&d, &oracle);
        assert!(err <= 1e-10, "case {case}: {err}");
        // Translation of the whole skeleton changes nothing.
        let shifted = solve_skeleton_deformation(&s.translated(Vec3::new(5.0, -3.0, 2.0)), &constraints).unwrap();
        assert!(max_diff(&d, &shifted) <= 1e-10, "case {case}");
    }
}

#[test]
fn whole_curve_constrained_moves_rigidly() {
    let joints: Vec<_> = (0..5).map(|i| Vec3::new(i as f64, (i * i) as f64 * 0.1, 0.0)).collect();
    let mut all: Vec<_> = joints.clone();
    all.extend((0..4).map(|i| Vec3::new(0.0, -1.0 - i as f64, 0.0)));
    let bones = vec![[0, 1], [1, 2], [2, 3], [3, 4], [0, 5], [5, 6], [6, 7], [7, 8]];
    let s = CurveSkeleton::new(all, bones, vec![]).unwrap();
    let t = Vec3::new(0.2, 0.0, -0.4);
    // Joint 0 has degree 2 here, so the two arms form one curve 4..8 through 0.
    let constraints: Vec<_> = (0..9).map(|j| JointConstraint::moved(j, t)).collect();
    let d = solve_skeleton_deformation(&s, &constraints).unwrap();
    assert!(d.iter().all(|v| *v == t));
    let zero = solve_skeleton_deformation(&s, &[JointConstraint::pinned(2)]).unwrap();
    assert!(zero.iter().all(|v| *v == Vec3::zero()));
}

#[test]
fn skinning_census_on_extracted_skeleton() {
    let surf = tube();
    let s = skeletonize(&surf, &SkeletonParams::default()).unwrap();
    let sizes = s.cluster_sizes();
    let t = Vec3::new(0.0, 0.5, 0.0);
    for j in [0, s.joint_count() / 2, s.joint_count() - 1] {
        let mut d = vec![Vec3::zero(); s.joint_count()];
        d[j] = t;
        let field = apply_skeleton_to_surface(&surf, &s, &d).unwrap();
        let moved = field.values.iter().filter(|v| **v != Vec3::zero()).count();
        assert_eq!(moved, sizes[j]);
        assert!(field.values.iter().enumerate().all(|(v, x)| (*x == t) == (s.bind[v] == j)));
    }
    let all = apply_skeleton_to_surface(&surf, &s, &vec![t; s.joint_count()]).unwrap();
    assert!(all.values.iter().all(|v| *v == t));
    assert!(apply_skeleton_to_surface(&surf, &s, &[t]).is_err());
}

#[test]
fn bending_a_tube_skeleton_moves_the_surface_smoothly() {
    let surf = tube();
    let s = skeletonize(&surf, &SkeletonParams::default()).unwrap();
    let ends: Vec<usize> = (0..s.joint_count()).filter(|&j| s.degrees()[j] == 1).collect();
    let mid = (0..s.joint_count())
        .min_by(|&a, &b| (s.joints[a].x - 4.0).abs().partial_cmp(&(s.joints[b].x - 4.0).abs()).unwrap())
        .unwrap();
    let lift = Vec3::new(0.0, 0.0, 1.0);
    let d = solve_skeleton_deformation(&s, &[JointConstraint::moved(mid, lift)]).unwrap();
    for &e in &ends {
        assert_eq!(d[e], Vec3::zero());
    }
    // Unimodal along the curve, peaking at (or beside) the handle with at most
    // a slight biharmonic overshoot.
    assert_eq!(s.curves.len(), 1);
    let z: Vec<f64> = s.curves[0].joints.iter().map(|&j| d[j].z).collect();
    let handle = s.curves[0].joints.iter().position(|&j| j == mid).unwrap();
    let peak = (0..z.len()).max_by(|&a, &b| z[a].partial_cmp(&z[b]).unwrap()).unwrap();
    assert!(peak.abs_diff(handle) <= 1 && z[peak] <= 1.01, "{z:?}");
    assert!(z[..=peak].windows(2).all(|w| w[1] >= w[0] - 1e-12), "{z:?}");
    assert!(z[peak..].windows(2).all(|w| w[1] <= w[0] + 1e-12), "{z:?}");
}
