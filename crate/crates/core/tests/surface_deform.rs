use steer_core::geometry::Vec3;
use steer_core::mesh::{extract_surface, generate_box_channel, implicit_surface, BoxFace};
use steer_core::operators::surface_cotan_laplacian;
use steer_core::surface_deform::{
    compute_handle_displacement, detect_features, smoothness_report, vertex_roles, HandleSpec, SurfaceAction,
    VertexRole,
};
use steer_core::{Error, SurfaceMesh64};

const FIXED: i64 = 0;
const HANDLE: i64 = 1;
const FREE: i64 = 2;

/// Flat strip on `[0, len] x [0, 1]`; the first column of cells is fixed,
/// the last column is the handle.
fn strip(nx: usize, ny: usize, len: f64) -> SurfaceMesh64 {
    let (hx, hy) = (len / nx as f64, 1.0 / ny as f64);
    let mut vertices = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push(Vec3::new(i as f64 * hx, j as f64 * hy, 0.0));
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut triangles = Vec::new();
    let mut feature = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let tag = if i == 0 {
                FIXED
            } else if i == nx - 1 {
                HANDLE
            } else {
                FREE
            };
            triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
            feature.extend([tag, tag]);
        }
    }
    SurfaceMesh64::standalone(vertices, triangles, feature).unwrap()
}

fn box_surface() -> SurfaceMesh64 {
    extract_surface(&generate_box_channel(6, 4, 4, [3.0, 2.0, 2.0], None).unwrap())
}

fn sphere(h: f64) -> SurfaceMesh64 {
    implicit_surface(|p: Vec3<f64>| p.norm() - 1.0, Vec3::splat(-1.5), Vec3::splat(1.5), h).unwrap()
}

#[test]
fn strip_ramp_is_exact_for_order_one() {
    let (nx, len) = (12, 6.0);
    let s = strip(nx, 5, len);
    let t = Vec3::new(0.7, -0.2, 1.3);
    let spec = HandleSpec::new([HANDLE], [FIXED], 1).unwrap();
    let d = compute_handle_displacement(&s, &spec, &SurfaceAction::Translate(t)).unwrap();
    let hx = len / nx as f64;
    for (p, v) in s.vertices.iter().zip(&d.values) {
        let ramp = ((p.x - hx) / (len - 2.0 * hx)).clamp(0.0, 1.0);
        assert!((*v - t * ramp).norm() <= 1e-8, "at {p:?}: {v:?}");
    }
}

#[test]
fn higher_order_is_smoother_at_the_fixed_rim() {
    let s = strip(16, 6, 8.0);
    let t = Vec3::new(0.0, 0.0, 1.0);
    let jump = |k: u32| {
        let spec = HandleSpec::new([HANDLE], [FIXED], k).unwrap();
        let d = compute_handle_displacement(&s, &spec, &SurfaceAction::Translate(t)).unwrap();
        let report = smoothness_report(&s, &d, &spec).unwrap();
        assert_eq!(report.len(), 2);
        report.iter().find(|r| r.role == VertexRole::Fixed).unwrap().max_jump
    };
    let (j1, j2, j3) = (jump(1), jump(2), jump(3));
    assert!(j2 < j1, "k=2 {j2} vs k=1 {j1}");
    assert!(j3 < j2, "k=3 {j3} vs k=2 {j2}");
}

#[test]
fn zero_translation_gives_zero_field() {
    let s = box_surface();
    for k in 1..=3 {
        let spec = HandleSpec::new([BoxFace::XMax.tag()], [BoxFace::XMin.tag()], k).unwrap();
        let d = compute_handle_displacement(&s, &spec, &SurfaceAction::Translate(Vec3::zero())).unwrap();
        assert!(d.is_zero());
        assert!(smoothness_report(&s, &d, &spec).unwrap().iter().all(|r| r.max_jump == 0.0));
    }
}

#[test]
fn pure_dirichlet_moves_everything() {
    let s = box_surface();
    let t = Vec3::new(0.25, 0.5, -1.0);
    let spec = HandleSpec::new(BoxFace::ALL.map(BoxFace::tag), [], 2).unwrap();
    let d = compute_handle_displacement(&s, &spec, &SurfaceAction::Translate(t)).unwrap();
    assert!(d.values.iter().all(|v| *v == t));
    assert!(smoothness_report(&s, &d, &spec).unwrap().is_empty());
}

#[test]
fn constraints_are_interpolated_exactly() {
    let s = box_surface();
    let spec = HandleSpec::new([BoxFace::XMax.tag()], [BoxFace::XMin.tag(), BoxFace::YMin.tag()], 2).unwrap();
    let roles = vertex_roles(&s, &spec).unwrap();
    let normals = s.vertex_normals();
    let d = compute_handle_displacement(&s, &spec, &SurfaceAction::ScaleByNormals(0.3)).unwrap();
    for v in 0..s.vertex_count() {
        match roles[v] {
            VertexRole::Fixed => assert_eq!(d.values[v], Vec3::zero()),
            VertexRole::Handle => assert_eq!(d.values[v], normals[v] * 0.3),
            VertexRole::Free => {}
        }
    }
}

#[test]
fn scale_by_direction_is_about_the_handle_centroid() {
    let s = box_surface();
    let spec = HandleSpec::new([BoxFace::XMax.tag()], [BoxFace::XMin.tag()], 1).unwrap();
    let roles = vertex_roles(&s, &spec).unwrap();
    let d = compute_handle_displacement(&s, &spec, &SurfaceAction::ScaleByDirection(Vec3::new(1.0, 2.0, 0.5)))
        .unwrap();
    let handle: Vec<usize> = (0..s.vertex_count()).filter(|&v| roles[v] == VertexRole::Handle).collect();
    let areas = s.vertex_areas();
    let total: f64 = handle.iter().map(|&v| areas[v]).sum();
    let c = handle.iter().map(|&v| s.vertices[v] * areas[v]).sum::<Vec3<f64>>() * (1.0 / total);
    assert!(c.x == 3.0 && (c.y - 1.0).abs() < 0.1 && (c.z - 1.0).abs() < 0.1);
    for &v in &handle {
        let r = s.vertices[v] - c;
        let expected = Vec3::new(0.0, r.y, -0.5 * r.z);
        assert!((d.values[v] - expected).norm() < 1e-12);
    }
}

#[test]
fn translation_equivariance() {
    let s = box_surface();
    let mut moved = s.clone();
    let shift = Vec3::new(3.0, -2.0, 1.0);
    for p in &mut moved.vertices {
        *p += shift;
    }
    let spec = HandleSpec::new([BoxFace::XMax.tag()], [BoxFace::XMin.tag()], 2).unwrap();
    for action in [
        SurfaceAction::Translate(Vec3::new(0.3, 0.1, 0.0)),
        SurfaceAction::ScaleByDirection(Vec3::new(1.5, 1.0, 0.8)),
        SurfaceAction::ScaleByNormals(0.2),
    ] {
        let a = compute_handle_displacement(&s, &spec, &action).unwrap();
        let b = compute_handle_displacement(&moved, &spec, &action).unwrap();
        assert!(a.sub(&b).unwrap().max_norm() <= 1e-10, "{action:?}");
    }
}

#[test]
fn order_one_obeys_the_maximum_principle() {
    let s = box_surface();
    let l = surface_cotan_laplacian(&s).unwrap();
    assert!(l.triplets().all(|(i, j, w)| i == j || w >= -1e-14), "needs nonnegative weights");
    let spec = HandleSpec::new([BoxFace::XMax.tag()], [BoxFace::XMin.tag()], 1).unwrap();
    let roles = vertex_roles(&s, &spec).unwrap();
    let d = compute_handle_displacement(&s, &spec, &SurfaceAction::ScaleByDirection(Vec3::new(1.0, 1.8, 0.4)))
        .unwrap();
    for axis in 0..3 {
        let constrained = (0..s.vertex_count()).filter(|&v| roles[v] != VertexRole::Free).map(|v| d.values[v][axis]);
        let (lo, hi) = constrained.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
        for v in (0..s.vertex_count()).filter(|&v| roles[v] == VertexRole::Free) {
            let x = d.values[v][axis];
            assert!(x >= lo - 1e-12 && x <= hi + 1e-12, "axis {axis}, vertex {v}: {x} not in [{lo}, {hi}]");
        }
    }
}

#[test]
fn missing_fixed_region_is_singular() {
    let s = box_surface();
    let spec = HandleSpec::new([BoxFace::XMax.tag()], [], 2).unwrap();
    let err = compute_handle_displacement(&s, &spec, &SurfaceAction::Translate(Vec3::splat(1.0))).unwrap_err();
    assert!(matches!(err, Error::Singular(_)));
    let unknown = HandleSpec::new([42], [BoxFace::XMin.tag()], 2).unwrap();
    let err = compute_handle_displacement(&s, &unknown, &SurfaceAction::Translate(Vec3::splat(1.0))).unwrap_err();
    assert!(matches!(err, Error::UnknownFeature(42)));
}

#[test]
fn cube_has_six_features() {
    let mut s = box_surface();
    s.feature.iter_mut().for_each(|f| *f = 7);
    let tagged = detect_features(&s, 60.0).unwrap();
    assert_eq!(tagged.feature_tags(), (0..6).collect::<Vec<i64>>());
    // Tags follow the lowest triangle index of each region.
    let mut first_seen = Vec::new();
    for &f in &tagged.feature {
        if !first_seen.contains(&f) {
            first_seen.push(f);
        }
    }
    assert_eq!(first_seen, (0..6).collect::<Vec<i64>>());
    // Regions coincide with the generator's face tags.
    let original = box_surface();
    for a in 0..s.triangle_count() {
        for b in 0..s.triangle_count() {
            assert_eq!(original.feature[a] == original.feature[b], tagged.feature[a] == tagged.feature[b]);
        }
    }
}

#[test]
fn smooth_sphere_is_one_feature() {
    let s = sphere(0.15);
    assert_eq!(detect_features(&s, 60.0).unwrap().feature_tags(), vec![0]);
    assert_eq!(detect_features(&box_surface(), 180.0).unwrap().feature_tags(), vec![0]);
    assert!(detect_features(&s, 0.0).is_err());
    assert!(detect_features(&s, 190.0).is_err());
}
