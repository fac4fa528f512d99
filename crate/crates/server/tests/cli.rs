use std::process::Command;

use steer_core::mesh::io::{format_tet_mesh, read_displacement_field, write_tet_mesh};
use steer_core::mesh::{generate_box_channel, BoxFace};
use steer_core::solve::SolveConfig;
use steer_core::volume::{DeformMethod, ElasticParams};
use steer_core::DisplacementField64;
use steer_server::replay;

fn run(bin: &str, args: &[&str]) {
    let out = Command::new(bin).args(args).output().unwrap();
    assert!(out.status.success(), "{bin}: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn deform_then_deform_volume_matches_replay() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = generate_box_channel(6, 3, 3, [3.0, 1.0, 1.0], None).unwrap();
    let mesh_path = dir.path().join("box.tetmesh");
    let field_path = dir.path().join("edit.dispfield");
    let out_path = dir.path().join("moved.tetmesh");
    write_tet_mesh(&mesh, &mesh_path).unwrap();
    let (m, f, o) = (mesh_path.to_str().unwrap(), field_path.to_str().unwrap(), out_path.to_str().unwrap());
    let (top, left, right) = (BoxFace::YMax.tag().to_string(), BoxFace::XMin.tag(), BoxFace::XMax.tag());
    let fixed = format!("{left},{right}");

    run(
        env!("CARGO_BIN_EXE_deform"),
        &["--mesh", m, "--parts", "2", "--handles", &top, "--fixed", &fixed, "--translate", "0,-0.1,0.05", "--out", f],
    );
    let field: DisplacementField64 = read_displacement_field(&field_path).unwrap();
    assert!((field.max_norm() - 0.0125f64.sqrt()).abs() < 1e-12);

    run(env!("CARGO_BIN_EXE_deform-volume"), &["--mesh", m, "--displacement", f, "--steps", "2", "--parts", "2", "--out", o]);
    let moved = std::fs::read_to_string(&out_path).unwrap();
    let method = DeformMethod::Elasticity(ElasticParams::default());
    let (expected, _) = replay(&mesh, 2, &field, 2, &method, &SolveConfig::default()).unwrap();
    assert_eq!(moved, format_tet_mesh(&expected));
}

#[test]
fn deform_rejects_short_vectors() {
    let out = Command::new(env!("CARGO_BIN_EXE_deform"))
        .args(["--mesh", "missing.tetmesh", "--handles", "1", "--translate", "0,1", "--out", "x"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("3 comma-separated"));
}
