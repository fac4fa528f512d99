use steer_bridge::{BridgeError, BridgeSession, Edit};
use steer_core::geometry::Vec3;
use steer_core::mesh::io::read_displacement_field;
use steer_core::mesh::{extract_surface, generate_box_channel, polytube_surface, BoxFace};
use steer_core::surface_deform::{HandleSpec, SurfaceAction};
use steer_core::{DisplacementField64, SurfaceMesh64};

fn channel() -> SurfaceMesh64 {
    extract_surface(&generate_box_channel(8, 4, 4, [4.0, 1.0, 1.0], None).unwrap())
}

fn all_faces() -> Vec<i64> {
    BoxFace::ALL.iter().map(|f| f.tag()).collect()
}

fn max_diff(a: &DisplacementField64, b: &DisplacementField64) -> f64 {
    a.values.iter().zip(&b.values).map(|(x, y)| (*x - *y).norm()).fold(0.0, f64::max)
}

#[test]
fn stacked_translations_add_up() {
    let mut s = BridgeSession::new(channel());
    let spec = HandleSpec::new(all_faces(), [], 2).unwrap();
    let (t1, t2) = (Vec3::new(0.25, -0.5, 0.125), Vec3::new(-0.0625, 0.75, 1.0));
    s.apply_action(spec.clone(), SurfaceAction::Translate(t1)).unwrap();
    s.apply_action(spec, SurfaceAction::Translate(t2)).unwrap();
    assert_eq!(s.depth(), 2);
    let expected = DisplacementField64::uniform(s.pristine().vertex_count(), t1 + t2);
    assert_eq!(s.cumulative(), &expected);
    let fields: Vec<_> = s.edit_fields().collect();
    assert_eq!(fields.len(), 2);
    assert!(fields[1].values.iter().all(|v| *v == t2));
}

#[test]
fn undo_restores_the_previous_field_exactly() {
    let mut s = BridgeSession::new(channel());
    let right = HandleSpec::new([BoxFace::XMax.tag()], [BoxFace::XMin.tag()], 2).unwrap();
    s.apply_action(right.clone(), SurfaceAction::ScaleByDirection(Vec3::new(1.0, 1.3, 1.3))).unwrap();
    let before = s.cumulative().clone();
    s.apply_action(right, SurfaceAction::Translate(Vec3::new(0.0, 0.2, 0.0))).unwrap();
    assert_ne!(s.cumulative(), &before);
    s.undo().unwrap();
    assert_eq!(s.cumulative(), &before);
    s.undo().unwrap();
    assert_eq!(s.cumulative(), &DisplacementField64::zeros(s.pristine().vertex_count()));
    assert!(matches!(s.undo(), Err(BridgeError::EmptyStack)));
}

#[test]
fn replay_matches_incremental_application() {
    let mut s = BridgeSession::new(channel());
    let top = HandleSpec::new([BoxFace::YMax.tag()], [BoxFace::XMin.tag(), BoxFace::XMax.tag()], 2).unwrap();
    s.apply_action(top.clone(), SurfaceAction::ScaleByNormals(0.1)).unwrap();
    s.apply_action(top, SurfaceAction::Translate(Vec3::new(0.3, 0.0, 0.0))).unwrap();
    let replayed = s.replay().unwrap();
    let err = max_diff(&replayed, s.cumulative());
    assert!(err <= 1e-12, "replay differs by {err}");
}

#[test]
fn failed_action_leaves_the_stack_alone() {
    let mut s = BridgeSession::new(channel());
    let spec = HandleSpec::new([BoxFace::XMax.tag()], [BoxFace::XMin.tag()], 1).unwrap();
    s.apply_action(spec, SurfaceAction::Translate(Vec3::new(0.1, 0.0, 0.0))).unwrap();
    let before = s.cumulative().clone();
    let unknown = HandleSpec::new([99], [], 2).unwrap();
    assert!(s.apply_action(unknown, SurfaceAction::Translate(Vec3::new(1.0, 0.0, 0.0))).is_err());
    let bad = HandleSpec::new([BoxFace::XMax.tag()], [], 2).unwrap();
    assert!(s.apply_action(bad, SurfaceAction::Translate(Vec3::new(f64::NAN, 0.0, 0.0))).is_err());
    assert_eq!(s.depth(), 1);
    assert_eq!(s.cumulative(), &before);
}

#[test]
fn joint_drags_preview_then_apply_and_undo() {
    let surface = polytube_surface(&[(Vec3::new(0.0, 0.0, 0.0), Vec3::new(8.0, 0.0, 0.0))], 1.0, 0.25).unwrap();
    let mut s = BridgeSession::new(surface);
    assert!(matches!(s.move_joint(0, Vec3::new(0.0, 0.0, 0.0), []), Err(BridgeError::NoSkeleton)));
    let skeleton = s.skeletonize().unwrap().clone();
    let n = skeleton.joint_count();
    let ends: Vec<usize> = skeleton.degrees().iter().enumerate().filter(|(_, &d)| d == 1).map(|(j, _)| j).collect();
    assert_eq!(ends.len(), 2);
    let (moved, pinned) = (ends[0], ends[1]);

    assert!(matches!(s.move_joint(n, Vec3::new(0.0, 0.0, 0.0), []), Err(BridgeError::JointOutOfRange { .. })));
    assert!(s.move_joint(moved, skeleton.joints[moved], [moved]).is_err());

    let lift = Vec3::new(0.0, 1.0, 0.0);
    let preview = s.move_joint(moved, skeleton.joints[moved] + lift, [pinned]).unwrap();
    assert!(s.has_pending());
    assert_eq!(s.depth(), 0);
    let cluster_moved = (0..preview.vertex_count()).filter(|&v| skeleton.bind[v] == moved);
    for v in cluster_moved {
        assert!((preview.values[v] - lift).norm() < 1e-9);
    }
    for v in (0..preview.vertex_count()).filter(|&v| skeleton.bind[v] == pinned) {
        assert!(preview.values[v].norm() < 1e-9);
    }

    s.apply_skeleton().unwrap();
    assert_eq!(s.depth(), 1);
    assert!(!s.has_pending());
    assert_eq!(s.cumulative(), &preview);
    let after = s.skeleton().unwrap();
    assert!((after.joints[moved] - (skeleton.joints[moved] + lift)).norm() < 1e-9);
    assert!(matches!(s.edits().next(), Some(Edit::Skeleton { .. })));
    let replayed = s.replay().unwrap();
    assert!(max_diff(&replayed, s.cumulative()) <= 1e-12);

    s.undo().unwrap();
    assert_eq!(s.depth(), 0);
    assert_eq!(s.skeleton(), Some(&skeleton));
    assert!(s.cumulative().values.iter().all(|v| v.norm() == 0.0));
    assert!(matches!(s.apply_skeleton(), Err(BridgeError::NoPendingEdit)));
}

#[test]
fn handle_action_drops_the_skeleton() {
    let surface = polytube_surface(&[(Vec3::new(0.0, 0.0, 0.0), Vec3::new(6.0, 0.0, 0.0))], 1.0, 0.3).unwrap();
    let tags: Vec<i64> = {
        let mut t = surface.feature.clone();
        t.sort_unstable();
        t.dedup();
        t
    };
    let mut s = BridgeSession::new(surface);
    s.skeletonize().unwrap();
    let spec = HandleSpec::new(tags, [], 1).unwrap();
    s.apply_action(spec, SurfaceAction::Translate(Vec3::new(0.0, 0.0, 0.5))).unwrap();
    assert!(s.skeleton().is_none());
}

#[test]
fn commit_rebases_and_refuses_repeated_ids() {
    let mut s = BridgeSession::new(channel());
    let spec = HandleSpec::new([BoxFace::XMax.tag()], [BoxFace::XMin.tag()], 2).unwrap();
    s.apply_action(spec.clone(), SurfaceAction::Translate(Vec3::new(0.2, 0.0, 0.0))).unwrap();
    let field = s.prepare_commit(Some(7)).unwrap();
    let moved = s.current_surface().unwrap();
    s.finish_commit(Some(7)).unwrap();
    assert_eq!(s.depth(), 0);
    assert_eq!(s.pristine(), &moved);
    assert!(s.cumulative().values.iter().all(|v| v.norm() == 0.0));
    assert!(field.max_norm() > 0.19);
    assert!(matches!(s.prepare_commit(Some(7)), Err(BridgeError::DuplicateOrder(7))));
    assert!(s.prepare_commit(Some(8)).is_ok());
    assert!(s.prepare_commit(None).is_ok());
    s.apply_action(spec, SurfaceAction::Translate(Vec3::new(0.2, 0.0, 0.0))).unwrap();
    let x_max = s.current_surface().unwrap().bounding_box().1.x;
    assert!((x_max - 4.4).abs() < 1e-9, "{x_max}");
}

#[test]
fn export_writes_the_cumulative_field() {
    let mut s = BridgeSession::new(channel());
    let spec = HandleSpec::new([BoxFace::YMax.tag()], [BoxFace::YMin.tag()], 3).unwrap();
    s.apply_action(spec, SurfaceAction::ScaleByNormals(0.05)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("edit.dispfield");
    s.export(&path).unwrap();
    let back: DisplacementField64 = read_displacement_field(&path).unwrap();
    assert!(max_diff(&back, s.cumulative()) == 0.0);
}
