use steer_core::solve::SolveConfig;
use steer_core::volume::{apply_deformation_step, make_schedule, partition, DeformMethod, StepOutcome};
use steer_core::{DisplacementField64, TetMesh64};

use crate::gather::gather_surface;
use crate::Result;

/// Applies a surface displacement to `mesh` in `steps` scheduled volume
/// solves, exactly as a session applies one order with no solver stepping.
///
/// `field` is indexed like the gathered surface of the partitioned mesh.
pub fn replay(
    mesh: &TetMesh64,
    parts: usize,
    field: &DisplacementField64,
    steps: usize,
    method: &DeformMethod<f64>,
    solve: &SolveConfig<f64>,
) -> Result<(TetMesh64, Vec<StepOutcome<f64>>)> {
    let mut pmesh = partition(mesh, parts)?;
    let surface = gather_surface(&pmesh);
    field.check_len(surface.vertex_count())?;
    let mut offset = DisplacementField64::zeros(surface.vertex_count());
    let mut outcomes = Vec::with_capacity(steps);
    for target in make_schedule(field, steps)? {
        outcomes.push(apply_deformation_step(&mut pmesh, &surface, &offset, &target, method, mesh, solve)?);
        offset = target;
    }
    Ok((pmesh.global, outcomes))
}
