//! Surface state held by the bridge: the pristine surface, the stack of
//! applied edits and their cumulative displacement.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use steer_core::geometry::{Point3, Vec3};
use steer_core::mesh::io::write_displacement_field;
use steer_core::skeleton::{
    apply_skeleton_to_surface, skeletonize, solve_skeleton_deformation, CurveSkeleton, JointConstraint,
    SkeletonParams,
};
use steer_core::solve::SolveConfig;
use steer_core::surface_deform::{compute_handle_displacement_with, HandleSpec, SurfaceAction};
use steer_core::{CurveSkeleton64, DisplacementField64, SurfaceMesh64};

use crate::{BridgeError, Result};

/// One entry of the action stack.
#[derive(Debug, Clone, PartialEq)]
pub enum Edit {
    Action { spec: HandleSpec, action: SurfaceAction<f64> },
    /// Joint constraints solved on `skeleton`, the skeleton as it was when
    /// the edit was made.
    Skeleton { skeleton: CurveSkeleton64, constraints: Vec<JointConstraint<f64>> },
}

#[derive(Debug, Clone)]
struct Entry {
    edit: Edit,
    field: DisplacementField64,
}

/// Joint drags not yet pushed onto the stack.
#[derive(Debug, Clone)]
struct PendingJoints {
    moves: BTreeMap<usize, Vec3<f64>>,
    pinned: BTreeSet<usize>,
    field: DisplacementField64,
}

impl PendingJoints {
    fn constraints(&self) -> Vec<JointConstraint<f64>> {
        let moved = self.moves.iter().map(|(&j, &d)| JointConstraint::moved(j, d));
        let pinned = self.pinned.iter().filter(|j| !self.moves.contains_key(j)).map(|&j| JointConstraint::pinned(j));
        moved.chain(pinned).collect()
    }
}

#[derive(Debug, Clone)]
pub struct BridgeSession {
    pristine: SurfaceMesh64,
    stack: Vec<Entry>,
    cumulative: DisplacementField64,
    skeleton: Option<CurveSkeleton64>,
    pending: Option<PendingJoints>,
    committed: BTreeSet<u64>,
    pub skeleton_params: SkeletonParams<f64>,
    pub solve: SolveConfig<f64>,
}

fn skeleton_edit(
    surface: &SurfaceMesh64,
    skeleton: &CurveSkeleton64,
    constraints: &[JointConstraint<f64>],
) -> Result<(DisplacementField64, Vec<Vec3<f64>>)> {
    let joints = solve_skeleton_deformation(skeleton, constraints)?;
    Ok((apply_skeleton_to_surface(surface, skeleton, &joints)?, joints))
}

fn edit_field(surface: &SurfaceMesh64, edit: &Edit, solve: &SolveConfig<f64>) -> Result<DisplacementField64> {
    match edit {
        Edit::Action { spec, action } => Ok(compute_handle_displacement_with(surface, spec, action, solve)?),
        Edit::Skeleton { skeleton, constraints } => skeleton_edit(surface, skeleton, constraints).map(|(f, _)| f),
    }
}

fn moved_skeleton(skeleton: &CurveSkeleton64, d: &[Vec3<f64>]) -> Result<CurveSkeleton64> {
    let joints = skeleton.joints.iter().zip(d).map(|(p, v)| *p + *v).collect();
    Ok(CurveSkeleton::new(joints, skeleton.bones.clone(), skeleton.bind.clone())?)
}

impl BridgeSession {
    pub fn new(surface: SurfaceMesh64) -> Self {
        let n = surface.vertex_count();
        Self {
            pristine: surface,
            stack: Vec::new(),
            cumulative: DisplacementField64::zeros(n),
            skeleton: None,
            pending: None,
            committed: BTreeSet::new(),
            skeleton_params: SkeletonParams::default(),
            solve: SolveConfig::default(),
        }
    }

    /// Surface as of the last commit.
    pub fn pristine(&self) -> &SurfaceMesh64 {
        &self.pristine
    }

    pub fn cumulative(&self) -> &DisplacementField64 {
        &self.cumulative
    }

    pub fn depth(&self) -> usize {
        self.stack.len()
    }

    pub fn edits(&self) -> impl Iterator<Item = &Edit> {
        self.stack.iter().map(|e| &e.edit)
    }

    /// The field each edit contributed when it was applied.
    pub fn edit_fields(&self) -> impl Iterator<Item = &DisplacementField64> {
        self.stack.iter().map(|e| &e.field)
    }

    pub fn skeleton(&self) -> Option<&CurveSkeleton64> {
        self.skeleton.as_ref()
    }

    pub fn has_pending(&self) -> bool {
        self.pending.is_some()
    }

    pub fn current_surface(&self) -> Result<SurfaceMesh64> {
        Ok(self.pristine.displaced(&self.cumulative)?)
    }

    /// Cumulative field plus any pending joint drag.
    pub fn preview(&self) -> Result<DisplacementField64> {
        match &self.pending {
            Some(p) => Ok(self.cumulative.add(&p.field)?),
            None => Ok(self.cumulative.clone()),
        }
    }

    /// Computes the edit on the current surface and pushes it. On error the
    /// stack is unchanged.
    pub fn apply(&mut self, edit: Edit) -> Result<&DisplacementField64> {
        let surface = self.current_surface()?;
        let (field, skeleton) = match &edit {
            Edit::Action { .. } => (edit_field(&surface, &edit, &self.solve)?, None),
            Edit::Skeleton { skeleton, constraints } => {
                let (field, joints) = skeleton_edit(&surface, skeleton, constraints)?;
                (field, Some(moved_skeleton(skeleton, &joints)?))
            }
        };
        self.cumulative = self.cumulative.add(&field)?;
        // A handle action leaves any skeleton behind the surface it moved.
        self.skeleton = skeleton;
        self.pending = None;
        self.stack.push(Entry { edit, field });
        Ok(&self.cumulative)
    }

    pub fn apply_action(&mut self, spec: HandleSpec, action: SurfaceAction<f64>) -> Result<&DisplacementField64> {
        self.apply(Edit::Action { spec, action })
    }

    /// Recomputes every edit from the pristine surface.
    pub fn replay(&self) -> Result<DisplacementField64> {
        let mut acc = DisplacementField64::zeros(self.pristine.vertex_count());
        for e in &self.stack {
            let surface = self.pristine.displaced(&acc)?;
            acc = acc.add(&edit_field(&surface, &e.edit, &self.solve)?)?;
        }
        Ok(acc)
    }

    /// Drops a pending joint drag if there is one, otherwise pops the last
    /// edit and replays the rest.
    pub fn undo(&mut self) -> Result<()> {
        if self.pending.take().is_some() {
            return Ok(());
        }
        let last = self.stack.pop().ok_or(BridgeError::EmptyStack)?;
        match self.replay() {
            Ok(c) => self.cumulative = c,
            Err(e) => {
                self.stack.push(last);
                return Err(e);
            }
        }
        self.skeleton = match last.edit {
            Edit::Skeleton { skeleton, .. } => Some(skeleton),
            Edit::Action { .. } => None,
        };
        Ok(())
    }

    pub fn skeletonize(&mut self) -> Result<&CurveSkeleton64> {
        let skeleton = skeletonize(&self.current_surface()?, &self.skeleton_params)?;
        self.pending = None;
        Ok(self.skeleton.insert(skeleton))
    }

    /// Drags `joint` to `position`, keeping earlier drags of other joints,
    /// and pins `pinned`. Returns the preview field.
    pub fn move_joint(
        &mut self,
        joint: usize,
        position: Point3<f64>,
        pinned: impl IntoIterator<Item = usize>,
    ) -> Result<DisplacementField64> {
        let skeleton = self.skeleton.as_ref().ok_or(BridgeError::NoSkeleton)?;
        let count = skeleton.joint_count();
        let pinned: BTreeSet<usize> = pinned.into_iter().collect();
        if let Some(&j) = pinned.iter().chain([&joint]).find(|&&j| j >= count) {
            return Err(BridgeError::JointOutOfRange { joint: j, count });
        }
        if pinned.contains(&joint) {
            return Err(BridgeError::BadRequest(format!("joint {joint} is both moved and pinned")));
        }
        if !position.is_finite() {
            return Err(BridgeError::BadRequest("joint position must be finite".into()));
        }
        let mut moves = self.pending.as_ref().map(|p| p.moves.clone()).unwrap_or_default();
        moves.insert(joint, position - skeleton.joints[joint]);
        moves.retain(|j, _| !pinned.contains(j));
        let mut next = PendingJoints { moves, pinned, field: DisplacementField64::zeros(0) };
        let surface = self.current_surface()?;
        next.field = skeleton_edit(&surface, skeleton, &next.constraints())?.0;
        self.pending = Some(next);
        self.preview()
    }

    /// Pushes the pending joint drag onto the stack.
    pub fn apply_skeleton(&mut self) -> Result<&DisplacementField64> {
        let pending = self.pending.as_ref().ok_or(BridgeError::NoPendingEdit)?;
        let skeleton = self.skeleton.clone().ok_or(BridgeError::NoSkeleton)?;
        let constraints = pending.constraints();
        self.apply(Edit::Skeleton { skeleton, constraints })
    }

    /// Field to send for a commit. A pending joint drag is not included.
    pub fn prepare_commit(&self, id: Option<u64>) -> Result<DisplacementField64> {
        if let Some(id) = id.filter(|id| self.committed.contains(id)) {
            return Err(BridgeError::DuplicateOrder(id));
        }
        Ok(self.cumulative.clone())
    }

    /// The server accepted the order: the displaced surface becomes the new
    /// pristine surface and the stack is cleared.
    pub fn finish_commit(&mut self, id: Option<u64>) -> Result<()> {
        self.pristine = self.current_surface()?;
        self.cumulative = DisplacementField64::zeros(self.pristine.vertex_count());
        self.stack.clear();
        self.pending = None;
        if let Some(id) = id {
            self.committed.insert(id);
        }
        Ok(())
    }

    /// Writes the cumulative field in dispfield format.
    pub fn export(&self, path: impl AsRef<Path>) -> Result<()> {
        Ok(write_displacement_field(&self.cumulative, path)?)
    }
}
