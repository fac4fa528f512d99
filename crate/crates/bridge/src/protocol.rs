//! JSON text protocol spoken with the UI.
//!
//! Requests and responses are objects with a `type` field. Any request may
//! carry a numeric `seq`, echoed in every response to it. Geometry travels
//! as flat arrays: `[x0, y0, z0, x1, ...]` for points and fields,
//! `[a0, b0, c0, a1, ...]` for triangles and `[a0, b0, ...]` for bones.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use steer_core::geometry::Vec3;
use steer_core::surface_deform::{HandleSpec, SurfaceAction};
use steer_core::{CurveSkeleton64, DisplacementField64, SurfaceMesh64};
use steer_wire::{DisplacementMsg, Method, SurfaceMeshMsg};

use crate::session::BridgeSession;
use crate::{BridgeError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Translate,
    ScaleByDirection,
    ScaleByNormals,
}

/// A vector for translate and per-axis scaling, a scalar for normal offsets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ActionParams {
    Vector([f64; 3]),
    Scalar(f64),
}

impl ActionKind {
    pub fn action(self, params: ActionParams) -> Result<SurfaceAction<f64>> {
        match (self, params) {
            (Self::Translate, ActionParams::Vector(v)) => Ok(SurfaceAction::Translate(Vec3::from_f64(v))),
            (Self::ScaleByDirection, ActionParams::Vector(v)) => {
                Ok(SurfaceAction::ScaleByDirection(Vec3::from_f64(v)))
            }
            (Self::ScaleByNormals, ActionParams::Scalar(s)) => Ok(SurfaceAction::ScaleByNormals(s)),
            (kind, p) => Err(BridgeError::BadRequest(format!("{kind:?} does not take parameters {p:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    #[default]
    Elasticity,
    Harmonic,
}

impl From<MethodName> for Method {
    fn from(m: MethodName) -> Self {
        match m {
            MethodName::Elasticity => Method::Elasticity,
            MethodName::Harmonic => Method::Harmonic,
        }
    }
}

fn default_order() -> u32 {
    2
}

fn default_steps() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum UiRequest {
    GetSurface,
    Action {
        kind: ActionKind,
        handles: Vec<i64>,
        #[serde(default)]
        fixed: Vec<i64>,
        #[serde(default = "default_order")]
        order: u32,
        params: ActionParams,
    },
    Skeletonize,
    MoveJoint {
        joint: usize,
        position: [f64; 3],
        #[serde(default)]
        pinned: Vec<usize>,
    },
    ApplySkeleton,
    Undo,
    Commit {
        #[serde(default = "default_steps")]
        steps: u32,
        #[serde(default)]
        between: u32,
        #[serde(default)]
        method: MethodName,
        /// Client-chosen order id; a repeated id is refused.
        #[serde(default)]
        id: Option<u64>,
    },
    Export {
        #[serde(default)]
        path: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seq: Option<u64>,
    #[serde(flatten)]
    pub request: UiRequest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum UiResponse {
    /// Base positions (as of the last commit) and the cumulative field on top.
    Surface {
        vertices: Vec<f64>,
        triangles: Vec<u64>,
        features: Vec<i64>,
        displacement: Vec<f64>,
        depth: usize,
    },
    /// Field to draw over the base positions, including any pending drag.
    Preview { displacement: Vec<f64>, depth: usize, pending: bool, max_norm: f64 },
    Skeleton { joints: Vec<f64>, bones: Vec<u64>, degrees: Vec<u64>, bind: Vec<u64> },
    Snapshot { step: u64, field: String, values: Vec<f64> },
    Ack { request: String, code: u32, detail: String },
    Error { message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reply {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seq: Option<u64>,
    #[serde(flatten)]
    pub body: UiResponse,
}

impl Reply {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("UI replies always serialize")
    }
}

fn flat(points: &[Vec3<f64>]) -> Vec<f64> {
    points.iter().flat_map(|p| [p.x, p.y, p.z]).collect()
}

pub fn surface_from_message(m: &SurfaceMeshMsg) -> Result<SurfaceMesh64> {
    let vertices = m.vertices.iter().map(|&v| Vec3::from_f64(v)).collect();
    let triangles = m.triangles.iter().map(|t| t.map(|v| v as usize)).collect();
    let volume = m.volume_ids.iter().map(|&v| v as usize).collect();
    Ok(SurfaceMesh64::new(vertices, triangles, m.tags.clone(), volume)?)
}

pub fn surface_response(session: &BridgeSession) -> UiResponse {
    let s = session.pristine();
    UiResponse::Surface {
        vertices: flat(&s.vertices),
        triangles: s.triangles.iter().flat_map(|t| t.map(|v| v as u64)).collect(),
        features: s.feature.clone(),
        displacement: flat(&session.cumulative().values),
        depth: session.depth(),
    }
}

pub fn preview_response(session: &BridgeSession) -> Result<UiResponse> {
    let field: DisplacementField64 = session.preview()?;
    Ok(UiResponse::Preview {
        displacement: flat(&field.values),
        depth: session.depth(),
        pending: session.has_pending(),
        max_norm: field.max_norm(),
    })
}

pub fn skeleton_response(skeleton: &CurveSkeleton64) -> UiResponse {
    UiResponse::Skeleton {
        joints: flat(&skeleton.joints),
        bones: skeleton.bones.iter().flat_map(|b| b.map(|j| j as u64)).collect(),
        degrees: skeleton.degrees().into_iter().map(|d| d as u64).collect(),
        bind: skeleton.bind.iter().map(|&j| j as u64).collect(),
    }
}

/// What a request turned into.
#[derive(Debug, Clone, PartialEq)]
pub enum Handled {
    Replies(Vec<UiResponse>),
    /// The order must go to the server; on acceptance call
    /// [`BridgeSession::finish_commit`] with `id`.
    Commit { order: DisplacementMsg, id: Option<u64> },
}

/// Runs every request except the server exchange of a commit.
pub fn dispatch(session: &mut BridgeSession, request: UiRequest, default_export: Option<&Path>) -> Result<Handled> {
    let replies = match request {
        UiRequest::GetSurface => vec![surface_response(session)],
        UiRequest::Action { kind, handles, fixed, order, params } => {
            let spec = HandleSpec::new(handles, fixed, order)?;
            session.apply_action(spec, kind.action(params)?)?;
            vec![preview_response(session)?]
        }
        UiRequest::Skeletonize => vec![skeleton_response(session.skeletonize()?)],
        UiRequest::MoveJoint { joint, position, pinned } => {
            session.move_joint(joint, Vec3::from_f64(position), pinned)?;
            vec![preview_response(session)?]
        }
        UiRequest::ApplySkeleton => {
            session.apply_skeleton()?;
            let skeleton = session.skeleton().ok_or(BridgeError::NoSkeleton)?;
            vec![skeleton_response(skeleton), preview_response(session)?]
        }
        UiRequest::Undo => {
            session.undo()?;
            let mut out: Vec<UiResponse> = session.skeleton().map(skeleton_response).into_iter().collect();
            out.push(preview_response(session)?);
            out
        }
        UiRequest::Commit { steps, between, method, id } => {
            let field = session.prepare_commit(id)?;
            let order = DisplacementMsg {
                values: field.values.iter().map(|v| v.to_f64()).collect(),
                schedule_steps: steps,
                steps_between: between,
                method: method.into(),
            };
            return Ok(Handled::Commit { order, id });
        }
        UiRequest::Export { path } => {
            let path = path
                .or_else(|| default_export.map(Path::to_path_buf))
                .ok_or_else(|| BridgeError::BadRequest("no export path given and none configured".into()))?;
            session.export(&path)?;
            vec![UiResponse::Ack { request: "export".into(), code: 0, detail: path.display().to_string() }]
        }
    };
    Ok(Handled::Replies(replies))
}
