use crate::{Result, WireError};

/// Frame type byte.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum MsgType {
    Hello = 1,
    SurfaceMesh = 2,
    Displacement = 3,
    Ack = 4,
    Snapshot = 5,
    Bye = 6,
}

impl TryFrom<u8> for MsgType {
    type Error = WireError;

    fn try_from(b: u8) -> Result<Self> {
        Ok(match b {
            1 => MsgType::Hello,
            2 => MsgType::SurfaceMesh,
            3 => MsgType::Displacement,
            4 => MsgType::Ack,
            5 => MsgType::Snapshot,
            6 => MsgType::Bye,
            other => return Err(WireError::UnknownType(other)),
        })
    }
}

/// Volume deformation method requested by a displacement order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[repr(u8)]
pub enum Method {
    #[default]
    Elasticity = 0,
    Harmonic = 1,
}

impl TryFrom<u8> for Method {
    type Error = WireError;

    fn try_from(b: u8) -> Result<Self> {
        match b {
            0 => Ok(Method::Elasticity),
            1 => Ok(Method::Harmonic),
            other => Err(WireError::UnknownMethod(other)),
        }
    }
}

/// Boundary surface sent by the server after `Hello`.
///
/// `tags` has one entry per triangle and `volume_ids` one per vertex.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SurfaceMeshMsg {
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[u64; 3]>,
    pub tags: Vec<i64>,
    pub volume_ids: Vec<u64>,
}

impl SurfaceMeshMsg {
    pub fn is_consistent(&self) -> bool {
        self.tags.len() == self.triangles.len() && self.volume_ids.len() == self.vertices.len()
    }
}

/// Deformation order: a displacement per surface vertex plus its schedule.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DisplacementMsg {
    pub values: Vec<[f64; 3]>,
    /// Number of volume solves the displacement is split into.
    pub schedule_steps: u32,
    /// Solver steps run between consecutive schedule steps.
    pub steps_between: u32,
    pub method: Method,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SnapshotMsg {
    pub step: u64,
    pub field: String,
    pub values: Vec<f64>,
}

/// ACK codes. An accepted order is acknowledged with its order id, which is
/// never 0.
pub const ACK_REJECTED: u32 = 0;

#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    Hello { version: String },
    SurfaceMesh(SurfaceMeshMsg),
    Displacement(DisplacementMsg),
    Ack { code: u32, detail: String },
    Snapshot(SnapshotMsg),
    Bye,
}

impl Message {
    pub fn msg_type(&self) -> MsgType {
        match self {
            Message::Hello { .. } => MsgType::Hello,
            Message::SurfaceMesh(_) => MsgType::SurfaceMesh,
            Message::Displacement(_) => MsgType::Displacement,
            Message::Ack { .. } => MsgType::Ack,
            Message::Snapshot(_) => MsgType::Snapshot,
            Message::Bye => MsgType::Bye,
        }
    }

    /// Exact payload size in bytes.
    pub fn payload_len(&self) -> usize {
        match self {
            Message::Hello { version } => 4 + version.len(),
            Message::SurfaceMesh(m) => 8 + 24 * m.vertices.len() + 8 + 24 * m.triangles.len() + 8 * m.tags.len()
                + 8 * m.volume_ids.len(),
            Message::Displacement(d) => 8 + 24 * d.values.len() + 4 + 4 + 1,
            Message::Ack { detail, .. } => 4 + 4 + detail.len(),
            Message::Snapshot(s) => 8 + 4 + s.field.len() + 8 + 8 * s.values.len(),
            Message::Bye => 0,
        }
    }
}
