//! Headless client for driving a session from code.

use std::net::ToSocketAddrs;

use steer_core::geometry::Vec3;
use steer_core::SurfaceMesh64;
use steer_wire::{Connection, Message, SurfaceMeshMsg, WireError};

use crate::{Result, ServerError};

/// Lockstep tick: tells the server there is no order at this poll.
pub fn tick() -> Message {
    Message::Ack { code: 0, detail: "tick".into() }
}

pub fn surface_from_message(m: &SurfaceMeshMsg) -> Result<SurfaceMesh64> {
    let vertices = m.vertices.iter().map(|v| Vec3::new(v[0], v[1], v[2])).collect();
    let triangles = m.triangles.iter().map(|t| t.map(|v| v as usize)).collect();
    let volume = m.volume_ids.iter().map(|&v| v as usize).collect();
    Ok(SurfaceMesh64::new(vertices, triangles, m.tags.clone(), volume)?)
}

#[derive(Debug)]
pub struct ScriptOutcome {
    pub surface: SurfaceMeshMsg,
    /// Everything the server sent after the surface, in order.
    pub received: Vec<Message>,
}

/// Connects, says hello, sends the messages produced by `script` from the
/// received surface, then reads until the server closes the link.
pub fn run_script(
    addr: impl ToSocketAddrs,
    script: impl FnOnce(&SurfaceMeshMsg) -> Vec<Message>,
) -> Result<ScriptOutcome> {
    let mut conn = Connection::connect(addr)?;
    let surface = match conn.request(&Message::Hello { version: "scripted".into() })? {
        Message::SurfaceMesh(s) => s,
        other => return Err(ServerError::Protocol(format!("expected SurfaceMesh, got {:?}", other.msg_type()))),
    };
    for m in script(&surface) {
        conn.send(&m)?;
    }
    let mut received = Vec::new();
    loop {
        match conn.recv() {
            Ok(Some(m)) => received.push(m),
            Ok(None) => break,
            Err(WireError::Io(e)) if e.kind() == std::io::ErrorKind::ConnectionReset => break,
            Err(e) => return Err(e.into()),
        }
    }
    Ok(ScriptOutcome { surface, received })
}
