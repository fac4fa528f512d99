use std::net::SocketAddr;
use std::path::PathBuf;

use steer_core::solve::SolveConfig;
use steer_core::volume::{DeformMethod, ElasticParams};
use steer_core::TetMesh64;
use steer_wire::{Method, DEFAULT_PORT};

use crate::{Result, ServerError};

#[derive(Debug, Clone)]
pub enum MeshSource {
    /// A `tetmesh v1` file.
    Path(PathBuf),
    Mesh(TetMesh64),
}

impl MeshSource {
    pub fn load(&self) -> Result<TetMesh64> {
        match self {
            MeshSource::Path(p) => Ok(steer_core::mesh::io::load_tet_mesh(p)?),
            MeshSource::Mesh(m) => Ok(m.clone()),
        }
    }
}

/// How the loop checks the link at a cadence boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PollMode {
    /// Take whatever has arrived and keep stepping.
    #[default]
    NonBlocking,
    /// Wait for exactly one client message per poll. The client sends an
    /// `Ack` when it has no order, so a session is reproducible regardless
    /// of network timing.
    Lockstep,
}

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub mesh: MeshSource,
    pub parts: usize,
    pub listen: SocketAddr,
    /// Solver steps between polls of the link.
    pub cadence: u64,
    /// Solver steps between snapshots; 0 disables them.
    pub snapshot_every: u64,
    /// Where `snap_<step>.obj` and `snap_<step>.phi` go, if anywhere.
    pub snapshot_dir: Option<PathBuf>,
    /// Forces a deformation method regardless of what an order asks for.
    pub method_override: Option<Method>,
    pub elastic: ElasticParams<f64>,
    /// Schedule length used for orders that give 0 steps.
    pub schedule_default: u32,
    pub solve: SolveConfig<f64>,
    pub mode: PollMode,
    /// Stop after this many solver steps.
    pub max_steps: Option<u64>,
    pub dt: f64,
    pub inlet_tags: Vec<i64>,
    pub outlet_tags: Vec<i64>,
}

impl ServerConfig {
    pub fn new(mesh: MeshSource) -> Self {
        Self {
            mesh,
            parts: 1,
            listen: SocketAddr::from(([127, 0, 0, 1], DEFAULT_PORT)),
            cadence: 10,
            snapshot_every: 0,
            snapshot_dir: None,
            method_override: None,
            elastic: ElasticParams::default(),
            schedule_default: 1,
            solve: SolveConfig::default(),
            mode: PollMode::NonBlocking,
            max_steps: None,
            dt: 0.01,
            inlet_tags: vec![0],
            outlet_tags: vec![1],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cadence == 0 {
            return Err(ServerError::Config("cadence must be at least 1".into()));
        }
        if self.parts == 0 {
            return Err(ServerError::Config("at least one part is required".into()));
        }
        if self.schedule_default == 0 {
            return Err(ServerError::Config("default schedule length must be at least 1".into()));
        }
        self.elastic.validate()?;
        Ok(())
    }

    pub fn deform_method(&self, requested: Method) -> DeformMethod<f64> {
        match self.method_override.unwrap_or(requested) {
            Method::Harmonic => DeformMethod::Harmonic,
            Method::Elasticity => DeformMethod::Elasticity(self.elastic),
        }
    }
}
