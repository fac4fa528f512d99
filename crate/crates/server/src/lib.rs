//! Steering server: owns the volume mesh, advances a pluggable solver and
//! applies deformation orders from a single client between time steps.
//!
//! The loop polls the link every `cadence` solver steps. An accepted order
//! is split into a schedule of volume solves; each one is followed by the
//! order's `steps_between` solver steps. Orders arriving mid-schedule wait
//! in a queue.

pub mod batch;
pub mod config;
pub mod error;
pub mod gather;
pub mod scripted;
pub mod session;
pub mod solver;
pub mod timing;

pub use batch::replay;
pub use config::{MeshSource, PollMode, ServerConfig};
pub use error::{Result, ServerError};
pub use session::{run_session, write_snapshot, Event, OrderRecord, Server, SessionReport, SessionState};
pub use solver::{DemoLaplace, Fields, SolverPlugin, PHI};
pub use timing::{overhead_report, DeformationTiming, OverheadReport, TimingLedger};
