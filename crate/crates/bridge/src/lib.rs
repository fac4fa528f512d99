//! Client side of a steering session.
//!
//! The bridge connects to a steering server, keeps the boundary surface it
//! receives, and runs all deformation math (handle actions, skeleton
//! extraction and joint drags) for a thin UI that talks JSON over a
//! WebSocket. Edits stack up until a commit sends their cumulative field to
//! the server as one displacement order.

pub mod error;
pub mod link;
pub mod protocol;
pub mod service;
pub mod session;

pub use error::{BridgeError, Result};
pub use link::{ServerEvent, ServerLink};
pub use protocol::{dispatch, Envelope, Handled, Reply, UiRequest, UiResponse};
pub use service::{start_bridge, BridgeConfig, BridgeHandle, Stopper};
pub use session::{BridgeSession, Edit};
