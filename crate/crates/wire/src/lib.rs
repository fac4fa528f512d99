//! Binary framing and message codecs for the link between a steering server
//! and its single client.
//!
//! Every frame is a 14 byte header (`"SHRL"`, version, type, u64 payload
//! length) followed by the payload; see [`codec`] for the field layout. Any
//! decoding error is fatal to the session.

pub mod codec;
pub mod connection;
pub mod error;
pub mod message;

pub use codec::{decode, encode, Codec, Decoded};
pub use connection::{Connection, FrameReader, FrameWriter};
pub use error::{Result, WireError};
pub use message::{DisplacementMsg, Message, Method, MsgType, SnapshotMsg, SurfaceMeshMsg, ACK_REJECTED};

pub const DEFAULT_PORT: u16 = 7411;
