use thiserror::Error;

#[derive(Debug, Error)]
pub enum BridgeError {
    #[error(transparent)]
    Core(#[from] steer_core::Error),
    #[error(transparent)]
    Wire(#[from] steer_wire::WireError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("invalid request: {0}")]
    BadRequest(String),
    #[error("no skeleton; send skeletonize first")]
    NoSkeleton,
    #[error("no pending skeleton edit")]
    NoPendingEdit,
    #[error("nothing to undo")]
    EmptyStack,
    #[error("joint {joint} is out of range ({count} joints)")]
    JointOutOfRange { joint: usize, count: usize },
    #[error("order {0} was already committed")]
    DuplicateOrder(u64),
    #[error("server rejected the order: {0}")]
    Rejected(String),
    #[error("server link is closed")]
    LinkClosed,
    #[error("bridge has stopped")]
    Stopped,
}

pub type Result<T, E = BridgeError> = std::result::Result<T, E>;
