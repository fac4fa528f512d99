use thiserror::Error;

/// Framing and payload errors. All of them are fatal to a session: the
/// stream is never resynchronized after one.
#[derive(Debug, Error)]
pub enum WireError {
    #[error("bad magic {0:02x?}")]
    BadMagic(Vec<u8>),
    #[error("unsupported protocol version {0}")]
    UnsupportedVersion(u8),
    #[error("unknown message type {0}")]
    UnknownType(u8),
    #[error("payload of {len} bytes exceeds the {limit} byte limit")]
    FrameTooLarge { len: u64, limit: u64 },
    #[error("{what} needs {needed} bytes but only {available} remain in the payload")]
    PayloadOverflow { what: &'static str, needed: u64, available: u64 },
    #[error("{0} unread bytes after the last payload field")]
    TrailingBytes(u64),
    #[error("string field is not valid UTF-8")]
    InvalidUtf8,
    #[error("unknown deformation method {0}")]
    UnknownMethod(u8),
    #[error("checksum mismatch: frame says {expected:08x}, computed {computed:08x}")]
    ChecksumMismatch { expected: u32, computed: u32 },
    #[error("connection closed in the middle of a frame ({0} bytes buffered)")]
    UnexpectedEof(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, WireError>;
