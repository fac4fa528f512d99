//! Frame layout, all integers little-endian:
//!
//! ```text
//! magic "SHRL" | version u8 | type u8 | payload_len u64 | payload | [crc32 u32]
//! ```
//!
//! Payload fields follow in declaration order. Arrays are preceded by a u64
//! element count (per-triangle tags and per-vertex volume ids reuse the
//! triangle and vertex counts), strings by a u32 byte length.

use crate::message::{DisplacementMsg, Message, Method, MsgType, SnapshotMsg, SurfaceMeshMsg};
use crate::{Result, WireError};

pub const MAGIC: [u8; 4] = *b"SHRL";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 14;
pub const CRC_LEN: usize = 4;
pub const DEFAULT_MAX_PAYLOAD: u64 = 1 << 30;

/// Outcome of [`Codec::decode`].
#[derive(Debug, Clone, PartialEq)]
pub enum Decoded {
    /// A complete frame occupying the first `consumed` bytes.
    Frame { message: Message, consumed: usize },
    /// The buffer holds a valid but incomplete frame prefix. Nothing was
    /// consumed.
    NeedMore,
}

/// Encoder/decoder settings. Both ends of a link must agree on `checksum`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Codec {
    /// Append a CRC32 of header and payload to every frame.
    pub checksum: bool,
    pub max_payload: u64,
}

impl Default for Codec {
    fn default() -> Self {
        Self { checksum: false, max_payload: DEFAULT_MAX_PAYLOAD }
    }
}

pub fn encode(msg: &Message) -> Vec<u8> {
    Codec::default().encode(msg)
}

pub fn decode(bytes: &[u8]) -> Result<Decoded> {
    Codec::default().decode(bytes)
}

impl Codec {
    pub fn with_checksum() -> Self {
        Self { checksum: true, ..Self::default() }
    }

    /// # Panics
    ///
    /// If a surface mesh message has tag or volume id arrays whose lengths
    /// differ from the triangle and vertex counts.
    pub fn encode(&self, msg: &Message) -> Vec<u8> {
        let len = msg.payload_len();
        let mut out = Vec::with_capacity(HEADER_LEN + len + CRC_LEN);
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.push(msg.msg_type() as u8);
        out.extend_from_slice(&(len as u64).to_le_bytes());
        match msg {
            Message::Hello { version } => put_str(&mut out, version),
            Message::SurfaceMesh(m) => {
                assert!(m.is_consistent(), "surface mesh message with inconsistent array lengths");
                put_u64(&mut out, m.vertices.len() as u64);
                m.vertices.iter().flatten().for_each(|v| put_f64(&mut out, *v));
                put_u64(&mut out, m.triangles.len() as u64);
                m.triangles.iter().flatten().for_each(|v| put_u64(&mut out, *v));
                m.tags.iter().for_each(|v| out.extend_from_slice(&v.to_le_bytes()));
                m.volume_ids.iter().for_each(|v| put_u64(&mut out, *v));
            }
            Message::Displacement(d) => {
                put_u64(&mut out, d.values.len() as u64);
                d.values.iter().flatten().for_each(|v| put_f64(&mut out, *v));
                put_u32(&mut out, d.schedule_steps);
                put_u32(&mut out, d.steps_between);
                out.push(d.method as u8);
            }
            Message::Ack { code, detail } => {
                put_u32(&mut out, *code);
                put_str(&mut out, detail);
            }
            Message::Snapshot(s) => {
                put_u64(&mut out, s.step);
                put_str(&mut out, &s.field);
                put_u64(&mut out, s.values.len() as u64);
                s.values.iter().for_each(|v| put_f64(&mut out, *v));
            }
            Message::Bye => {}
        }
        debug_assert_eq!(out.len(), HEADER_LEN + len);
        if self.checksum {
            let crc = crc32fast::hash(&out);
            put_u32(&mut out, crc);
        }
        out
    }

    /// Decodes the first frame of `bytes`.
    ///
    /// Header fields are checked as soon as they are available, so a bad
    /// magic is reported even when the frame is incomplete.
    pub fn decode(&self, bytes: &[u8]) -> Result<Decoded> {
        let n = bytes.len().min(MAGIC.len());
        if bytes[..n] != MAGIC[..n] {
            return Err(WireError::BadMagic(bytes[..n].to_vec()));
        }
        if let Some(&v) = bytes.get(4) {
            if v != VERSION {
                return Err(WireError::UnsupportedVersion(v));
            }
        }
        let ty = match bytes.get(5) {
            Some(&t) => MsgType::try_from(t)?,
            None => return Ok(Decoded::NeedMore),
        };
        if bytes.len() < HEADER_LEN {
            return Ok(Decoded::NeedMore);
        }
        let len = u64::from_le_bytes(bytes[6..14].try_into().unwrap());
        if len > self.max_payload {
            return Err(WireError::FrameTooLarge { len, limit: self.max_payload });
        }
        let trailer = if self.checksum { CRC_LEN } else { 0 };
        let total = HEADER_LEN + len as usize + trailer;
        if bytes.len() < total {
            return Ok(Decoded::NeedMore);
        }
        let body_end = HEADER_LEN + len as usize;
        if self.checksum {
            let expected = u32::from_le_bytes(bytes[body_end..total].try_into().unwrap());
            let computed = crc32fast::hash(&bytes[..body_end]);
            if expected != computed {
                return Err(WireError::ChecksumMismatch { expected, computed });
            }
        }
        let message = decode_payload(ty, &bytes[HEADER_LEN..body_end])?;
        Ok(Decoded::Frame { message, consumed: total })
    }
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_f64(out: &mut Vec<u8>, v: f64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    put_u32(out, s.len() as u32);
    out.extend_from_slice(s.as_bytes());
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, what: &'static str, n: u64) -> Result<&'a [u8]> {
        let available = self.buf.len() as u64;
        if n > available {
            return Err(WireError::PayloadOverflow { what, needed: n, available });
        }
        let (head, tail) = self.buf.split_at(n as usize);
        self.buf = tail;
        Ok(head)
    }

    fn array<const W: usize>(&mut self, what: &'static str, count: u64) -> Result<impl Iterator<Item = [u8; W]> + 'a> {
        let bytes = count
            .checked_mul(W as u64)
            .ok_or(WireError::PayloadOverflow { what, needed: u64::MAX, available: self.buf.len() as u64 })?;
        Ok(self.take(what, bytes)?.chunks_exact(W).map(|c| c.try_into().unwrap()))
    }

    fn u8(&mut self, what: &'static str) -> Result<u8> {
        Ok(self.take(what, 1)?[0])
    }

    fn u32(&mut self, what: &'static str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(what, 4)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &'static str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(what, 8)?.try_into().unwrap()))
    }

    fn string(&mut self, what: &'static str) -> Result<String> {
        let n = self.u32(what)?;
        let bytes = self.take(what, n as u64)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| WireError::InvalidUtf8)
    }

    fn vec3s(&mut self, what: &'static str, count: u64) -> Result<Vec<[f64; 3]>> {
        Ok(self
            .array::<24>(what, count)?
            .map(|c| std::array::from_fn(|k| f64::from_le_bytes(c[8 * k..8 * k + 8].try_into().unwrap())))
            .collect())
    }

    fn finish(self) -> Result<()> {
        if self.buf.is_empty() {
            Ok(())
        } else {
            Err(WireError::TrailingBytes(self.buf.len() as u64))
        }
    }
}

fn decode_payload(ty: MsgType, payload: &[u8]) -> Result<Message> {
    let mut r = Reader { buf: payload };
    let msg = match ty {
        MsgType::Hello => Message::Hello { version: r.string("client version")? },
        MsgType::SurfaceMesh => {
            let nv = r.u64("vertex count")?;
            let vertices = r.vec3s("vertex coordinates", nv)?;
            let nt = r.u64("triangle count")?;
            let triangles = r
                .array::<24>("triangle indices", nt)?
                .map(|c| std::array::from_fn(|k| u64::from_le_bytes(c[8 * k..8 * k + 8].try_into().unwrap())))
                .collect();
            let tags = r.array::<8>("triangle tags", nt)?.map(i64::from_le_bytes).collect();
            let volume_ids = r.array::<8>("volume vertex ids", nv)?.map(u64::from_le_bytes).collect();
            Message::SurfaceMesh(SurfaceMeshMsg { vertices, triangles, tags, volume_ids })
        }
        MsgType::Displacement => {
            let n = r.u64("vertex count")?;
            let values = r.vec3s("displacements", n)?;
            let schedule_steps = r.u32("schedule steps")?;
            let steps_between = r.u32("steps between")?;
            let method = Method::try_from(r.u8("method")?)?;
            Message::Displacement(DisplacementMsg { values, schedule_steps, steps_between, method })
        }
        MsgType::Ack => {
            let code = r.u32("ack code")?;
            Message::Ack { code, detail: r.string("ack detail")? }
        }
        MsgType::Snapshot => {
            let step = r.u64("step")?;
            let field = r.string("field name")?;
            let n = r.u64("value count")?;
            let values = r.array::<8>("values", n)?.map(f64::from_le_bytes).collect();
            Message::Snapshot(SnapshotMsg { step, field, values })
        }
        MsgType::Bye => Message::Bye,
    };
    r.finish()?;
    Ok(msg)
}
