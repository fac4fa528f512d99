use std::io::{ErrorKind, Read, Write};
use std::net::{TcpStream, ToSocketAddrs};

use crate::codec::{Codec, Decoded};
use crate::message::Message;
use crate::{Result, WireError};

const READ_CHUNK: usize = 64 * 1024;

/// Reads whole frames from a byte stream.
pub struct FrameReader<R> {
    inner: R,
    codec: Codec,
    buf: Vec<u8>,
}

impl<R: Read> FrameReader<R> {
    pub fn new(inner: R) -> Self {
        Self::with_codec(inner, Codec::default())
    }

    pub fn with_codec(inner: R, codec: Codec) -> Self {
        Self { inner, codec, buf: Vec::new() }
    }

    /// Blocks until a frame is complete. Returns `None` when the peer closes
    /// the stream on a frame boundary.
    pub fn recv(&mut self) -> Result<Option<Message>> {
        loop {
            if !self.buf.is_empty() {
                if let Decoded::Frame { message, consumed } = self.codec.decode(&self.buf)? {
                    self.buf.drain(..consumed);
                    return Ok(Some(message));
                }
            }
            let old = self.buf.len();
            self.buf.resize(old + READ_CHUNK, 0);
            let n = loop {
                match self.inner.read(&mut self.buf[old..]) {
                    Err(e) if e.kind() == ErrorKind::Interrupted => continue,
                    other => break other,
                }
            };
            self.buf.truncate(old + n.as_ref().copied().unwrap_or(0));
            match n? {
                0 if old == 0 => return Ok(None),
                0 => return Err(WireError::UnexpectedEof(old)),
                _ => {}
            }
        }
    }

    pub fn get_ref(&self) -> &R {
        &self.inner
    }

    pub fn get_mut(&mut self) -> &mut R {
        &mut self.inner
    }
}

/// Writes whole frames to a byte stream.
pub struct FrameWriter<W> {
    inner: W,
    codec: Codec,
}

impl<W: Write> FrameWriter<W> {
    pub fn new(inner: W) -> Self {
        Self::with_codec(inner, Codec::default())
    }

    pub fn with_codec(inner: W, codec: Codec) -> Self {
        Self { inner, codec }
    }

    pub fn send(&mut self, msg: &Message) -> Result<()> {
        write_frame(&mut self.inner, &self.codec, msg)
    }

    pub fn get_mut(&mut self) -> &mut W {
        &mut self.inner
    }
}

fn write_frame<W: Write>(w: &mut W, codec: &Codec, msg: &Message) -> Result<()> {
    w.write_all(&codec.encode(msg))?;
    w.flush()?;
    Ok(())
}

/// Duplex link over one stream with one request in flight at a time.
pub struct Connection<S> {
    reader: FrameReader<S>,
}

impl<S: Read + Write> Connection<S> {
    pub fn new(stream: S) -> Self {
        Self::with_codec(stream, Codec::default())
    }

    pub fn with_codec(stream: S, codec: Codec) -> Self {
        Self { reader: FrameReader::with_codec(stream, codec) }
    }

    pub fn send(&mut self, msg: &Message) -> Result<()> {
        let codec = self.reader.codec;
        write_frame(self.reader.get_mut(), &codec, msg)
    }

    pub fn recv(&mut self) -> Result<Option<Message>> {
        self.reader.recv()
    }

    /// Sends `msg` and waits for the reply.
    pub fn request(&mut self, msg: &Message) -> Result<Message> {
        self.send(msg)?;
        self.recv()?.ok_or_else(|| WireError::Io(ErrorKind::UnexpectedEof.into()))
    }

    pub fn into_inner(self) -> S {
        self.reader.inner
    }
}

impl Connection<TcpStream> {
    pub fn connect(addr: impl ToSocketAddrs) -> Result<Self> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        Ok(Self::new(stream))
    }

    /// Separate reader and writer halves, for servicing the link from two
    /// threads.
    pub fn split(self) -> Result<(FrameReader<TcpStream>, FrameWriter<TcpStream>)> {
        let codec = self.reader.codec;
        let writer = FrameWriter::with_codec(self.reader.inner.try_clone()?, codec);
        Ok((self.reader, writer))
    }
}
