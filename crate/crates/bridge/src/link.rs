//! Blocking connection to the steering server, serviced by two threads.

use std::io::ErrorKind;
use std::net::{Shutdown, TcpStream, ToSocketAddrs};
use std::sync::mpsc;
use std::thread;

use steer_wire::{Connection, Message, SurfaceMeshMsg, WireError};
use tokio::sync::mpsc::{unbounded_channel, UnboundedReceiver};

use crate::{BridgeError, Result};

pub const CLIENT_VERSION: &str = concat!("steer-bridge ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq)]
pub enum ServerEvent {
    Message(Message),
    /// The server closed the link; `Some` carries a read error.
    Closed(Option<String>),
}

/// Handshake done, surface received, threads not yet started.
pub struct ServerLink {
    pub surface: SurfaceMeshMsg,
    conn: Connection<TcpStream>,
}

/// Outgoing half: messages are written in order by a writer thread.
#[derive(Debug, Clone)]
pub struct LinkSender {
    tx: mpsc::Sender<Message>,
}

impl LinkSender {
    pub fn send(&self, msg: Message) -> Result<()> {
        self.tx.send(msg).map_err(|_| BridgeError::LinkClosed)
    }
}

impl ServerLink {
    pub fn connect(addr: impl ToSocketAddrs) -> Result<Self> {
        let mut conn = Connection::connect(addr)?;
        match conn.request(&Message::Hello { version: CLIENT_VERSION.into() })? {
            Message::SurfaceMesh(surface) => Ok(Self { surface, conn }),
            other => Err(BridgeError::Protocol(format!("expected SurfaceMesh, got {:?}", other.msg_type()))),
        }
    }

    /// Starts the reader and writer threads.
    pub fn spawn(self) -> Result<(LinkSender, UnboundedReceiver<ServerEvent>)> {
        let (mut reader, mut writer) = self.conn.split()?;
        let (out_tx, out_rx) = mpsc::channel::<Message>();
        let (in_tx, in_rx) = unbounded_channel();
        thread::Builder::new().name("server-writer".into()).spawn(move || {
            for msg in out_rx {
                let bye = msg == Message::Bye;
                if let Err(e) = writer.send(&msg) {
                    log::warn!("server write failed: {e}");
                    break;
                }
                if bye {
                    let _ = writer.get_mut().shutdown(Shutdown::Write);
                    break;
                }
            }
        })?;
        thread::Builder::new().name("server-reader".into()).spawn(move || loop {
            let event = match reader.recv() {
                Ok(Some(m)) => ServerEvent::Message(m),
                Ok(None) => ServerEvent::Closed(None),
                Err(WireError::Io(e)) if e.kind() == ErrorKind::ConnectionReset => ServerEvent::Closed(None),
                Err(e) => ServerEvent::Closed(Some(e.to_string())),
            };
            let last = matches!(event, ServerEvent::Closed(_));
            if in_tx.send(event).is_err() || last {
                break;
            }
        })?;
        Ok((LinkSender { tx: out_tx }, in_rx))
    }
}
