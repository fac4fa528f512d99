//! The running bridge: one control task owns the session; UI sockets and the
//! server link talk to it through channels.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::time::Duration;

use axum::extract::ws::{Message as WsMessage, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::Response;
use axum::routing::get;
use axum::Router;
use steer_wire::{DisplacementMsg, Message, ACK_REJECTED};
use tokio::net::TcpListener;
use tokio::sync::broadcast::error::RecvError;
use tokio::sync::mpsc::UnboundedReceiver;
use tokio::sync::{broadcast, mpsc, oneshot};
use tokio::task::JoinHandle;

use crate::link::{LinkSender, ServerEvent, ServerLink};
use crate::protocol::{dispatch, surface_from_message, surface_response, Envelope, Handled, Reply, UiResponse};
use crate::session::BridgeSession;
use crate::{BridgeError, Result};

#[derive(Debug, Clone)]
pub struct BridgeConfig {
    /// Steering server, `host:port`.
    pub server: String,
    pub ui: SocketAddr,
    /// Used by export requests that carry no path.
    pub export: Option<PathBuf>,
    /// How long a commit waits for the server's ACK.
    pub ack_timeout: Duration,
}

impl BridgeConfig {
    pub fn new(server: impl Into<String>, ui: SocketAddr) -> Self {
        Self { server: server.into(), ui, export: None, ack_timeout: Duration::from_secs(60) }
    }
}

enum Command {
    Ui { text: String, reply: oneshot::Sender<Vec<String>> },
    Stop,
}

#[derive(Clone)]
struct AppState {
    commands: mpsc::Sender<Command>,
    events: broadcast::Sender<String>,
}

/// Asks a running bridge to say BYE to the server and stop.
#[derive(Clone)]
pub struct Stopper(mpsc::Sender<Command>);

impl Stopper {
    pub async fn stop(&self) {
        let _ = self.0.send(Command::Stop).await;
    }
}

pub struct BridgeHandle {
    ui_addr: SocketAddr,
    commands: mpsc::Sender<Command>,
    control: JoinHandle<Result<BridgeSession>>,
    http: JoinHandle<()>,
}

impl BridgeHandle {
    pub fn ui_addr(&self) -> SocketAddr {
        self.ui_addr
    }

    pub fn stopper(&self) -> Stopper {
        Stopper(self.commands.clone())
    }

    /// Waits until the server closes the link or the bridge is stopped, and
    /// returns the final session.
    pub async fn wait(self) -> Result<BridgeSession> {
        let out = self.control.await.map_err(|e| BridgeError::Protocol(format!("control task failed: {e}")));
        self.http.abort();
        out?
    }

    pub async fn stop(self) -> Result<BridgeSession> {
        self.stopper().stop().await;
        self.wait().await
    }
}

/// Connects to the server, binds the UI port and starts serving.
pub async fn start_bridge(config: BridgeConfig) -> Result<BridgeHandle> {
    let server = config.server.clone();
    let link = tokio::task::spawn_blocking(move || ServerLink::connect(server.as_str()))
        .await
        .map_err(|e| BridgeError::Protocol(format!("connect task failed: {e}")))??;
    let session = BridgeSession::new(surface_from_message(&link.surface)?);
    log::info!("received surface with {} vertices", session.pristine().vertex_count());
    let (sender, server_events) = link.spawn()?;

    let listener = TcpListener::bind(config.ui).await?;
    let ui_addr = listener.local_addr()?;
    let (commands, command_rx) = mpsc::channel(64);
    let (events, _) = broadcast::channel(256);
    let app = Router::new()
        .route("/", get(upgrade))
        .route("/ws", get(upgrade))
        .with_state(AppState { commands: commands.clone(), events: events.clone() });
    let http = tokio::spawn(async move {
        if let Err(e) = axum::serve(listener, app).await {
            log::error!("UI server stopped: {e}");
        }
    });
    let control = Control {
        session,
        link: sender,
        server_events,
        link_open: true,
        ui: events,
        export: config.export,
        ack_timeout: config.ack_timeout,
    };
    let control = tokio::spawn(control.run(command_rx));
    Ok(BridgeHandle { ui_addr, commands, control, http })
}

async fn upgrade(ws: WebSocketUpgrade, State(state): State<AppState>) -> Response {
    ws.on_upgrade(move |socket| ui_connection(socket, state))
}

async fn ui_connection(mut socket: WebSocket, state: AppState) {
    let mut events = state.events.subscribe();
    loop {
        tokio::select! {
            incoming = socket.recv() => match incoming {
                Some(Ok(WsMessage::Text(text))) => {
                    let (reply, answer) = oneshot::channel();
                    let sent = state.commands.send(Command::Ui { text: text.as_str().to_owned(), reply }).await;
                    let replies = match (sent, answer.await) {
                        (Ok(()), Ok(r)) => r,
                        _ => vec![error_reply(None, BridgeError::Stopped)],
                    };
                    for r in replies {
                        if socket.send(WsMessage::Text(r.into())).await.is_err() {
                            return;
                        }
                    }
                }
                Some(Ok(WsMessage::Close(_))) | Some(Err(_)) | None => return,
                Some(Ok(_)) => {}
            },
            event = events.recv() => match event {
                Ok(text) => {
                    if socket.send(WsMessage::Text(text.into())).await.is_err() {
                        return;
                    }
                }
                Err(RecvError::Lagged(n)) => log::warn!("UI socket skipped {n} events"),
                Err(RecvError::Closed) => return,
            },
        }
    }
}

fn error_reply(seq: Option<u64>, e: BridgeError) -> String {
    Reply { seq, body: UiResponse::Error { message: e.to_string() } }.to_json()
}

struct Control {
    session: BridgeSession,
    link: LinkSender,
    server_events: UnboundedReceiver<ServerEvent>,
    link_open: bool,
    ui: broadcast::Sender<String>,
    export: Option<PathBuf>,
    ack_timeout: Duration,
}

impl Control {
    async fn run(mut self, mut commands: mpsc::Receiver<Command>) -> Result<BridgeSession> {
        loop {
            tokio::select! {
                command = commands.recv() => match command {
                    Some(Command::Ui { text, reply }) => {
                        let out = self.handle(&text).await;
                        let _ = reply.send(out);
                    }
                    Some(Command::Stop) | None => break,
                },
                event = self.server_events.recv(), if self.link_open => match event {
                    Some(ServerEvent::Message(m)) => self.forward(m),
                    Some(ServerEvent::Closed(reason)) => self.closed(reason),
                    None => self.closed(None),
                },
            }
            if !self.link_open {
                break;
            }
        }
        if self.link_open {
            let _ = self.link.send(Message::Bye);
        }
        Ok(self.session)
    }

    fn closed(&mut self, reason: Option<String>) {
        self.link_open = false;
        let message = match reason {
            Some(r) => format!("server link closed: {r}"),
            None => "server link closed".into(),
        };
        log::info!("{message}");
        let _ = self.ui.send(Reply { seq: None, body: UiResponse::Error { message } }.to_json());
    }

    /// Server traffic outside a commit exchange.
    fn forward(&mut self, msg: Message) {
        match msg {
            Message::Snapshot(s) => {
                let body = UiResponse::Snapshot { step: s.step, field: s.field, values: s.values };
                let _ = self.ui.send(Reply { seq: None, body }.to_json());
            }
            Message::Bye => self.closed(None),
            other => log::warn!("ignoring unexpected {:?} from server", other.msg_type()),
        }
    }

    async fn handle(&mut self, text: &str) -> Vec<String> {
        let envelope: Envelope = match serde_json::from_str(text) {
            Ok(e) => e,
            Err(e) => {
                // Echo the seq of a well-formed object with a bad request in it.
                let seq = serde_json::from_str::<serde_json::Value>(text)
                    .ok()
                    .and_then(|v| v.get("seq").and_then(serde_json::Value::as_u64));
                return vec![error_reply(seq, BridgeError::BadRequest(e.to_string()))];
            }
        };
        let seq = envelope.seq;
        let result = match dispatch(&mut self.session, envelope.request, self.export.as_deref()) {
            Ok(Handled::Replies(r)) => Ok(r),
            Ok(Handled::Commit { order, id }) => self.commit(order, id).await,
            Err(e) => Err(e),
        };
        match result {
            Ok(bodies) => bodies.into_iter().map(|body| Reply { seq, body }.to_json()).collect(),
            Err(e) => vec![error_reply(seq, e)],
        }
    }

    /// Sends the order and waits for its ACK, relaying snapshots meanwhile.
    async fn commit(&mut self, order: DisplacementMsg, id: Option<u64>) -> Result<Vec<UiResponse>> {
        if !self.link_open {
            return Err(BridgeError::LinkClosed);
        }
        self.link.send(Message::Displacement(order))?;
        let deadline = tokio::time::sleep(self.ack_timeout);
        tokio::pin!(deadline);
        loop {
            tokio::select! {
                _ = &mut deadline => {
                    return Err(BridgeError::Protocol("no ACK from the server".into()));
                }
                event = self.server_events.recv() => match event {
                    Some(ServerEvent::Message(Message::Ack { code, detail })) => {
                        if code == ACK_REJECTED {
                            return Err(BridgeError::Rejected(detail));
                        }
                        self.session.finish_commit(id)?;
                        let ack = UiResponse::Ack { request: "commit".into(), code, detail };
                        return Ok(vec![ack, surface_response(&self.session)]);
                    }
                    Some(ServerEvent::Message(m)) => {
                        self.forward(m);
                        if !self.link_open {
                            return Err(BridgeError::LinkClosed);
                        }
                    }
                    Some(ServerEvent::Closed(reason)) => {
                        self.closed(reason);
                        return Err(BridgeError::LinkClosed);
                    }
                    None => {
                        self.closed(None);
                        return Err(BridgeError::LinkClosed);
                    }
                },
            }
        }
    }
}
