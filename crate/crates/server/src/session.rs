//! The session state machine: one client, one mesh, one control thread.

use std::collections::VecDeque;
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream};
use std::path::Path;
use std::sync::mpsc::{self, Receiver, TryRecvError};
use std::time::Instant;

use log::{info, warn};
use steer_core::geometry::Vec3;
use steer_core::mesh::io::{format_scalar_field, format_surface_obj};
use steer_core::volume::{apply_deformation_step, make_schedule, partition, DeformMethod, PartitionedMesh};
use steer_core::{DisplacementField64, QualityStats64, SurfaceMesh64, TetMesh64};
use steer_wire::{Connection, FrameWriter, Message, Method, SnapshotMsg, WireError, ACK_REJECTED};

use crate::config::{PollMode, ServerConfig};
use crate::gather::{gather_surface, surface_at, surface_message};
use crate::solver::{DemoLaplace, Fields, SolverPlugin, PHI};
use crate::timing::{DeformationTiming, TimingLedger};
use crate::{Result, ServerError};

pub const SERVER_VERSION: &str = concat!("steer-server ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SessionState {
    Loading,
    SurfaceReady,
    AwaitingClient,
    Running,
    Closed,
}

/// What happened, in order. Step numbers count completed solver steps.
#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    SolverStep(u64),
    Poll(u64),
    OrderQueued { order: u32, step: u64 },
    OrderRejected { step: u64, reason: String },
    /// Schedule step `index` (1-based) of `of` applied after solver step `step`.
    Deformation { order: u32, index: u32, of: u32, step: u64 },
    OrderComplete { order: u32, step: u64 },
    Snapshot(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderRecord {
    pub id: u32,
    pub schedule_steps: u32,
    pub steps_between: u32,
    pub method: Method,
    /// Normalized quality against the session's initial mesh after each
    /// schedule step.
    pub quality: Vec<QualityStats64>,
    pub inverted: Vec<usize>,
}

#[derive(Debug)]
pub struct SessionReport {
    pub states: Vec<SessionState>,
    pub events: Vec<Event>,
    pub orders: Vec<OrderRecord>,
    pub ledger: TimingLedger,
    pub steps: u64,
    pub mesh: TetMesh64,
    pub fields: Fields,
    /// Set when the session ended on an error rather than `Bye`, end of
    /// stream or the step limit.
    pub aborted: Option<ServerError>,
}

impl SessionReport {
    pub fn deformation_count(&self) -> usize {
        self.events.iter().filter(|e| matches!(e, Event::Deformation { .. })).count()
    }
}

enum Incoming {
    Message(Message),
    Closed,
    Failed(WireError),
}

struct ActiveOrder {
    id: u32,
    surface: SurfaceMesh64,
    targets: Vec<DisplacementField64>,
    done: usize,
    offset: DisplacementField64,
    steps_between: u32,
    method: DeformMethod<f64>,
}

#[derive(PartialEq)]
enum Flow {
    Continue,
    Stop,
}

struct Link {
    rx: Receiver<Incoming>,
    tx: FrameWriter<TcpStream>,
    stream: TcpStream,
}

/// A loaded mesh with a bound listener, waiting for its client.
pub struct Server {
    config: ServerConfig,
    listener: TcpListener,
    solver: Box<dyn SolverPlugin>,
    pmesh: PartitionedMesh<f64>,
    reference: TetMesh64,
    surface: SurfaceMesh64,
    states: Vec<SessionState>,
    ledger: TimingLedger,
}

impl Server {
    /// Loads, partitions and extracts the surface, then binds the listener.
    /// Uses [`DemoLaplace`] with the configured inlet and outlet tags.
    pub fn bind(config: ServerConfig) -> Result<Self> {
        let solver = DemoLaplace::new(config.inlet_tags.iter().copied(), config.outlet_tags.iter().copied());
        Self::bind_with_solver(config, Box::new(solver))
    }

    pub fn bind_with_solver(config: ServerConfig, solver: Box<dyn SolverPlugin>) -> Result<Self> {
        config.validate()?;
        let mut states = vec![SessionState::Loading];
        let mesh = config.mesh.load()?;
        let pmesh = partition(&mesh, config.parts)?;
        let mut ledger = TimingLedger::default();
        let clock = Instant::now();
        let surface = gather_surface(&pmesh);
        ledger.extract_surface.push(clock.elapsed());
        states.push(SessionState::SurfaceReady);
        info!(
            "loaded {} vertices, {} tets in {} parts; surface has {} triangles",
            mesh.vertex_count(),
            mesh.tet_count(),
            config.parts,
            surface.triangle_count()
        );
        let listener = TcpListener::bind(config.listen)?;
        states.push(SessionState::AwaitingClient);
        Ok(Self { config, listener, solver, reference: mesh, pmesh, surface, states, ledger })
    }

    pub fn local_addr(&self) -> Result<SocketAddr> {
        Ok(self.listener.local_addr()?)
    }

    pub fn surface(&self) -> &SurfaceMesh64 {
        &self.surface
    }

    /// Accepts one client and runs the session to completion.
    pub fn serve(self) -> Result<SessionReport> {
        let (stream, peer) = self.listener.accept()?;
        info!("client connected from {peer}");
        stream.set_nodelay(true)?;
        let (mut reader, tx) = Connection::new(stream.try_clone()?).split()?;
        let (sender, rx) = mpsc::channel();
        std::thread::spawn(move || loop {
            let item = match reader.recv() {
                Ok(Some(m)) => Incoming::Message(m),
                Ok(None) => Incoming::Closed,
                Err(e) => Incoming::Failed(e),
            };
            let last = !matches!(item, Incoming::Message(_));
            if sender.send(item).is_err() || last {
                break;
            }
        });
        let link = Link { rx, tx, stream };
        let Server { config, solver, pmesh, reference, surface, mut states, ledger, .. } = self;
        let mut session = Session {
            config,
            solver,
            pmesh,
            reference,
            surface,
            link,
            ledger,
            fields: Fields::new(),
            events: Vec::new(),
            orders: Vec::new(),
            queue: VecDeque::new(),
            next_order: 1,
            step: 0,
        };
        let result = session.run(&mut states);
        states.push(SessionState::Closed);
        let _ = session.link.stream.shutdown(Shutdown::Both);
        let aborted = match result {
            Ok(()) => None,
            Err(e) => {
                warn!("session aborted: {e}");
                Some(e)
            }
        };
        info!("session closed after {} solver steps", session.step);
        Ok(SessionReport {
            states,
            events: session.events,
            orders: session.orders,
            ledger: session.ledger,
            steps: session.step,
            mesh: session.pmesh.global,
            fields: session.fields,
            aborted,
        })
    }
}

/// Binds, accepts one client and runs its session.
pub fn run_session(config: ServerConfig) -> Result<SessionReport> {
    Server::bind(config)?.serve()
}

struct Session {
    config: ServerConfig,
    solver: Box<dyn SolverPlugin>,
    pmesh: PartitionedMesh<f64>,
    reference: TetMesh64,
    surface: SurfaceMesh64,
    link: Link,
    ledger: TimingLedger,
    fields: Fields,
    events: Vec<Event>,
    orders: Vec<OrderRecord>,
    queue: VecDeque<ActiveOrder>,
    next_order: u32,
    step: u64,
}

impl Session {
    fn run(&mut self, states: &mut Vec<SessionState>) -> Result<()> {
        match self.next_message()? {
            Some(Message::Hello { version }) => info!("client says hello: {version:?}"),
            Some(other) => return Err(ServerError::Protocol(format!("expected Hello, got {:?}", other.msg_type()))),
            None => return Ok(()),
        }
        let clock = Instant::now();
        self.link.tx.send(&Message::SurfaceMesh(surface_message(&self.surface)))?;
        self.ledger.send_surface.push(clock.elapsed());
        self.solver.init(&self.pmesh.global, &mut self.fields)?;
        states.push(SessionState::Running);

        let mut active: Option<ActiveOrder> = None;
        loop {
            if active.is_none() {
                active = self.queue.pop_front();
            }
            match active.as_mut() {
                Some(order) => {
                    self.deformation_step(order)?;
                    let between = order.steps_between;
                    if order.done == order.targets.len() {
                        self.events.push(Event::OrderComplete { order: order.id, step: self.step });
                        active = None;
                    }
                    for _ in 0..between {
                        if self.advance()? == Flow::Stop {
                            return Ok(());
                        }
                    }
                }
                None => {
                    if self.advance()? == Flow::Stop {
                        return Ok(());
                    }
                }
            }
        }
    }

    fn next_message(&mut self) -> Result<Option<Message>> {
        match self.link.rx.recv() {
            Ok(Incoming::Message(m)) => Ok(Some(m)),
            Ok(Incoming::Failed(e)) => Err(e.into()),
            Ok(Incoming::Closed) | Err(_) => Ok(None),
        }
    }

    /// One solver step, then the snapshot, poll and stop checks due after it.
    fn advance(&mut self) -> Result<Flow> {
        let clock = Instant::now();
        self.solver.step(&self.pmesh.global, &mut self.fields, self.config.dt)?;
        self.ledger.record_solver_step(clock.elapsed());
        self.step += 1;
        self.events.push(Event::SolverStep(self.step));
        if self.config.snapshot_every > 0 && self.step.is_multiple_of(self.config.snapshot_every) {
            self.snapshot()?;
        }
        if self.step.is_multiple_of(self.config.cadence) && self.poll()? == Flow::Stop {
            return Ok(Flow::Stop);
        }
        if self.config.max_steps.is_some_and(|m| self.step >= m) {
            let _ = self.link.tx.send(&Message::Bye);
            return Ok(Flow::Stop);
        }
        Ok(Flow::Continue)
    }

    fn poll(&mut self) -> Result<Flow> {
        self.events.push(Event::Poll(self.step));
        let mut incoming = Vec::new();
        match self.config.mode {
            PollMode::Lockstep => incoming.push(self.link.rx.recv().unwrap_or(Incoming::Closed)),
            PollMode::NonBlocking => loop {
                match self.link.rx.try_recv() {
                    Ok(item) => incoming.push(item),
                    Err(TryRecvError::Empty) => break,
                    Err(TryRecvError::Disconnected) => {
                        incoming.push(Incoming::Closed);
                        break;
                    }
                }
            },
        }
        for item in incoming {
            match item {
                Incoming::Message(Message::Displacement(d)) => self.receive_order(d)?,
                Incoming::Message(Message::Ack { .. }) => {}
                Incoming::Message(Message::Bye) | Incoming::Closed => return Ok(Flow::Stop),
                Incoming::Message(other) => {
                    return Err(ServerError::Protocol(format!("unexpected {:?} from client", other.msg_type())))
                }
                Incoming::Failed(e) => return Err(e.into()),
            }
        }
        Ok(Flow::Continue)
    }

    fn receive_order(&mut self, d: steer_wire::DisplacementMsg) -> Result<()> {
        let n = self.surface.vertex_count();
        let reason = if d.values.len() != n {
            Some(format!("expected {n} displacements, got {}", d.values.len()))
        } else if d.values.iter().flatten().any(|v| !v.is_finite()) {
            Some("displacements must be finite".to_string())
        } else {
            None
        };
        if let Some(reason) = reason {
            warn!("rejecting order: {reason}");
            self.link.tx.send(&Message::Ack { code: ACK_REJECTED, detail: reason.clone() })?;
            self.events.push(Event::OrderRejected { step: self.step, reason });
            return Ok(());
        }
        let id = self.next_order;
        self.next_order += 1;
        let steps = if d.schedule_steps == 0 { self.config.schedule_default } else { d.schedule_steps };
        let field = DisplacementField64::new(d.values.iter().map(|v| Vec3::new(v[0], v[1], v[2])).collect())?;
        let targets = make_schedule(&field, steps as usize)?;
        let method = self.config.method_override.unwrap_or(d.method);
        self.orders.push(OrderRecord {
            id,
            schedule_steps: steps,
            steps_between: d.steps_between,
            method,
            quality: Vec::new(),
            inverted: Vec::new(),
        });
        // The surface is captured when the order becomes active.
        self.queue.push_back(ActiveOrder {
            id,
            surface: self.surface.clone(),
            targets,
            done: 0,
            offset: DisplacementField64::zeros(n),
            steps_between: d.steps_between,
            method: self.config.deform_method(d.method),
        });
        info!("order {id} queued: {steps} steps, {} between", d.steps_between);
        self.link.tx.send(&Message::Ack { code: id, detail: format!("queued {steps} steps") })?;
        self.events.push(Event::OrderQueued { order: id, step: self.step });
        Ok(())
    }

    fn deformation_step(&mut self, order: &mut ActiveOrder) -> Result<()> {
        if order.done == 0 {
            order.surface = surface_at(&self.surface, &self.pmesh.global);
        }
        let clock = Instant::now();
        let target = &order.targets[order.done];
        let out = apply_deformation_step(
            &mut self.pmesh,
            &order.surface,
            &order.offset,
            target,
            &order.method,
            &self.reference,
            &self.config.solve,
        )?;
        self.ledger.record_deformation(DeformationTiming::new(out.timings, clock.elapsed()));
        order.offset = target.clone();
        order.done += 1;
        if out.inverted > 0 {
            warn!("order {}: {} inverted elements after step {}", order.id, out.inverted, order.done);
        }
        if let Some(rec) = self.orders.iter_mut().find(|r| r.id == order.id) {
            rec.quality.push(out.quality);
            rec.inverted.push(out.inverted);
        }
        self.events.push(Event::Deformation {
            order: order.id,
            index: order.done as u32,
            of: order.targets.len() as u32,
            step: self.step,
        });
        Ok(())
    }

    fn snapshot(&mut self) -> Result<()> {
        let phi = self.fields.get(PHI).ok_or_else(|| ServerError::MissingField(PHI.into()))?;
        let values: Vec<f64> = self.surface.volume_vertex_of.iter().map(|&v| phi[v]).collect();
        if let Some(dir) = &self.config.snapshot_dir {
            write_snapshot(dir, self.step, &surface_at(&self.surface, &self.pmesh.global), phi)?;
        }
        self.link.tx.send(&Message::Snapshot(SnapshotMsg { step: self.step, field: PHI.into(), values }))?;
        self.events.push(Event::Snapshot(self.step));
        Ok(())
    }
}

/// Writes `snap_<step>.obj` (current surface) and `snap_<step>.phi` (the
/// volume field).
pub fn write_snapshot(dir: &Path, step: u64, surface: &SurfaceMesh64, phi: &[f64]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(format!("snap_{step}.obj")), format_surface_obj(surface)?)?;
    std::fs::write(dir.join(format!("snap_{step}.phi")), format_scalar_field(phi))?;
    Ok(())
}
