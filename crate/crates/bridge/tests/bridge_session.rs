use std::thread;
use std::time::Duration;

use futures_util::{SinkExt, StreamExt};
use serde_json::{json, Value};
use steer_bridge::{start_bridge, BridgeConfig};
use steer_core::mesh::io::{format_tet_mesh, read_displacement_field};
use steer_core::mesh::{generate_box_channel, BoxFace};
use steer_core::{DisplacementField64, TetMesh64};
use steer_server::{replay, DemoLaplace, Event, Fields, MeshSource, PollMode, Server, ServerConfig, SolverPlugin};
use steer_wire::Method;
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message as WsMessage;
use tokio_tungstenite::{connect_async, MaybeTlsStream, WebSocketStream};

type Ws = WebSocketStream<MaybeTlsStream<TcpStream>>;

/// Keeps the server stepping slowly enough for the UI to act first.
struct Slow(DemoLaplace);

impl SolverPlugin for Slow {
    fn name(&self) -> &str {
        "slow-demo"
    }

    fn init(&mut self, mesh: &TetMesh64, fields: &mut Fields) -> steer_server::Result<()> {
        self.0.init(mesh, fields)
    }

    fn step(&mut self, mesh: &TetMesh64, fields: &mut Fields, dt: f64) -> steer_server::Result<()> {
        thread::sleep(Duration::from_millis(1));
        self.0.step(mesh, fields, dt)
    }
}

fn config(mesh: &TetMesh64, max_steps: Option<u64>) -> ServerConfig {
    let mut c = ServerConfig::new(MeshSource::Mesh(mesh.clone()));
    c.listen = "127.0.0.1:0".parse().unwrap();
    c.mode = PollMode::NonBlocking;
    c.parts = 2;
    c.cadence = 5;
    c.snapshot_every = 40;
    c.max_steps = max_steps;
    c
}

fn start_server(c: ServerConfig) -> (String, thread::JoinHandle<steer_server::SessionReport>) {
    let server = Server::bind_with_solver(c, Box::new(Slow(DemoLaplace::new([0], [1])))).unwrap();
    let addr = server.local_addr().unwrap().to_string();
    (addr, thread::spawn(move || server.serve().unwrap()))
}

async fn open(addr: std::net::SocketAddr) -> Ws {
    connect_async(format!("ws://{addr}/ws")).await.unwrap().0
}

struct Ui {
    ws: Ws,
    seq: u64,
    snapshots: usize,
}

impl Ui {
    /// Sends `req` and collects the `n` replies tagged with its seq, or the
    /// error that replaced them.
    async fn call(&mut self, mut req: Value, n: usize) -> Vec<Value> {
        self.seq += 1;
        req["seq"] = json!(self.seq);
        self.ws.send(WsMessage::Text(req.to_string().into())).await.unwrap();
        let mut out = Vec::new();
        while out.len() < n {
            let msg = tokio::time::timeout(Duration::from_secs(30), self.ws.next())
                .await
                .expect("bridge reply timed out")
                .unwrap()
                .unwrap();
            let WsMessage::Text(text) = msg else { continue };
            let v: Value = serde_json::from_str(text.as_str()).unwrap();
            if v["type"] == "snapshot" {
                assert_eq!(v["field"], "phi");
                self.snapshots += 1;
                continue;
            }
            if v["seq"] != json!(self.seq) {
                continue;
            }
            let error = v["type"] == "error";
            out.push(v);
            if error {
                break;
            }
        }
        out
    }
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn edits_commit_and_reach_the_server() {
    let mesh = generate_box_channel(10, 4, 4, [3.0, 1.0, 1.0], None).unwrap();
    let c = config(&mesh, Some(4000));
    let method = c.deform_method(Method::Elasticity);
    let solve = c.solve;
    let (server_addr, server) = start_server(c);

    let dir = tempfile::tempdir().unwrap();
    let export = dir.path().join("edit.dispfield");
    let mut bc = BridgeConfig::new(server_addr, "127.0.0.1:0".parse().unwrap());
    bc.export = Some(export.clone());
    let bridge = start_bridge(bc).await.unwrap();
    let mut ui = Ui { ws: open(bridge.ui_addr()).await, seq: 0, snapshots: 0 };

    let surface = ui.call(json!({"type": "get_surface"}), 1).await.remove(0);
    assert_eq!(surface["type"], "surface");
    assert_eq!(surface["depth"], 0);
    let base = floats(&surface["vertices"]);

    let r = ui
        .call(
            json!({"type": "action", "kind": "translate", "handles": [BoxFace::XMax.tag()],
                   "fixed": [BoxFace::XMin.tag()], "params": [0.2, 0.05, 0.0]}),
            1,
        )
        .await;
    assert_eq!(r[0]["type"], "preview", "{r:?}");
    let r = ui
        .call(
            json!({"type": "action", "kind": "scale_by_normals", "handles": [BoxFace::YMax.tag()],
                   "fixed": [BoxFace::XMin.tag(), BoxFace::XMax.tag()], "order": 3, "params": 0.04}),
            1,
        )
        .await;
    assert_eq!(r[0]["depth"], 2, "{r:?}");
    let r = ui.call(json!({"type": "export"}), 1).await;
    assert_eq!(r[0]["type"], "ack", "{r:?}");
    let field: DisplacementField64 = read_displacement_field(&export).unwrap();

    let r = ui.call(json!({"type": "commit", "steps": 3, "between": 2, "id": 1}), 2).await;
    assert_eq!(r[0]["type"], "ack", "{r:?}");
    assert_eq!((r[0]["request"].as_str(), r[0]["code"].as_u64()), (Some("commit"), Some(1)));
    assert_eq!(r[1]["type"], "surface");
    assert_eq!(r[1]["depth"], 0);
    let rebased = floats(&r[1]["vertices"]);
    let flat: Vec<f64> = field.values.iter().flat_map(|v| [v.x, v.y, v.z]).collect();
    for ((b, d), n) in base.iter().zip(&flat).zip(&rebased) {
        assert_eq!(b + d, *n);
    }

    let r = ui.call(json!({"type": "commit", "id": 1}), 2).await;
    assert_eq!(r.len(), 1);
    assert_eq!(r[0]["type"], "error");
    assert!(r[0]["message"].as_str().unwrap().contains('1'), "{r:?}");

    // A new UI connection sees the same session.
    drop(ui);
    let mut ui = Ui { ws: open(bridge.ui_addr()).await, seq: 100, snapshots: 0 };
    let again = ui.call(json!({"type": "get_surface"}), 1).await.remove(0);
    assert_eq!(floats(&again["vertices"]), rebased);

    // Nothing stacked: the order carries a zero field.
    let r = ui.call(json!({"type": "commit", "method": "harmonic", "id": 2}), 2).await;
    assert_eq!(r[0]["code"], 2, "{r:?}");

    let session = bridge.wait().await.unwrap();
    assert_eq!(session.depth(), 0);
    let report = server.join().unwrap();
    assert!(report.aborted.is_none(), "{:?}", report.aborted);
    assert_eq!(report.orders.len(), 2);
    for id in [1, 2] {
        assert!(report.events.iter().any(|e| matches!(e, Event::OrderComplete { order, .. } if *order == id)));
    }
    assert!(report.events.iter().any(|e| matches!(e, Event::Snapshot(_))));

    let (expected, _) = replay(&mesh, 2, &field, 3, &method, &solve).unwrap();
    assert_eq!(format_tet_mesh(&report.mesh), format_tet_mesh(&expected));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn stopping_the_bridge_ends_the_server_session() {
    let mesh = generate_box_channel(4, 2, 2, [2.0, 1.0, 1.0], None).unwrap();
    let (server_addr, server) = start_server(config(&mesh, None));
    let bridge = start_bridge(BridgeConfig::new(server_addr, "127.0.0.1:0".parse().unwrap())).await.unwrap();
    let mut ui = Ui { ws: open(bridge.ui_addr()).await, seq: 0, snapshots: 0 };
    let r = ui.call(json!({"type": "undo"}), 1).await;
    assert_eq!(r[0]["type"], "error");
    let r = ui.call(json!({"type": "no_such_request"}), 1).await;
    assert_eq!(r[0]["type"], "error");

    let session = bridge.stop().await.unwrap();
    assert_eq!(session.depth(), 0);
    let report = server.join().unwrap();
    assert!(report.aborted.is_none(), "{:?}", report.aborted);
    assert!(report.orders.is_empty());
    assert!(report.mesh.vertices == mesh.vertices);
}
