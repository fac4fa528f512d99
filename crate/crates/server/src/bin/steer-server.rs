use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use steer_core::volume::ElasticParams;
use steer_server::{overhead_report, run_session, MeshSource, PollMode, ServerConfig};
use steer_wire::{Method, DEFAULT_PORT};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Elasticity,
    Harmonic,
}

/// Runs a steering session for one client on a tetrahedral mesh.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    /// Mesh in tetmesh v1 format.
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long, default_value_t = 1)]
    parts: usize,
    #[arg(long, default_value = "127.0.0.1")]
    host: IpAddr,
    #[arg(long, default_value_t = DEFAULT_PORT)]
    port: u16,
    /// Solver steps between polls for deformation orders.
    #[arg(long, default_value_t = 10)]
    cadence: u64,
    /// Force this method for every order instead of the one the client asks for.
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    /// Schedule length for orders that do not give one.
    #[arg(long, default_value_t = 1)]
    schedule_default: u32,
    /// Solver steps between snapshots, 0 for none.
    #[arg(long, default_value_t = 0)]
    snapshot_every: u64,
    #[arg(long)]
    snapshot_dir: Option<PathBuf>,
    /// Volume stiffening exponent.
    #[arg(long, default_value_t = 1.0)]
    chi: f64,
    /// Poisson ratio.
    #[arg(long, default_value_t = 0.3)]
    nu: f64,
    /// Wait for one client message at every poll.
    #[arg(long)]
    lockstep: bool,
    /// Stop after this many solver steps.
    #[arg(long)]
    max_steps: Option<u64>,
    /// Boundary tags held at phi = 1 by the demo solver.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    inlet: Vec<i64>,
    /// Boundary tags held at phi = 0 by the demo solver.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    outlet: Vec<i64>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    let mut config = ServerConfig::new(MeshSource::Path(args.mesh));
    config.parts = args.parts;
    config.listen = SocketAddr::new(args.host, args.port);
    config.cadence = args.cadence;
    config.method_override = args.method.map(|m| match m {
        MethodArg::Elasticity => Method::Elasticity,
        MethodArg::Harmonic => Method::Harmonic,
    });
    config.schedule_default = args.schedule_default;
    config.snapshot_every = args.snapshot_every;
    config.snapshot_dir = args.snapshot_dir;
    config.elastic = ElasticParams { chi: args.chi, poisson: args.nu };
    config.mode = if args.lockstep { PollMode::Lockstep } else { PollMode::NonBlocking };
    config.max_steps = args.max_steps;
    config.inlet_tags = args.inlet;
    config.outlet_tags = args.outlet;

    let report = match run_session(config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("steer-server: {e}");
            return ExitCode::FAILURE;
        }
    };
    match overhead_report(&report.ledger) {
        Ok(r) => println!("{r}"),
        Err(e) => println!("no overhead report: {e}"),
    }
    for order in &report.orders {
        if let Some(q) = order.quality.last() {
            println!(
                "order {}: {} steps, normalized quality mean {:.4} min {:.4}, {} inverted",
                order.id,
                order.schedule_steps,
                q.mean,
                q.min,
                order.inverted.last().copied().unwrap_or(0)
            );
        }
    }
    match report.aborted {
        Some(e) => {
            eprintln!("steer-server: session aborted: {e}");
            ExitCode::FAILURE
        }
        None => ExitCode::SUCCESS,
    }
}
