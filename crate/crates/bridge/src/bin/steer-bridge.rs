use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use steer_bridge::{start_bridge, BridgeConfig};

/// Connects to a steering server and serves the UI protocol over a WebSocket.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    /// Steering server address, host:port.
    #[arg(long)]
    server: String,
    #[arg(long, default_value_t = 8080)]
    ui_port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    ui_host: std::net::IpAddr,
    /// Default dispfield path for export requests.
    #[arg(long)]
    export: Option<PathBuf>,
}

#[tokio::main]
async fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    let mut config = BridgeConfig::new(args.server, SocketAddr::new(args.ui_host, args.ui_port));
    config.export = args.export;
    let handle = match start_bridge(config).await {
        Ok(h) => h,
        Err(e) => {
            eprintln!("steer-bridge: {e}");
            return ExitCode::FAILURE;
        }
    };
    println!("UI protocol on ws://{}/ws", handle.ui_addr());
    let stopper = handle.stopper();
    tokio::spawn(async move {
        if tokio::signal::ctrl_c().await.is_ok() {
            stopper.stop().await;
        }
    });
    match handle.wait().await {
        Ok(session) => {
            println!("session closed with {} uncommitted edits", session.depth());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("steer-bridge: {e}");
            ExitCode::FAILURE
        }
    }
}
