use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use steer_core::mesh::io::{load_tet_mesh, read_displacement_field, write_tet_mesh};
use steer_core::solve::SolveConfig;
use steer_core::volume::{DeformMethod, ElasticParams};
use steer_server::replay;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Elasticity,
    Harmonic,
}

/// Applies a saved surface displacement to a volume mesh offline, with the
/// same schedule and partitioning a session would use.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    #[arg(long)]
    mesh: PathBuf,
    /// Surface displacement in dispfield v1 format.
    #[arg(long)]
    displacement: PathBuf,
    #[arg(long, value_enum, default_value = "elasticity")]
    method: MethodArg,
    #[arg(long, default_value_t = 1)]
    steps: usize,
    #[arg(long, default_value_t = 1)]
    parts: usize,
    #[arg(long, default_value_t = 1.0)]
    chi: f64,
    #[arg(long, default_value_t = 0.3)]
    nu: f64,
    /// Deformed mesh in tetmesh v1 format.
    #[arg(long)]
    out: PathBuf,
}

fn run(args: Args) -> Result<(), Box<dyn std::error::Error>> {
    let mesh = load_tet_mesh::<f64>(&args.mesh)?;
    let field = read_displacement_field::<f64>(&args.displacement)?;
    let method = match args.method {
        MethodArg::Harmonic => DeformMethod::Harmonic,
        MethodArg::Elasticity => DeformMethod::Elasticity(ElasticParams { chi: args.chi, poisson: args.nu }),
    };
    let (deformed, outcomes) = replay(&mesh, args.parts, &field, args.steps, &method, &SolveConfig::default())?;
    for (i, o) in outcomes.iter().enumerate() {
        println!(
            "step {}: normalized quality mean {:.4} min {:.4} max {:.4}, {} inverted",
            i + 1,
            o.quality.mean,
            o.quality.min,
            o.quality.max,
            o.inverted
        );
    }
    write_tet_mesh(&deformed, &args.out)?;
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("deform-volume: {e}");
            ExitCode::FAILURE
        }
    }
}
