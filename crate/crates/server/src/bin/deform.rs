use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use steer_core::geometry::Vec3;
use steer_core::mesh::io::{load_tet_mesh, write_displacement_field};
use steer_core::surface_deform::{compute_handle_displacement, HandleSpec, SurfaceAction};
use steer_core::volume::partition;
use steer_server::gather::gather_surface;

/// Computes a surface handle displacement and writes it as a dispfield file
/// indexed like the surface the server sends for the same mesh and parts.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long, default_value_t = 1)]
    parts: usize,
    /// Feature tags that move.
    #[arg(long, value_delimiter = ',', required = true)]
    handles: Vec<i64>,
    /// Feature tags held in place.
    #[arg(long, value_delimiter = ',')]
    fixed: Vec<i64>,
    /// Harmonic order k (1 to 3).
    #[arg(long, default_value_t = 2)]
    order: u32,
    /// Translate the handles by dx,dy,dz.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, group = "action")]
    translate: Option<Vec<f64>>,
    /// Scale the handles per axis about their centroid, by sx,sy,sz.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, group = "action")]
    scale_direction: Option<Vec<f64>>,
    /// Offset the handles along their normals.
    #[arg(long, group = "action", allow_hyphen_values = true)]
    scale_normals: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

fn vec3(v: &[f64]) -> Result<Vec3<f64>, Box<dyn std::error::Error>> {
    match v {
        [x, y, z] => Ok(Vec3::new(*x, *y, *z)),
        _ => Err(format!("expected 3 comma-separated components, got {}", v.len()).into()),
    }
}

fn run(args: Args) -> Result<(), Box<dyn std::error::Error>> {
    let action = match (&args.translate, &args.scale_direction, args.scale_normals) {
        (Some(t), None, None) => SurfaceAction::Translate(vec3(t)?),
        (None, Some(s), None) => SurfaceAction::ScaleByDirection(vec3(s)?),
        (None, None, Some(s)) => SurfaceAction::ScaleByNormals(s),
        _ => return Err("give exactly one of --translate, --scale-direction, --scale-normals".into()),
    };
    let mesh = load_tet_mesh::<f64>(&args.mesh)?;
    let surface = gather_surface(&partition(&mesh, args.parts)?);
    let spec = HandleSpec::new(args.handles, args.fixed, args.order)?;
    let field = compute_handle_displacement(&surface, &spec, &action)?;
    write_displacement_field(&field, &args.out)?;
    println!("{} surface vertices, max displacement {:.6e}", field.vertex_count(), field.max_norm());
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("deform: {e}");
            ExitCode::FAILURE
        }
    }
}
