//! negvol: extract and compare the negative volume of a joint.
//!
//! Exit codes: 0 success, 2 configuration, 3 i/o or format, 4 geometry,
//! 5 degenerate joint.

use clap::{Args, Parser, Subcommand};
use negvol_cli::config::PipelineConfig;
use negvol_cli::phantom_files;
use negvol_cli::pipeline::{run_pipeline, StageError};
use negvol_core::error::Error as CoreError;
use negvol_core::grid::distance_field;
use negvol_core::inflate::{inflate, InflationConfig};
use negvol_core::io;
use negvol_core::surface::{extract_surface_opts, SurfaceOptions, TriangleMesh};
use negvol_core::symmetry::compare_sides;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "negvol",
    version,
    about = "Negative-volume extraction for joints"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the end-to-end pipeline from a TOML config.
    Run { config: PathBuf },
    /// Generate a synthetic joint phantom with analytic ground truth.
    Phantom {
        /// Phantom spec TOML; missing keys take defaults.
        spec: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Symmetry metrics between two negative-volume meshes.
    Metrics(MetricsArgs),
    /// Voxelize a closed STL mesh onto a grid.
    Voxelize(VoxelizeArgs),
    /// Extract a surface mesh from a raw-grid mask.
    Extract(ExtractArgs),
    /// Inflate a mesh inside the distance field of a confining mask.
    Inflate(InflateArgs),
    /// Configuration helpers.
    Config {
        #[command(subcommand)]
        action: ConfigAction,
    },
}

#[derive(Subcommand)]
enum ConfigAction {
    /// Print a config file with every default filled in.
    Init {
        /// Write to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct MetricsArgs {
    left: PathBuf,
    right: PathBuf,
    #[arg(long, default_value_t = 20_000)]
    samples: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Mirror plane x in mm; defaults to the midpoint of the two centroids.
    #[arg(long)]
    mirror_x: Option<f64>,
    /// Write the report JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VoxelizeArgs {
    mesh: PathBuf,
    /// Raw-grid stem whose geometry becomes the template.
    #[arg(long, conflicts_with = "spacing")]
    template: Option<PathBuf>,
    /// Isotropic spacing in mm for an auto-fitted grid.
    #[arg(long)]
    spacing: Option<f64>,
    /// Margin around the mesh for auto-fitted grids, mm.
    #[arg(long, default_value_t = 2.0)]
    margin: f64,
    /// Stamp the surface shell only (works for open meshes).
    #[arg(long)]
    surface_only: bool,
    /// Output raw-grid stem.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExtractArgs {
    /// Input raw-grid mask stem.
    mask: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    iso: f64,
    /// Gaussian pre-smoothing sigma in voxels (0 disables).
    #[arg(long, default_value_t = 1.0)]
    smooth_sigma: f64,
    /// Output mesh path (.stl, or .obj for inspection).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct InflateArgs {
    /// Seed mesh (closed, outward oriented).
    mesh: PathBuf,
    /// Confining-bone mask as a raw-grid stem.
    tb_mask: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Write the per-iteration trace CSV here.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    step: f64,
    #[arg(long, default_value_t = 0.2)]
    clearance: f64,
    #[arg(long, default_value_t = 0.3)]
    lambda: f64,
    #[arg(long, default_value_t = 1)]
    smooth_every: usize,
    #[arg(long, default_value_t = 500)]
    max_iterations: usize,
    #[arg(long, default_value_t = 0.02)]
    stop_fraction: f64,
}

fn configure_threads() {
    if let Ok(v) = std::env::var("NEGVOL_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            if n > 0 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
        }
    }
}

fn main() -> ExitCode {
    configure_threads();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn stage<T>(name: &str, r: negvol_core::Result<T>) -> Result<T, StageError> {
    r.map_err(|source| StageError {
        stage: name.into(),
        source,
    })
}

fn config_err(name: &str, e: anyhow::Error) -> StageError {
    StageError {
        stage: name.into(),
        source: CoreError::Config(format!("{e:#}")),
    }
}

fn dispatch(cli: Cli) -> Result<(), StageError> {
    match cli.command {
        Command::Run { config } => {
            let cfg = PipelineConfig::from_file(&config).map_err(|e| config_err("config", e))?;
            let base = config
                .parent()
                .unwrap_or(std::path::Path::new("."))
                .to_path_buf();
            let out = run_pipeline(&cfg, &base)?;
            println!("{}", serde_json::to_string_pretty(&out.report).unwrap());
            eprintln!(
                "wrote {} artifacts to {}",
                out.artifact_paths.len(),
                cfg.output.dir.display()
            );
            Ok(())
        }
        Command::Phantom { spec, out } => {
            let spec = phantom_files::read_spec(&spec).map_err(|e| config_err("phantom", e))?;
            let files = stage("phantom", phantom_files::write_phantom(&spec, &out))?;
            eprintln!(
                "phantom written: {}, {}, {}, {}",
                files.intensity_stem.display(),
                files.mc_mask_stem.display(),
                files.tb_mask_stem.display(),
                files.truth_path.display()
            );
            Ok(())
        }
        Command::Metrics(args) => {
            let left = stage("metrics", io::read_stl(&args.left))?;
            let right = stage("metrics", io::read_stl(&args.right))?;
            let mirror_x = args
                .mirror_x
                .unwrap_or_else(|| 0.5 * (left.area_centroid()[0] + right.area_centroid()[0]));
            let report = stage(
                "metrics",
                compare_sides(&left, &right, mirror_x, args.samples, args.seed),
            )?;
            let json = serde_json::to_string_pretty(&report).unwrap();
            match &args.out {
                Some(p) => stage("metrics", std::fs::write(p, json).map_err(Into::into))?,
                None => println!("{json}"),
            }
            Ok(())
        }
        Command::Voxelize(args) => {
            let mesh = stage("voxelize", io::read_stl(&args.mesh))?;
            let geom = match (&args.template, args.spacing) {
                (Some(t), _) => stage("voxelize", io::read_raw_grid(t))?.into_grid().geom,
                (None, Some(s)) => auto_template(&mesh, s, args.margin)?,
                (None, None) => {
                    return Err(StageError {
                        stage: "voxelize".into(),
                        source: CoreError::Config(
                            "either --template or --spacing is required".into(),
                        ),
                    })
                }
            };
            let mode = if args.surface_only {
                negvol_core::surface::VoxelizeMode::SurfaceOnly
            } else {
                negvol_core::surface::VoxelizeMode::Solid
            };
            let mask = stage(
                "voxelize",
                negvol_core::surface::voxelize_opts(&mesh, &geom, mode),
            )?;
            stage("voxelize", io::write_raw_mask(&args.out, &mask))?;
            eprintln!(
                "wrote mask {} ({} voxels set)",
                args.out.display(),
                mask.count()
            );
            Ok(())
        }
        Command::Extract(args) => {
            let mask = stage("extract", io::read_raw_grid(&args.mask))?.into_mask();
            let opts = SurfaceOptions {
                iso: args.iso,
                smooth_sigma_voxels: (args.smooth_sigma > 0.0).then_some(args.smooth_sigma),
            };
            let mesh = stage("extract", extract_surface_opts(&mask, &opts))?;
            stage("extract", write_mesh(&args.out, &mesh))?;
            eprintln!(
                "wrote {} ({} vertices, {} faces)",
                args.out.display(),
                mesh.vertices.len(),
                mesh.faces.len()
            );
            Ok(())
        }
        Command::Inflate(args) => {
            let mesh = stage("inflate", io::read_stl(&args.mesh))?;
            let tb = stage("inflate", io::read_raw_grid(&args.tb_mask))?.into_mask();
            let sdf = stage("inflate", distance_field(&tb))?;
            let cfg = InflationConfig {
                step_mm: args.step,
                clearance_mm: args.clearance,
                lambda: args.lambda,
                smooth_every: args.smooth_every,
                max_iterations: args.max_iterations,
                stop_fraction: args.stop_fraction,
            };
            let (inflated, trace) = stage("inflate", inflate(&mesh, &sdf, cfg))?;
            stage("inflate", io::write_stl_binary(&args.out, &inflated))?;
            if let Some(t) = &args.trace {
                stage(
                    "inflate",
                    std::fs::write(t, trace.to_csv()).map_err(Into::into),
                )?;
            }
            let last = trace.records.last();
            eprintln!(
                "inflated in {} iterations (final free count {})",
                trace.records.len(),
                last.map_or(0, |r| r.free_count)
            );
            Ok(())
        }
        Command::Config { action } => match action {
            ConfigAction::Init { out } => {
                let text = PipelineConfig::default_toml();
                match out {
                    Some(p) => {
                        stage("config", std::fs::write(&p, text).map_err(Into::into))?;
                        eprintln!("wrote {}", p.display());
                    }
                    None => print!("{text}"),
                }
                Ok(())
            }
        },
    }
}

fn auto_template(
    mesh: &TriangleMesh,
    spacing: f64,
    margin: f64,
) -> Result<negvol_core::grid::GridGeometry, StageError> {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for v in &mesh.vertices {
        for a in 0..3 {
            lo[a] = lo[a].min(v[a]);
            hi[a] = hi[a].max(v[a]);
        }
    }
    let mut dims = [0usize; 3];
    let mut origin = [0.0; 3];
    for a in 0..3 {
        origin[a] = lo[a] - margin;
        dims[a] = (((hi[a] + margin - origin[a]) / spacing).ceil() as usize).max(2) + 1;
    }
    stage(
        "voxelize",
        negvol_core::grid::GridGeometry::new(dims, [spacing; 3], origin),
    )
}

fn write_mesh(path: &std::path::Path, mesh: &TriangleMesh) -> negvol_core::Result<()> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("obj") => io::write_obj(path, mesh),
        _ => io::write_stl_binary(path, mesh),
    }
}
