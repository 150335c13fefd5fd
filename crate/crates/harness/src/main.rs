use std::net::TcpListener;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use lacerate::mesh::DEFAULT_FACES_PER_SECTION;
use lacerate::particles::RepairMode;
use lacerate_harness::bench::{run_bench, Manifest};
use lacerate_harness::error::{HarnessError, Result};
use lacerate_harness::run::{parse_plane, run_cut, run_particles, run_replay, run_tear, PlaneSource, TearArgs};
use lacerate_harness::service::{serve, SessionParams};

/// Progressive tearing, plane cutting and particle deformation of
/// triangle meshes. Meshes are OBJ paths or `builtin:NAME`.
#[derive(Parser)]
#[command(name = "lacerate", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Repair {
    Optimized,
    Exhaustive,
}

#[derive(Subcommand)]
enum Command {
    /// Tear a mesh along a recorded trajectory.
    Tear {
        #[arg(long)]
        mesh: String,
        /// Trajectory JSON path or `builtin:arc:N`.
        #[arg(long)]
        trajectory: String,
        /// Tear width; defaults to the trajectory's.
        #[arg(long)]
        width: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Report path; stdout when omitted.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Delta log path; `<out>.deltas.jsonl` when omitted.
        #[arg(long)]
        deltas: Option<PathBuf>,
        /// Write the final particle map here.
        #[arg(long)]
        particles_out: Option<PathBuf>,
        /// Target faces per mesh section.
        #[arg(long, default_value_t = DEFAULT_FACES_PER_SECTION)]
        sections: usize,
        /// Clip candidate faces on worker threads.
        #[arg(long)]
        parallel: bool,
        /// Skip the particle layer.
        #[arg(long)]
        no_particles: bool,
        #[arg(long, value_enum, default_value_t = Repair::Optimized)]
        repair: Repair,
    },
    /// Cut a mesh by a plane into `<prefix>.pos.obj` and `<prefix>.neg.obj`.
    Cut {
        #[arg(long)]
        mesh: String,
        /// `a,b,c,d` for a x + b y + c z + d = 0.
        #[arg(long, conflicts_with = "trajectory", required_unless_present = "trajectory", allow_hyphen_values = true)]
        plane: Option<String>,
        /// Cut trajectory JSON.
        #[arg(long)]
        trajectory: Option<String>,
        #[arg(long)]
        out_prefix: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Generate particles for a mesh and write the particle map.
    Particles {
        #[arg(long)]
        mesh: String,
        /// Influence radius d.
        #[arg(long)]
        radius: f64,
        /// Neighbour distance threshold.
        #[arg(long)]
        delta: f64,
        /// Minimum anchor spacing.
        #[arg(long)]
        poisson: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Time the cases of a manifest.
    Bench {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the session service.
    Serve {
        #[arg(long, default_value_t = 7878)]
        port: u16,
        /// Default session parameters (JSON).
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Apply a delta log to a mesh.
    Replay {
        #[arg(long)]
        mesh: String,
        #[arg(long)]
        deltas: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Tear {
            mesh,
            trajectory,
            width,
            seed,
            out,
            report,
            deltas,
            particles_out,
            sections,
            parallel,
            no_particles,
            repair,
        } => {
            let args = TearArgs {
                width,
                seed,
                report,
                deltas,
                particles_out,
                sections,
                parallel,
                particles: !no_particles,
                repair: match repair {
                    Repair::Optimized => RepairMode::Optimized,
                    Repair::Exhaustive => RepairMode::Exhaustive,
                },
                ..TearArgs::new(mesh, trajectory, out)
            };
            let r = run_tear(&args)?;
            let rejected = r.segments.iter().filter(|s| !s.accepted).count();
            log::info!("{} segments, {rejected} rejected, {:.3} ms", r.segments.len(), r.total_ms);
        }
        Command::Cut {
            mesh,
            plane,
            trajectory,
            out_prefix,
            report,
        } => {
            let source = match (plane, trajectory) {
                (Some(p), _) => PlaneSource::Coefficients(parse_plane(&p)?),
                (None, Some(t)) => PlaneSource::Trajectory(t),
                (None, None) => return Err(HarnessError::Input("need --plane or --trajectory".into())),
            };
            run_cut(&mesh, &source, &out_prefix, report.as_deref())?;
        }
        Command::Particles {
            mesh,
            radius,
            delta,
            poisson,
            seed,
            out,
        } => {
            let s = run_particles(&mesh, radius, delta, poisson, seed, &out)?;
            log::info!("{} particles", s.len());
        }
        Command::Bench { manifest, repeats, out } => {
            let manifest = Manifest::load(&manifest)?;
            let report = run_bench(&manifest, repeats)?;
            print!("{}", report.table());
            if let Some(path) = out {
                let text = serde_json::to_string_pretty(&report)?;
                std::fs::write(&path, text).map_err(|e| HarnessError::Input(format!("{}: {e}", path.display())))?;
            }
            for r in report.regressions() {
                log::warn!("{} exceeds its budget", r.name);
            }
        }
        Command::Serve { port, params } => {
            let params = match params {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| HarnessError::Input(format!("{}: {e}", path.display())))?;
                    let p: SessionParams = serde_json::from_str(&text)?;
                    p.validate()?;
                    p
                }
                None => SessionParams::default(),
            };
            let listener = TcpListener::bind(("127.0.0.1", port))?;
            eprintln!("listening on {}", listener.local_addr()?);
            serve(listener, params)?;
        }
        Command::Replay { mesh, deltas, out } => {
            let n = run_replay(&mesh, &deltas, &out)?;
            log::info!("applied {n} deltas");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
