//! The batch commands: tear, cut, particles and replay.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use lacerate::cut::{cut, CutError, CutResult};
use lacerate::geometry::{build_tear_boxes, Plane};
use lacerate::mesh::{save_mesh, MeshDelta, TriMesh, DEFAULT_FACES_PER_SECTION};
use lacerate::particles::{ParticleParams, ParticleSystem, RepairMode};
use lacerate::tear::TearOptions;

use crate::engine::{Engine, EngineConfig};
use crate::error::{HarnessError, Result};
use crate::report::{CutReport, MeshStats, PhaseReport};
use crate::trajectory::{load_mesh_arg, load_trajectory_arg, Mode, Trajectory};

pub fn mesh_stats(mesh: &TriMesh, particles: usize) -> MeshStats {
    MeshStats {
        vertices: mesh.referenced_vertices().count(),
        faces: mesh.live_face_count(),
        particles,
    }
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| HarnessError::Input(format!("{}: {e}", path.display())))
}

/// Writes `PATH` and, for skinned meshes, `PATH.skin.json`.
pub fn write_mesh(path: &Path, mesh: &TriMesh) -> Result<()> {
    let saved = save_mesh(mesh);
    write(path, &saved.obj)?;
    if let Some(sidecar) = saved.sidecar {
        write(&sidecar_path(path), &sidecar)?;
    }
    Ok(())
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".skin.json");
    PathBuf::from(s)
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

#[derive(Debug, Clone)]
pub struct TearArgs {
    pub mesh: String,
    pub trajectory: String,
    /// Overrides the trajectory's width.
    pub width: Option<f64>,
    pub seed: u64,
    pub out: PathBuf,
    /// Report path; stdout when absent.
    pub report: Option<PathBuf>,
    /// Delta log path; `<out>.deltas.jsonl` when absent.
    pub deltas: Option<PathBuf>,
    /// Particle map path; not written when absent.
    pub particles_out: Option<PathBuf>,
    pub sections: usize,
    pub parallel: bool,
    pub particles: bool,
    pub repair: RepairMode,
}

impl TearArgs {
    pub fn new(mesh: impl Into<String>, trajectory: impl Into<String>, out: impl Into<PathBuf>) -> Self {
        TearArgs {
            mesh: mesh.into(),
            trajectory: trajectory.into(),
            width: None,
            seed: 0,
            out: out.into(),
            report: None,
            deltas: None,
            particles_out: None,
            sections: DEFAULT_FACES_PER_SECTION,
            parallel: false,
            particles: true,
            repair: RepairMode::Optimized,
        }
    }
}

/// Result of a tear run, before anything is written.
pub struct TearRun {
    pub engine: Engine,
    pub deltas: Vec<MeshDelta>,
    pub report: PhaseReport,
}

/// Tears `mesh` along the trajectory's samples as recorded. Rejected
/// segments are skipped.
pub fn tear_in_memory(mesh: TriMesh, trajectory: &Trajectory, width: f64, config: EngineConfig) -> Result<TearRun> {
    if trajectory.mode != Mode::Tear {
        return Err(HarnessError::Input("trajectory mode is not tear".into()));
    }
    let boxes = build_tear_boxes(&trajectory.samples, width)?;
    let mut engine = Engine::new(mesh, config)?;
    let wall = Instant::now();
    let mut times = Vec::with_capacity(boxes.len());
    let mut accepted = Vec::with_capacity(boxes.len());
    let mut deltas = Vec::with_capacity(boxes.len());
    for b in &boxes {
        let outcome = engine.tear_box(b)?;
        times.push(outcome.times);
        accepted.push(outcome.delta.is_some());
        deltas.extend(outcome.delta);
    }
    let wall_ms = wall.elapsed().as_secs_f64() * 1e3;
    engine.end_stroke();
    let particles = engine.particles.as_ref().map_or(0, |p| p.len());
    let report = PhaseReport::new(&times, &accepted, wall_ms, mesh_stats(&engine.mesh, particles));
    Ok(TearRun { engine, deltas, report })
}

pub fn run_tear(args: &TearArgs) -> Result<PhaseReport> {
    let mesh = load_mesh_arg(&args.mesh)?;
    let trajectory = load_trajectory_arg(&args.trajectory, &mesh, Mode::Tear, args.width.unwrap_or(0.0))?;
    let width = args.width.unwrap_or(trajectory.width);
    if !(width >= 0.0 && width.is_finite()) {
        return Err(HarnessError::Input(format!("bad width {width}")));
    }
    let config = EngineConfig {
        faces_per_section: args.sections.max(1),
        options: TearOptions {
            parallel: args.parallel,
            prune: false,
        },
        particles: args.particles.then(|| ParticleParams::for_mesh(&mesh, args.seed)),
        repair: args.repair,
        slit: true,
    };
    let run = tear_in_memory(mesh, &trajectory, width, config)?;
    run.engine.mesh.check_manifold().map_err(|e| HarnessError::Internal(e.to_string()))?;

    write_mesh(&args.out, &run.engine.mesh)?;
    let log_path = args.deltas.clone().unwrap_or_else(|| with_suffix(&args.out, ".deltas.jsonl"));
    let mut log = String::new();
    for d in &run.deltas {
        log.push_str(&d.to_json_line());
        log.push('\n');
    }
    write(&log_path, log.as_bytes())?;
    if let (Some(path), Some(ps)) = (&args.particles_out, &run.engine.particles) {
        write(path, ps.to_json().as_bytes())?;
    }
    emit(args.report.as_deref(), &run.report.to_json())?;
    Ok(run.report)
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write(p, text.as_bytes()),
        None => {
            let mut out = std::io::stdout().lock();
            writeln!(out, "{text}")?;
            Ok(())
        }
    }
}

/// Source of a cut plane.
#[derive(Debug, Clone)]
pub enum PlaneSource {
    /// `a x + b y + c z + d = 0`.
    Coefficients([f64; 4]),
    Trajectory(String),
}

pub fn parse_plane(text: &str) -> Result<[f64; 4]> {
    let v: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| HarnessError::Input(format!("bad plane {text:?}: {e}")))?;
    <[f64; 4]>::try_from(v).map_err(|_| HarnessError::Input(format!("plane needs 4 coefficients: {text:?}")))
}

/// Cuts `mesh`, treating a plane that misses the mesh as a trivial cut.
/// Returns the result, whether the plane intersected and the time taken.
pub fn cut_in_memory(mesh: &TriMesh, plane: &Plane) -> Result<(CutResult, bool, f64)> {
    let t = Instant::now();
    let outcome = cut(mesh, plane);
    let ms = t.elapsed().as_secs_f64() * 1e3;
    match outcome {
        Ok(r) => Ok((r, true, ms)),
        Err(CutError::NoIntersection(r)) => Ok((*r, false, ms)),
        Err(e) => Err(e.into()),
    }
}

pub fn run_cut(mesh: &str, source: &PlaneSource, out_prefix: &Path, report: Option<&Path>) -> Result<CutReport> {
    let mesh = load_mesh_arg(mesh)?;
    let plane = match source {
        PlaneSource::Coefficients([a, b, c, d]) => Plane::from_coefficients(*a, *b, *c, *d)?,
        PlaneSource::Trajectory(path) => {
            let t = Trajectory::load(Path::new(path))?;
            if t.mode != Mode::Cut {
                return Err(HarnessError::Input("trajectory mode is not cut".into()));
            }
            t.cut_plane()?
        }
    };
    let (result, intersected, cut_ms) = cut_in_memory(&mesh, &plane)?;
    if !intersected {
        log::warn!("cut plane misses the mesh; one output is empty");
    }
    write_mesh(&with_suffix(out_prefix, ".pos.obj"), &result.positive)?;
    write_mesh(&with_suffix(out_prefix, ".neg.obj"), &result.negative)?;
    let r = CutReport {
        intersection_points: result.intersection_points(),
        cut_ms,
        positive: mesh_stats(&result.positive, 0),
        negative: mesh_stats(&result.negative, 0),
        intersected,
    };
    emit(report, &serde_json::to_string_pretty(&r)?)?;
    Ok(r)
}

pub fn run_particles(mesh: &str, radius: f64, delta: f64, poisson_r: f64, seed: u64, out: &Path) -> Result<ParticleSystem> {
    let mesh = load_mesh_arg(mesh)?;
    let params = ParticleParams {
        d: radius,
        delta,
        ..ParticleParams::from_poisson_r(poisson_r, seed)
    };
    let system = ParticleSystem::generate(&mesh, params)?;
    write(out, system.to_json().as_bytes())?;
    Ok(system)
}

/// Applies a delta log to `mesh` in order.
pub fn replay(mesh: &mut TriMesh, log: &str) -> Result<usize> {
    let mut n = 0;
    for (i, line) in log.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let delta = MeshDelta::from_json_line(line).map_err(|e| HarnessError::Input(format!("delta line {}: {e}", i + 1)))?;
        mesh.apply(&delta)?;
        n += 1;
    }
    Ok(n)
}

pub fn run_replay(mesh: &str, deltas: &Path, out: &Path) -> Result<usize> {
    let mut mesh = load_mesh_arg(mesh)?;
    let log = fs::read_to_string(deltas).map_err(|e| HarnessError::Input(format!("{}: {e}", deltas.display())))?;
    let n = replay(&mut mesh, &log)?;
    write_mesh(out, &mesh)?;
    Ok(n)
}
