//! Repeated timing runs compared against reference timings.

use std::path::Path;

use lacerate::geometry::{Plane, Vector};
use lacerate::mesh::TriMesh;
use lacerate::particles::ParticleParams;
use serde::{Deserialize, Serialize};

use crate::engine::{EngineConfig, PhaseTimes};
use crate::error::{HarnessError, Result};
use crate::run::{cut_in_memory, mesh_stats, tear_in_memory};
use crate::report::MeshStats;
use crate::trajectory::{load_mesh_arg, load_trajectory_arg, Mode};

/// Published per-segment tear timings (ms) by size class, in
/// [`PhaseTimes::NAMES`] order, and their totals.
pub const TEAR_REFERENCES: &[(&str, [f64; 5], f64)] = &[
    ("small", [0.36, 0.39, 0.91, 0.90, 0.07], 3.25),
    ("medium", [3.0, 2.01, 1.25, 3.81, 0.24], 11.19),
    ("large", [2.54, 0.87, 2.63, 11.04, 0.76], 18.65),
];

/// Published full-cut timings (ms) by size class.
pub const CUT_REFERENCES: &[(&str, f64)] = &[("1k", 12.0), ("3k", 13.49), ("5k", 17.29)];

pub const DEFAULT_REGRESSION_MULTIPLIER: f64 = 2.0;

/// The reference "update_mesh" time includes a GPU buffer upload; here it
/// covers applying the delta and refreshing mesh sections only.
pub const UPDATE_MESH_NOTE: &str =
    "update_mesh here covers delta application and section refresh; the reference also includes a GPU upload";

fn default_multiplier() -> f64 {
    DEFAULT_REGRESSION_MULTIPLIER
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchCase {
    pub name: String,
    pub kind: Mode,
    /// OBJ path or `builtin:NAME`.
    pub mesh: String,
    /// Tear: trajectory path or `builtin:arc:N`.
    #[serde(default)]
    pub trajectory: Option<String>,
    #[serde(default)]
    pub width: f64,
    /// Cut: `[a, b, c, d]`; defaults to the mid-plane across the longest
    /// bounding-box axis.
    #[serde(default)]
    pub plane: Option<[f64; 4]>,
    /// Key into the reference tables.
    #[serde(default)]
    pub size_class: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(default)]
    pub cases: Vec<BenchCase>,
    #[serde(default = "default_multiplier")]
    pub regression_multiplier: f64,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Input(format!("{}: {e}", path.display())))?;
        let m: Manifest = serde_json::from_str(&text)?;
        if !(m.regression_multiplier > 0.0) {
            return Err(HarnessError::Input("regression_multiplier must be positive".into()));
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

impl Stat {
    pub fn of(samples: &[f64]) -> Stat {
        let mut s = samples.to_vec();
        s.sort_by(f64::total_cmp);
        let n = s.len();
        let median = if n == 0 {
            0.0
        } else if n % 2 == 1 {
            s[n / 2]
        } else {
            0.5 * (s[n / 2 - 1] + s[n / 2])
        };
        Stat {
            median,
            min: s.first().copied().unwrap_or(0.0),
            max: s.last().copied().unwrap_or(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub name: String,
    pub kind: Mode,
    pub size_class: Option<String>,
    pub repeats: usize,
    /// Tear: mean per-segment time of each phase; empty for cuts.
    pub phases: Vec<(String, Stat)>,
    /// Tear: mean per-segment total. Cut: whole cut.
    pub total_ms: Stat,
    pub reference_total_ms: Option<f64>,
    pub budget_ms: Option<f64>,
    /// `None` when there is no reference to compare against.
    pub pass: Option<bool>,
    pub mesh: MeshStats,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intersection_points: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub regression_multiplier: f64,
    pub notes: Vec<String>,
}

impl BenchReport {
    pub fn regressions(&self) -> impl Iterator<Item = &BenchRow> {
        self.rows.iter().filter(|r| r.pass == Some(false))
    }

    /// Plain-text table, one row per case.
    pub fn table(&self) -> String {
        let mut s = format!(
            "{:<20} {:>5} {:>10} {:>10} {:>10} {:>10} {:>10}  {}\n",
            "case", "kind", "median_ms", "min_ms", "max_ms", "ref_ms", "budget_ms", "status"
        );
        for r in &self.rows {
            let opt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.2}"));
            let status = match r.pass {
                Some(true) => "pass",
                Some(false) => "FAIL",
                None => "-",
            };
            let kind = match r.kind {
                Mode::Tear => "tear",
                Mode::Cut => "cut",
            };
            s.push_str(&format!(
                "{:<20} {:>5} {:>10.3} {:>10.3} {:>10.3} {:>10} {:>10}  {}\n",
                r.name,
                kind,
                r.total_ms.median,
                r.total_ms.min,
                r.total_ms.max,
                opt(r.reference_total_ms),
                opt(r.budget_ms),
                status
            ));
        }
        s
    }
}

fn tear_reference(class: &str) -> Option<f64> {
    TEAR_REFERENCES.iter().find(|r| r.0 == class).map(|r| r.2)
}

fn cut_reference(class: &str) -> Option<f64> {
    CUT_REFERENCES.iter().find(|r| r.0 == class).map(|r| r.1)
}

/// Plane through the bounding-box center, normal to the longest axis.
pub fn mid_plane(mesh: &TriMesh) -> Plane {
    let aabb = mesh.aabb();
    let mut n = Vector::zeros();
    n[aabb.longest_axis()] = 1.0;
    Plane::from_point_normal(&aabb.center(), n).expect("axis normal is unit")
}

fn bench_tear(case: &BenchCase, repeats: usize) -> Result<(Vec<PhaseTimes>, MeshStats)> {
    let base = load_mesh_arg(&case.mesh)?;
    let spec = case
        .trajectory
        .as_deref()
        .ok_or_else(|| HarnessError::Input(format!("case {}: tear needs a trajectory", case.name)))?;
    let trajectory = load_trajectory_arg(spec, &base, Mode::Tear, case.width)?;
    let config = EngineConfig {
        particles: Some(ParticleParams::for_mesh(&base, 0)),
        ..EngineConfig::default()
    };
    let mut per_repeat = Vec::with_capacity(repeats);
    let mut stats = mesh_stats(&base, 0);
    // One untimed warm-up run.
    for i in 0..=repeats {
        let run = tear_in_memory(base.clone(), &trajectory, case.width, config)?;
        let n = run.report.segments.len().max(1) as f64;
        let mean = PhaseTimes::from_values(run.report.totals.values().map(|v| v / n));
        stats = MeshStats {
            particles: run.report.mesh.particles,
            ..mesh_stats(&base, 0)
        };
        if i > 0 {
            per_repeat.push(mean);
        }
    }
    Ok((per_repeat, stats))
}

pub fn run_case(case: &BenchCase, repeats: usize, multiplier: f64) -> Result<BenchRow> {
    let repeats = repeats.max(1);
    let class = case.size_class.as_deref();
    match case.kind {
        Mode::Tear => {
            let (runs, mesh) = bench_tear(case, repeats)?;
            let phases = PhaseTimes::NAMES
                .iter()
                .enumerate()
                .map(|(k, name)| {
                    let samples: Vec<f64> = runs.iter().map(|p| p.values()[k]).collect();
                    (name.to_string(), Stat::of(&samples))
                })
                .collect();
            let totals: Vec<f64> = runs.iter().map(PhaseTimes::total).collect();
            Ok(row(case, repeats, phases, Stat::of(&totals), class.and_then(tear_reference), multiplier, mesh, None))
        }
        Mode::Cut => {
            let mesh = load_mesh_arg(&case.mesh)?;
            let plane = match case.plane {
                Some([a, b, c, d]) => Plane::from_coefficients(a, b, c, d)?,
                None => mid_plane(&mesh),
            };
            let mut times = Vec::with_capacity(repeats);
            let mut points = 0;
            for i in 0..=repeats {
                let (result, _, ms) = cut_in_memory(&mesh, &plane)?;
                points = result.intersection_points();
                if i > 0 {
                    times.push(ms);
                }
            }
            let stats = mesh_stats(&mesh, 0);
            Ok(row(case, repeats, Vec::new(), Stat::of(&times), class.and_then(cut_reference), multiplier, stats, Some(points)))
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn row(
    case: &BenchCase,
    repeats: usize,
    phases: Vec<(String, Stat)>,
    total_ms: Stat,
    reference: Option<f64>,
    multiplier: f64,
    mesh: MeshStats,
    intersection_points: Option<usize>,
) -> BenchRow {
    let budget = reference.map(|r| r * multiplier);
    BenchRow {
        name: case.name.clone(),
        kind: case.kind,
        size_class: case.size_class.clone(),
        repeats,
        phases,
        pass: budget.map(|b| total_ms.median <= b),
        total_ms,
        reference_total_ms: reference,
        budget_ms: budget,
        mesh,
        intersection_points,
    }
}

pub fn run_bench(manifest: &Manifest, repeats: usize) -> Result<BenchReport> {
    let rows = manifest
        .cases
        .iter()
        .map(|c| {
            log::info!("bench case {}", c.name);
            run_case(c, repeats, manifest.regression_multiplier)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BenchReport {
        rows,
        regression_multiplier: manifest.regression_multiplier,
        notes: vec![UPDATE_MESH_NOTE.to_string()],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stats() {
        assert_eq!(Stat::of(&[3.0, 1.0, 2.0]), Stat { median: 2.0, min: 1.0, max: 3.0 });
        assert_eq!(Stat::of(&[4.0, 1.0]).median, 2.5);
        assert_eq!(Stat::of(&[]).median, 0.0);
    }

    #[test]
    fn reference_phases_sum_to_totals() {
        // The published totals round the phase sums and include a small
        // remainder outside the five phases.
        for (_, phases, total) in TEAR_REFERENCES {
            let sum: f64 = phases.iter().sum();
            assert!(sum <= *total + 0.01 && sum > 0.7 * total, "{sum} vs {total}");
        }
    }
}
