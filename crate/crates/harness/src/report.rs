//! Timing reports with fixed key names.

use serde::{Deserialize, Serialize};

use crate::engine::PhaseTimes;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeshStats {
    pub vertices: usize,
    pub faces: usize,
    pub particles: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentReport {
    pub index: usize,
    pub accepted: bool,
    #[serde(flatten)]
    pub phases: PhaseTimes,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseReport {
    pub segments: Vec<SegmentReport>,
    /// Per-phase sums over all segments.
    pub totals: PhaseTimes,
    /// Sum of `totals`.
    pub total_ms: f64,
    /// Wall-clock time of the segment loop, for reconciliation with
    /// `total_ms`.
    pub wall_ms: f64,
    pub mesh: MeshStats,
}

impl PhaseReport {
    pub fn new(segments: &[PhaseTimes], accepted: &[bool], wall_ms: f64, mesh: MeshStats) -> Self {
        let mut totals = PhaseTimes::default();
        for s in segments {
            totals.add(s);
        }
        PhaseReport {
            segments: segments
                .iter()
                .zip(accepted)
                .enumerate()
                .map(|(index, (p, &accepted))| SegmentReport {
                    index,
                    accepted,
                    phases: *p,
                    total_ms: p.total(),
                })
                .collect(),
            totals,
            total_ms: totals.total(),
            wall_ms,
            mesh,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutReport {
    pub intersection_points: usize,
    pub cut_ms: f64,
    pub positive: MeshStats,
    pub negative: MeshStats,
    /// `false` when the plane missed the mesh.
    pub intersected: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn totals_reconcile() {
        let a = PhaseTimes::from_values([1.0, 2.0, 3.0, 4.0, 5.0]);
        let b = PhaseTimes::from_values([0.5; 5]);
        let stats = MeshStats {
            vertices: 1,
            faces: 1,
            particles: 0,
        };
        let r = PhaseReport::new(&[a, b], &[true, false], 20.0, stats);
        assert_eq!(r.total_ms, 17.5);
        assert_eq!(r.segments[0].total_ms, 15.0);
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        for name in PhaseTimes::NAMES {
            assert!(v["totals"][name].is_number(), "{name}");
            assert!(v["segments"][1][name].is_number(), "{name}");
        }
    }
}
