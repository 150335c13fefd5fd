//! Recorded scalpel trajectories.

use std::path::Path;

use lacerate::geometry::{Plane, ScalpelSample};
use lacerate::mesh::TriMesh;
use serde::{Deserialize, Serialize};

use crate::builtin::{arc_stroke, builtin_mesh};
use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Tear,
    Cut,
}

/// `{ "mode": "tear"|"cut", "width": w, "samples": [{"t_ms", "tip", "end"}] }`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub mode: Mode,
    #[serde(default)]
    pub width: f64,
    pub samples: Vec<ScalpelSample>,
}

impl Trajectory {
    pub fn validate(&self) -> Result<()> {
        if self.samples.len() < 2 {
            return Err(HarnessError::Input(format!(
                "trajectory needs at least 2 samples, got {}",
                self.samples.len()
            )));
        }
        if !(self.width >= 0.0 && self.width.is_finite()) {
            return Err(HarnessError::Input(format!("bad width {}", self.width)));
        }
        for w in self.samples.windows(2) {
            if !(w[1].t_ms > w[0].t_ms) {
                return Err(HarnessError::Input("sample times must increase strictly".into()));
            }
        }
        let finite = |s: &ScalpelSample| s.t_ms.is_finite() && s.tip.iter().chain(s.end.iter()).all(|x| x.is_finite());
        if !self.samples.iter().all(finite) {
            return Err(HarnessError::Input("non-finite sample".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let t: Trajectory = serde_json::from_str(text)?;
        t.validate()?;
        Ok(t)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Input(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Cut plane through the first sample's tip and the tip and end of the
    /// first later sample that is not collinear with it.
    pub fn cut_plane(&self) -> Result<Plane> {
        let entry = self.samples[0].tip;
        self.samples[1..]
            .iter()
            .find_map(|s| lacerate::cut::cut_plane_from_samples(&entry, &s.tip, &s.end).ok())
            .ok_or_else(|| HarnessError::Geometry("cut plane points are collinear".into()))
    }
}

/// Loads a mesh from an OBJ path or `builtin:NAME`. An OBJ skin sidecar
/// is picked up from `PATH.skin.json` when present.
pub fn load_mesh_arg(arg: &str) -> Result<TriMesh> {
    if let Some(name) = arg.strip_prefix("builtin:") {
        return builtin_mesh(name).ok_or_else(|| HarnessError::Input(format!("unknown built-in mesh {name:?}")));
    }
    let obj = std::fs::read(arg).map_err(|e| HarnessError::Input(format!("{arg}: {e}")))?;
    let sidecar_path = format!("{arg}.skin.json");
    let sidecar = match std::fs::read(&sidecar_path) {
        Ok(b) => Some(b),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
        Err(e) => return Err(HarnessError::Input(format!("{sidecar_path}: {e}"))),
    };
    Ok(lacerate::mesh::load_mesh(&obj, sidecar.as_deref())?)
}

/// Loads a trajectory from a path, or builds `builtin:arc:N` (an `N`
/// segment arc over `mesh` with the given width).
pub fn load_trajectory_arg(arg: &str, mesh: &TriMesh, mode: Mode, width: f64) -> Result<Trajectory> {
    if let Some(n) = arg.strip_prefix("builtin:arc:") {
        let segments: usize = n.parse().map_err(|_| HarnessError::Input(format!("bad segment count {n:?}")))?;
        let t = Trajectory {
            mode,
            width,
            samples: arc_stroke(mesh, segments.max(1)),
        };
        t.validate()?;
        return Ok(t);
    }
    Trajectory::load(Path::new(arg))
}
