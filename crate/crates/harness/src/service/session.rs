//! One interactive session: applies client messages in arrival order.

use std::time::Instant;

use lacerate::cut::cut_plane_from_samples;
use lacerate::geometry::{Plane, Point, ScalpelSample, TearBox, Vector};
use lacerate::mesh::{load_mesh, TriMesh, DEFAULT_FACES_PER_SECTION};
use lacerate::particles::{ParticleParams, RepairMode, DEFAULT_DT};
use lacerate::tear::{StrokeBuilder, TearOptions, DEFAULT_ANGLE_THRESHOLD_DEG, DEFAULT_DISTANCE_FRACTION};
use serde::{Deserialize, Serialize};

use super::protocol::{ClientMessage, ServerMessage, PROTOCOL_VERSION};
use crate::engine::{Engine, EngineConfig};
use crate::error::{HarnessError, Result};
use crate::trajectory::load_mesh_arg;

/// Processing time above which a message is logged as slow.
pub const MESSAGE_BUDGET_MS: f64 = 10.0;

/// Particle parameters a client may set; unset values follow the mesh.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParticleOverrides {
    pub poisson_r: Option<f64>,
    pub d: Option<f64>,
    pub delta: Option<f64>,
    pub seed: u64,
}

impl ParticleOverrides {
    pub fn resolve(&self, mesh: &TriMesh) -> ParticleParams {
        let base = match self.poisson_r {
            Some(r) => ParticleParams::from_poisson_r(r, self.seed),
            None => ParticleParams::for_mesh(mesh, self.seed),
        };
        ParticleParams {
            d: self.d.unwrap_or(base.d),
            delta: self.delta.unwrap_or(base.delta),
            ..base
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionParams {
    /// Tear width in model units.
    pub width: f64,
    /// Stroke sampling distance as a fraction of the mesh diagonal.
    pub distance_fraction: f64,
    pub angle_threshold_deg: f64,
    /// `None` disables particles.
    pub particles: Option<ParticleOverrides>,
    pub slit: bool,
    pub faces_per_section: usize,
}

impl Default for SessionParams {
    fn default() -> Self {
        SessionParams {
            width: 0.0,
            distance_fraction: DEFAULT_DISTANCE_FRACTION,
            angle_threshold_deg: DEFAULT_ANGLE_THRESHOLD_DEG,
            particles: Some(ParticleOverrides::default()),
            slit: true,
            faces_per_section: DEFAULT_FACES_PER_SECTION,
        }
    }
}

impl SessionParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.width >= 0.0
            && self.width.is_finite()
            && self.distance_fraction >= 0.0
            && self.distance_fraction.is_finite()
            && (0.0..=180.0).contains(&self.angle_threshold_deg)
            && self.faces_per_section > 0;
        if ok {
            Ok(())
        } else {
            Err(HarnessError::Input("invalid session parameters".into()))
        }
    }
}

pub struct Session {
    params: SessionParams,
    engine: Option<Engine>,
    stroke: Option<StrokeBuilder>,
    forces: Vec<(u32, Vector)>,
    /// Vertex positions as of the last frame sent.
    shown: Vec<Point>,
    steps: u64,
}

impl Session {
    pub fn new(params: SessionParams) -> Self {
        Session {
            params,
            engine: None,
            stroke: None,
            forces: Vec::new(),
            shown: Vec::new(),
            steps: 0,
        }
    }

    pub fn engine(&self) -> Option<&Engine> {
        self.engine.as_ref()
    }

    /// Applies one message. Recoverable failures become a non-fatal
    /// `Error` reply; the session state is left as it was.
    pub fn handle(&mut self, msg: ClientMessage) -> Vec<ServerMessage> {
        let t = Instant::now();
        let kind = message_name(&msg);
        let out = self.dispatch(msg).unwrap_or_else(|e| vec![ServerMessage::error(e.to_string(), false)]);
        let ms = t.elapsed().as_secs_f64() * 1e3;
        if ms > MESSAGE_BUDGET_MS {
            log::debug!("{kind} took {ms:.2} ms");
        }
        out
    }

    fn dispatch(&mut self, msg: ClientMessage) -> Result<Vec<ServerMessage>> {
        match msg {
            ClientMessage::LoadMesh { source, obj, sidecar } => {
                let mesh = match (source, obj) {
                    (Some(s), None) => load_mesh_arg(&s)?,
                    (None, Some(o)) => load_mesh(o.as_bytes(), sidecar.as_ref().map(|s| s.as_bytes()))?,
                    _ => return Err(HarnessError::Input("LoadMesh needs exactly one of source and obj".into())),
                };
                self.load(mesh)
            }
            ClientMessage::SetParams(p) => {
                p.validate()?;
                self.params = p;
                Ok(Vec::new())
            }
            ClientMessage::ScalpelSample { t_ms, tip, end } => {
                let raw = ScalpelSample::new(t_ms, tip, end);
                let finite = t_ms.is_finite() && tip.iter().chain(end.iter()).all(|x| x.is_finite());
                if !finite {
                    return Err(HarnessError::Input("non-finite scalpel sample".into()));
                }
                let engine = self.engine_mut()?;
                let diag = engine.mesh.diagonal();
                let params = self.params;
                let builder = self.stroke.get_or_insert_with(|| {
                    StrokeBuilder::new(params.width, params.distance_fraction * diag, params.angle_threshold_deg)
                });
                if let Some(last) = builder.samples().last() {
                    if !(t_ms > last.t_ms) {
                        return Err(HarnessError::Input("sample times must increase".into()));
                    }
                }
                let boxes = builder.push(raw);
                self.tear(&boxes)
            }
            ClientMessage::EndStroke => {
                let Some(mut builder) = self.stroke.take() else {
                    return Ok(Vec::new());
                };
                let boxes = builder.finish();
                let out = self.tear(&boxes)?;
                self.engine_mut()?.end_stroke();
                Ok(out)
            }
            ClientMessage::CutPlane { plane, points } => {
                let plane = match (plane, points) {
                    (Some([a, b, c, d]), None) => Plane::from_coefficients(a, b, c, d)?,
                    (None, Some([e, t, n])) => cut_plane_from_samples(&e, &t, &n)?,
                    _ => return Err(HarnessError::Input("CutPlane needs exactly one of plane and points".into())),
                };
                self.engine_mut()?;
                let mut out = Vec::new();
                if let Some(mut builder) = self.stroke.take() {
                    out.extend(self.tear(&builder.finish())?);
                }
                let engine = self.engine.as_mut().expect("checked above");
                engine.end_stroke();
                engine.cut(&plane)?;
                out.push(self.mesh_loaded());
                Ok(out)
            }
            ClientMessage::StepSim { dt, steps } => {
                let dt = dt.unwrap_or(DEFAULT_DT);
                if !(dt > 0.0 && dt.is_finite()) {
                    return Err(HarnessError::Input(format!("bad dt {dt}")));
                }
                let steps = steps.unwrap_or(1).max(1);
                let forces = std::mem::take(&mut self.forces);
                let engine = self.engine_mut()?;
                let mut positions = Vec::new();
                for _ in 0..steps {
                    positions = engine.step(&forces, dt);
                }
                self.steps += u64::from(steps);
                Ok(vec![self.frame(positions)])
            }
            ClientMessage::ApplyForce { particle, force } => {
                let n = self.engine_mut()?.particles.as_ref().map_or(0, |p| p.len());
                if particle as usize >= n || !force.iter().all(|x| x.is_finite()) {
                    return Err(HarnessError::Input(format!("bad force on particle {particle}")));
                }
                self.forces.push((particle, force));
                Ok(Vec::new())
            }
        }
    }

    fn engine_mut(&mut self) -> Result<&mut Engine> {
        self.engine.as_mut().ok_or_else(|| HarnessError::Input("no mesh loaded".into()))
    }

    fn load(&mut self, mesh: TriMesh) -> Result<Vec<ServerMessage>> {
        let config = EngineConfig {
            faces_per_section: self.params.faces_per_section,
            options: TearOptions::default(),
            particles: self.params.particles.map(|o| o.resolve(&mesh)),
            repair: RepairMode::Optimized,
            slit: self.params.slit,
        };
        self.engine = Some(Engine::new(mesh, config)?);
        self.stroke = None;
        self.forces.clear();
        Ok(vec![self.mesh_loaded()])
    }

    fn tear(&mut self, boxes: &[TearBox]) -> Result<Vec<ServerMessage>> {
        let engine = self.engine_mut()?;
        let mut out = Vec::new();
        for b in boxes {
            let outcome = engine.tear_box(b)?;
            match (outcome.delta, outcome.rejected) {
                (Some(d), _) => out.push(ServerMessage::MeshDelta(d)),
                (None, Some(why)) => out.push(ServerMessage::error(format!("segment rejected: {why}"), false)),
                (None, None) => {}
            }
        }
        Ok(out)
    }

    fn mesh_loaded(&mut self) -> ServerMessage {
        let engine = self.engine.as_ref().expect("mesh loaded");
        let mesh = &engine.mesh;
        self.shown = engine.posed_positions();
        let triangles: Vec<[u32; 3]> = mesh.live_faces().map(|f| mesh.faces[f as usize]).collect();
        ServerMessage::MeshLoaded {
            version: PROTOCOL_VERSION,
            epoch: mesh.epoch(),
            vertices: mesh.vertex_count(),
            faces: triangles.len(),
            particles: engine.particles.as_ref().map_or(0, |p| p.len()),
            positions: mesh.positions.clone(),
            triangles,
        }
    }

    fn frame(&mut self, positions: Vec<Point>) -> ServerMessage {
        let engine = self.engine.as_ref().expect("mesh loaded");
        // Vertices added by deltas start where the delta put them.
        let known = self.shown.len();
        self.shown.extend_from_slice(&engine.mesh.positions[known.min(engine.mesh.vertex_count())..]);
        let moved = positions
            .iter()
            .enumerate()
            .filter(|&(i, p)| *p != self.shown[i])
            .map(|(i, p)| (i as u32, *p))
            .collect();
        self.shown = positions;
        let centers = engine
            .particles
            .as_ref()
            .map_or_else(Vec::new, |ps| ps.particles.iter().map(|p| p.center).collect());
        ServerMessage::ParticleFrame {
            step: self.steps,
            moved,
            centers,
        }
    }
}

fn message_name(msg: &ClientMessage) -> &'static str {
    match msg {
        ClientMessage::LoadMesh { .. } => "LoadMesh",
        ClientMessage::SetParams(_) => "SetParams",
        ClientMessage::ScalpelSample { .. } => "ScalpelSample",
        ClientMessage::EndStroke => "EndStroke",
        ClientMessage::CutPlane { .. } => "CutPlane",
        ClientMessage::StepSim { .. } => "StepSim",
        ClientMessage::ApplyForce { .. } => "ApplyForce",
    }
}
