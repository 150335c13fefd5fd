//! A mesh with its particle layer, torn and cut one operation at a time
//! with every phase timed.

use std::time::Instant;

use lacerate::cut::{cut, CutError, CutResult};
use lacerate::geometry::{Plane, Point, TearBox, Vector};
use lacerate::mesh::{build_sections, MeshDelta, Sections, TriMesh, DEFAULT_FACES_PER_SECTION};
use lacerate::particles::{ParticleParams, ParticleSystem, RepairMode, SlitReport, OPEN_FRACTION};
use lacerate::skinning::lbs_with;
use lacerate::tear::{commit_segment, fill_skin, plan_segment, TearOptions, TearState};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineConfig {
    pub faces_per_section: usize,
    pub options: TearOptions,
    /// `None` disables the particle layer.
    pub particles: Option<ParticleParams>,
    pub repair: RepairMode,
    /// Spawn slit particles when a stroke ends.
    pub slit: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            faces_per_section: DEFAULT_FACES_PER_SECTION,
            options: TearOptions::default(),
            particles: None,
            repair: RepairMode::Optimized,
            slit: false,
        }
    }
}

/// Milliseconds spent in each phase of one tear segment.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimes {
    pub perform_tear: f64,
    pub update_particles: f64,
    pub disconnect_particles: f64,
    pub calculate_boneweights: f64,
    pub update_mesh: f64,
}

impl PhaseTimes {
    pub const NAMES: [&'static str; 5] = [
        "perform_tear",
        "update_particles",
        "disconnect_particles",
        "calculate_boneweights",
        "update_mesh",
    ];

    pub fn values(&self) -> [f64; 5] {
        [
            self.perform_tear,
            self.update_particles,
            self.disconnect_particles,
            self.calculate_boneweights,
            self.update_mesh,
        ]
    }

    pub fn from_values(v: [f64; 5]) -> Self {
        PhaseTimes {
            perform_tear: v[0],
            update_particles: v[1],
            disconnect_particles: v[2],
            calculate_boneweights: v[3],
            update_mesh: v[4],
        }
    }

    pub fn total(&self) -> f64 {
        self.values().iter().sum()
    }

    pub fn add(&mut self, other: &PhaseTimes) {
        let (a, b) = (self.values(), other.values());
        *self = PhaseTimes::from_values([0, 1, 2, 3, 4].map(|i| a[i] + b[i]));
    }
}

/// Outcome of one tear segment.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentOutcome {
    /// The committed delta, or `None` when the segment was rejected.
    pub delta: Option<MeshDelta>,
    pub times: PhaseTimes,
    pub rejected: Option<String>,
}

#[derive(Debug, Clone)]
pub struct CutOutcome {
    pub result: CutResult,
    pub plane: Plane,
    pub millis: f64,
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

pub struct Engine {
    pub mesh: TriMesh,
    pub sections: Sections,
    pub particles: Option<ParticleSystem>,
    pub stroke: TearState,
    /// Vertices touched by the current stroke, for slit particles.
    touched: Vec<u32>,
    pub config: EngineConfig,
}

impl Engine {
    pub fn new(mesh: TriMesh, config: EngineConfig) -> Result<Self> {
        let particles = match config.particles {
            Some(p) => Some(ParticleSystem::generate(&mesh, p)?),
            None => None,
        };
        Ok(Self::with_particles(mesh, particles, config))
    }

    pub fn with_particles(mesh: TriMesh, particles: Option<ParticleSystem>, config: EngineConfig) -> Self {
        let sections = build_sections(&mesh, config.faces_per_section);
        let stroke = TearState::new(mesh.diagonal());
        Engine {
            mesh,
            sections,
            particles,
            stroke,
            touched: Vec::new(),
            config,
        }
    }

    /// Forgets the current stroke's boxes and rim.
    pub fn begin_stroke(&mut self) {
        self.stroke = TearState::new(self.mesh.diagonal());
        self.touched.clear();
    }

    /// Tears one box out of the mesh and repairs the particle map.
    /// A segment that would break manifoldness is rejected and leaves
    /// everything unchanged.
    pub fn tear_box(&mut self, tear_box: &TearBox) -> Result<SegmentOutcome> {
        let mut times = PhaseTimes::default();
        let search_list = self.stroke.search_list.clone();

        let t = Instant::now();
        let planned = plan_segment(&self.mesh, &self.sections, &mut self.stroke, tear_box, self.config.options);
        times.perform_tear = ms(t);
        let mut plan = planned.map_err(|e| HarnessError::Internal(e.to_string()))?;

        let t = Instant::now();
        fill_skin(&self.mesh, &mut plan.delta);
        times.calculate_boneweights = ms(t);

        let t = Instant::now();
        let committed = commit_segment(&mut self.mesh, &mut self.sections, &plan.delta);
        times.update_mesh = ms(t);
        if let Err(e) = committed {
            self.stroke.boxes_so_far.pop();
            let n = self.stroke.rim_vertices.len() - plan.rim.len();
            self.stroke.rim_vertices.truncate(n);
            self.stroke.search_list = search_list;
            log::warn!("segment rejected: {e}");
            return Ok(SegmentOutcome {
                delta: None,
                times,
                rejected: Some(e.to_string()),
            });
        }

        if let Some(ps) = self.particles.as_mut() {
            let t = Instant::now();
            let mut repair = ps.begin_tear_repair(&self.mesh, &plan);
            times.update_particles = ms(t);

            let t = Instant::now();
            repair.disconnect(ps, &self.mesh, &self.stroke, &plan, self.config.repair);
            times.disconnect_particles = ms(t);

            let t = Instant::now();
            repair.finish(ps, &self.mesh, &self.stroke);
            times.update_particles += ms(t);
        }
        self.touched.extend_from_slice(&plan.touched_vertices);
        Ok(SegmentOutcome {
            delta: Some(plan.delta),
            times,
            rejected: None,
        })
    }

    /// Ends the stroke, spawning slit particles when enabled.
    pub fn end_stroke(&mut self) -> Option<SlitReport> {
        let report = match (self.config.slit, self.particles.as_mut()) {
            (true, Some(ps)) if !self.stroke.rim_vertices.is_empty() => {
                self.touched.sort_unstable();
                self.touched.dedup();
                Some(ps.spawn_slit_particles(&self.mesh, &self.stroke, &self.touched, OPEN_FRACTION))
            }
            _ => None,
        };
        self.begin_stroke();
        report
    }

    /// Cuts the mesh by `plane`. Both pieces stay in the engine as one
    /// mesh with two components.
    pub fn cut(&mut self, plane: &Plane) -> std::result::Result<CutOutcome, CutError> {
        let t = Instant::now();
        let result = match cut(&self.mesh, plane) {
            Ok(r) => r,
            Err(CutError::NoIntersection(r)) => {
                log::warn!("cut plane misses the mesh");
                *r
            }
            Err(e) => return Err(e),
        };
        let split = self
            .particles
            .as_ref()
            .map(|ps| ps.repair_after_cut(&self.mesh, &result, plane));
        let millis = ms(t);
        let offset = result.positive.vertex_count() as u32;
        self.mesh = TriMesh::merged(&result.positive, &result.negative);
        self.particles = split.map(|(a, b)| ParticleSystem::merged(&a, &b, offset));
        self.sections = build_sections(&self.mesh, self.config.faces_per_section);
        self.begin_stroke();
        Ok(CutOutcome {
            result,
            plane: *plane,
            millis,
        })
    }

    /// Undeformed vertex positions in the current skeleton pose.
    pub fn posed_positions(&self) -> Vec<Point> {
        match (&self.mesh.skin, &self.mesh.skeleton) {
            (Some(skin), Some(skeleton)) => {
                let m = skeleton.skin_matrices();
                self.mesh
                    .positions
                    .iter()
                    .zip(skin)
                    .map(|(p, w)| lbs_with(p, w, &m))
                    .collect()
            }
            _ => self.mesh.positions.clone(),
        }
    }

    /// Advances the particles and returns the deformed vertex positions.
    pub fn step(&mut self, forces: &[(u32, Vector)], dt: f64) -> Vec<Point> {
        let base = self.posed_positions();
        match self.particles.as_mut() {
            Some(ps) => {
                ps.step(forces, dt);
                ps.deform(&base)
            }
            None => base,
        }
    }
}
