//! Auxiliary particles that hold a fresh tear open.

use std::collections::BTreeSet;

use super::{influence_weight, insert_link, normalize, Links, Particle, ParticleSystem};
use crate::geometry::{Point, Vector};
use crate::mesh::TriMesh;
use crate::tear::TearState;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SlitReport {
    /// Ids of the new particles.
    pub spawned: Vec<u32>,
    pub links: usize,
}

struct Cluster {
    seed: u32,
    side: f64,
    normal: Vector,
    width: f64,
}

impl ParticleSystem {
    /// Spawns one particle per cluster of rim vertices on the same side of
    /// the tear, clustered greedily within `d_slit` of the cluster's first
    /// vertex. Each spring target sits `open_fraction` times the tear width
    /// away from the slit along the tear-plane normal. The particles move
    /// the `touched` vertices within reach that no tear separates from
    /// them.
    pub fn spawn_slit_particles(
        &mut self,
        mesh: &TriMesh,
        state: &TearState,
        touched: &[u32],
        open_fraction: f64,
    ) -> SlitReport {
        let eps = mesh.tolerance().side;
        let boxes = &state.boxes_so_far;
        let mut clusters: Vec<Cluster> = Vec::new();
        for r in &state.rim_vertices {
            if !mesh.is_referenced(r.vertex) {
                continue;
            }
            let b = &boxes[r.box_index];
            let p = mesh.positions[r.vertex as usize];
            let dist = b.tear_plane.signed_distance(&p);
            if dist.abs() <= eps {
                continue;
            }
            let side = dist.signum();
            let joins = clusters.iter().any(|c| {
                c.side == side && (mesh.positions[c.seed as usize] - p).norm() <= self.params.d_slit
            });
            if !joins {
                clusters.push(Cluster {
                    seed: r.vertex,
                    side,
                    normal: b.tear_plane.normal,
                    width: b.width,
                });
            }
        }

        self.map.resize(mesh.vertex_count(), self.particles.len());
        let mut report = SlitReport::default();
        let mut changed = BTreeSet::new();
        let targets: Vec<u32> = touched.iter().copied().filter(|&v| mesh.is_referenced(v)).collect();
        for c in clusters {
            let id = self.particles.len() as u32;
            let anchor = mesh.positions[c.seed as usize];
            let mut p = Particle::at_rest(id, c.seed, anchor, &self.params);
            p.offset = c.normal * (c.side * open_fraction * c.width);
            p.slit = true;
            let radius = p.radius;
            self.particles.push(p);
            self.map.neighbors.push(Links::new());
            report.spawned.push(id);
            for &v in &targets {
                let q: Point = mesh.positions[v as usize];
                let r = (q - anchor).norm();
                if r > radius || boxes.iter().any(|b| b.separates(&anchor, &q, eps)) {
                    continue;
                }
                insert_link(&mut self.map.influence[v as usize], id, influence_weight(r, radius, self.params.steepness));
                changed.insert(v);
                report.links += 1;
            }
        }
        for v in changed {
            normalize(&mut self.map.influence[v as usize]);
        }
        report
    }
}
