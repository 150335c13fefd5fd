//! Spring-anchored particles that deform the mesh around them.
//!
//! Particles sit on Poisson-disk sampled vertices. Each vertex follows the
//! normalized, distance-weighted blend of its particles' displacements;
//! particles near each other are linked so that dragging one drags its
//! neighbours. Tears and cuts sever the links that cross them.

mod grid;
mod io;
mod repair;
mod sim;
mod slit;

use std::collections::BTreeSet;

use nalgebra::Matrix4;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

use crate::geometry::{Point, Vector};
use crate::mesh::TriMesh;
use crate::skinning::SkinError;

pub use grid::PointGrid;
pub use io::ParticleFile;
pub use repair::{RepairMode, RepairReport};
pub use sim::DEFAULT_DT;
pub use slit::SlitReport;

/// `(particle id, weight)` pairs sorted by particle id.
pub type Links = SmallVec<[(u32, f64); 6]>;

/// Poisson spacing as a fraction of the square root of the surface area.
/// Gives about 180 particles on any closed mesh.
pub const POISSON_AREA_FRACTION: f64 = 0.059;
/// Slit particle anchor offset as a fraction of the tear width.
pub const OPEN_FRACTION: f64 = 0.2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParticleError {
    #[error("mesh has no referenced vertices")]
    NoVertices,
    #[error("invalid particle parameters: {0}")]
    BadParams(&'static str),
    #[error(transparent)]
    Skin(#[from] SkinError),
    #[error("particle file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParticleParams {
    /// Minimum anchor spacing.
    pub poisson_r: f64,
    /// Influence radius.
    pub d: f64,
    /// Neighbour distance threshold.
    pub delta: f64,
    /// Sigmoid steepness of the influence weight.
    pub steepness: f64,
    /// Clustering radius of slit particles.
    pub d_slit: f64,
    /// Spring constant, 1/s².
    pub k: f64,
    /// Damping, 1/s.
    pub c: f64,
    pub mass: f64,
    pub seed: u64,
}

impl ParticleParams {
    /// Defaults derived from the Poisson spacing.
    pub fn from_poisson_r(poisson_r: f64, seed: u64) -> Self {
        ParticleParams {
            poisson_r,
            d: 1.5 * poisson_r,
            delta: 2.5 * poisson_r,
            steepness: 8.0,
            d_slit: poisson_r,
            k: 400.0,
            c: 12.0,
            mass: 1.0,
            seed,
        }
    }

    /// Defaults scaled to the surface area of `mesh`.
    pub fn for_mesh(mesh: &TriMesh, seed: u64) -> Self {
        Self::from_poisson_r(POISSON_AREA_FRACTION * mesh.total_area().sqrt(), seed)
    }

    pub fn validate(&self) -> Result<(), ParticleError> {
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if !positive(self.poisson_r) || !positive(self.d) || !positive(self.delta) {
            return Err(ParticleError::BadParams("d, delta and poisson_r must be positive"));
        }
        if self.poisson_r > self.delta {
            return Err(ParticleError::BadParams("poisson_r must not exceed delta"));
        }
        if !positive(self.k) || !positive(self.mass) || !(self.c >= 0.0) || !positive(self.steepness) {
            return Err(ParticleError::BadParams("k, mass and steepness must be positive, c non-negative"));
        }
        if !positive(self.d_slit) {
            return Err(ParticleError::BadParams("d_slit must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub id: u32,
    pub anchor_vertex: u32,
    /// Anchor vertex position in the current pose.
    pub anchor_pos: Point,
    pub center: Point,
    pub velocity: Vector,
    pub radius: f64,
    pub spring_k: f64,
    pub damping: f64,
    /// Rest offset of the spring target from the anchor. Zero except for
    /// slit particles, which pull the wound open.
    pub offset: Vector,
    pub slit: bool,
}

impl Particle {
    fn at_rest(id: u32, anchor_vertex: u32, anchor_pos: Point, params: &ParticleParams) -> Self {
        Particle {
            id,
            anchor_vertex,
            anchor_pos,
            center: anchor_pos,
            velocity: Vector::zeros(),
            radius: params.d,
            spring_k: params.k,
            damping: params.c,
            offset: Vector::zeros(),
            slit: false,
        }
    }

    /// Translation this particle applies to its vertices.
    pub fn displacement(&self) -> Displacement {
        Displacement(self.center - self.anchor_pos)
    }
}

/// Translation-only particle displacement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Displacement(pub Vector);

impl Displacement {
    pub fn as_matrix(&self) -> Matrix4<f64> {
        Matrix4::new_translation(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParticleMap {
    pub delta: f64,
    /// Per vertex, the particles moving it.
    pub influence: Vec<Links>,
    /// Per particle, its neighbours and their propagation weights.
    pub neighbors: Vec<Links>,
    /// Neighbour pairs `(low, high)` cut by a tear; never relinked.
    pub severed: BTreeSet<(u32, u32)>,
}

impl ParticleMap {
    /// Ids of vertices whose weights do not sum to one within `tol`.
    pub fn unnormalized(&self, tol: f64) -> Vec<u32> {
        (0..self.influence.len() as u32)
            .filter(|&v| {
                let l = &self.influence[v as usize];
                !l.is_empty() && (l.iter().map(|x| x.1).sum::<f64>() - 1.0).abs() > tol
            })
            .collect()
    }

    pub fn link_count(&self) -> usize {
        self.influence.iter().map(|l| l.len()).sum()
    }

    fn resize(&mut self, vertices: usize, particles: usize) {
        if self.influence.len() < vertices {
            self.influence.resize_with(vertices, Links::new);
        }
        if self.neighbors.len() < particles {
            self.neighbors.resize_with(particles, Links::new);
        }
    }
}

/// Particles plus their map: the soft-body layer of one mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSystem {
    pub params: ParticleParams,
    pub particles: Vec<Particle>,
    pub map: ParticleMap,
}

/// Raw influence of a particle of radius `d` on a vertex at distance `r`.
pub fn influence_weight(r: f64, d: f64, steepness: f64) -> f64 {
    1.0 / (1.0 + (steepness * (r / d - 0.5)).exp())
}

/// Neighbour propagation weight at anchor distance `r`.
pub fn neighbor_weight(r: f64, delta: f64) -> f64 {
    (1.0 - r / delta).max(0.0)
}

/// Greedy Poisson-disk selection over a seeded shuffle of `candidates`:
/// a vertex is taken when every vertex taken so far is at least `r` away.
pub fn poisson_sample(positions: &[Point], candidates: &[u32], r: f64, seed: u64) -> Vec<u32> {
    let mut order = candidates.to_vec();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut grid = PointGrid::new(r);
    let mut taken = Vec::new();
    for v in order {
        let p = positions[v as usize];
        if grid.any_closer(&p, r) {
            continue;
        }
        grid.insert(&p, taken.len() as u32);
        taken.push(v);
    }
    taken
}

/// Scales each weight so the list sums to one.
pub(crate) fn normalize(links: &mut Links) {
    let sum: f64 = links.iter().map(|x| x.1).sum();
    if sum > 0.0 {
        for l in links.iter_mut() {
            l.1 /= sum;
        }
    }
}

pub(crate) fn insert_link(links: &mut Links, id: u32, w: f64) {
    match links.binary_search_by_key(&id, |x| x.0) {
        Ok(k) => links[k].1 = w,
        Err(k) => links.insert(k, (id, w)),
    }
}

pub(crate) fn pair(a: u32, b: u32) -> (u32, u32) {
    (a.min(b), a.max(b))
}

impl ParticleSystem {
    /// Samples anchors on the referenced vertices of `mesh`, links every
    /// vertex within `d` of an anchor and every anchor pair within `delta`.
    pub fn generate(mesh: &TriMesh, params: ParticleParams) -> Result<Self, ParticleError> {
        params.validate()?;
        let candidates: Vec<u32> = mesh.referenced_vertices().collect();
        if candidates.is_empty() {
            return Err(ParticleError::NoVertices);
        }
        let anchors = poisson_sample(&mesh.positions, &candidates, params.poisson_r, params.seed);
        let particles: Vec<Particle> = anchors
            .iter()
            .enumerate()
            .map(|(j, &v)| Particle::at_rest(j as u32, v, mesh.positions[v as usize], &params))
            .collect();
        let mut system = ParticleSystem {
            params,
            particles,
            map: ParticleMap {
                delta: params.delta,
                ..Default::default()
            },
        };
        system.map.resize(mesh.vertex_count(), system.particles.len());
        let grid = system.anchor_grid(mesh);
        for &v in &candidates {
            system.assign_vertex(mesh, &grid, v);
            normalize(&mut system.map.influence[v as usize]);
        }
        system.relink_neighbors(&mesh.positions);
        Ok(system)
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    /// Rest position of a particle's anchor.
    pub(crate) fn rest_anchor(&self, mesh: &TriMesh, j: u32) -> Point {
        mesh.positions[self.particles[j as usize].anchor_vertex as usize]
    }

    /// Grid of rest anchor positions keyed by particle id.
    pub(crate) fn anchor_grid(&self, mesh: &TriMesh) -> PointGrid {
        let mut grid = PointGrid::new(self.params.d);
        for p in &self.particles {
            grid.insert(&mesh.positions[p.anchor_vertex as usize], p.id);
        }
        grid
    }

    /// Adds raw links from `v` to every particle within its radius.
    /// Returns whether any link was added.
    pub(crate) fn assign_vertex(&mut self, mesh: &TriMesh, grid: &PointGrid, v: u32) -> bool {
        let p = mesh.positions[v as usize];
        let mut found = grid.within(&p, self.params.d);
        found.sort_unstable();
        let mut added = false;
        for j in found {
            let r = (self.rest_anchor(mesh, j) - p).norm();
            let part = &self.particles[j as usize];
            if r <= part.radius {
                let w = influence_weight(r, part.radius, self.params.steepness);
                insert_link(&mut self.map.influence[v as usize], j, w);
                added = true;
            }
        }
        added
    }

    /// Recomputes neighbour links from the anchor positions given by
    /// `positions` (indexed by vertex), skipping slit particles and
    /// severed pairs.
    pub(crate) fn relink_neighbors(&mut self, positions: &[Point]) {
        let anchor = |p: &Particle| positions[p.anchor_vertex as usize];
        self.relink_with(|p| anchor(p));
    }

    fn relink_with(&mut self, anchor: impl Fn(&Particle) -> Point) {
        let n = self.particles.len();
        let delta = self.map.delta;
        let mut grid = PointGrid::new(delta);
        for p in &self.particles {
            grid.insert(&anchor(p), p.id);
        }
        let mut neighbors = vec![Links::new(); n];
        for a in &self.particles {
            if a.slit {
                continue;
            }
            let pa = anchor(a);
            let mut found = grid.within(&pa, delta);
            found.sort_unstable();
            for j in found {
                let b = &self.particles[j as usize];
                if j == a.id || b.slit || self.map.severed.contains(&pair(a.id, j)) {
                    continue;
                }
                // Both directions compute the same distance bit for bit.
                let (lo, hi) = if a.id < j { (pa, anchor(b)) } else { (anchor(b), pa) };
                let r = (hi - lo).norm();
                if r <= delta {
                    neighbors[a.id as usize].push((j, neighbor_weight(r, delta)));
                }
            }
        }
        self.map.neighbors = neighbors;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::procedural;

    #[test]
    fn sigmoid_values() {
        assert!((influence_weight(0.0, 1.0, 8.0) - 1.0 / (1.0 + (-4.0f64).exp())).abs() < 1e-15);
        assert!((influence_weight(0.5, 1.0, 8.0) - 0.5).abs() < 1e-15);
        assert!((influence_weight(1.0, 1.0, 8.0) - 0.017986).abs() < 1e-6);
        let mut prev = 1.0;
        for k in 0..=100 {
            let w = influence_weight(k as f64 / 100.0, 1.0, 8.0);
            assert!(w < prev);
            prev = w;
        }
    }

    #[test]
    fn neighbor_weight_rule() {
        assert_eq!(neighbor_weight(0.5, 1.0), 0.5);
        assert_eq!(neighbor_weight(1.0, 1.0), 0.0);
        assert_eq!(neighbor_weight(2.0, 1.0), 0.0);
    }

    #[test]
    fn two_vertices() {
        let mut mesh = TriMesh::new(
            vec![Point::new(0.0, 0.0, 0.0), Point::new(1.0, 0.0, 0.0), Point::new(0.0, 0.01, 0.0)],
            vec![[0, 1, 2]],
        )
        .unwrap();
        // Only vertices 0 and 1 are far enough apart to both be taken.
        mesh.positions[2] = Point::new(0.0, 0.01, 0.0);
        for (delta, linked) in [(1.5, true), (0.9, false)] {
            let params = ParticleParams {
                delta,
                ..ParticleParams::from_poisson_r(0.5, 3)
            };
            let s = ParticleSystem::generate(&mesh, params).unwrap();
            assert_eq!(s.len(), 2);
            assert_eq!(s.map.neighbors.iter().all(|l| l.len() == 1), linked);
        }
    }

    #[test]
    fn rejects_bad_params() {
        let mesh = procedural::cube();
        let mut p = ParticleParams::from_poisson_r(0.5, 0);
        p.delta = 0.1;
        assert!(matches!(ParticleSystem::generate(&mesh, p), Err(ParticleError::BadParams(_))));
        let empty = TriMesh::new(vec![], vec![]).unwrap();
        assert_eq!(
            ParticleSystem::generate(&empty, ParticleParams::from_poisson_r(0.5, 0)),
            Err(ParticleError::NoVertices)
        );
    }

    #[test]
    fn generated_weights_are_normalized_and_within_radius() {
        let mesh = procedural::icosphere(3, 1.0);
        let s = ParticleSystem::generate(&mesh, ParticleParams::for_mesh(&mesh, 1)).unwrap();
        assert!(s.map.unnormalized(1e-12).is_empty());
        for (v, links) in s.map.influence.iter().enumerate() {
            assert!(!links.is_empty());
            for &(j, _) in links {
                assert!((s.rest_anchor(&mesh, j) - mesh.positions[v]).norm() <= s.params.d);
            }
        }
        for (a, links) in s.map.neighbors.iter().enumerate() {
            for &(b, w) in links {
                let back = s.map.neighbors[b as usize].iter().find(|x| x.0 == a as u32).unwrap();
                assert_eq!(back.1, w);
            }
        }
    }

    #[test]
    fn displacement_matrix_is_a_translation() {
        let d = Displacement(Vector::new(1.0, -2.0, 3.0));
        let m = d.as_matrix();
        assert_eq!(m.fixed_view::<3, 1>(0, 3).into_owned(), d.0);
        assert_eq!(m.fixed_view::<3, 3>(0, 0).into_owned(), nalgebra::Matrix3::identity());
    }
}
