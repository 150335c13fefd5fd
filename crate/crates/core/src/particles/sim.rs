//! Spring integration, vertex deformation and neighbour propagation.

use rayon::prelude::*;

use super::{ParticleError, ParticleSystem};
use crate::geometry::{Point, Vector};
use crate::mesh::TriMesh;
use crate::skinning::{lbs_with, SkinError};

/// Frame time of a 90 Hz display.
pub const DEFAULT_DT: f64 = 1.0 / 90.0;

impl ParticleSystem {
    /// One semi-implicit Euler step. `forces` are external forces on
    /// particles, summed when a particle appears more than once.
    pub fn step(&mut self, forces: &[(u32, Vector)], dt: f64) {
        let mut f = vec![Vector::zeros(); self.particles.len()];
        for &(j, force) in forces {
            f[j as usize] += force;
        }
        let mass = self.params.mass;
        for (p, force) in self.particles.iter_mut().zip(f) {
            let target = p.anchor_pos + p.offset;
            let accel = force / mass - (p.center - target) * p.spring_k - p.velocity * p.damping;
            p.velocity += accel * dt;
            p.center += p.velocity * dt;
        }
    }

    /// Adds `dv` to a particle's velocity.
    pub fn impulse(&mut self, particle: u32, dv: Vector) {
        self.particles[particle as usize].velocity += dv;
    }

    /// Current translation of every particle.
    pub fn displacements(&self) -> Vec<Vector> {
        self.particles.iter().map(|p| p.displacement().0).collect()
    }

    /// Vertex positions with every vertex moved by the weighted sum of its
    /// particles' translations. `base` holds the undeformed (possibly
    /// skinned) positions; unlinked vertices stay put.
    pub fn deform(&self, base: &[Point]) -> Vec<Point> {
        let d = self.displacements();
        let influence = &self.map.influence;
        base.par_iter()
            .enumerate()
            .map(|(i, p)| {
                let Some(links) = influence.get(i) else {
                    return *p;
                };
                let mut t = Vector::zeros();
                for &(j, w) in links {
                    t += d[j as usize] * w;
                }
                p + t
            })
            .collect()
    }

    /// Translations induced by directly moving the particles in `moved`:
    /// a moved particle keeps its own translation, any other particle gets
    /// the neighbour-weighted sum over its moved neighbours.
    pub fn propagate(&self, moved: &[(u32, Vector)]) -> Vec<Vector> {
        let n = self.particles.len();
        let mut direct: Vec<Option<Vector>> = vec![None; n];
        for &(k, t) in moved {
            direct[k as usize] = Some(t);
        }
        (0..n)
            .map(|j| {
                direct[j].unwrap_or_else(|| {
                    let mut t = Vector::zeros();
                    for &(k, w) in &self.map.neighbors[j] {
                        if let Some(tk) = direct[k as usize] {
                            t += tk * w;
                        }
                    }
                    t
                })
            })
            .collect()
    }

    /// Moves particles to their propagated translations and stops them.
    /// The springs pull them back on subsequent steps.
    pub fn drag(&mut self, moved: &[(u32, Vector)]) {
        let t = self.propagate(moved);
        for (p, t) in self.particles.iter_mut().zip(t) {
            if t != Vector::zeros() {
                p.center = p.anchor_pos + t;
                p.velocity = Vector::zeros();
            }
        }
    }

    /// Poses the anchors with the mesh's current skeleton pose and relinks
    /// neighbours on the posed anchors. Particle centers move with their
    /// anchors, so displacements are preserved.
    pub fn update_skinned_anchors(&mut self, mesh: &TriMesh) -> Result<(), ParticleError> {
        let (Some(skin), Some(skeleton)) = (&mesh.skin, &mesh.skeleton) else {
            return Err(SkinError::NoSkin.into());
        };
        let matrices = skeleton.skin_matrices();
        let posed: Vec<Point> = self
            .particles
            .iter()
            .map(|p| {
                let v = p.anchor_vertex as usize;
                lbs_with(&mesh.positions[v], &skin[v], &matrices)
            })
            .collect();
        for (p, a) in self.particles.iter_mut().zip(&posed) {
            p.center += a - p.anchor_pos;
            p.anchor_pos = *a;
        }
        self.relink_with(|p| posed[p.id as usize]);
        Ok(())
    }

    /// Largest distance of any particle from its spring target.
    pub fn max_offset(&self) -> f64 {
        self.particles
            .iter()
            .map(|p| (p.center - p.anchor_pos - p.offset).norm())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::particles::{Links, ParticleMap, ParticleParams};

    fn system(anchors: &[Point], delta: f64) -> ParticleSystem {
        let params = ParticleParams {
            delta,
            ..ParticleParams::from_poisson_r(0.1, 0)
        };
        let particles = anchors
            .iter()
            .enumerate()
            .map(|(j, a)| super::super::Particle::at_rest(j as u32, j as u32, *a, &params))
            .collect();
        let mut s = ParticleSystem {
            params,
            particles,
            map: ParticleMap {
                delta,
                neighbors: vec![Links::new(); anchors.len()],
                ..Default::default()
            },
        };
        s.relink_neighbors(anchors);
        s
    }

    #[test]
    fn eq1_single_and_pair() {
        let mut s = system(&[Point::origin(), Point::new(1.0, 0.0, 0.0)], 0.5);
        s.map.influence = vec![smallvec::smallvec![(0, 1.0)], smallvec::smallvec![(0, 0.5), (1, 0.5)]];
        s.particles[0].center += Vector::x();
        s.particles[1].center += Vector::new(0.0, 3.0, 0.0);
        let base = [Point::new(5.0, 5.0, 5.0), Point::new(-1.0, 0.0, 2.0)];
        let out = s.deform(&base);
        assert_eq!(out[0], Point::new(6.0, 5.0, 5.0));
        assert_eq!(out[1], Point::new(-0.5, 1.5, 2.0));
    }

    #[test]
    fn eq2_propagation() {
        let s = system(&[Point::origin(), Point::new(0.5, 0.0, 0.0), Point::new(9.0, 0.0, 0.0)], 1.0);
        let t = s.propagate(&[(0, Vector::new(2.0, 0.0, 0.0))]);
        assert_eq!(t[0], Vector::new(2.0, 0.0, 0.0));
        assert_eq!(t[1], Vector::new(1.0, 0.0, 0.0));
        assert_eq!(t[2], Vector::zeros());

        let s = system(&[Point::origin(), Point::new(0.5, 0.0, 0.0), Point::new(-0.75, 0.0, 0.0)], 1.0);
        let t = s.propagate(&[(1, Vector::new(1.0, 0.0, 0.0)), (2, Vector::new(0.0, 4.0, 0.0))]);
        assert_eq!(t[0], Vector::new(0.5, 1.0, 0.0));
    }

    #[test]
    fn rest_is_a_fixed_point() {
        let mut s = system(&[Point::origin(), Point::new(0.1, 0.0, 0.0)], 0.5);
        s.map.influence = vec![smallvec::smallvec![(0, 0.3), (1, 0.7)]];
        let base = [Point::new(0.05, 0.01, 0.0)];
        for _ in 0..1000 {
            s.step(&[], DEFAULT_DT);
        }
        assert_eq!(s.deform(&base), base.to_vec());
    }

    #[test]
    fn impulse_decays() {
        let mut s = system(&[Point::origin()], 0.5);
        s.impulse(0, Vector::x());
        let mut peak: f64 = 0.0;
        let mut last = f64::INFINITY;
        for _ in 0..400 {
            s.step(&[], DEFAULT_DT);
            last = s.max_offset();
            peak = peak.max(last);
        }
        assert!(last < 0.01 * peak, "{last} vs {peak}");
    }

    #[test]
    fn no_skin_is_an_error() {
        let mesh = crate::mesh::procedural::cube();
        let mut s = ParticleSystem::generate(&mesh, ParticleParams::from_poisson_r(0.5, 0)).unwrap();
        assert_eq!(s.update_skinned_anchors(&mesh), Err(ParticleError::Skin(SkinError::NoSkin)));
    }
}
