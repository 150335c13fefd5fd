//! Structured-text form of a particle system.

use serde::{Deserialize, Serialize};

use super::{Links, Particle, ParticleError, ParticleMap, ParticleParams, ParticleSystem};
use crate::geometry::{Point, Vector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileParams {
    pub d: f64,
    pub delta: f64,
    pub poisson_r: f64,
    pub seed: u64,
    pub k: f64,
    pub c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steepness: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_slit: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileParticle {
    pub id: u32,
    pub anchor_vertex: u32,
    pub anchor_pos: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub slit: bool,
}

/// Serialized particle map: `[j, i, w]` influence links and `[j, k, W]`
/// neighbour links, each neighbour pair listed in both directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleFile {
    pub params: FileParams,
    pub particles: Vec<FileParticle>,
    pub influence: Vec<(u32, u32, f64)>,
    pub neighbors: Vec<(u32, u32, f64)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub severed: Vec<(u32, u32)>,
}

impl ParticleSystem {
    pub fn to_file(&self) -> ParticleFile {
        let p = &self.params;
        let mut influence = Vec::with_capacity(self.map.link_count());
        for (i, links) in self.map.influence.iter().enumerate() {
            influence.extend(links.iter().map(|&(j, w)| (j, i as u32, w)));
        }
        influence.sort_by_key(|x| (x.0, x.1));
        let neighbors = self
            .map
            .neighbors
            .iter()
            .enumerate()
            .flat_map(|(j, links)| links.iter().map(move |&(k, w)| (j as u32, k, w)))
            .collect();
        ParticleFile {
            params: FileParams {
                d: p.d,
                delta: self.map.delta,
                poisson_r: p.poisson_r,
                seed: p.seed,
                k: p.k,
                c: p.c,
                steepness: Some(p.steepness),
                d_slit: Some(p.d_slit),
                mass: Some(p.mass),
            },
            particles: self
                .particles
                .iter()
                .map(|q| FileParticle {
                    id: q.id,
                    anchor_vertex: q.anchor_vertex,
                    anchor_pos: q.anchor_pos.coords.into(),
                    offset: (q.offset != Vector::zeros()).then(|| q.offset.into()),
                    slit: q.slit,
                })
                .collect(),
            influence,
            neighbors,
            severed: self.map.severed.iter().copied().collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("particle file serializes")
    }

    /// Rebuilds a system at rest for a mesh with `vertex_count` vertices.
    pub fn from_file(file: &ParticleFile, vertex_count: usize) -> Result<Self, ParticleError> {
        let f = &file.params;
        let defaults = ParticleParams::from_poisson_r(f.poisson_r, f.seed);
        let params = ParticleParams {
            d: f.d,
            delta: f.delta,
            k: f.k,
            c: f.c,
            steepness: f.steepness.unwrap_or(defaults.steepness),
            d_slit: f.d_slit.unwrap_or(defaults.d_slit),
            mass: f.mass.unwrap_or(defaults.mass),
            ..defaults
        };
        params.validate()?;
        let n = file.particles.len();
        let bad = |what: &str| ParticleError::Format(what.to_string());
        let mut particles = Vec::with_capacity(n);
        for (k, q) in file.particles.iter().enumerate() {
            if q.id as usize != k {
                return Err(bad("particle ids must be 0, 1, 2, ... in order"));
            }
            if q.anchor_vertex as usize >= vertex_count {
                return Err(bad("anchor vertex out of range"));
            }
            let mut p = Particle::at_rest(q.id, q.anchor_vertex, Point::from(q.anchor_pos), &params);
            p.offset = q.offset.map(Vector::from).unwrap_or_else(Vector::zeros);
            p.slit = q.slit;
            particles.push(p);
        }
        let mut map = ParticleMap {
            delta: f.delta,
            influence: vec![Links::new(); vertex_count],
            neighbors: vec![Links::new(); n],
            severed: file.severed.iter().copied().collect(),
        };
        for &(j, i, w) in &file.influence {
            if j as usize >= n || i as usize >= vertex_count {
                return Err(bad("influence link out of range"));
            }
            super::insert_link(&mut map.influence[i as usize], j, w);
        }
        for &(j, k, w) in &file.neighbors {
            if j as usize >= n || k as usize >= n {
                return Err(bad("neighbour link out of range"));
            }
            super::insert_link(&mut map.neighbors[j as usize], k, w);
        }
        Ok(ParticleSystem { params, particles, map })
    }

    pub fn from_json(text: &str, vertex_count: usize) -> Result<Self, ParticleError> {
        let file: ParticleFile = serde_json::from_str(text).map_err(|e| ParticleError::Format(e.to_string()))?;
        Self::from_file(&file, vertex_count)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::procedural;

    #[test]
    fn json_round_trip() {
        let mesh = procedural::icosphere(2, 1.0);
        let s = ParticleSystem::generate(&mesh, ParticleParams::for_mesh(&mesh, 9)).unwrap();
        let text = s.to_json();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        for key in ["params", "particles", "influence", "neighbors"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["influence"][0].as_array().unwrap().len(), 3);
        let back = ParticleSystem::from_json(&text, mesh.vertex_count()).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn rejects_out_of_range() {
        let mesh = procedural::cube();
        let s = ParticleSystem::generate(&mesh, ParticleParams::from_poisson_r(0.5, 0)).unwrap();
        assert!(matches!(ParticleSystem::from_json(&s.to_json(), 3), Err(ParticleError::Format(_))));
        assert!(matches!(ParticleSystem::from_json("{}", 8), Err(ParticleError::Format(_))));
    }
}
