//! Indexed triangle mesh with per-vertex attributes.
//!
//! Faces are never compacted while a session is running: removed faces are
//! tombstoned so face ids stay stable for deltas, sections and the particle
//! map. [`TriMesh::compacted`] drops tombstones and unreferenced vertices.

mod delta;
mod obj;
pub mod procedural;
mod sections;

pub use delta::{MeshDelta, NewVertex};
pub(crate) use delta::parent_skin;
pub use obj::{load_mesh, save_mesh, SavedMesh, Sidecar, SidecarBone, SidecarWeight};
pub use sections::{build_sections, MeshSection, Sections, DEFAULT_FACES_PER_SECTION};

use std::collections::BTreeMap;

use nalgebra::Vector2;
use smallvec::SmallVec;
use thiserror::Error;

use crate::geometry::{triangle_area, Aabb, Point, Tolerance, Vector};
use crate::skinning::{BoneWeights, Skeleton};

pub type Uv = Vector2<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("edge ({0}, {1}) is shared by more than two faces")]
    NonManifold(u32, u32),
    #[error("vertex {vertex}: skin weights sum to {sum}")]
    InvalidWeights { vertex: u32, sum: f64 },
    #[error("face {face} references vertex {vertex} out of range")]
    BadIndex { face: usize, vertex: u32 },
    #[error("sections are at epoch {sections} but the mesh is at epoch {mesh}")]
    StaleSections { sections: u64, mesh: u64 },
    #[error("delta targets epoch {delta} but the mesh is at epoch {mesh}")]
    EpochMismatch { delta: u64, mesh: u64 },
    #[error("invalid sidecar: {0}")]
    Sidecar(String),
}

#[derive(Debug, Clone)]
pub struct TriMesh {
    pub positions: Vec<Point>,
    pub normals: Vec<Vector>,
    pub uvs: Vec<Uv>,
    pub skin: Option<Vec<BoneWeights>>,
    pub skeleton: Option<Skeleton>,
    pub faces: Vec<[u32; 3]>,
    pub face_alive: Vec<bool>,
    epoch: u64,
    tolerance: Tolerance,
    vertex_faces: Vec<SmallVec<[u32; 8]>>,
}

impl PartialEq for TriMesh {
    fn eq(&self, other: &Self) -> bool {
        self.positions == other.positions
            && self.normals == other.normals
            && self.uvs == other.uvs
            && self.skin == other.skin
            && self.faces == other.faces
            && self.face_alive == other.face_alive
    }
}

impl TriMesh {
    /// Builds a mesh from positions and faces; normals are computed and uvs
    /// default to zero.
    pub fn new(positions: Vec<Point>, faces: Vec<[u32; 3]>) -> Result<Self, MeshError> {
        let n = positions.len();
        TriMesh::from_parts(positions, None, vec![Uv::zeros(); n], None, None, faces)
    }

    pub fn from_parts(
        positions: Vec<Point>,
        normals: Option<Vec<Vector>>,
        uvs: Vec<Uv>,
        skin: Option<Vec<BoneWeights>>,
        skeleton: Option<Skeleton>,
        faces: Vec<[u32; 3]>,
    ) -> Result<Self, MeshError> {
        let n = positions.len();
        for (i, f) in faces.iter().enumerate() {
            for &v in f {
                if v as usize >= n {
                    return Err(MeshError::BadIndex { face: i, vertex: v });
                }
            }
        }
        let diag = Aabb::from_points(positions.iter()).diagonal();
        let tolerance = Tolerance::from_diagonal(diag);
        let mut mesh = TriMesh {
            normals: normals.unwrap_or_else(|| vec![Vector::zeros(); n]),
            positions,
            uvs,
            skin,
            skeleton,
            face_alive: vec![true; faces.len()],
            faces,
            epoch: 0,
            tolerance,
            vertex_faces: Vec::new(),
        };
        // Degenerate faces are dropped rather than rejected.
        for f in 0..mesh.faces.len() {
            let [a, b, c] = mesh.faces[f];
            if a == b || b == c || a == c || mesh.face_area(f as u32) <= tolerance.area {
                log::warn!("dropping degenerate face {f}");
                mesh.face_alive[f] = false;
            }
        }
        if mesh.normals.iter().all(|n| n.norm_squared() == 0.0) {
            mesh.recompute_normals();
        }
        mesh.rebuild_incidence();
        mesh.check_manifold()?;
        Ok(mesh)
    }

    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn live_face_count(&self) -> usize {
        self.face_alive.iter().filter(|&&a| a).count()
    }

    pub fn live_faces(&self) -> impl Iterator<Item = u32> + '_ {
        self.face_alive
            .iter()
            .enumerate()
            .filter(|(_, &a)| a)
            .map(|(i, _)| i as u32)
    }

    pub fn is_alive(&self, face: u32) -> bool {
        self.face_alive[face as usize]
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn tolerance(&self) -> Tolerance {
        self.tolerance
    }

    pub fn face_points(&self, face: u32) -> [Point; 3] {
        let [a, b, c] = self.faces[face as usize];
        [
            self.positions[a as usize],
            self.positions[b as usize],
            self.positions[c as usize],
        ]
    }

    pub fn face_area(&self, face: u32) -> f64 {
        let [a, b, c] = self.face_points(face);
        triangle_area(&a, &b, &c)
    }

    pub fn face_aabb(&self, face: u32) -> Aabb {
        Aabb::from_points(self.face_points(face).iter())
    }

    pub fn total_area(&self) -> f64 {
        self.live_faces().map(|f| self.face_area(f)).sum()
    }

    pub fn aabb(&self) -> Aabb {
        let mut b = Aabb::empty();
        for f in self.live_faces() {
            for p in self.face_points(f) {
                b.grow(&p);
            }
        }
        b
    }

    pub fn diagonal(&self) -> f64 {
        self.aabb().diagonal()
    }

    /// Live faces incident to vertex `v`.
    pub fn vertex_faces(&self, v: u32) -> &[u32] {
        &self.vertex_faces[v as usize]
    }

    /// True when `v` is used by at least one live face.
    pub fn is_referenced(&self, v: u32) -> bool {
        !self.vertex_faces[v as usize].is_empty()
    }

    pub fn referenced_vertices(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.positions.len() as u32).filter(|&v| self.is_referenced(v))
    }

    /// Live faces containing both `a` and `b`.
    pub fn edge_faces(&self, a: u32, b: u32) -> SmallVec<[u32; 4]> {
        self.vertex_faces[a as usize]
            .iter()
            .copied()
            .filter(|&f| self.faces[f as usize].contains(&b))
            .collect()
    }

    /// Live triangles as position triples, in face-id order.
    pub fn triangles(&self) -> Vec<[Point; 3]> {
        self.live_faces().map(|f| self.face_points(f)).collect()
    }

    /// Area-weighted vertex normals from the live faces.
    pub fn recompute_normals(&mut self) {
        let mut acc = vec![Vector::zeros(); self.positions.len()];
        for f in self.live_faces().collect::<Vec<_>>() {
            let [a, b, c] = self.faces[f as usize];
            let [pa, pb, pc] = self.face_points(f);
            let n = (pb - pa).cross(&(pc - pa));
            for v in [a, b, c] {
                acc[v as usize] += n;
            }
        }
        self.normals = acc
            .into_iter()
            .map(|n| n.try_normalize(0.0).unwrap_or_else(Vector::z))
            .collect();
    }

    fn rebuild_incidence(&mut self) {
        self.vertex_faces = vec![SmallVec::new(); self.positions.len()];
        for f in 0..self.faces.len() {
            if self.face_alive[f] {
                for &v in &self.faces[f] {
                    self.vertex_faces[v as usize].push(f as u32);
                }
            }
        }
    }

    /// Fails when any edge is shared by more than two live faces.
    pub fn check_manifold(&self) -> Result<(), MeshError> {
        let mut counts: BTreeMap<(u32, u32), u32> = BTreeMap::new();
        for f in self.live_faces() {
            let t = self.faces[f as usize];
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let e = (a.min(b), a.max(b));
                let c = counts.entry(e).or_insert(0);
                *c += 1;
                if *c > 2 {
                    return Err(MeshError::NonManifold(e.0, e.1));
                }
            }
        }
        Ok(())
    }

    /// Edge-manifold check restricted to the edges of `faces`.
    pub fn check_manifold_around(&self, faces: &[u32]) -> Result<(), MeshError> {
        for &f in faces {
            if !self.is_alive(f) {
                continue;
            }
            let t = self.faces[f as usize];
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                if self.edge_faces(a, b).len() > 2 {
                    return Err(MeshError::NonManifold(a.min(b), a.max(b)));
                }
            }
        }
        Ok(())
    }

    /// Applies `delta`, advancing the epoch by one.
    pub fn apply(&mut self, delta: &MeshDelta) -> Result<(), MeshError> {
        if delta.epoch != self.epoch + 1 {
            return Err(MeshError::EpochMismatch {
                delta: delta.epoch,
                mesh: self.epoch,
            });
        }
        if delta.first_vertex as usize != self.positions.len()
            || delta.first_face as usize != self.faces.len()
        {
            return Err(MeshError::EpochMismatch {
                delta: delta.epoch,
                mesh: self.epoch,
            });
        }
        let nv = self.positions.len() + delta.added_vertices.len();
        for (k, f) in delta.added_faces.iter().enumerate() {
            for &v in f {
                if v as usize >= nv {
                    return Err(MeshError::BadIndex {
                        face: self.faces.len() + k,
                        vertex: v,
                    });
                }
            }
        }
        for v in &delta.added_vertices {
            self.positions.push(v.position);
            self.normals.push(v.normal);
            self.uvs.push(v.uv);
            if let Some(skin) = self.skin.as_mut() {
                skin.push(v.skin.clone().unwrap_or_default());
            }
            self.vertex_faces.push(SmallVec::new());
        }
        for &f in &delta.added_faces {
            let id = self.faces.len() as u32;
            self.faces.push(f);
            self.face_alive.push(true);
            for &v in &f {
                self.vertex_faces[v as usize].push(id);
            }
        }
        for &f in &delta.removed_faces {
            self.kill_face(f);
        }
        self.epoch = delta.epoch;
        Ok(())
    }

    /// Undoes the most recently applied `delta`.
    pub fn revert(&mut self, delta: &MeshDelta) {
        debug_assert_eq!(self.epoch, delta.epoch);
        for &f in &delta.removed_faces {
            self.revive_face(f);
        }
        let first_face = delta.first_face as usize;
        for f in (first_face..self.faces.len()).rev() {
            if self.face_alive[f] {
                self.kill_face(f as u32);
            }
        }
        self.faces.truncate(first_face);
        self.face_alive.truncate(first_face);
        let first_vertex = delta.first_vertex as usize;
        self.positions.truncate(first_vertex);
        self.normals.truncate(first_vertex);
        self.uvs.truncate(first_vertex);
        if let Some(skin) = self.skin.as_mut() {
            skin.truncate(first_vertex);
        }
        self.vertex_faces.truncate(first_vertex);
        self.epoch = delta.epoch - 1;
    }

    fn kill_face(&mut self, f: u32) {
        if !self.face_alive[f as usize] {
            return;
        }
        self.face_alive[f as usize] = false;
        for &v in &self.faces[f as usize] {
            let list = &mut self.vertex_faces[v as usize];
            if let Some(pos) = list.iter().position(|&x| x == f) {
                list.remove(pos);
            }
        }
    }

    fn revive_face(&mut self, f: u32) {
        if self.face_alive[f as usize] {
            return;
        }
        self.face_alive[f as usize] = true;
        for &v in &self.faces[f as usize] {
            let list = &mut self.vertex_faces[v as usize];
            let pos = list.partition_point(|&x| x < f);
            list.insert(pos, f);
        }
    }

    /// Drops dead faces and unreferenced vertices. Returns the new mesh and,
    /// for each old vertex, its new index (`u32::MAX` when dropped).
    pub fn compacted(&self) -> (TriMesh, Vec<u32>) {
        let keep: Vec<u32> = self.referenced_vertices().collect();
        self.subset(&self.live_faces().collect::<Vec<_>>(), &keep)
    }

    /// Mesh made of `faces`, re-indexed over `vertices` (sorted ascending).
    pub fn subset(&self, faces: &[u32], vertices: &[u32]) -> (TriMesh, Vec<u32>) {
        let mut remap = vec![u32::MAX; self.positions.len()];
        for (new, &old) in vertices.iter().enumerate() {
            remap[old as usize] = new as u32;
        }
        let pick = |v: &u32| *v as usize;
        let positions = vertices.iter().map(|v| self.positions[pick(v)]).collect::<Vec<_>>();
        let normals = vertices.iter().map(|v| self.normals[pick(v)]).collect::<Vec<_>>();
        let uvs = vertices.iter().map(|v| self.uvs[pick(v)]).collect::<Vec<_>>();
        let skin = self
            .skin
            .as_ref()
            .map(|s| vertices.iter().map(|v| s[pick(v)].clone()).collect::<Vec<_>>());
        let new_faces: Vec<[u32; 3]> = faces
            .iter()
            .map(|&f| {
                let [a, b, c] = self.faces[f as usize];
                [remap[a as usize], remap[b as usize], remap[c as usize]]
            })
            .collect();
        let mut vertex_faces = vec![SmallVec::new(); positions.len()];
        for (i, f) in new_faces.iter().enumerate() {
            for &v in f {
                vertex_faces[v as usize].push(i as u32);
            }
        }
        let mesh = TriMesh {
            positions,
            normals,
            uvs,
            skin,
            skeleton: self.skeleton.clone(),
            face_alive: vec![true; new_faces.len()],
            faces: new_faces,
            epoch: 0,
            tolerance: self.tolerance,
            vertex_faces,
        };
        (mesh, remap)
    }

    /// Overrides the tolerance used by geometric predicates on this mesh.
    pub fn set_tolerance(&mut self, tolerance: Tolerance) {
        self.tolerance = tolerance;
    }

    /// Concatenates two meshes into one with disjoint vertex ranges.
    pub fn merged(a: &TriMesh, b: &TriMesh) -> TriMesh {
        let (a, _) = a.compacted();
        let (b, _) = b.compacted();
        let off = a.positions.len() as u32;
        let mut positions = a.positions.clone();
        positions.extend(b.positions.iter().copied());
        let mut normals = a.normals.clone();
        normals.extend(b.normals.iter().copied());
        let mut uvs = a.uvs.clone();
        uvs.extend(b.uvs.iter().copied());
        let skin = match (&a.skin, &b.skin) {
            (Some(x), Some(y)) => Some(x.iter().chain(y.iter()).cloned().collect()),
            _ => None,
        };
        let mut faces = a.faces.clone();
        faces.extend(b.faces.iter().map(|f| [f[0] + off, f[1] + off, f[2] + off]));
        let mut m = TriMesh {
            positions,
            normals,
            uvs,
            skin,
            skeleton: a.skeleton.clone().or_else(|| b.skeleton.clone()),
            face_alive: vec![true; faces.len()],
            faces,
            epoch: 0,
            tolerance: a.tolerance,
            vertex_faces: Vec::new(),
        };
        m.rebuild_incidence();
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_triangles() -> TriMesh {
        TriMesh::new(
            vec![
                Point::new(0.0, 0.0, 0.0),
                Point::new(1.0, 0.0, 0.0),
                Point::new(1.0, 1.0, 0.0),
                Point::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap()
    }

    #[test]
    fn normals_computed() {
        let m = two_triangles();
        for n in &m.normals {
            assert!((n - Vector::z()).norm() < 1e-12);
        }
        assert!((m.total_area() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn non_manifold_rejected() {
        let r = TriMesh::new(
            vec![
                Point::new(0.0, 0.0, 0.0),
                Point::new(1.0, 0.0, 0.0),
                Point::new(0.0, 1.0, 0.0),
                Point::new(0.0, -1.0, 0.0),
                Point::new(0.0, 0.0, 1.0),
            ],
            vec![[0, 1, 2], [1, 0, 3], [0, 1, 4]],
        );
        assert_eq!(r.unwrap_err(), MeshError::NonManifold(0, 1));
    }

    #[test]
    fn apply_and_revert_round_trip() {
        let mut m = two_triangles();
        let before = m.clone();
        let delta = MeshDelta {
            epoch: 1,
            first_vertex: 4,
            first_face: 2,
            added_vertices: vec![NewVertex::interpolated(&m, &[(0, 0.5), (2, 0.5)])],
            removed_faces: vec![0],
            added_faces: vec![[0, 1, 4], [1, 2, 4]],
        };
        m.apply(&delta).unwrap();
        assert_eq!(m.epoch(), 1);
        assert_eq!(m.live_face_count(), 3);
        assert!((m.total_area() - 1.0).abs() < 1e-15);
        assert_eq!(m.vertex_faces(4), &[2, 3]);
        m.revert(&delta);
        assert_eq!(m, before);
        assert_eq!(m.epoch(), 0);
        assert_eq!(m.vertex_faces(0), before.vertex_faces(0));
    }

    #[test]
    fn stale_delta_rejected() {
        let mut m = two_triangles();
        let d = MeshDelta::empty(&m);
        m.apply(&d).unwrap();
        assert!(matches!(m.apply(&d), Err(MeshError::EpochMismatch { .. })));
    }

    #[test]
    fn compaction_drops_dead_faces() {
        let mut m = two_triangles();
        let mut d = MeshDelta::empty(&m);
        d.removed_faces.push(1);
        m.apply(&d).unwrap();
        let (c, remap) = m.compacted();
        assert_eq!(c.face_count(), 1);
        assert_eq!(c.vertex_count(), 3);
        assert_eq!(remap[3], u32::MAX);
    }
}
