//! Axis-aligned face bins used to narrow the tear candidate search.

use smallvec::SmallVec;

use super::{MeshDelta, MeshError, TriMesh};
use crate::geometry::{Aabb, Point, TearBox};

pub const DEFAULT_FACES_PER_SECTION: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct MeshSection {
    pub aabb: Aabb,
    /// Sorted ascending.
    pub face_ids: Vec<u32>,
    /// Sorted ascending.
    pub vertex_ids: Vec<u32>,
}

#[derive(Debug, Clone)]
pub struct Sections {
    sections: Vec<MeshSection>,
    face_sections: Vec<SmallVec<[u32; 4]>>,
    epoch: u64,
    pad: f64,
}

/// Splits the live faces into `ceil(n / target)` bins by recursive median
/// split along the longest axis of the face centroids. A face is then listed
/// in every bin whose box it touches.
pub fn build_sections(mesh: &TriMesh, target_faces_per_section: usize) -> Sections {
    let target = target_faces_per_section.max(1);
    let pad = mesh.tolerance().side;
    let mut faces: Vec<(u32, Point)> = mesh
        .live_faces()
        .map(|f| {
            let [a, b, c] = mesh.face_points(f);
            (f, Point::from((a.coords + b.coords + c.coords) / 3.0))
        })
        .collect();
    let k = faces.len().div_ceil(target).max(1);
    let mut leaves = Vec::with_capacity(k);
    split(&mut faces, k, &mut leaves);

    let mut sections: Vec<MeshSection> = leaves
        .iter()
        .map(|leaf| {
            let mut aabb = Aabb::empty();
            for &f in leaf {
                aabb.merge(&mesh.face_aabb(f));
            }
            MeshSection {
                aabb: aabb.padded(pad),
                face_ids: Vec::new(),
                vertex_ids: Vec::new(),
            }
        })
        .collect();

    let mut face_sections = vec![SmallVec::new(); mesh.face_count()];
    for f in mesh.live_faces() {
        let fa = mesh.face_aabb(f);
        for (s, sec) in sections.iter_mut().enumerate() {
            if sec.aabb.overlaps(&fa) {
                sec.face_ids.push(f);
                face_sections[f as usize].push(s as u32);
            }
        }
    }
    let mut out = Sections {
        sections: std::mem::take(&mut sections),
        face_sections,
        epoch: mesh.epoch(),
        pad,
    };
    for s in 0..out.sections.len() {
        out.refresh_vertices(mesh, s);
    }
    out
}

fn split(faces: &mut [(u32, Point)], k: usize, leaves: &mut Vec<Vec<u32>>) {
    if k <= 1 || faces.len() <= 1 {
        let mut ids: Vec<u32> = faces.iter().map(|f| f.0).collect();
        ids.sort_unstable();
        leaves.push(ids);
        // Keep the leaf count exact even when faces run out.
        for _ in 1..k {
            leaves.push(Vec::new());
        }
        return;
    }
    let axis = Aabb::from_points(faces.iter().map(|f| &f.1)).longest_axis();
    faces.sort_by(|a, b| a.1[axis].total_cmp(&b.1[axis]).then(a.0.cmp(&b.0)));
    let k_left = k / 2;
    let n_left = (faces.len() * k_left + k / 2) / k;
    let (left, right) = faces.split_at_mut(n_left);
    split(left, k_left, leaves);
    split(right, k - k_left, leaves);
}

impl Sections {
    pub fn len(&self) -> usize {
        self.sections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sections.is_empty()
    }

    pub fn sections(&self) -> &[MeshSection] {
        &self.sections
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    /// Sections listing face `f`.
    pub fn sections_of(&self, f: u32) -> &[u32] {
        self.face_sections
            .get(f as usize)
            .map(|s| s.as_slice())
            .unwrap_or(&[])
    }

    /// Every live face of every section whose box may overlap one of
    /// `boxes`, sorted ascending.
    pub fn sections_touching(&self, mesh: &TriMesh, boxes: &[TearBox]) -> Result<Vec<u32>, MeshError> {
        self.check_epoch(mesh)?;
        let eps = mesh.tolerance().side;
        let mut out: Vec<u32> = Vec::new();
        for sec in &self.sections {
            if boxes.iter().any(|b| b.may_overlap_aabb(&sec.aabb, eps)) {
                out.extend(sec.face_ids.iter().copied().filter(|&f| mesh.is_alive(f)));
            }
        }
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    pub fn check_epoch(&self, mesh: &TriMesh) -> Result<(), MeshError> {
        if self.epoch != mesh.epoch() {
            return Err(MeshError::StaleSections {
                sections: self.epoch,
                mesh: mesh.epoch(),
            });
        }
        Ok(())
    }

    /// Brings the sections up to date with `delta`, which must already be
    /// applied to `mesh`. Only sections the delta touches are re-binned.
    pub fn apply_delta(&mut self, mesh: &TriMesh, delta: &MeshDelta) -> Result<(), MeshError> {
        if delta.epoch != self.epoch + 1 || mesh.epoch() != delta.epoch {
            return Err(MeshError::StaleSections {
                sections: self.epoch,
                mesh: mesh.epoch(),
            });
        }
        let mut dirty: Vec<u32> = Vec::new();
        for &f in &delta.removed_faces {
            for &s in &self.face_sections[f as usize] {
                let list = &mut self.sections[s as usize].face_ids;
                if let Ok(pos) = list.binary_search(&f) {
                    list.remove(pos);
                }
                dirty.push(s);
            }
            self.face_sections[f as usize].clear();
        }
        self.face_sections.resize(mesh.face_count(), SmallVec::new());
        for k in 0..delta.added_faces.len() {
            let f = delta.first_face + k as u32;
            if !mesh.is_alive(f) {
                continue;
            }
            let fa = mesh.face_aabb(f);
            let mut hit = false;
            for (s, sec) in self.sections.iter_mut().enumerate() {
                if sec.aabb.overlaps(&fa) {
                    sec.face_ids.push(f);
                    self.face_sections[f as usize].push(s as u32);
                    dirty.push(s as u32);
                    hit = true;
                }
            }
            if !hit {
                // Grow the nearest bin so coverage still holds.
                let c = fa.center();
                let s = self
                    .sections
                    .iter()
                    .enumerate()
                    .min_by(|a, b| {
                        (a.1.aabb.center() - c)
                            .norm_squared()
                            .total_cmp(&(b.1.aabb.center() - c).norm_squared())
                    })
                    .map(|(i, _)| i)
                    .expect("at least one section");
                let sec = &mut self.sections[s];
                sec.aabb.merge(&fa.padded(self.pad));
                sec.face_ids.push(f);
                self.face_sections[f as usize].push(s as u32);
                dirty.push(s as u32);
            }
        }
        dirty.sort_unstable();
        dirty.dedup();
        for s in dirty {
            self.refresh_vertices(mesh, s as usize);
        }
        self.epoch = delta.epoch;
        Ok(())
    }

    fn refresh_vertices(&mut self, mesh: &TriMesh, s: usize) {
        let sec = &mut self.sections[s];
        let mut v: Vec<u32> = sec
            .face_ids
            .iter()
            .flat_map(|&f| mesh.faces[f as usize])
            .collect();
        v.sort_unstable();
        v.dedup();
        sec.vertex_ids = v;
    }
}
