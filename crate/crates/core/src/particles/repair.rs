//! Keeping the particle map consistent with tears and cuts.

use std::collections::{BTreeSet, HashMap};

use super::{normalize, pair, Links, Particle, ParticleMap, ParticleSystem};
use crate::cut::CutResult;
use crate::geometry::{Plane, Point, Side, TearBox};
use crate::mesh::TriMesh;
use crate::tear::{SegmentPlan, TearState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RepairMode {
    /// Checks old links against the newest box only, and lets a particle
    /// skip a box when the box's rim vertex closest to its anchor is not
    /// linked to it.
    Optimized,
    /// Checks every link against every box after every segment.
    Exhaustive,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RepairReport {
    /// Links added for vertices created by the tear.
    pub assigned: usize,
    pub influence_removed: usize,
    pub neighbors_removed: usize,
    /// Orphaned vertices relinked to a nearby particle.
    pub reassigned: usize,
    /// Orphaned vertices left without particles.
    pub pinned: usize,
    /// `(particle, box)` checks skipped by the closest-rim shortcut.
    pub skipped: usize,
}

/// A tear repair in progress, split into the phases that are timed
/// separately.
#[derive(Debug)]
pub struct TearRepair {
    new_vertices: Vec<u32>,
    changed: BTreeSet<u32>,
    report: RepairReport,
}

/// Vertices created by a segment that are still referenced.
fn created(mesh: &TriMesh, plan: &SegmentPlan) -> Vec<u32> {
    let first = plan.delta.first_vertex;
    (first..first + plan.delta.added_vertices.len() as u32)
        .filter(|&v| mesh.is_referenced(v))
        .collect()
}

impl ParticleSystem {
    /// Links the vertices the committed segment created to every particle
    /// within reach, as at generation.
    pub fn begin_tear_repair(&mut self, mesh: &TriMesh, plan: &SegmentPlan) -> TearRepair {
        self.map.resize(mesh.vertex_count(), self.particles.len());
        let new_vertices = created(mesh, plan);
        let grid = self.anchor_grid(mesh);
        let mut report = RepairReport::default();
        for &v in &new_vertices {
            self.assign_vertex(mesh, &grid, v);
            report.assigned += self.map.influence[v as usize].len();
        }
        TearRepair {
            changed: new_vertices.iter().copied().collect(),
            new_vertices,
            report,
        }
    }

    /// Full repair after `plan` was committed to `mesh`.
    pub fn repair_after_tear(
        &mut self,
        mesh: &TriMesh,
        state: &TearState,
        plan: &SegmentPlan,
        mode: RepairMode,
    ) -> RepairReport {
        let mut r = self.begin_tear_repair(mesh, plan);
        r.disconnect(self, mesh, state, plan, mode);
        r.finish(self, mesh, state)
    }

    /// Is the link from `v` to particle `j` cut by any of `boxes`?
    fn separated(&self, mesh: &TriMesh, boxes: &[TearBox], j: u32, v: &Point) -> bool {
        let a = self.rest_anchor(mesh, j);
        let eps = mesh.tolerance().side;
        boxes.iter().any(|b| b.separates(&a, v, eps))
    }

    /// Nearest particle within twice the influence radius whose link to
    /// `v` crosses no tear.
    fn nearest_reachable(&self, mesh: &TriMesh, boxes: &[TearBox], v: u32) -> Option<u32> {
        let p = mesh.positions[v as usize];
        let reach = 2.0 * self.params.d;
        self.particles
            .iter()
            .map(|q| ((self.rest_anchor(mesh, q.id) - p).norm(), q.id))
            .filter(|&(r, _)| r <= reach)
            .filter(|&(_, j)| !self.separated(mesh, boxes, j, &p))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .map(|(_, j)| j)
    }

    /// Renormalizes `changed` vertices and relinks or pins the orphans.
    fn settle(&mut self, mesh: &TriMesh, boxes: &[TearBox], changed: &BTreeSet<u32>, report: &mut RepairReport) {
        for &v in changed {
            if !mesh.is_referenced(v) {
                continue;
            }
            if self.map.influence[v as usize].is_empty() {
                match self.nearest_reachable(mesh, boxes, v) {
                    Some(j) => {
                        self.map.influence[v as usize].push((j, 1.0));
                        report.reassigned += 1;
                    }
                    None => report.pinned += 1,
                }
            }
            normalize(&mut self.map.influence[v as usize]);
        }
    }
}

impl TearRepair {
    /// Removes neighbour links whose anchor segment passes through a tear
    /// box and influence links that cross a tear plane inside its box.
    pub fn disconnect(
        &mut self,
        system: &mut ParticleSystem,
        mesh: &TriMesh,
        state: &TearState,
        plan: &SegmentPlan,
        mode: RepairMode,
    ) {
        let eps = mesh.tolerance().side;
        let boxes = &state.boxes_so_far;
        let current = plan.box_index;
        let exhaustive = mode == RepairMode::Exhaustive;

        // Neighbour links.
        let neighbor_boxes = if exhaustive { &boxes[..] } else { &boxes[current..=current] };
        let mut cut_pairs = Vec::new();
        for (a, links) in system.map.neighbors.iter().enumerate() {
            let pa = system.rest_anchor(mesh, a as u32);
            for &(b, _) in links {
                if (a as u32) < b {
                    let pb = system.rest_anchor(mesh, b);
                    if neighbor_boxes.iter().any(|bx| bx.segment_intersects(&pa, &pb, eps)) {
                        cut_pairs.push((a as u32, b));
                    }
                }
            }
        }
        for &(a, b) in &cut_pairs {
            system.map.neighbors[a as usize].retain(|x| x.0 != b);
            system.map.neighbors[b as usize].retain(|x| x.0 != a);
            system.map.severed.insert(pair(a, b));
        }
        self.report.neighbors_removed += cut_pairs.len();

        // Influence links: decide on the current state, then remove.
        let rims = rims_by_box(mesh, state);
        let mut skip_cache: HashMap<(u32, usize), bool> = HashMap::new();
        let mut removals: Vec<(u32, u32)> = Vec::new();
        let mut check = |v: u32, box_range: std::ops::Range<usize>, removals: &mut Vec<(u32, u32)>, report: &mut RepairReport| {
            let p = mesh.positions[v as usize];
            for &(j, _) in &system.map.influence[v as usize] {
                let a = system.rest_anchor(mesh, j);
                let cut = box_range.clone().any(|b| {
                    if !exhaustive {
                        let skip = *skip_cache
                            .entry((j, b))
                            .or_insert_with(|| rim_skip(system, mesh, &rims[b], j));
                        if skip {
                            report.skipped += 1;
                            return false;
                        }
                    }
                    boxes[b].separates(&a, &p, eps)
                });
                if cut {
                    removals.push((v, j));
                }
            }
        };
        if exhaustive {
            for v in 0..system.map.influence.len() as u32 {
                check(v, 0..boxes.len(), &mut removals, &mut self.report);
            }
        } else {
            let is_new: BTreeSet<u32> = self.new_vertices.iter().copied().collect();
            for v in 0..system.map.influence.len() as u32 {
                let range = if is_new.contains(&v) { 0..boxes.len() } else { current..current + 1 };
                check(v, range, &mut removals, &mut self.report);
            }
        }
        for &(v, j) in &removals {
            system.map.influence[v as usize].retain(|x| x.0 != j);
            self.changed.insert(v);
        }
        self.report.influence_removed += removals.len();

        // Vertices the tear discarded keep no links.
        let dead: Vec<u32> = if exhaustive {
            (0..system.map.influence.len() as u32).collect()
        } else {
            plan.touched_vertices.clone()
        };
        for v in dead {
            if !mesh.is_referenced(v) {
                system.map.influence[v as usize].clear();
            }
        }
    }

    /// Renormalizes the vertices whose links changed and relinks orphans.
    pub fn finish(mut self, system: &mut ParticleSystem, mesh: &TriMesh, state: &TearState) -> RepairReport {
        system.settle(mesh, &state.boxes_so_far, &self.changed, &mut self.report);
        self.report
    }
}

/// Rim vertices of each box, referenced or not.
fn rims_by_box(mesh: &TriMesh, state: &TearState) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new(); state.boxes_so_far.len()];
    for r in &state.rim_vertices {
        if (r.vertex as usize) < mesh.vertex_count() {
            out[r.box_index].push(r.vertex);
        }
    }
    out
}

/// Closest-rim shortcut: particle `j` may skip a box when the box's rim
/// vertex nearest its anchor is not affected by it. A rim vertex counts as
/// affected when linked to `j` or within `j`'s radius, so a link some other
/// tear already removed does not hide the box.
fn rim_skip(system: &ParticleSystem, mesh: &TriMesh, rim: &[u32], j: u32) -> bool {
    let a = system.rest_anchor(mesh, j);
    let nearest = rim
        .iter()
        .map(|&v| ((mesh.positions[v as usize] - a).norm(), v))
        .min_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    let Some((r, v)) = nearest else {
        return false;
    };
    let linked = system.map.influence[v as usize].iter().any(|x| x.0 == j);
    !(linked || r <= system.particles[j as usize].radius)
}

impl ParticleSystem {
    /// Splits the system along a cut. Each particle goes to the side its
    /// anchor lies on (anchors on the plane go to the positive side) and
    /// keeps only links within that side. Seam vertices are linked as at
    /// generation. Particles whose anchor vertex is not part of a piece
    /// are dropped.
    pub fn repair_after_cut(&self, mesh: &TriMesh, result: &CutResult, plane: &Plane) -> (ParticleSystem, ParticleSystem) {
        let eps = mesh.tolerance().side;
        let side = |p: &Point| match Side::of_distance(plane.signed_distance(p), eps) {
            Side::Negative => Side::Negative,
            _ => Side::Positive,
        };
        let piece = |sub: &TriMesh, source: &[u32], which: Side| {
            let n_orig = mesh.vertex_count() as u32;
            let mut new_of_source: HashMap<u32, u32> = HashMap::with_capacity(source.len());
            for (n, &s) in source.iter().enumerate() {
                new_of_source.insert(s, n as u32);
            }
            let mut new_id = vec![u32::MAX; self.particles.len()];
            let mut particles = Vec::new();
            let mut kept = Vec::new();
            for p in &self.particles {
                let Some(&anchor) = new_of_source.get(&p.anchor_vertex) else {
                    continue;
                };
                if side(&mesh.positions[p.anchor_vertex as usize]) != which {
                    continue;
                }
                new_id[p.id as usize] = particles.len() as u32;
                kept.push(p.id as usize);
                particles.push(Particle {
                    id: particles.len() as u32,
                    anchor_vertex: anchor,
                    ..p.clone()
                });
            }
            let remap = |links: &Links| -> Links {
                links
                    .iter()
                    .filter(|x| new_id[x.0 as usize] != u32::MAX)
                    .map(|&(j, w)| (new_id[j as usize], w))
                    .collect()
            };
            let neighbors = kept.iter().map(|&j| remap(&self.map.neighbors[j])).collect();
            let severed = self
                .map
                .severed
                .iter()
                .filter(|&&(a, b)| new_id[a as usize] != u32::MAX && new_id[b as usize] != u32::MAX)
                .map(|&(a, b)| pair(new_id[a as usize], new_id[b as usize]))
                .collect();
            let mut out = ParticleSystem {
                params: self.params,
                particles,
                map: ParticleMap {
                    delta: self.map.delta,
                    influence: vec![Links::new(); sub.vertex_count()],
                    neighbors,
                    severed,
                },
            };
            let grid = out.anchor_grid(sub);
            let mut report = RepairReport::default();
            let mut all = BTreeSet::new();
            for (n, &s) in source.iter().enumerate() {
                if s < n_orig {
                    out.map.influence[n] = remap(&self.map.influence[s as usize]);
                } else {
                    out.assign_vertex(sub, &grid, n as u32);
                }
                all.insert(n as u32);
            }
            out.settle(sub, &[], &all, &mut report);
            out
        };
        (
            piece(&result.positive, &result.positive_source, Side::Positive),
            piece(&result.negative, &result.negative_source, Side::Negative),
        )
    }
}

impl ParticleSystem {
    /// Joins the systems of two meshes that were concatenated with
    /// [`TriMesh::merged`]; `offset` is the vertex count of the first mesh.
    pub fn merged(a: &ParticleSystem, b: &ParticleSystem, offset: u32) -> ParticleSystem {
        let shift = a.particles.len() as u32;
        let mut out = a.clone();
        out.map.influence.resize_with(offset as usize, Links::new);
        for p in &b.particles {
            out.particles.push(Particle {
                id: p.id + shift,
                anchor_vertex: p.anchor_vertex + offset,
                ..p.clone()
            });
        }
        let moved = |l: &Links| -> Links { l.iter().map(|&(j, w)| (j + shift, w)).collect() };
        out.map.influence.extend(b.map.influence.iter().map(moved));
        out.map.neighbors.extend(b.map.neighbors.iter().map(moved));
        out.map.severed.extend(b.map.severed.iter().map(|&(x, y)| (x + shift, y + shift)));
        out
    }
}
