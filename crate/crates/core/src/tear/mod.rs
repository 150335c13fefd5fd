//! Progressive tearing: material inside each tear box is clipped away and
//! the surrounding faces are retriangulated.
//!
//! A segment is processed in stages that the harness times separately:
//! [`plan_segment`] computes the first and second retriangulation passes as
//! a [`MeshDelta`] without touching the mesh, [`fill_skin`] interpolates
//! skin weights for the new vertices and [`commit_segment`] applies the
//! delta and refreshes the sections.

mod face;
mod second_pass;
mod stroke;

pub use second_pass::{find_t_junctions, second_pass};
pub use stroke::{sample_stroke, StrokeBuilder, DEFAULT_ANGLE_THRESHOLD_DEG, DEFAULT_DISTANCE_FRACTION};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{triangulate_convex, Aabb, BoxPlane, Point, TearBox};
use crate::mesh::{MeshDelta, MeshError, NewVertex, Sections, TriMesh};
use face::{clip_face, FaceOutcome, Source};

/// Snap radius, in units of the side tolerance, for crossings on an
/// original edge.
pub const SNAP_FACTOR: f64 = 8.0;

fn edge_key(a: u32, b: u32) -> (u32, u32) {
    (a.min(b), a.max(b))
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TearError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("tear would leave edge ({0}, {1}) with more than two faces")]
    NonManifoldResult(u32, u32),
}

/// Vertex created on a tear-box boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RimVertex {
    pub vertex: u32,
    /// Index into [`TearState::boxes_so_far`].
    pub box_index: usize,
    /// Boundary plane it lies on; `None` for the tear plane of a zero-width
    /// box.
    pub plane: Option<BoxPlane>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TearOptions {
    /// Fan the per-face clipping out over worker threads.
    pub parallel: bool,
    /// Drop faces that can no longer be reached from the search list.
    pub prune: bool,
}

/// Per-stroke tear bookkeeping.
#[derive(Debug, Clone, Default)]
pub struct TearState {
    pub boxes_so_far: Vec<TearBox>,
    /// Live faces still worth testing against upcoming boxes, sorted.
    pub search_list: Vec<u32>,
    /// Rim vertices of every segment so far.
    pub rim_vertices: Vec<RimVertex>,
    /// Maximum distance the next box can extend past the current one.
    pub reach: f64,
}

impl TearState {
    pub fn new(reach: f64) -> Self {
        TearState {
            reach,
            ..Default::default()
        }
    }
}

/// Result of [`plan_segment`].
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentPlan {
    pub delta: MeshDelta,
    pub box_index: usize,
    /// New vertices created on box planes during this segment.
    pub rim: Vec<RimVertex>,
    /// Every vertex of a removed or added face, sorted.
    pub touched_vertices: Vec<u32>,
}

/// Keeps `face` in the search list unless its bounding box is strictly
/// outside `tear_box` grown by `reach`.
pub fn prune_search_list(mesh: &TriMesh, face: u32, tear_box: &TearBox, reach: f64) -> bool {
    let aabb = mesh.face_aabb(face);
    tear_box.may_overlap_aabb(&aabb, reach + mesh.tolerance().side)
}

/// Computes the delta that tears `tear_box` out of `mesh` (both
/// retriangulation passes). New vertices carry no skin yet. The box is
/// appended to `state.boxes_so_far`.
pub fn plan_segment(
    mesh: &TriMesh,
    sections: &Sections,
    state: &mut TearState,
    tear_box: &TearBox,
    options: TearOptions,
) -> Result<SegmentPlan, TearError> {
    let tol = mesh.tolerance();
    let mut candidates = sections.sections_touching(mesh, std::slice::from_ref(tear_box))?;
    let box_index = state.boxes_so_far.len();
    state.boxes_so_far.push(*tear_box);
    candidates.extend(
        state
            .search_list
            .iter()
            .copied()
            .filter(|&f| (f as usize) < mesh.face_count() && mesh.is_alive(f)),
    );
    candidates.sort_unstable();
    candidates.dedup();

    let work = |&f: &u32| -> Option<(u32, FaceOutcome)> {
        let aabb: Aabb = mesh.face_aabb(f);
        if !tear_box.may_overlap_aabb(&aabb, tol.side) {
            return None;
        }
        match clip_face(&mesh.face_points(f), tear_box, tol) {
            FaceOutcome::Untouched => None,
            out => Some((f, out)),
        }
    };
    let results: Vec<(u32, FaceOutcome)> = if options.parallel {
        candidates.par_iter().filter_map(work).collect()
    } else {
        candidates.iter().filter_map(work).collect()
    };

    let mut delta = MeshDelta::empty(mesh);
    let mut rim = Vec::new();
    let mut new_positions: Vec<Point> = Vec::new();
    let mut new_edges: Vec<Option<(u32, u32)>> = Vec::new();
    let snap = SNAP_FACTOR * tol.side;
    // Corners of every face being rewritten; a point can land on one that
    // is not a corner of its own face.
    let mut nearby_old: Vec<u32> = results.iter().flat_map(|(f, _)| mesh.faces[*f as usize]).collect();
    nearby_old.sort_unstable();
    nearby_old.dedup();
    let first = delta.first_vertex;
    for (f, outcome) in &results {
        delta.removed_faces.push(*f);
        let FaceOutcome::Replaced(pieces) = outcome else { continue };
        let ids = mesh.faces[*f as usize];
        let tri = mesh.face_points(*f);
        for piece in pieces {
            let mut poly: Vec<u32> = Vec::with_capacity(piece.len());
            for pv in piece {
                let id = match pv.source {
                    Source::Corner(i) => ids[i as usize],
                    Source::New(plane) => {
                        let parents: Vec<(u32, f64)> = (0..3)
                            .filter(|&k| pv.bary[k] != 0.0)
                            .map(|k| (ids[k], pv.bary[k]))
                            .collect();
                        let nv = NewVertex::geometric(mesh, &parents);
                        let p = nv.position;
                        // Points on an original edge snap to that edge's
                        // endpoints and to earlier points on the same edge
                        // over a wider radius; both faces sharing the edge
                        // resolve the same way.
                        let edge = (parents.len() == 2).then(|| edge_key(parents[0].0, parents[1].0));
                        let near_corner = (0..3).find(|&k| {
                            let r = if edge.is_some_and(|e| e.0 == ids[k] || e.1 == ids[k]) { snap } else { tol.side };
                            (tri[k] - p).norm() <= r
                        });
                        let near_new = || {
                            (0..new_positions.len()).find(|&k| {
                                let r = if edge.is_some() && new_edges[k] == edge { snap } else { tol.side };
                                (new_positions[k] - p).norm() <= r
                            })
                        };
                        if let Some(k) = near_corner {
                            ids[k]
                        } else if let Some(k) = near_new() {
                            first + k as u32
                        } else if let Some(&v) = nearby_old
                            .iter()
                            .find(|&&v| (mesh.positions[v as usize] - p).norm() <= tol.side)
                        {
                            v
                        } else {
                            let id = first + new_positions.len() as u32;
                            new_positions.push(p);
                            new_edges.push(edge);
                            delta.added_vertices.push(nv);
                            rim.push(RimVertex {
                                vertex: id,
                                box_index,
                                plane,
                            });
                            id
                        }
                    }
                };
                if poly.last() != Some(&id) {
                    poly.push(id);
                }
            }
            while poly.len() > 1 && poly.first() == poly.last() {
                poly.pop();
            }
            if poly.len() < 3 {
                continue;
            }
            let position = |v: u32| {
                if v >= first {
                    new_positions[(v - first) as usize]
                } else {
                    mesh.positions[v as usize]
                }
            };
            delta
                .added_faces
                .extend(triangulate_convex(&poly, position, tol));
        }
    }

    let delta = second_pass(mesh, delta);

    let mut touched: Vec<u32> = delta
        .removed_faces
        .iter()
        .flat_map(|&f| mesh.faces[f as usize])
        .chain(delta.added_faces.iter().flatten().copied())
        .collect();
    touched.sort_unstable();
    touched.dedup();

    // Search list for the next segment.
    let mut next: Vec<u32> = candidates
        .into_iter()
        .filter(|f| delta.removed_faces.binary_search(f).is_err())
        .chain((0..delta.added_faces.len() as u32).map(|k| delta.first_face + k))
        .collect();
    if options.prune {
        let first_face = delta.first_face;
        next.retain(|&f| {
            let aabb = if f >= first_face {
                let [a, b, c] = delta.added_faces[(f - first_face) as usize];
                let p = |v: u32| {
                    if v >= first {
                        delta.added_vertices[(v - first) as usize].position
                    } else {
                        mesh.positions[v as usize]
                    }
                };
                Aabb::from_points([p(a), p(b), p(c)].iter())
            } else {
                mesh.face_aabb(f)
            };
            tear_box.may_overlap_aabb(&aabb, state.reach + tol.side)
        });
    }
    next.sort_unstable();
    state.search_list = next;
    state.rim_vertices.extend(rim.iter().copied());

    Ok(SegmentPlan {
        delta,
        box_index,
        rim,
        touched_vertices: touched,
    })
}

/// Interpolates skin weights for the delta's new vertices from their
/// parents. No-op on unskinned meshes.
pub fn fill_skin(mesh: &TriMesh, delta: &mut MeshDelta) {
    if mesh.skin.is_none() {
        return;
    }
    for v in &mut delta.added_vertices {
        v.skin = crate::mesh::parent_skin(mesh, &v.parents);
    }
}

/// Applies the planned delta and updates the sections. On a non-manifold
/// result the mesh is restored and nothing changes.
pub fn commit_segment(mesh: &mut TriMesh, sections: &mut Sections, delta: &MeshDelta) -> Result<(), TearError> {
    mesh.apply(delta)?;
    let added: Vec<u32> = (0..delta.added_faces.len() as u32)
        .map(|k| delta.first_face + k)
        .collect();
    if let Err(MeshError::NonManifold(a, b)) = mesh.check_manifold_around(&added) {
        mesh.revert(delta);
        return Err(TearError::NonManifoldResult(a, b));
    }
    sections.apply_delta(mesh, delta)?;
    Ok(())
}

/// Plans, skins and commits one segment.
pub fn tear_segment(
    mesh: &mut TriMesh,
    sections: &mut Sections,
    state: &mut TearState,
    tear_box: &TearBox,
    options: TearOptions,
) -> Result<SegmentPlan, TearError> {
    let search_list = state.search_list.clone();
    let mut plan = plan_segment(mesh, sections, state, tear_box, options)?;
    fill_skin(mesh, &mut plan.delta);
    if let Err(e) = commit_segment(mesh, sections, &plan.delta) {
        // Roll the state back too so the stroke can continue.
        state.boxes_so_far.pop();
        let n = state.rim_vertices.len() - plan.rim.len();
        state.rim_vertices.truncate(n);
        state.search_list = search_list;
        return Err(e);
    }
    Ok(plan)
}
