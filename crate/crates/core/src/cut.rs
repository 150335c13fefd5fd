//! Straight plane cuts: every face crossing the plane is split, then the
//! mesh is partitioned into the part on each side.

use std::collections::HashMap;

use thiserror::Error;

use crate::geometry::{GeometryError, Plane, Point, Side};
use crate::mesh::{MeshDelta, MeshError, NewVertex, TriMesh};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CutError {
    #[error("cut plane points are collinear; use a later sample")]
    Collinear,
    /// Nothing lies on one side of the plane. Carries the trivial result:
    /// the whole mesh on the occupied side and an empty mesh on the other.
    #[error("plane does not intersect the mesh")]
    NoIntersection(Box<CutResult>),
    #[error("face {0} still straddles the cut plane")]
    StraddlingFace(u32),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Output of [`cut`].
///
/// Vertex ids of the sub-meshes map back through `positive_source` and
/// `negative_source` to ids of the split mesh: ids below the original
/// vertex count are original vertices, the rest are `split.added_vertices`
/// in order.
#[derive(Debug, Clone, PartialEq)]
pub struct CutResult {
    pub positive: TriMesh,
    pub negative: TriMesh,
    /// `(positive id, negative id)` of every vertex present in both.
    pub seam_pairs: Vec<(u32, u32)>,
    pub positive_source: Vec<u32>,
    pub negative_source: Vec<u32>,
    /// The split step as a delta on the input mesh.
    pub split: MeshDelta,
}

impl CutResult {
    /// Number of points created where edges cross the plane.
    pub fn intersection_points(&self) -> usize {
        self.split.added_vertices.len()
    }
}

/// Plane through the point where the scalpel entered the mesh and the
/// scalpel's tip and end at a later sample. The normal follows the
/// right-hand rule of the argument order.
pub fn cut_plane_from_samples(entry: &Point, tip: &Point, end: &Point) -> Result<Plane, CutError> {
    Plane::through_points(entry, tip, end).map_err(|e| match e {
        GeometryError::Collinear | GeometryError::ZeroNormal => CutError::Collinear,
        other => unreachable!("through_points returned {other}"),
    })
}

/// Splits `mesh` by `plane`. Only live faces take part.
pub fn cut(mesh: &TriMesh, plane: &Plane) -> Result<CutResult, CutError> {
    let eps = mesh.tolerance().side;
    let dist: Vec<f64> = mesh.positions.iter().map(|p| plane.signed_distance(p)).collect();
    let side = |v: u32| Side::of_distance(dist[v as usize], eps);

    let mut delta = MeshDelta::empty(mesh);
    let first = delta.first_vertex;
    let mut on_edge: HashMap<(u32, u32), u32> = HashMap::new();
    let mut crossing = |u: u32, w: u32, delta: &mut MeshDelta| -> u32 {
        let (u, w) = (u.min(w), u.max(w));
        *on_edge.entry((u, w)).or_insert_with(|| {
            let (du, dw) = (dist[u as usize], dist[w as usize]);
            let t = du / (du - dw);
            delta
                .added_vertices
                .push(NewVertex::interpolated(mesh, &[(u, 1.0 - t), (w, t)]));
            first + delta.added_vertices.len() as u32 - 1
        })
    };

    for f in mesh.live_faces() {
        let tri = mesh.faces[f as usize];
        let s = tri.map(side);
        let pos = s.iter().filter(|&&x| x == Side::Positive).count();
        let neg = s.iter().filter(|&&x| x == Side::Negative).count();
        if pos == 0 || neg == 0 {
            continue;
        }
        delta.removed_faces.push(f);
        if pos + neg == 2 {
            // One vertex on the plane: split the opposite edge.
            let k = (0..3).find(|&k| s[k] == Side::On).expect("one vertex is on the plane");
            let [a, b, c] = [tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]];
            let p = crossing(b, c, &mut delta);
            delta.added_faces.extend([[a, b, p], [a, p, c]]);
        } else {
            // The vertex alone on its side leads.
            let k = (0..3)
                .find(|&k| s[k] != s[(k + 1) % 3] && s[k] != s[(k + 2) % 3])
                .expect("one vertex is alone on its side");
            let [a, b, c] = [tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]];
            let p = crossing(a, b, &mut delta);
            let q = crossing(c, a, &mut delta);
            delta.added_faces.push([a, p, q]);
            let position = |v: u32| {
                if v >= first {
                    delta.added_vertices[(v - first) as usize].position
                } else {
                    mesh.positions[v as usize]
                }
            };
            if (position(p) - position(c)).norm() <= (position(b) - position(q)).norm() {
                delta.added_faces.extend([[p, b, c], [p, c, q]]);
            } else {
                delta.added_faces.extend([[p, b, q], [b, c, q]]);
            }
        }
    }

    let mut split = mesh.clone();
    split.apply(&delta)?;
    let split_side = |v: u32| {
        if v >= first {
            Side::On
        } else {
            side(v)
        }
    };
    let (pos_faces, neg_faces) = partition_by(&split, split_side)?;

    let sub = |faces: &[u32]| {
        let mut verts: Vec<u32> = faces.iter().flat_map(|&f| split.faces[f as usize]).collect();
        verts.sort_unstable();
        verts.dedup();
        let (m, _) = split.subset(faces, &verts);
        (m, verts)
    };
    let (positive, positive_source) = sub(&pos_faces);
    let (negative, negative_source) = sub(&neg_faces);

    let mut seam_pairs = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < positive_source.len() && j < negative_source.len() {
        match positive_source[i].cmp(&negative_source[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                seam_pairs.push((i as u32, j as u32));
                i += 1;
                j += 1;
            }
        }
    }

    let result = CutResult {
        positive,
        negative,
        seam_pairs,
        positive_source,
        negative_source,
        split: delta,
    };
    if pos_faces.is_empty() || neg_faces.is_empty() {
        return Err(CutError::NoIntersection(Box::new(result)));
    }
    Ok(result)
}

/// Assigns every live face to the side of its off-plane vertices. Faces
/// lying entirely on the plane go to the positive side.
pub fn partition_faces(mesh: &TriMesh, plane: &Plane) -> Result<(Vec<u32>, Vec<u32>), CutError> {
    let eps = mesh.tolerance().side;
    partition_by(mesh, |v| Side::of_distance(plane.signed_distance(&mesh.positions[v as usize]), eps))
}

fn partition_by(mesh: &TriMesh, side: impl Fn(u32) -> Side) -> Result<(Vec<u32>, Vec<u32>), CutError> {
    let (mut pos, mut neg) = (Vec::new(), Vec::new());
    for f in mesh.live_faces() {
        let s = mesh.faces[f as usize].map(&side);
        let any = |x: Side| s.contains(&x);
        match (any(Side::Positive), any(Side::Negative)) {
            (true, true) => return Err(CutError::StraddlingFace(f)),
            (false, true) => neg.push(f),
            _ => pos.push(f),
        }
    }
    Ok((pos, neg))
}
