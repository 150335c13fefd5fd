//! Removing hanging vertices left on neighbouring edges by the first pass.

use std::collections::HashMap;

use crate::geometry::{point_segment_distance, triangulate_convex, Aabb, Point};
use crate::mesh::{MeshDelta, TriMesh};

/// Splits every face that would have one of the delta's new vertices in the
/// interior of an edge. `delta` must be unapplied; the result is a single
/// delta with the removed and added faces merged and `removed_faces`
/// sorted.
pub fn second_pass(mesh: &TriMesh, mut delta: MeshDelta) -> MeshDelta {
    let eps = mesh.tolerance().side;
    let first = delta.first_vertex;
    let n_new = delta.added_vertices.len() as u32;
    delta.removed_faces.sort_unstable();
    if n_new == 0 {
        return delta;
    }
    let position = |v: u32| -> Point {
        if v >= first {
            delta.added_vertices[(v - first) as usize].position
        } else {
            mesh.positions[v as usize]
        }
    };

    // Only vertices the new faces actually use can hang on an edge.
    let mut used = vec![false; n_new as usize];
    for f in &delta.added_faces {
        for &v in f {
            if v >= first {
                used[(v - first) as usize] = true;
            }
        }
    }
    let hangers: Vec<(u32, Point)> = (0..n_new)
        .filter(|&k| used[k as usize])
        .map(|k| (first + k, position(first + k)))
        .collect();
    if hangers.is_empty() {
        return delta;
    }
    let hanger_box = Aabb::from_points(hangers.iter().map(|h| &h.1)).padded(eps);

    let find = |face: [u32; 3]| -> Option<Vec<u32>> {
        let pts = face.map(position);
        if !Aabb::from_points(pts.iter()).overlaps(&hanger_box) {
            return None;
        }
        let mut poly = Vec::with_capacity(6);
        let mut any = false;
        for k in 0..3 {
            let (a, b) = (face[k], face[(k + 1) % 3]);
            poly.push(a);
            let edge_box = Aabb::from_points([pts[k], pts[(k + 1) % 3]].iter()).padded(eps);
            let mut on_edge: Vec<(f64, u32)> = hangers
                .iter()
                .filter(|(id, p)| {
                    *id != a
                        && *id != b
                        && edge_box.overlaps(&Aabb::from_points([*p].iter()))
                })
                .filter_map(|(id, p)| {
                    let (d, t) = point_segment_distance(p, &pts[k], &pts[(k + 1) % 3]);
                    let interior = (p - pts[k]).norm() > eps && (p - pts[(k + 1) % 3]).norm() > eps;
                    (d <= eps && interior).then_some((t, *id))
                })
                .collect();
            if !on_edge.is_empty() {
                any = true;
                on_edge.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
                poly.extend(on_edge.into_iter().map(|e| e.1));
            }
        }
        any.then_some(poly)
    };

    let tol = mesh.tolerance();
    let mut added: Vec<Option<[u32; 3]>> = delta.added_faces.iter().copied().map(Some).collect();
    let mut extra: Vec<[u32; 3]> = Vec::new();
    for slot in added.iter_mut() {
        let face = slot.expect("set above");
        if let Some(poly) = find(face) {
            *slot = None;
            extra.extend(triangulate_convex(&poly, position, tol));
        }
    }

    let mut neighbours: Vec<u32> = delta
        .removed_faces
        .iter()
        .flat_map(|&f| mesh.faces[f as usize])
        .flat_map(|v| mesh.vertex_faces(v).iter().copied())
        .filter(|f| delta.removed_faces.binary_search(f).is_err())
        .collect();
    neighbours.sort_unstable();
    neighbours.dedup();
    let mut removed_more = Vec::new();
    for f in neighbours {
        if let Some(poly) = find(mesh.faces[f as usize]) {
            removed_more.push(f);
            extra.extend(triangulate_convex(&poly, position, tol));
        }
    }

    delta.added_faces = added.into_iter().flatten().chain(extra).collect();
    delta.removed_faces.extend(removed_more);
    delta.removed_faces.sort_unstable();
    delta
}

/// Exhaustive scan for vertices lying in the interior of a live edge.
/// Returns `(vertex, face)` pairs.
pub fn find_t_junctions(mesh: &TriMesh, eps: f64) -> Vec<(u32, u32)> {
    let verts: Vec<u32> = mesh.referenced_vertices().collect();
    if verts.is_empty() {
        return Vec::new();
    }
    let bounds = mesh.aabb();
    let cell = (bounds.diagonal() / 64.0).max(eps * 4.0);
    let key = |p: &Point| {
        (
            ((p.x - bounds.min.x) / cell).floor() as i64,
            ((p.y - bounds.min.y) / cell).floor() as i64,
            ((p.z - bounds.min.z) / cell).floor() as i64,
        )
    };
    let mut grid: HashMap<(i64, i64, i64), Vec<u32>> = HashMap::new();
    for &v in &verts {
        grid.entry(key(&mesh.positions[v as usize])).or_default().push(v);
    }
    let mut out = Vec::new();
    for f in mesh.live_faces() {
        let t = mesh.faces[f as usize];
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            let (pa, pb) = (mesh.positions[a as usize], mesh.positions[b as usize]);
            let bb = Aabb::from_points([pa, pb].iter()).padded(eps);
            let (lo, hi) = (key(&bb.min), key(&bb.max));
            for i in lo.0..=hi.0 {
                for j in lo.1..=hi.1 {
                    for l in lo.2..=hi.2 {
                        let Some(list) = grid.get(&(i, j, l)) else { continue };
                        for &v in list {
                            if t.contains(&v) {
                                continue;
                            }
                            let p = mesh.positions[v as usize];
                            let (d, _) = point_segment_distance(&p, &pa, &pb);
                            if d <= eps && (p - pa).norm() > eps && (p - pb).norm() > eps {
                                out.push((v, f));
                            }
                        }
                    }
                }
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::NewVertex;

    /// Two triangles sharing the edge 1-2.
    fn strip() -> TriMesh {
        TriMesh::new(
            vec![
                Point::new(0.0, 0.0, 0.0),
                Point::new(1.0, 0.0, 0.0),
                Point::new(1.0, 1.0, 0.0),
                Point::new(2.0, 0.5, 0.0),
            ],
            vec![[0, 1, 2], [1, 3, 2]],
        )
        .unwrap()
    }

    fn split_first(mesh: &TriMesh, ts: &[f64]) -> MeshDelta {
        // Replace face 0 by a fan through points on edge 1-2.
        let mut d = MeshDelta::empty(mesh);
        d.removed_faces.push(0);
        let mut ring = vec![1u32];
        for (k, &t) in ts.iter().enumerate() {
            d.added_vertices.push(NewVertex::geometric(mesh, &[(1, 1.0 - t), (2, t)]));
            ring.push(4 + k as u32);
        }
        ring.push(2);
        for w in ring.windows(2) {
            d.added_faces.push([0, w[0], w[1]]);
        }
        d
    }

    #[test]
    fn single_hanger_splits_neighbour_in_two() {
        let m = strip();
        let d = second_pass(&m, split_first(&m, &[0.5]));
        assert_eq!(d.removed_faces, vec![0, 1]);
        assert_eq!(d.added_faces.len(), 4);
        let mut after = m.clone();
        after.apply(&d).unwrap();
        assert!(find_t_junctions(&after, 1e-9).is_empty());
        assert!((after.total_area() - m.total_area()).abs() < 1e-15);
    }

    #[test]
    fn two_hangers_give_three_faces_in_order() {
        let m = strip();
        let d = second_pass(&m, split_first(&m, &[0.3, 0.7]));
        let neighbour: Vec<[u32; 3]> = d.added_faces[3..].to_vec();
        assert_eq!(neighbour.len(), 3);
        // every neighbour face uses vertex 3 and two consecutive points of 1, (0.3), (0.7), 2
        let along = [1u32, 4, 5, 2];
        for w in along.windows(2) {
            assert!(neighbour.iter().any(|f| f.contains(&3) && f.contains(&w[0]) && f.contains(&w[1])));
        }
        let mut after = m.clone();
        after.apply(&d).unwrap();
        assert!(find_t_junctions(&after, 1e-9).is_empty());
    }

    #[test]
    fn no_hangers_no_change() {
        let m = strip();
        let mut d = MeshDelta::empty(&m);
        d.removed_faces.push(0);
        assert_eq!(second_pass(&m, d.clone()), d);
    }
}
