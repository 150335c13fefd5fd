//! Procedural test and benchmark meshes.

use std::f64::consts::PI;

use super::{TriMesh, Uv};
use crate::geometry::{Point, ScalpelSample, Vector};

/// Icosahedron subdivided `level` times and projected onto a sphere.
/// Face count is `20 · 4^level`.
pub fn icosphere(level: u32, radius: f64) -> TriMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut pos: Vec<Vector> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vector::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut mid = std::collections::HashMap::new();
        let mut midpoint = |a: u32, b: u32, pos: &mut Vec<Vector>| -> u32 {
            let key = (a.min(b), a.max(b));
            *mid.entry(key).or_insert_with(|| {
                pos.push((pos[a as usize] + pos[b as usize]).normalize());
                pos.len() as u32 - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = midpoint(a, b, &mut pos);
            let bc = midpoint(b, c, &mut pos);
            let ca = midpoint(c, a, &mut pos);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    let uvs = pos.iter().map(spherical_uv).collect();
    let normals = pos.clone();
    let positions = pos.iter().map(|p| Point::from(p * radius)).collect();
    TriMesh::from_parts(positions, Some(normals), uvs, None, None, faces).expect("icosphere is manifold")
}

fn spherical_uv(n: &Vector) -> Uv {
    Uv::new(
        0.5 + n.z.atan2(n.x) / (2.0 * PI),
        0.5 - n.y.clamp(-1.0, 1.0).asin() / PI,
    )
}

/// Latitude/longitude ellipsoid with semi-axes `radii`: `segments` around,
/// `stacks` from pole to pole. Has `segments · (stacks − 1) + 2` vertices
/// and `2 · segments · (stacks − 1)` faces.
pub fn uv_sphere(segments: u32, stacks: u32, radii: Vector) -> TriMesh {
    assert!(segments >= 3 && stacks >= 2);
    let mut positions = vec![Point::new(0.0, radii.y, 0.0)];
    let mut uvs = vec![Uv::new(0.5, 0.0)];
    for i in 1..stacks {
        let theta = PI * i as f64 / stacks as f64;
        for j in 0..segments {
            let phi = 2.0 * PI * j as f64 / segments as f64;
            positions.push(Point::new(
                radii.x * theta.sin() * phi.cos(),
                radii.y * theta.cos(),
                radii.z * theta.sin() * phi.sin(),
            ));
            uvs.push(Uv::new(j as f64 / segments as f64, i as f64 / stacks as f64));
        }
    }
    positions.push(Point::new(0.0, -radii.y, 0.0));
    uvs.push(Uv::new(0.5, 1.0));
    let bottom = positions.len() as u32 - 1;
    let ring = |i: u32, j: u32| 1 + (i - 1) * segments + (j % segments);
    let mut faces = Vec::new();
    for j in 0..segments {
        faces.push([0, ring(1, j + 1), ring(1, j)]);
    }
    for i in 1..stacks - 1 {
        for j in 0..segments {
            let (a, b) = (ring(i, j), ring(i, j + 1));
            let (c, d) = (ring(i + 1, j), ring(i + 1, j + 1));
            faces.push([a, b, d]);
            faces.push([a, d, c]);
        }
    }
    for j in 0..segments {
        faces.push([bottom, ring(stacks - 1, j), ring(stacks - 1, j + 1)]);
    }
    TriMesh::from_parts(positions, None, uvs, None, None, faces).expect("uv sphere is manifold")
}

/// Axis-aligned unit cube centred at the origin, 12 triangles.
pub fn cube() -> TriMesh {
    let mut positions = Vec::new();
    for i in 0..8u32 {
        positions.push(Point::new(
            if i & 1 == 0 { -0.5 } else { 0.5 },
            if i & 2 == 0 { -0.5 } else { 0.5 },
            if i & 4 == 0 { -0.5 } else { 0.5 },
        ));
    }
    let quads = [
        [0, 2, 3, 1], // z-
        [4, 5, 7, 6], // z+
        [0, 1, 5, 4], // y-
        [2, 6, 7, 3], // y+
        [0, 4, 6, 2], // x-
        [1, 3, 7, 5], // x+
    ];
    let faces = quads
        .iter()
        .flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]])
        .collect();
    TriMesh::new(positions, faces).expect("cube is manifold")
}

/// Flat `nx × ny` grid of squares in the z = 0 plane, two triangles per
/// cell, starting at the origin.
pub fn grid(nx: u32, ny: u32, spacing: f64) -> TriMesh {
    let mut positions = Vec::new();
    let mut uvs = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            positions.push(Point::new(i as f64 * spacing, j as f64 * spacing, 0.0));
            uvs.push(Uv::new(i as f64 / nx as f64, j as f64 / ny as f64));
        }
    }
    let id = |i: u32, j: u32| j * (nx + 1) + i;
    let mut faces = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    TriMesh::from_parts(positions, None, uvs, None, None, faces).expect("grid is manifold")
}

/// Scalpel samples dragged along the great arc from direction `from` to
/// direction `to` over an ellipsoid with semi-axes `radii` centred at
/// `center`. The tip runs at `inset` times the surface radius and the
/// handle end at `outset` times, so the blade crosses the surface.
pub fn surface_stroke(
    center: Point,
    radii: Vector,
    from: Vector,
    to: Vector,
    segments: usize,
    inset: f64,
    outset: f64,
) -> Vec<ScalpelSample> {
    let (a, b) = (from.normalize(), to.normalize());
    let angle = a.dot(&b).clamp(-1.0, 1.0).acos();
    let axis = a.cross(&b).try_normalize(1e-12).unwrap_or_else(|| a.cross(&Vector::x()).normalize());
    (0..=segments)
        .map(|k| {
            let t = angle * k as f64 / segments.max(1) as f64;
            let rot = nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_unchecked(axis), t);
            let d = rot * a;
            let s = radii.component_mul(&d);
            ScalpelSample::new(k as f64 * 10.0, center + s * inset, center + s * outset)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        assert_eq!(icosphere(2, 1.0).face_count(), 320);
        assert_eq!(icosphere(3, 1.0).face_count(), 1280);
        let s = uv_sphere(101, 26, Vector::new(1.0, 1.0, 1.0));
        assert_eq!((s.vertex_count(), s.face_count()), (2527, 5050));
        assert_eq!(uv_sphere(69, 37, Vector::repeat(1.0)).face_count(), 4968);
        assert_eq!(uv_sphere(32, 13, Vector::repeat(1.0)).face_count(), 768);
        assert_eq!(uv_sphere(191, 49, Vector::repeat(1.0)).face_count(), 18336);
        assert_eq!(cube().face_count(), 12);
        assert_eq!(grid(10, 10, 1.0).face_count(), 200);
    }

    #[test]
    fn normals_point_outward() {
        for m in [icosphere(1, 2.0), uv_sphere(12, 8, Vector::new(1.0, 2.0, 1.0)), cube()] {
            for f in m.live_faces() {
                let [a, b, c] = m.face_points(f);
                let n = (b - a).cross(&(c - a));
                let centroid = (a.coords + b.coords + c.coords) / 3.0;
                assert!(n.dot(&centroid) > 0.0);
            }
        }
    }
}
