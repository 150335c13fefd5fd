//! Helpers and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use lacerate::geometry::{Plane, Point, ScalpelSample, TearBox, Vector};
use lacerate::mesh::TriMesh;
use lacerate::particles::ParticleSystem;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// A wandering stroke over the unit sphere, blade crossing the surface.
pub fn random_stroke(rng: &mut ChaCha8Rng, segments: usize, step: f64) -> Vec<ScalpelSample> {
    let mut d = Vector::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)).normalize();
    let helper = if d.x.abs() < 0.9 { Vector::x() } else { Vector::y() };
    let mut heading = d.cross(&helper).normalize();
    let mut out = Vec::new();
    for k in 0..=segments {
        out.push(ScalpelSample::new(k as f64 * 11.0, Point::from(d * 0.9), Point::from(d * 1.3)));
        let turn: f64 = rng.gen_range(-0.6..0.6);
        let side = d.cross(&heading);
        heading = (heading * turn.cos() + side * turn.sin()).normalize();
        d = (d + heading * step).normalize();
        heading = (heading - d * heading.dot(&d)).normalize();
    }
    out
}

/// A plane through a random point of the central half of the bounding box.
pub fn random_plane(rng: &mut ChaCha8Rng, mesh: &TriMesh) -> Plane {
    let bounds = mesh.aabb();
    let half = (bounds.max - bounds.min) * 0.25;
    let c = bounds.center();
    let p = Point::new(
        c.x + rng.gen_range(-half.x..=half.x),
        c.y + rng.gen_range(-half.y..=half.y),
        c.z + rng.gen_range(-half.z..=half.z),
    );
    let n = Vector::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    Plane::from_point_normal(&p, n).unwrap()
}

/// Every (vertex, edge) pair where a referenced vertex lies strictly inside
/// a live edge within `eps`, by scanning all pairs.
pub fn brute_t_junctions(mesh: &TriMesh, eps: f64) -> Vec<(u32, (u32, u32))> {
    let mut edges = std::collections::BTreeSet::new();
    for f in mesh.live_faces() {
        let t = mesh.faces[f as usize];
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            edges.insert((a.min(b), a.max(b)));
        }
    }
    let vertices: Vec<u32> = mesh.referenced_vertices().collect();
    let mut out = Vec::new();
    for &(a, b) in &edges {
        let (pa, pb) = (mesh.positions[a as usize], mesh.positions[b as usize]);
        let ab = pb - pa;
        let len2 = ab.norm_squared();
        for &v in &vertices {
            if v == a || v == b {
                continue;
            }
            let p = mesh.positions[v as usize];
            let t = (p - pa).dot(&ab) / len2;
            let len = len2.sqrt();
            if t * len <= eps || (1.0 - t) * len <= eps {
                continue;
            }
            if (pa + ab * t - p).norm() <= eps {
                out.push((v, (a, b)));
            }
        }
    }
    out
}

/// Links whose anchor-to-vertex segment crosses a tear plane inside its box.
pub fn straddling_links(mesh: &TriMesh, s: &ParticleSystem, boxes: &[TearBox]) -> usize {
    let eps = mesh.tolerance().side;
    let mut n = 0;
    for v in mesh.referenced_vertices() {
        let p = mesh.positions[v as usize];
        for &(j, _) in &s.map.influence[v as usize] {
            let a = mesh.positions[s.particles[j as usize].anchor_vertex as usize];
            n += boxes.iter().filter(|b| b.separates(&a, &p, eps)).count();
        }
    }
    n
}

/// Largest deviation from 1 of any referenced vertex's skin weight sum.
pub fn skin_sum_error(mesh: &TriMesh) -> f64 {
    let Some(skin) = &mesh.skin else {
        return 0.0;
    };
    mesh.referenced_vertices()
        .map(|v| (skin[v as usize].iter().map(|w| w.1).sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max)
}

/// Largest deviation from 1 of any linked vertex's influence weight sum.
pub fn influence_sum_error(s: &ParticleSystem) -> f64 {
    s.map
        .influence
        .iter()
        .filter(|l| !l.is_empty())
        .map(|l| (l.iter().map(|w| w.1).sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max)
}
