use std::collections::BTreeSet;

use lacerate::cut::{cut, CutResult};
use lacerate::geometry::{Plane, Point, Vector};
use lacerate::mesh::{procedural, TriMesh};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_plane(rng: &mut ChaCha8Rng, mesh: &TriMesh) -> Plane {
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

fn check_invariants(mesh: &TriMesh, plane: &Plane, r: &CutResult) {
    let eps = mesh.tolerance().side;
    let total = r.positive.total_area() + r.negative.total_area();
    let rel = (total - mesh.total_area()).abs() / mesh.total_area();
    assert!(rel < 1e-9, "relative area error {rel}");
    for v in r.positive.referenced_vertices() {
        assert!(plane.signed_distance(&r.positive.positions[v as usize]) >= -eps);
    }
    for v in r.negative.referenced_vertices() {
        assert!(plane.signed_distance(&r.negative.positions[v as usize]) <= eps);
    }
    r.positive.check_manifold().unwrap();
    r.negative.check_manifold().unwrap();
    assert_eq!(r.positive.referenced_vertices().count(), r.positive.vertex_count());
    assert_eq!(r.negative.referenced_vertices().count(), r.negative.vertex_count());
    for &(a, b) in &r.seam_pairs {
        assert_eq!(r.positive.positions[a as usize], r.negative.positions[b as usize]);
    }
}

#[test]
fn random_planes_conserve_area() {
    let meshes = [
        procedural::cube(),
        procedural::icosphere(2, 1.0),
        procedural::icosphere(3, 1.0),
        procedural::uv_sphere(69, 37, Vector::new(1.0, 1.3, 0.8)),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for mesh in &meshes {
        for _ in 0..20 {
            let plane = random_plane(&mut rng, mesh);
            let r = cut(mesh, &plane).unwrap();
            check_invariants(mesh, &plane, &r);
        }
    }
}

#[test]
fn recutting_a_piece_keeps_invariants() {
    let mesh = procedural::icosphere(3, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..10 {
        let first = random_plane(&mut rng, &mesh);
        let r = cut(&mesh, &first).unwrap();
        let piece = if r.positive.live_face_count() >= r.negative.live_face_count() { r.positive } else { r.negative };
        let second = random_plane(&mut rng, &piece);
        if let Ok(r2) = cut(&piece, &second) {
            check_invariants(&piece, &second, &r2);
        }
    }
}

/// Counts straddling faces and crossed edges with exact signs, independent
/// of the cut implementation.
fn oracle_counts(mesh: &TriMesh, plane: &Plane) -> (usize, usize) {
    let sign = |v: u32| plane.signed_distance(&mesh.positions[v as usize]).partial_cmp(&0.0).unwrap() as i8;
    let mut faces = 0;
    let mut edges = BTreeSet::new();
    for f in mesh.live_faces() {
        let t = mesh.faces[f as usize];
        let s = t.map(sign);
        if !(s.contains(&1) && s.contains(&-1)) {
            faces += 1;
            continue;
        }
        let on = s.iter().filter(|&&x| x == 0).count();
        faces += if on == 1 { 2 } else { 3 };
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            if sign(a) * sign(b) == -1 {
                edges.insert((a.min(b), a.max(b)));
            }
        }
    }
    (faces, edges.len())
}

#[test]
fn unit_cube_at_x_zero_matches_oracle() {
    let cube = procedural::cube();
    let plane = Plane::new(Vector::x(), 0.0).unwrap();
    let r = cut(&cube, &plane).unwrap();
    let (faces, points) = oracle_counts(&cube, &plane);
    assert_eq!((faces, points), (28, 8));
    assert_eq!(r.intersection_points(), points);
    assert_eq!(r.positive.live_face_count() + r.negative.live_face_count(), faces);
    check_invariants(&cube, &plane, &r);
}

#[test]
fn random_planes_match_oracle_counts() {
    let mesh = procedural::icosphere(2, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let plane = random_plane(&mut rng, &mesh);
        let r = cut(&mesh, &plane).unwrap();
        let (faces, points) = oracle_counts(&mesh, &plane);
        assert_eq!(r.intersection_points(), points);
        assert_eq!(r.positive.live_face_count() + r.negative.live_face_count(), faces);
    }
}

#[test]
fn skin_weights_of_seam_vertices_are_normalized() {
    use lacerate::skinning::Skeleton;
    let mut mesh = procedural::icosphere(2, 1.0);
    let skin = mesh
        .positions
        .iter()
        .map(|p| {
            let w = 0.5 + 0.5 * p.y;
            smallvec::smallvec![(0, 1.0 - w), (1, w)]
        })
        .collect();
    mesh.skin = Some(skin);
    mesh.skeleton = Some(
        Skeleton::new(vec![
            ("root".to_string(), None, nalgebra::Matrix4::identity()),
            ("tip".to_string(), Some(0), nalgebra::Matrix4::new_translation(&Vector::y())),
        ])
        .unwrap(),
    );
    let r = cut(&mesh, &Plane::new(Vector::new(0.2, 1.0, 0.1), 0.05).unwrap()).unwrap();
    for m in [&r.positive, &r.negative] {
        for w in m.skin.as_ref().unwrap() {
            let sum: f64 = w.iter().map(|x| x.1).sum();
            assert!((sum - 1.0).abs() < 1e-6);
        }
    }
}
