use lacerate::geometry::{build_tear_boxes, oracle::oracle_clip_area, Point, ScalpelSample, TearBox, Vector};
use lacerate::mesh::{build_sections, procedural, MeshDelta, TriMesh};
use lacerate::tear::{find_t_junctions, tear_segment, TearOptions, TearState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_stroke(rng: &mut ChaCha8Rng, segments: usize, step: f64) -> Vec<ScalpelSample> {
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

fn tear_all(mesh: &mut TriMesh, boxes: &[TearBox], options: TearOptions) -> Vec<MeshDelta> {
    let mut sections = build_sections(mesh, 64);
    let mut state = TearState::new(0.5);
    boxes
        .iter()
        .map(|b| tear_segment(mesh, &mut sections, &mut state, b, options).unwrap().delta)
        .collect()
}

#[test]
fn area_matches_oracle_and_no_t_junctions() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let original = procedural::icosphere(3, 1.0);
        let width = 0.05 * original.diagonal();
        let stroke = random_stroke(&mut rng, 3, 0.25);
        let boxes = build_tear_boxes(&stroke, width).unwrap();
        let mut mesh = original.clone();
        tear_all(&mut mesh, &boxes, TearOptions::default());
        let removed = oracle_clip_area(&original.triangles(), &boxes);
        assert!(removed > 0.0);
        let expected = original.total_area() - removed;
        let rel = (mesh.total_area() - expected).abs() / original.total_area();
        assert!(rel < 1e-6, "relative area error {rel}");
        assert!(find_t_junctions(&mesh, mesh.tolerance().side).is_empty());
        mesh.check_manifold().unwrap();
    }
}

#[test]
fn zero_width_conserves_area() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..5 {
        let original = procedural::icosphere(3, 1.0);
        let boxes = build_tear_boxes(&random_stroke(&mut rng, 3, 0.25), 0.0).unwrap();
        let mut mesh = original.clone();
        let deltas = tear_all(&mut mesh, &boxes, TearOptions::default());
        assert!(deltas.iter().any(|d| !d.added_faces.is_empty()));
        let rel = (mesh.total_area() - original.total_area()).abs() / original.total_area();
        assert!(rel < 1e-9, "{rel}");
        assert!(find_t_junctions(&mesh, mesh.tolerance().side).is_empty());
    }
}

#[test]
fn pruning_and_parallel_do_not_change_result() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..10 {
        let stroke = random_stroke(&mut rng, 4, 0.2);
        let original = procedural::icosphere(3, 1.0);
        let boxes = build_tear_boxes(&stroke, 0.1).unwrap();
        let mut a = original.clone();
        let da = tear_all(&mut a, &boxes, TearOptions { parallel: false, prune: false });
        let mut b = original.clone();
        let db = tear_all(&mut b, &boxes, TearOptions { parallel: true, prune: true });
        assert_eq!(da, db);
        assert_eq!(a, b);
    }
}

#[test]
fn faces_away_from_the_tear_are_untouched() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let original = procedural::icosphere(3, 1.0);
    let boxes = build_tear_boxes(&random_stroke(&mut rng, 3, 0.25), 0.1).unwrap();
    let mut mesh = original.clone();
    let deltas = tear_all(&mut mesh, &boxes, TearOptions::default());
    let eps = original.tolerance().side;
    let removed: std::collections::BTreeSet<u32> = deltas.iter().flat_map(|d| d.removed_faces.iter().copied()).collect();
    for f in original.live_faces() {
        let pts = original.face_points(f);
        let near_box = boxes.iter().any(|b| {
            let aabb = lacerate::geometry::Aabb::from_points(pts.iter());
            b.may_overlap_aabb(&aabb, eps)
        });
        if !near_box && removed.contains(&f) {
            // Only neighbours split at a hanging vertex may change.
            let corners = original.faces[f as usize];
            assert!(deltas.iter().any(|d| d.added_vertices.iter().any(|v| {
                v.parents.iter().all(|(p, _)| corners.contains(p))
            })));
        }
        if !removed.contains(&f) {
            assert!(mesh.is_alive(f));
            assert_eq!(mesh.faces[f as usize], original.faces[f as usize]);
            for v in original.faces[f as usize] {
                assert_eq!(mesh.positions[v as usize], original.positions[v as usize]);
            }
        }
    }
}

#[test]
fn single_triangle_inside_and_disjoint_box() {
    let tri = TriMesh::new(
        vec![Point::new(0.0, -0.01, 0.0), Point::new(0.2, -0.01, 0.0), Point::new(0.1, 0.01, 0.0)],
        vec![[0, 1, 2]],
    )
    .unwrap();
    let slab = |y: f64| {
        build_tear_boxes(
            &[
                ScalpelSample::new(0.0, Point::new(-1.0, y, -1.0), Point::new(-1.0, y, 1.0)),
                ScalpelSample::new(1.0, Point::new(1.0, y, -1.0), Point::new(1.0, y, 1.0)),
            ],
            0.1,
        )
        .unwrap()
    };
    let mut m = tri.clone();
    let d = tear_all(&mut m, &slab(5.0), TearOptions::default());
    assert!(d[0].is_empty());
    let mut m = tri.clone();
    let d = tear_all(&mut m, &slab(0.0), TearOptions::default());
    assert_eq!(d[0].removed_faces, vec![0]);
    assert!(d[0].added_faces.is_empty());
}

#[test]
fn rejected_segments_leave_mesh_unchanged_and_rest_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for it in 0..40 {
        let original = procedural::uv_sphere(101, 26, Vector::repeat(1.0));
        let width = [0.005, 0.02, 0.05, 0.1][it % 4];
        let boxes = build_tear_boxes(&random_stroke(&mut rng, 10, 0.05), width).unwrap();
        let mut mesh = original.clone();
        let mut sections = build_sections(&mesh, 64);
        let mut state = TearState::new(0.5);
        let mut committed = Vec::new();
        for b in &boxes {
            let before = mesh.clone();
            match tear_segment(&mut mesh, &mut sections, &mut state, b, TearOptions::default()) {
                Ok(_) => committed.push(*b),
                Err(_) => {
                    assert_eq!(mesh, before);
                    assert_eq!(state.boxes_so_far, committed);
                }
            }
        }
        mesh.check_manifold().unwrap();
        let expected = original.total_area() - oracle_clip_area(&original.triangles(), &committed);
        let rel = (mesh.total_area() - expected).abs() / original.total_area();
        assert!(rel < 1e-6, "iteration {it}: relative area error {rel}");
    }
}
