use std::collections::BTreeSet;
use std::path::Path;
use std::process::{Command, Output};

use lacerate::geometry::Plane;
use lacerate::mesh::load_mesh;
use serde_json::Value;

fn lacerate(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lacerate"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited")
}

fn write_straight_stroke(path: &Path, mode: &str, segments: usize) {
    let samples: Vec<Value> = (0..=segments)
        .map(|k| {
            let y = -0.5 + k as f64 / segments as f64;
            serde_json::json!({"t_ms": k as f64 * 10.0, "tip": [0.8, y, 0.1], "end": [1.4, y, 0.1]})
        })
        .collect();
    let t = serde_json::json!({"mode": mode, "width": 0.05, "samples": samples});
    std::fs::write(path, t.to_string()).unwrap();
}

#[test]
fn tear_reports_one_entry_per_segment() {
    let dir = tempfile::tempdir().unwrap();
    write_straight_stroke(&dir.path().join("s.json"), "tear", 3);
    let o = lacerate(
        &["tear", "--mesh", "builtin:icosphere", "--trajectory", "s.json", "--out", "t.obj", "--report", "r.json"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r: Value = serde_json::from_slice(&std::fs::read(dir.path().join("r.json")).unwrap()).unwrap();
    let segments = r["segments"].as_array().unwrap();
    assert_eq!(segments.len(), 3);
    let mut sum = 0.0;
    for s in segments {
        let phases: f64 = ["perform_tear", "update_particles", "disconnect_particles", "calculate_boneweights", "update_mesh"]
            .iter()
            .map(|k| s[k].as_f64().unwrap())
            .sum();
        assert!((phases - s["total_ms"].as_f64().unwrap()).abs() <= 0.01);
        sum += phases;
    }
    assert!((sum - r["total_ms"].as_f64().unwrap()).abs() <= 0.01);
    assert!(r["mesh"]["particles"].as_u64().unwrap() > 0);
    let mesh = load_mesh(&std::fs::read(dir.path().join("t.obj")).unwrap(), None).unwrap();
    mesh.check_manifold().unwrap();
    assert!(dir.path().join("t.obj.skin.json").exists());
}

#[test]
fn tear_is_deterministic_and_replayable() {
    let dir = tempfile::tempdir().unwrap();
    let run = |tag: &str| {
        let o = lacerate(
            &[
                "tear",
                "--mesh",
                "builtin:sphere-small",
                "--trajectory",
                "builtin:arc:12",
                "--width",
                "0.05",
                "--seed",
                "3",
                "--out",
                &format!("{tag}.obj"),
                "--particles-out",
                &format!("{tag}.particles.json"),
                "--report",
                &format!("{tag}.report.json"),
            ],
            dir.path(),
        );
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    };
    run("a");
    run("b");
    let read = |name: &str| std::fs::read(dir.path().join(name)).unwrap();
    for suffix in [".obj", ".obj.skin.json", ".obj.deltas.jsonl", ".particles.json"] {
        assert_eq!(read(&format!("a{suffix}")), read(&format!("b{suffix}")), "{suffix}");
    }
    assert!(!read("a.obj.deltas.jsonl").is_empty());

    let o = lacerate(
        &["replay", "--mesh", "builtin:sphere-small", "--deltas", "a.obj.deltas.jsonl", "--out", "r.obj"],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    assert_eq!(read("r.obj"), read("a.obj"));
    assert_eq!(read("r.obj.skin.json"), read("a.obj.skin.json"));
}

#[test]
fn cut_cube_counts_match_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let o = lacerate(
        &["cut", "--mesh", "builtin:cube", "--plane", "1,0,0,0", "--out-prefix", "c", "--report", "r.json"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r: Value = serde_json::from_slice(&std::fs::read(dir.path().join("r.json")).unwrap()).unwrap();

    // Distinct edges with endpoints strictly on opposite sides.
    let cube = lacerate::mesh::procedural::cube();
    let plane = Plane::new(lacerate::geometry::Vector::x(), 0.0).unwrap();
    let mut crossed = BTreeSet::new();
    for f in cube.live_faces() {
        let t = cube.faces[f as usize];
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            let da = plane.signed_distance(&cube.positions[a as usize]);
            let db = plane.signed_distance(&cube.positions[b as usize]);
            if da * db < 0.0 {
                crossed.insert((a.min(b), a.max(b)));
            }
        }
    }
    assert_eq!(r["intersection_points"].as_u64().unwrap() as usize, crossed.len());
    for side in ["c.pos.obj", "c.neg.obj"] {
        let m = load_mesh(&std::fs::read(dir.path().join(side)).unwrap(), None).unwrap();
        assert!(m.live_face_count() > 0);
        m.check_manifold().unwrap();
    }
}


#[test]
fn cut_missing_the_mesh_warns_and_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let o = lacerate(&["cut", "--mesh", "builtin:cube", "--plane", "1,0,0,-5", "--out-prefix", "m"], dir.path());
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("misses"));
    let neg = std::fs::read(dir.path().join("m.neg.obj")).unwrap();
    let pos = std::fs::read(dir.path().join("m.pos.obj")).unwrap();
    assert!(!neg.is_empty());
    assert!(load_mesh(&pos, None).map_or(true, |m| m.live_face_count() == 0));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = lacerate(&["tear", "--mesh", "nope.obj", "--trajectory", "builtin:arc:3", "--out", "x.obj"], dir.path());
    assert_eq!(code(&missing), 1);

    std::fs::write(dir.path().join("bad.json"), "{not json").unwrap();
    let bad = lacerate(&["tear", "--mesh", "builtin:cube", "--trajectory", "bad.json", "--out", "x.obj"], dir.path());
    assert_eq!(code(&bad), 1);

    let collinear = serde_json::json!({"mode": "cut", "samples": [
        {"t_ms": 0, "tip": [0, 0, 0], "end": [0, 0, 1]},
        {"t_ms": 1, "tip": [0, 0, 2], "end": [0, 0, 3]}]});
    std::fs::write(dir.path().join("col.json"), collinear.to_string()).unwrap();
    let o = lacerate(&["cut", "--mesh", "builtin:cube", "--trajectory", "col.json", "--out-prefix", "c"], dir.path());
    assert_eq!(code(&o), 2);

    let zero = lacerate(&["cut", "--mesh", "builtin:cube", "--plane", "0,0,0,1", "--out-prefix", "c"], dir.path());
    assert_eq!(code(&zero), 2);

    write_straight_stroke(&dir.path().join("cut.json"), "cut", 2);
    let wrong_mode = lacerate(&["tear", "--mesh", "builtin:cube", "--trajectory", "cut.json", "--out", "x.obj"], dir.path());
    assert_eq!(code(&wrong_mode), 1);
}

#[test]
fn particles_command_writes_a_loadable_map() {
    let dir = tempfile::tempdir().unwrap();
    let o = lacerate(
        &["particles", "--mesh", "builtin:icosphere", "--radius", "0.3", "--delta", "0.5", "--poisson", "0.2", "--seed", "1", "--out", "p.json"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("p.json")).unwrap();
    let mesh = lacerate_harness::builtin::builtin_mesh("icosphere").unwrap();
    let s = lacerate::particles::ParticleSystem::from_json(&text, mesh.vertex_count()).unwrap();
    assert!(!s.is_empty());
    assert_eq!(s.params.d, 0.3);

    let bad = lacerate(
        &["particles", "--mesh", "builtin:icosphere", "--radius", "0.3", "--delta", "0.1", "--poisson", "0.2", "--out", "p.json"],
        dir.path(),
    );
    assert_eq!(code(&bad), 2);
}

#[test]
fn bench_manifests() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("empty.json"), r#"{"cases": []}"#).unwrap();
    let o = lacerate(&["bench", "--manifest", "empty.json", "--repeats", "2", "--out", "e.json"], dir.path());
    assert_eq!(code(&o), 0);
    let r: Value = serde_json::from_slice(&std::fs::read(dir.path().join("e.json")).unwrap()).unwrap();
    assert!(r["rows"].as_array().unwrap().is_empty());

    let m = serde_json::json!({"cases": [
        {"name": "a", "kind": "tear", "mesh": "builtin:sphere-small", "trajectory": "builtin:arc:4", "width": 0.05, "size_class": "small"},
        {"name": "b", "kind": "tear", "mesh": "builtin:icosphere", "trajectory": "builtin:arc:4", "width": 0.05},
        {"name": "c", "kind": "cut", "mesh": "builtin:bone", "size_class": "1k"}]});
    std::fs::write(dir.path().join("m.json"), m.to_string()).unwrap();
    let o = lacerate(&["bench", "--manifest", "m.json", "--repeats", "3", "--out", "b.json"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let table = String::from_utf8_lossy(&o.stdout);
    assert_eq!(table.lines().count(), 4, "{table}");
    let r: Value = serde_json::from_slice(&std::fs::read(dir.path().join("b.json")).unwrap()).unwrap();
    let rows = r["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0]["repeats"], 3);
    assert_eq!(rows[0]["reference_total_ms"], 3.25);
    assert_eq!(rows[0]["phases"].as_array().unwrap().len(), 5);
    assert!(rows[1]["reference_total_ms"].is_null());
    assert!(rows[1]["pass"].is_null());
    assert_eq!(rows[2]["reference_total_ms"], 12.0);
    assert!(rows[2]["intersection_points"].as_u64().unwrap() > 0);

    std::fs::write(dir.path().join("bad.json"), r#"{"cases": [{"name": 1}]}"#).unwrap();
    let o = lacerate(&["bench", "--manifest", "bad.json"], dir.path());
    assert_eq!(code(&o), 1);
}

#[test]
fn shipped_manifest_parses() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../bench/manifest.json");
    let m = lacerate_harness::bench::Manifest::load(&path).unwrap();
    assert_eq!(m.cases.len(), 6);
    for c in &m.cases {
        assert!(lacerate_harness::trajectory::load_mesh_arg(&c.mesh).is_ok(), "{}", c.mesh);
    }
}
