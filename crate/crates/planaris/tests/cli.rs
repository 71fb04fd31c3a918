use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use planaris::io::{self, ply::PlyFormat};
use planaris_core::{RigidRotation, UnitVector3, Vec3};
use serde_json::Value;

const ROOM: &str = r#"
density = 800.0
noise_sigma = 0.005
seed = 3

[[rooms]]
min = [0.0, 0.0]
max = [4.0, 3.0]
height = 2.8
"#;

fn planaris(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_planaris")).args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synth_room(dir: &Path) -> PathBuf {
    let spec = dir.join("room.toml");
    std::fs::write(&spec, ROOM).unwrap();
    let cloud = dir.join("room.ply");
    let out = planaris(&["synth", "--spec", s(&spec), "--output", s(&cloud)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    cloud
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn single_room_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = synth_room(dir.path());
    assert!(dir.path().join("room.json").exists());
    let out_dir = dir.path().join("out");
    let out = planaris(&["run", "--input", s(&cloud), "--output", s(&out_dir)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out_dir);
    assert_eq!(r["counts"]["walls"], 4);
    assert_eq!(r["counts"]["ceiling"], 1);
    assert_eq!(r["counts"]["floor"], 1);
    assert!(r["eval"]["rmse"].as_f64().unwrap() < 2.0 * 0.005);
    assert_eq!(r["flags"]["degraded"], false);
    let mesh = io::load_mesh(&out_dir.join("structured.obj")).unwrap();
    assert_eq!(mesh.faces.len(), 12);
    assert!(out_dir.join("non_structured.ply").exists());
}

#[test]
fn same_seed_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = synth_room(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for (o, threads) in [(&a, "1"), (&b, "4")] {
        let out = planaris(&["run", "--input", s(&cloud), "--output", s(o), "--no-cache", "--threads", threads]);
        assert!(out.status.success());
    }
    for f in ["structured.obj", "non_structured.ply"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn cached_primitives_reproduce_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = synth_room(dir.path());
    let o = dir.path().join("out");
    let first = planaris(&["run", "--input", s(&cloud), "--output", s(&o)]);
    assert!(first.status.success());
    let mesh = std::fs::read(o.join("structured.obj")).unwrap();
    assert_eq!(report(&o)["primitives_source"], "ransac");
    let second = planaris(&["run", "--input", s(&cloud), "--output", s(&o)]);
    assert!(second.status.success());
    assert_eq!(report(&o)["primitives_source"], "cache");
    assert_eq!(std::fs::read(o.join("structured.obj")).unwrap(), mesh);
}

#[test]
fn missing_input_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = planaris(&["run", "--input", "/no/such/cloud.ply", "--output", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("input not found"), "{err}");
    assert!(err.contains("planaris run"), "{err}");
    assert_eq!(planaris(&["run", "--output", "x"]).status.code(), Some(2));
    assert_eq!(planaris(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn invalid_threshold_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = synth_room(dir.path());
    let out = planaris(&["run", "--input", s(&cloud), "--output", s(dir.path()), "--wall-angle", "10"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn stage_failure_names_the_stage_and_keeps_partials() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = synth_room(dir.path());
    let o = dir.path().join("out");
    let out = planaris(&["run", "--input", s(&cloud), "--output", s(&o), "--th-clip", "100000"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("stage 'mclip' failed"), "{err}");
    for f in ["structured.obj.partial", "non_structured.ply.partial", "report.json.partial"] {
        assert!(o.join(f).exists(), "{f} missing");
    }
    assert!(!o.join("structured.obj").exists());
    let r: Value = serde_json::from_str(&std::fs::read_to_string(o.join("report.json.partial")).unwrap()).unwrap();
    assert_eq!(r["failed_stage"], "mclip");
}

#[test]
fn skipping_alignment_on_a_rotated_scan_raises_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = io::load_point_cloud(&synth_room(dir.path())).unwrap();
    let r = RigidRotation::from_axis_angle(&UnitVector3::new_normalize(Vec3::new(1.0, 2.0, 0.5)), 0.6);
    let rotated = dir.path().join("rotated.ply");
    io::save_point_cloud(&rotated, &cloud.rotated(&r), PlyFormat::BinaryLittleEndian).unwrap();
    let o = dir.path().join("out");
    let out = planaris(&["run", "--input", s(&rotated), "--output", s(&o), "--skip-alignment"]);
    let rep = if out.status.success() {
        report(&o)
    } else {
        serde_json::from_str(&std::fs::read_to_string(o.join("report.json.partial")).unwrap()).unwrap()
    };
    assert_eq!(rep["alignment"]["skipped"], true);
    if out.status.success() {
        assert_eq!(rep["flags"]["degraded"], true);
        assert!(String::from_utf8_lossy(&out.stderr).contains("quality flags"));
    }

    let o = dir.path().join("aligned");
    let out = planaris(&["run", "--input", s(&rotated), "--output", s(&o)]);
    assert!(out.status.success());
    assert_eq!(report(&o)["flags"]["degraded"], false);
}

#[test]
fn csv_report_and_adjacency_dump() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = synth_room(dir.path());
    let (csv, dot) = (dir.path().join("r.csv"), dir.path().join("g.dot"));
    let out = planaris(&[
        "run",
        "--input",
        s(&cloud),
        "--output",
        s(&dir.path().join("o")),
        "--report",
        s(&csv),
        "--dump-adjacency",
        s(&dot),
        "--mesh-format",
        "ply",
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(csv).unwrap();
    assert!(text.starts_with("num_points,num_primitives,num_faces,rmse_m,"));
    assert!(std::fs::read_to_string(dot).unwrap().contains("graph"));
    assert_eq!(io::load_mesh(&dir.path().join("o/structured.ply")).unwrap().faces.len(), 12);
}

#[test]
fn eval_and_sample_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = synth_room(dir.path());
    let o = dir.path().join("out");
    assert!(planaris(&["run", "--input", s(&cloud), "--output", s(&o)]).status.success());
    let mesh = o.join("structured.obj");
    let sampled = dir.path().join("sampled.ply");
    let out = planaris(&["sample", "--mesh", s(&mesh), "--count", "2000", "--output", s(&sampled), "--seed", "4"]);
    assert!(out.status.success());
    assert_eq!(io::load_point_cloud(&sampled).unwrap().len(), 2000);

    let out = planaris(&["eval", "--cloud", s(&sampled), "--mesh", s(&mesh)]);
    assert!(out.status.success());
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["num_points"], 2000);
    assert_eq!(r["num_faces"], 12);
    assert!(r["rmse"].as_f64().unwrap() < 1e-9);
}
