use std::path::{Path, PathBuf};

use brickwork::cli::{run, ProjectionPlan, EXIT_COLLAPSE, EXIT_INPUT, EXIT_OK, EXIT_SOLVER};
use brickwork::coverage::CSV_HEADER;
use tempfile::TempDir;

fn shipped(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(rel)
}

struct Output {
    code: i32,
    stdout: String,
    stderr: String,
}

fn cli(args: &[&str]) -> Output {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(
        std::iter::once("brickwork").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    Output {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn calibrate_recovers_the_shipped_ground_truth() {
    let dir = TempDir::new().unwrap();
    let o = cli(&[
        "calibrate",
        s(&shipped("calibration/synthetic_session.json")),
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    assert!(o.stdout.contains("vs ground truth"));
    let doc: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("calibration_result.json")).unwrap(),
    )
    .unwrap();
    let g = &doc["ground_truth_error"];
    for key in ["translation", "rotation", "fov_x", "fov_y"] {
        assert!(g[key].as_f64().unwrap() < 1e-6, "{key}: {}", g[key]);
    }
}

#[test]
fn calibrate_reports_solver_and_input_failures() {
    let dir = TempDir::new().unwrap();
    let full: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(shipped("calibration/synthetic_session.json")).unwrap(),
    )
    .unwrap();
    let mut two = full.clone();
    two["shots"].as_array_mut().unwrap().truncate(2);
    let path = dir.path().join("two.json");
    std::fs::write(&path, two.to_string()).unwrap();
    let o = cli(&["calibrate", s(&path), "--out", s(dir.path())]);
    assert_eq!(o.code, EXIT_SOLVER);
    assert!(o.stderr.contains("InsufficientShots"), "{}", o.stderr);

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"shots\": [,]\n}").unwrap();
    let o = cli(&["calibrate", s(&bad), "--out", s(dir.path())]);
    assert_eq!(o.code, EXIT_INPUT);
    assert!(
        o.stderr.contains("bad.json") && o.stderr.contains("line 2"),
        "{}",
        o.stderr
    );

    let o = cli(&["calibrate", "/nonexistent/session.json"]);
    assert_eq!(o.code, EXIT_INPUT);
    assert!(o.stderr.contains("/nonexistent/session.json"));
}

#[test]
fn unit_suffixed_unknown_fields_are_rejected() {
    let dir = TempDir::new().unwrap();
    let mut v: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(shipped("calibration/synthetic_session.json")).unwrap(),
    )
    .unwrap();
    v["standoff_mm"] = 3.into();
    let path = dir.path().join("session.json");
    std::fs::write(&path, v.to_string()).unwrap();
    let o = cli(&["calibrate", s(&path), "--out", s(dir.path())]);
    assert_eq!(o.code, EXIT_INPUT);
    assert!(o.stderr.contains("standoff_mm"));

    v.as_object_mut().unwrap().remove("standoff_mm");
    v["comment"] = "ok".into();
    std::fs::write(&path, v.to_string()).unwrap();
    let o = cli(&["calibrate", s(&path), "--out", s(dir.path())]);
    assert_eq!(o.code, EXIT_OK);
    assert!(o.stderr.contains("warning") && o.stderr.contains("comment"));
}

#[test]
fn coverage_scores_full_and_synthetic_masks() {
    let o = cli(&[
        "coverage",
        s(&shipped("coverage/region.json")),
        s(&shipped("coverage/full_cover.pgm")),
    ]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let mut lines = o.stdout.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&row[1..4], &["100", "0", "0"]);

    let set = |name: &str| -> Vec<f64> {
        let masks: Vec<PathBuf> = (0..21)
            .map(|i| shipped(&format!("coverage/{name}/{name}_{i:02}.pgm")))
            .collect();
        let mut args = vec![
            "coverage".to_string(),
            s(&shipped("coverage/region.json")).to_string(),
        ];
        args.extend(masks.iter().map(|m| s(m).to_string()));
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        let o = cli(&refs);
        assert_eq!(o.code, EXIT_OK);
        let mut cov: Vec<f64> = o
            .stdout
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
            .collect();
        cov.sort_by(f64::total_cmp);
        cov
    };
    let (guided, unguided) = (set("guided"), set("unguided"));
    assert!(
        guided[10] > unguided[10],
        "{} vs {}",
        guided[10],
        unguided[10]
    );
}

#[test]
fn coverage_json_and_missing_mask() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("cov.json");
    let o = cli(&[
        "coverage",
        s(&shipped("coverage/region.json")),
        s(&shipped("coverage/full_cover.pgm")),
        "--json",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.code, EXIT_OK);
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v[0]["region_coverage"], 1.0);

    let o = cli(&[
        "coverage",
        s(&shipped("coverage/region.json")),
        "missing.pgm",
    ]);
    assert_eq!(o.code, EXIT_INPUT);
    assert!(o.stderr.contains("missing.pgm"));
}

#[test]
fn project_plans_an_in_frame_cue() {
    let o = cli(&["project", s(&shipped("conventional_21.json")), "c3b1"]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let plan: ProjectionPlan = serde_json::from_str(&o.stdout).unwrap();
    assert_eq!(plan.image_points.len(), 4);
    assert!(plan.image_points.iter().all(|p| p.in_frame));
    assert!(o.stderr.is_empty());

    let o = cli(&["project", s(&shipped("conventional_21.json")), "nope"]);
    assert_eq!(o.code, EXIT_INPUT);
    assert!(o.stderr.contains("nope"));

    let o = cli(&[
        "project",
        s(&shipped("conventional_21.json")),
        "c3b1",
        "--approach",
        "0,0,0",
    ]);
    assert_eq!(o.code, EXIT_INPUT, "{}", o.stdout);
    assert!(o.stderr.contains("approach"));
}

#[test]
fn project_with_identity_extrinsic_puts_tcp_on_projector() {
    let dir = TempDir::new().unwrap();
    let text = std::fs::read_to_string(shipped("conventional_21.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["projector"]["extrinsic"] =
        serde_json::to_value(brickwork::geometry::Pose::identity()).unwrap();
    for key in ["design", "noise", "timing", "calibration_session"] {
        let rel = v[key].as_str().unwrap().to_string();
        v[key] = s(&shipped(&rel)).into();
    }
    let path = dir.path().join("identity.json");
    std::fs::write(&path, v.to_string()).unwrap();
    let o = cli(&["project", s(&path), "c1b1"]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let plan: ProjectionPlan = serde_json::from_str(&o.stdout).unwrap();
    assert!(plan.tcp_pose.max_deviation(&plan.projector_pose) < 1e-12);
}

#[test]
fn simulate_writes_identical_outputs_for_identical_runs() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    for d in [&a, &b] {
        let o = cli(&[
            "simulate",
            s(&shipped("conventional_21.json")),
            "--seeds",
            "3",
            "--out",
            s(d.path()),
        ]);
        assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    }
    let mut names: Vec<_> = std::fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 3 * 2 + 2);
    for n in names.iter().filter(|n| *n != "run.log") {
        assert_eq!(
            std::fs::read(a.path().join(n)).unwrap(),
            std::fs::read(b.path().join(n)).unwrap(),
            "{n:?}"
        );
    }
}

#[test]
fn simulate_adaptive_and_open_loop_differ_in_failures() {
    let dir = TempDir::new().unwrap();
    let scenario = shipped("conventional_21.json");
    let o = cli(&[
        "simulate",
        s(&scenario),
        "--mode",
        "open",
        "--seeds",
        "20",
        "--fail-on-collapse",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(o.code, EXIT_COLLAPSE, "{}", o.stdout);
    let o = cli(&[
        "simulate",
        s(&scenario),
        "--seeds",
        "0",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(o.code, EXIT_INPUT);
}

#[test]
fn report_summarises_exported_builds() {
    let dir = TempDir::new().unwrap();
    let scenario = shipped("conventional_21.json");
    assert_eq!(
        cli(&[
            "simulate",
            s(&scenario),
            "--seeds",
            "2",
            "--out",
            s(dir.path())
        ])
        .code,
        EXIT_OK
    );
    let b0 = dir.path().join("build_000.json");
    let b1 = dir.path().join("build_001.json");
    let o = cli(&["report", s(&scenario), s(&b0), s(&b1)]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    assert!(o.stdout.contains("per-brick cycle") && o.stdout.contains("aggregate over 2 builds"));

    let o = cli(&["report", s(&shipped("nonstandard_28.json")), s(&b0)]);
    assert_eq!(o.code, EXIT_INPUT);
}

#[test]
fn usage_errors_and_help() {
    assert_eq!(cli(&["frobnicate"]).code, EXIT_INPUT);
    let o = cli(&["--help"]);
    assert_eq!(o.code, EXIT_OK);
    assert!(o.stdout.contains("simulate"));
}
