use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn gftlqr(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gftlqr"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .env("GFTLQR_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn write_small_config(dir: &Path) -> String {
    let path = dir.join("cfg.json");
    fs::write(
        &path,
        r#"{"baseline_ga": {"population_size": 8, "n_islands": 2, "n_generations": 2},
            "train_ga": {"population_size": 8, "n_islands": 2, "n_generations": 2},
            "robustness": {"n_per_case": 2},
            "scenarios": [22, 67]}"#,
    )
    .unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn full_pipeline_on_two_cases() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_small_config(dir.path());
    let d = dir.path();

    let out = gftlqr(d, &["baseline", "--config", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("(180°, 0°)"), "{stdout}");

    // A second run must not clobber the cache.
    let again = gftlqr(d, &["baseline", "--config", &cfg]);
    assert_eq!(again.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&again.stderr).contains("--force"));

    let out = gftlqr(d, &["train", "--config", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let history = fs::read_to_string(d.join("history.csv")).unwrap();
    let mut lines = history.lines();
    assert!(lines.next().unwrap().starts_with("# config_digest="));
    assert_eq!(lines.next().unwrap(), "generation,best,mean");
    assert_eq!(lines.count(), 2);

    let controller = d.join("controller.json");
    let controller = controller.to_str().unwrap();
    let out = gftlqr(d, &["simulate", "--config", &cfg, "--controller", controller, "--case", "67"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("case 67"));
    let traj = fs::read_to_string(d.join("trajectory_case67_gft.csv")).unwrap();
    assert_eq!(traj.lines().nth(1).unwrap(), "t,theta1,theta2,omega1,omega2,tau1,tau2");
    assert!(traj.lines().count() > 3);

    let out = gftlqr(d, &["surface", "--config", &cfg, "--controller", controller, "--fis", "bid1", "--grid", "5"]);
    assert!(out.status.success());
    let surf = fs::read_to_string(d.join("surface_bid1.csv")).unwrap();
    assert_eq!(surf.lines().count(), 2 + 25);

    let out = gftlqr(d, &["robustness", "--config", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("robustness.json")).unwrap()).unwrap();
    assert_eq!(report["summary"]["total_draws"], 4);
    assert!(report["config_digest"].is_string());
    let draws = fs::read_to_string(d.join("robustness_draws.csv")).unwrap();
    assert_eq!(draws.lines().count(), 2 + 4);
}

#[test]
fn validation_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    let out = gftlqr(d, &["train"]);
    assert_eq!(out.status.code(), Some(2), "missing baselines is a validation error");

    let out = gftlqr(d, &["baseline", "--cases", "1,nope"]);
    assert_eq!(out.status.code(), Some(2));

    let out = gftlqr(d, &["baseline", "--cases", "999"]);
    assert_eq!(out.status.code(), Some(2));

    let bad = d.join("bad.json");
    fs::write(&bad, r#"{"sim": {"dt": -1.0}}"#).unwrap();
    let out = gftlqr(d, &["baseline", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    fs::write(&bad, r#"{"unknown_key": 1}"#).unwrap();
    let out = gftlqr(d, &["baseline", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let out = Command::new(env!("CARGO_BIN_EXE_gftlqr"))
        .args(["baseline", "--out"])
        .arg(d)
        .env("GFTLQR_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn surface_rejects_unknown_fis_and_lists_names() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = write_small_config(d);
    assert!(gftlqr(d, &["baseline", "--config", &cfg]).status.success());
    assert!(gftlqr(d, &["train", "--config", &cfg]).status.success());
    let controller = d.join("controller.json");
    let out = gftlqr(
        d,
        &["surface", "--config", &cfg, "--controller", controller.to_str().unwrap(), "--fis", "q9"],
    );
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    for name in ["bid1", "bid2", "q1", "q2", "q3", "q4"] {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn stale_baselines_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = write_small_config(d);
    assert!(gftlqr(d, &["baseline", "--config", &cfg]).status.success());
    let other = d.join("other.json");
    fs::write(
        &other,
        r#"{"sim": {"dt": 0.01}, "train_ga": {"population_size": 8, "n_islands": 2, "n_generations": 1},
            "scenarios": [22, 67]}"#,
    )
    .unwrap();
    let out = gftlqr(d, &["train", "--config", other.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("stale"));
}

#[test]
fn simulate_baseline_needs_cached_case() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = write_small_config(d);
    assert!(gftlqr(d, &["baseline", "--config", &cfg]).status.success());
    let out = gftlqr(d, &["simulate", "--config", &cfg, "--controller", "baseline", "--case", "22"]);
    assert!(out.status.success());
    assert!(d.join("trajectory_case22_baseline.csv").exists());
    let out = gftlqr(d, &["simulate", "--config", &cfg, "--controller", "baseline", "--case", "3"]);
    assert_eq!(out.status.code(), Some(2));
}
