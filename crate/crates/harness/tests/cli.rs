use std::path::Path;
use std::process::{Command, Output};

fn sediment(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sediment"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL_EXP1: &str = r#"
experiment = "exp1"
n_list = [16, 24]
seeds = 2

[time]
dt = 0.05
stride = 2
scheme = "rk4"
min_steps = 4
"#;

#[test]
fn empty_config_is_a_usage_error_with_schema() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("empty.toml"), "").unwrap();
    let o = sediment(&["--config", "empty.toml", "experiment", "exp1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("[generator]"), "{}", stderr(&o));
}

#[test]
fn schema_round_trips_through_the_loader() {
    let dir = tempfile::tempdir().unwrap();
    let o = sediment(&["schema"], dir.path());
    assert!(o.status.success());
    std::fs::write(dir.path().join("c.toml"), stdout(&o)).unwrap();
    let o = sediment(&["--config", "c.toml", "diagnose", "--n", "20"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["n"], 20);
    assert!(dir.path().join("out/cloud.csv").exists());
}

#[test]
fn experiment_reports_are_reproducible_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), SMALL_EXP1).unwrap();
    let run = |threads: &str, out: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_sediment"))
            .args(["--config", "c.toml", "--out", out, "experiment", "exp1"])
            .env("SEDIMENT_THREADS", threads)
            .current_dir(dir.path())
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        (
            std::fs::read(dir.path().join(out).join("exp1_series.csv")).unwrap(),
            std::fs::read(dir.path().join(out).join("exp1_report.json")).unwrap(),
        )
    };
    let a = run("1", "a");
    let b = run("3", "b");
    assert_eq!(a, b);
    let report: serde_json::Value = serde_json::from_slice(&a.1).unwrap();
    assert_eq!(report["meta"]["config_hash"].as_str().unwrap().len(), 64);
    assert!(report["meta"]["code_version"].as_str().unwrap().starts_with("sediment-harness "));
    assert_eq!(report["report"]["cases"].as_array().unwrap().len(), 4);
    assert!(String::from_utf8_lossy(&a.0).starts_with("# config_hash="));
}

#[test]
fn seed_flag_changes_the_hash() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), SMALL_EXP1).unwrap();
    let hash = |seed: &str| {
        let o = sediment(&["--config", "c.toml", "--seed", seed, "--out", seed, "diagnose"], dir.path());
        assert!(o.status.success());
        let v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join(seed).join("diagnose.json")).unwrap()).unwrap();
        v["meta"]["config_hash"].as_str().unwrap().to_string()
    };
    assert_ne!(hash("1"), hash("2"));
}

#[test]
fn mismatched_experiment_id_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), SMALL_EXP1).unwrap();
    let o = sediment(&["--config", "c.toml", "experiment", "exp3"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn wasserstein_between_csv_measures() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("a.csv"), "x,y,z,w\n0,0,0,0.5\n1,0,0,0.5\n").unwrap();
    std::fs::write(dir.path().join("b.csv"), "x,y,z,w\n0,0,2,0.5\n1,0,2,0.5\n").unwrap();
    let o = sediment(&["wasserstein", "--p", "1", "a.csv", "b.csv", "--plan", "plan.csv"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["distance"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    let plan = std::fs::read_to_string(dir.path().join("plan.csv")).unwrap();
    assert!(plan.contains("i,j,mass"));
    let o = sediment(&["wasserstein", "--p", "inf", "a.csv", "b.csv"], dir.path());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["distance"].as_f64().unwrap() - 2.0).abs() < 1e-12);
}

#[test]
fn unnormalized_measure_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("a.csv"), "x,y,z,w\n0,0,0,0.7\n").unwrap();
    let o = sediment(&["wasserstein", "a.csv", "a.csv"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("domain error"));
}

#[test]
fn kernel_selftest_detects_an_injected_fault() {
    let dir = tempfile::tempdir().unwrap();
    let clean = sediment(&["kernels-selftest"], dir.path());
    assert!(clean.status.success(), "{}", stdout(&clean));
    let broken = sediment(&["kernels-selftest", "--inject-fault", "stokeslet-sign"], dir.path());
    assert_eq!(broken.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(&stdout(&broken)).unwrap();
    let failed: Vec<&str> = v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["passed"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(failed.contains(&"boundary/stokeslet"), "{failed:?}");
}

#[test]
fn full_selftest_writes_a_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = sediment(&["--out", "st", "selftest"], dir.path());
    assert!(o.status.success(), "{}", stdout(&o));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("st/selftest.json")).unwrap()).unwrap();
    assert_eq!(v["report"]["passed"], true);
}

#[test]
fn simulate_meanfield_and_compare_write_their_files() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), SMALL_EXP1).unwrap();
    let o = sediment(&["--config", "c.toml", "simulate", "--n", "12"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let traj = std::fs::read_to_string(dir.path().join("out/trajectory.csv")).unwrap();
    assert!(traj.lines().nth(1).unwrap() == "t,i,x,y,z,vx,vy,vz");

    let mf = r#"
experiment = "exp2"
n_list = [24]
physics = { r0 = 0.5, settling_velocity = [0.0, 0.0, -1.0] }
solver = { kind = "first_order" }
generator = { kind = "density", spec = { family = "bump", center = [0.0, 0.0, 0.0], radius = 1.0 } }

[time]
dt = 0.1
horizon = 0.2
stride = 1
scheme = "rk4"
min_steps = 2

[meanfield]
spec = { family = "bump", center = [0.0, 0.0, 0.0], radius = 1.0 }
m_per_axis = 10
"#;
    std::fs::write(dir.path().join("mf.toml"), mf).unwrap();
    let o = sediment(&["--config", "mf.toml", "--out", "mf", "meanfield"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let dens = std::fs::read_to_string(dir.path().join("mf/density.csv")).unwrap();
    assert!(dens.lines().nth(1).unwrap() == "t,k,y1,y2,y3,w");
    let o = sediment(&["--config", "mf.toml", "--out", "cmp", "compare"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("cmp/compare_w1.csv").exists());
}
