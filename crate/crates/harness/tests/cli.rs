use std::path::Path;
use std::process::Command;

use intcorr::Method;
use intcorr_harness::{run_plan, ExperimentPlan};

const BIN: &str = env!("CARGO_BIN_EXE_intcorr");

const SMALL: &str = r#"{
  "scenario": {"n_bs_antennas": 8, "n_interferers": 1, "n_rays": 2, "noise_power": 1, "symbol_power": 1},
  "rot_db": [-5, 5], "t_values": [2, 4],
  "estimators": ["LS", "PBCE-ID", "PBCE-GAE", "PBCE-SGE", "PBCE-GEC", "PBCE-MUSIC"],
  "trials": 6, "gridless": {"eta": 0.3, "max_iter": 500}
}"#;

fn write_plan(dir: &Path, body: &str) -> std::path::PathBuf {
    let p = dir.join("plan.json");
    std::fs::write(&p, body).unwrap();
    p
}

fn run(args: &[&str]) -> std::process::Output {
    Command::new(BIN).args(args).env_remove("INTCORR_THREADS").output().unwrap()
}

#[test]
fn run_writes_outputs_and_plots() {
    let d = tempfile::tempdir().unwrap();
    let plan = write_plan(d.path(), SMALL);
    let out = d.path().join("out");
    let o = run(&["run", "--plan", plan.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "4"]);
    assert!(matches!(o.status.code(), Some(0) | Some(3)), "{o:?}");
    for f in ["trials.csv", "aggregate.csv", "timings.csv", "run.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let trials = std::fs::read_to_string(out.join("trials.csv")).unwrap();
    // one row per (trial, estimator, T, ROT)
    assert_eq!(trials.lines().count(), 1 + 6 * 6 * 2 * 2);
    assert!(!trials.lines().next().unwrap().contains("wall"));
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("run.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 4);
    let o = run(&["plots", "--in", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let spec: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("plots/mse_vs_rot_T2.json")).unwrap()).unwrap();
    assert_eq!(spec["series"].as_array().unwrap().len(), 6);
    assert_eq!(spec["series"][0]["x"].as_array().unwrap().len(), 2);
}

#[test]
fn config_errors_exit_2() {
    let d = tempfile::tempdir().unwrap();
    let bad = write_plan(d.path(), r#"{"rot_db":[0],"t_values":[2],"estimators":["LS"],"trials":1,"typo":3}"#);
    let o = run(&["run", "--plan", bad.to_str().unwrap(), "--out", d.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["run", "--plan", "/nonexistent.json", "--out", "/tmp/x"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["validate", "--suite", "bogus"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn estimator_failures_exit_3() {
    // a GEC window longer than the batch fails every trial
    let d = tempfile::tempdir().unwrap();
    let plan = write_plan(
        d.path(),
        r#"{"scenario": {"n_bs_antennas": 6, "n_interferers": 1, "n_rays": 1, "noise_power": 1, "symbol_power": 1},
            "rot_db": [0], "t_values": [2], "estimators": ["LS", "PBCE-GEC"], "trials": 2, "t0": 4,
            "gridless": {"eta": 0.3}}"#,
    );
    let out = d.path().join("o");
    let o = run(&["run", "--plan", plan.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let trials = std::fs::read_to_string(out.join("trials.csv")).unwrap();
    assert!(trials.lines().any(|l| l.contains("PBCE-GEC") && l.contains("invalid-argument")));
}

#[test]
fn empty_aggregate_exits_4() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(
        d.path().join("aggregate.csv"),
        "estimator,t,rot_db,mse_mean,mse_stderr,c_mean,c_stderr,rho_mean,rho_stderr\n",
    )
    .unwrap();
    let o = run(&["plots", "--in", d.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    assert!(!d.path().join("plots").exists());
}

#[test]
fn thread_env_override_keeps_output() {
    let d = tempfile::tempdir().unwrap();
    let plan = write_plan(d.path(), SMALL);
    let mut bytes = Vec::new();
    for (name, threads) in [("a", "1"), ("b", "3")] {
        let out = d.path().join(name);
        let o = Command::new(BIN)
            .args(["run", "--plan", plan.to_str().unwrap(), "--out", out.to_str().unwrap()])
            .env("INTCORR_THREADS", threads)
            .output()
            .unwrap();
        assert!(matches!(o.status.code(), Some(0) | Some(3)));
        bytes.push(std::fs::read(out.join("aggregate.csv")).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);
}

#[test]
fn aggregate_means_match_trial_rows() {
    let plan = ExperimentPlan::from_json(SMALL).unwrap();
    let out = run_plan(&plan, Some(11), Some(2)).unwrap();
    for a in &out.aggregates {
        let rows: Vec<f64> = out
            .records
            .iter()
            .filter(|r| r.method == a.method && r.t == a.t && r.rot_db == a.rot_db)
            .filter_map(|r| r.mse)
            .collect();
        let m = rows.iter().sum::<f64>() / rows.len() as f64;
        assert!((m - a.mse.0).abs() <= 1e-12 * m.abs());
        let rho: Vec<f64> = out
            .records
            .iter()
            .filter(|r| r.method == a.method && r.t == a.t && r.rot_db == a.rot_db)
            .filter_map(|r| r.rho)
            .collect();
        let m = rho.iter().sum::<f64>() / rho.len() as f64;
        assert!((m - a.rho.0).abs() <= 1e-12 * m.abs().max(1e-300));
    }
}

#[test]
fn stderr_shrinks_with_trial_count() {
    let mut plan = ExperimentPlan::from_json(
        r#"{"scenario": {"n_bs_antennas": 6, "n_interferers": 1, "n_rays": 2, "noise_power": 1, "symbol_power": 1},
            "rot_db": [0], "t_values": [4], "estimators": ["LS", "PBCE-ID"], "trials": 500, "fixed_rays": true}"#,
    )
    .unwrap();
    let a = run_plan(&plan, Some(2), None).unwrap();
    plan.trials = 2000;
    let b = run_plan(&plan, Some(2), None).unwrap();
    for m in [Method::Ls, Method::PbceId] {
        let ratio = a.aggregate(m, 4, 0.0).unwrap().mse.1 / b.aggregate(m, 4, 0.0).unwrap().mse.1;
        // four times the trials halves the standard error
        assert!((ratio - 2.0).abs() < 0.4, "{} ratio {ratio}", m.as_str());
    }
}

#[test]
fn zero_interferers_degrade_gracefully() {
    let plan = ExperimentPlan::from_json(
        r#"{"scenario": {"n_bs_antennas": 6, "n_interferers": 0, "n_rays": 2, "noise_power": 0.5, "symbol_power": 1},
            "rot_db": [0], "t_values": [3],
            "estimators": ["LS", "PBCE-ID", "PBCE-GAE", "PBCE-SGE", "PBCE-GEC", "PBCE-MUSIC"],
            "trials": 4, "gridless": {"eta": 0.3}}"#,
    )
    .unwrap();
    let out = run_plan(&plan, Some(1), None).unwrap();
    for r in &out.records {
        assert_eq!(r.noise_power, 0.5);
        if r.method == Method::Ls {
            assert!(r.mse.unwrap() > 0.0);
        } else if let Some(m) = r.mse {
            // nothing to project on: the estimate is sigma^2 I exactly
            assert!(m < 1e-20);
        }
    }
}
