//! End-to-end runs of the `mccf` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mccf_core::baselines::{idm_accel, IdmParams};
use mccf_core::trajdata::{
    write_trajectory_csv, CfState, Dataset, SplitTag, TrajectoryPair, TrajectoryPoint, DT,
};
use serde_json::Value;

fn mccf(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mccf"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

/// IDM follower behind a leader with a slow speed oscillation.
fn pair(k: usize, steps: usize) -> TrajectoryPair {
    let p = IdmParams {
        v0: 15.0,
        t_headway: 1.2,
        a_max: 1.5,
        b: 2.0,
        s0: 2.0,
        delta: 4.0,
    };
    let (mut x, mut v) = (0.0, 6.0 + (k % 5) as f64);
    let (mut xl, mut vl) = (20.0 + (k % 7) as f64, v);
    let mut points = Vec::with_capacity(steps);
    for i in 0..steps {
        let t = i as f64 * DT;
        let a = idm_accel(&p, &CfState::new(v, v - vl, xl - x - 5.0));
        let al = 0.8 * (t / 4.0 + k as f64).sin();
        points.push(TrajectoryPoint {
            t,
            x_f: x,
            v_f: v,
            a_f: a,
            x_l: xl,
            v_l: vl,
            a_l: al,
        });
        let vn = (v + a * DT).max(0.0);
        x += 0.5 * (v + vn) * DT;
        v = vn;
        let vln = (vl + al * DT).max(0.0);
        xl += 0.5 * (vl + vln) * DT;
        vl = vln;
    }
    TrajectoryPair {
        pair_id: format!("p{k:03}"),
        interaction_type: "synthetic".into(),
        points,
        length_avg: 5.0,
    }
}

fn raw_csv(dir: &Path) {
    let ds = Dataset::new((0..30).map(|k| pair(k, 200)).collect(), SplitTag::Unsplit);
    write_trajectory_csv(&ds, dir.join("raw.csv")).unwrap();
}

#[test]
fn full_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    raw_csv(dir);

    write(dir, "ingest.json", r#"{"inputs": ["raw.csv"], "seed": 1}"#);
    let o = mccf(
        dir,
        &[
            "ingest",
            "--config",
            "ingest.json",
            "--out",
            "ingest",
            "--seed",
            "9",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(json(dir.join("ingest/resolved_config.json"))["seed"], 9);
    let summary = json(dir.join("ingest/summary.json"));
    assert_eq!(summary["raw"]["pairs"], 30);
    assert_eq!(
        summary["train"]["pairs"].as_u64().unwrap() + summary["test"]["pairs"].as_u64().unwrap(),
        summary["eligible"]["pairs"].as_u64().unwrap()
    );

    write(dir, "train.json", r#"{"train": "ingest/train.csv"}"#);
    let o = mccf(dir, &["train", "--config", "train.json", "--out", "model"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = json(dir.join("model/training_report.json"));
    let ratio = report["occupied_bins"].as_f64().unwrap() / report["clusters"].as_f64().unwrap();
    assert!((report["compression_ratio"].as_f64().unwrap() - ratio).abs() < 1e-12);
    assert!(dir.join("model/model.json").exists());

    write(
        dir,
        "calibrate.json",
        r#"{"train": "ingest/train.csv", "models": ["idm", "fvdm-cth"], "de": {"max_iter": 3}}"#,
    );
    let o = mccf(
        dir,
        &[
            "calibrate",
            "--config",
            "calibrate.json",
            "--out",
            "cal",
            "--threads",
            "2",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(json(dir.join("cal/idm.json"))["model"], "idm");

    write(
        dir,
        "evaluate.json",
        r#"{
            "test": "ingest/test.csv",
            "k_values": [1, 3],
            "models": [
                {"source": "mccf", "path": "model/model.json", "mode": "deterministic"},
                {"source": "mccf", "path": "model/model.json"},
                {"source": "baseline", "path": "cal/idm.json"},
                {"source": "inline", "model": "sidm", "params": {"v0": 15, "t_headway": 1.2,
                 "a_max": 1.5, "b": 2, "s0": 2, "delta": 4, "sigma": 0.2}}
            ]
        }"#,
    );
    let o = mccf(
        dir,
        &["evaluate", "--config", "evaluate.json", "--out", "eval"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let eval = json(dir.join("eval/eval.json"));
    assert_eq!(eval["models"].as_array().unwrap().len(), 4);
    assert_eq!(
        json(dir.join("eval/probabilities.json"))["models"]
            .as_array()
            .unwrap()
            .len(),
        4
    );
    let curve = std::fs::read_to_string(dir.join("eval/k_curve.csv")).unwrap();
    assert!(curve.starts_with("model,k,pairs,min_dtw_s,min_dtw_v,min_ade,min_fde"));

    write(
        dir,
        "simulate.json",
        r#"{
            "ring": {"length": 400, "n_vehicles": 20, "v_start": 5, "horizon": 20, "trials": 2,
                     "perturbation": {"start_time": 2, "decel": 1, "decel_duration": 2,
                                      "hold_duration": 2, "accel": 1, "accel_duration": 2}},
            "model": {"source": "mccf", "path": "model/model.json", "conservative": true}
        }"#,
    );
    let o = mccf(
        dir,
        &[
            "simulate",
            "--config",
            "simulate.json",
            "--out",
            "sim",
            "--seed",
            "3",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let stats = json(dir.join("sim/stats.json"));
    assert_eq!(stats["collisions_per_trial"].as_array().unwrap().len(), 2);
    assert_eq!(
        json(dir.join("sim/resolved_config.json"))["ring"]["seed"],
        3
    );
    let csv = std::fs::read_to_string(dir.join("sim/trajectories.csv")).unwrap();
    assert!(csv.starts_with("trial,t,vehicle,x,v,a\n"));
    assert!(
        std::fs::read_to_string(dir.join("sim/spacetime_trial0.svg"))
            .unwrap()
            .starts_with("<svg")
    );
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    raw_csv(dir);
    write(dir, "ingest.json", r#"{"inputs": ["raw.csv"]}"#);
    for out in ["a", "b"] {
        let o = mccf(dir, &["ingest", "--config", "ingest.json", "--out", out]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        write(dir, "train.json", r#"{"train": "a/train.csv"}"#);
        let o = mccf(
            dir,
            &[
                "train",
                "--config",
                "train.json",
                "--out",
                &format!("{out}/model"),
            ],
        );
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    for f in [
        "train.csv",
        "test.csv",
        "summary.json",
        "model/model.json",
        "model/training_report.json",
    ] {
        assert_eq!(
            std::fs::read(dir.join("a").join(f)).unwrap(),
            std::fs::read(dir.join("b").join(f)).unwrap(),
            "{f} differs"
        );
    }
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();

    // I/O: config or input file missing.
    assert_eq!(code(&mccf(dir, &["train", "--config", "absent.json"])), 2);
    write(dir, "nf.json", r#"{"train": "absent.csv"}"#);
    assert_eq!(
        code(&mccf(dir, &["train", "--config", "nf.json", "--out", "x"])),
        2
    );

    // Validation: unknown field, missing field, bad flag, bad values.
    write(dir, "typo.json", r#"{"trian": "a.csv"}"#);
    let o = mccf(dir, &["train", "--config", "typo.json"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("trian"));
    assert_eq!(code(&mccf(dir, &["train"])), 1);
    assert_eq!(code(&mccf(dir, &["train", "--seed", "minus-one"])), 1);
    assert_eq!(code(&mccf(dir, &["simulate", "--threads", "0"])), 1);
    write(
        dir,
        "ring.json",
        r#"{"ring": {"length": 100, "n_vehicles": 50}}"#,
    );
    assert_eq!(
        code(&mccf(
            dir,
            &["simulate", "--config", "ring.json", "--out", "r"]
        )),
        1
    );
    write(dir, "scen.json", r#"{"scenario": "rush-hour"}"#);
    assert_eq!(
        code(&mccf(
            dir,
            &["simulate", "--config", "scen.json", "--out", "s"]
        )),
        1
    );

    // No pair survives preprocessing.
    let ds = Dataset::new(vec![pair(0, 30)], SplitTag::Unsplit);
    write_trajectory_csv(&ds, dir.join("short.csv")).unwrap();
    write(dir, "short.json", r#"{"inputs": ["short.csv"]}"#);
    let o = mccf(dir, &["ingest", "--config", "short.json", "--out", "short"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("no eligible pairs"));

    assert_eq!(code(&mccf(dir, &["--help"])), 0);
}
