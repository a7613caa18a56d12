use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

const BIN: &str = env!("CARGO_BIN_EXE_extropy");

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env("EXTROPY_LOG", "error")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const CML: &str = r#"{
    "seed": 11,
    "system": {"kind": "logistic_cml", "r": 4.0, "coupling": 0.1},
    "eps": [0.5, 0.25],
    "sequence": {"kind": "growing"},
    "k_grid": [1, 2, 3],
    "n_grid": [64, 128, 192, 256],
    "tau": [1, 2],
    "samples": 3,
    "ensemble": 128
}"#;

fn read_all(dir: &Path) -> Vec<(String, String)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv" || x == "json"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read_to_string(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn outputs_do_not_depend_on_worker_count() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "cml.json", CML);
    for cmd in ["simulate", "complexity", "entropy"] {
        let mut seen = Vec::new();
        for (tag, workers) in [("a", "1"), ("b", "8"), ("c", "1")] {
            let out = tmp.path().join(format!("{cmd}-{tag}"));
            let o = run(&[
                cmd,
                "--config",
                &cfg,
                "--workers",
                workers,
                "--out",
                out.to_str().unwrap(),
            ]);
            assert!(
                o.status.success(),
                "{cmd}: {}",
                String::from_utf8_lossy(&o.stderr)
            );
            seen.push(read_all(&out));
        }
        assert!(!seen[0].is_empty());
        assert_eq!(seen[0], seen[1], "{cmd}: 1 vs 8 workers");
        assert_eq!(seen[0], seen[2], "{cmd}: rerun");
    }
}

#[test]
fn manifest_records_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "cml.json", CML);
    let out = tmp.path().join("o");
    let o = run(&[
        "validate-seq",
        "--config",
        &cfg,
        "--seed",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let m: serde_json::Value =
        serde_json::from_slice(&fs::read(out.join("run.json")).unwrap()).unwrap();
    assert_eq!(m["command"], "validate-seq");
    assert_eq!(m["seed"], 5);
    assert_eq!(m["outputs"][0]["file"], "validation.csv");
    let csv = fs::read_to_string(out.join("validation.csv")).unwrap();
    assert!(csv.starts_with("sequence,pass,condition,k,l_a,l_b,k_max,l_min\n"));
    assert!(csv.lines().nth(1).unwrap().starts_with("growing,true,"));
}

#[test]
fn bad_config_exits_with_2_and_names_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let bad = CML.replace(
        "\"n_grid\": [64, 128, 192, 256]",
        "\"n_grid\": [64, 32, 192, 256]",
    );
    let cfg = write_config(tmp.path(), "bad.json", &bad);
    let o = run(&[
        "complexity",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("n_grid[1]"));

    let cfg = write_config(tmp.path(), "noseed.json", &CML.replace("\"seed\": 11,", ""));
    let o = run(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed"));

    let cfg = write_config(
        tmp.path(),
        "r.json",
        &CML.replace("\"r\": 4.0", "\"r\": \"four\""),
    );
    let o = run(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("system"));

    let o = run(&[
        "simulate",
        "--config",
        tmp.path().join("missing.json").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn enumeration_guard_exits_with_3() {
    let tmp = tempfile::tempdir().unwrap();
    let text = CML.replace("\"ensemble\": 128", "\"ensemble\": 128, \"axioms\": {\"h4_max_len\": 40, \"words\": 10, \"max_len\": 32, \"product_max_len\": 32}");
    let cfg = write_config(tmp.path(), "big.json", &text);
    let out = tmp.path().join("o");
    let o = run(&["axioms", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(
        o.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(!out.join("run.json").exists());
}

#[test]
fn eight_site_cml_simulates_quickly() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "perf.json",
        r#"{
            "seed": 3,
            "system": {"kind": "logistic_cml", "r": 4.0, "coupling": 0.1},
            "windows": [[0, 8]],
            "n_grid": [256],
            "samples": 1
        }"#,
    );
    let out = tmp.path().join("o");
    let t = Instant::now();
    let o = run(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    let elapsed = t.elapsed();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(elapsed < Duration::from_secs(5), "{elapsed:?}");
    let csv = fs::read_to_string(out.join("trajectories.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 8 * 256);
}
