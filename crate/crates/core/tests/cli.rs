use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_packspectra"));
    c.env("PACKSPECTRA_THREADS", "1");
    c
}

fn run(args: &[&str]) -> i32 {
    let out = bin().args(args).output().unwrap();
    out.status.code().unwrap()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("ok");
    assert_eq!(run(&["rmax", "--space", "circle", "--len", "1", "--n", "5", "--out", out.to_str().unwrap()]), 0);
    let r = report(&out);
    assert!((r["results"]["radius"].as_f64().unwrap() - 0.1).abs() < 1e-9);
    assert_eq!(r["provenance"]["seed"], 0);

    assert_eq!(run(&["rmax", "--n", "1"]), 1);
    assert_eq!(run(&["rmax", "--no-such-flag"]), 1);
    assert_eq!(run(&["spectra", "--space", "klein"]), 1);
    assert_eq!(run(&["rmax", "--format", "pdf"]), 1);

    let fail = tmp.path().join("fail");
    assert_eq!(run(&["bisect", "--n", "2", "--tol", "1e-15", "--starts", "1", "--out", fail.to_str().unwrap()]), 2);
    assert!(report(&fail)["assertion_failure"].is_string());
}

#[test]
fn gehring_on_the_shipped_pair_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (data("hopf_a.txt"), data("hopf_b.txt"));
    let args = ["--w", a.to_str().unwrap(), "--wprime", b.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()];
    assert_eq!(run(&[&["gehring"], &args[..]].concat()), 0);
    let r = report(tmp.path());
    assert_eq!(r["results"]["pass"], true);
    assert_eq!(r["results"]["linking_number"].as_i64().unwrap().abs(), 1);
}

#[test]
fn config_file_is_overridden_by_flags_and_unknown_keys_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.cfg");
    std::fs::write(&cfg, "# interval run\nspace = interval\nn = 3\nseed = 11\n").unwrap();
    let out = tmp.path().join("o");
    assert_eq!(run(&["rmax", "--config", cfg.to_str().unwrap(), "--n", "5", "--out", out.to_str().unwrap()]), 0);
    let r = report(&out);
    assert_eq!(r["config"]["n"], "5");
    assert_eq!(r["config"]["space"], "interval");
    assert_eq!(r["provenance"]["seed"], 11);
    assert!((r["results"]["radius"].as_f64().unwrap() - 0.125).abs() < 1e-9);

    std::fs::write(&cfg, "n = 3\ncolour = red\n").unwrap();
    assert_eq!(run(&["rmax", "--config", cfg.to_str().unwrap()]), 1);
}

fn strip_timing(mut v: Value) -> Value {
    v["provenance"]["wall_time_seconds"] = Value::Null;
    v["config"]["out"] = Value::Null;
    v
}

#[test]
fn same_seed_gives_identical_files() {
    let tmp = tempfile::tempdir().unwrap();
    let dirs = [tmp.path().join("a"), tmp.path().join("b")];
    for d in &dirs {
        let code = run(&[
            "spectra", "--space", "circle", "--n", "2", "--quotient", "--seed", "7", "--samples", "1500", "--landmarks", "150",
            "--format", "json,csv,svg", "--out", d.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
    }
    for f in ["barcode.csv", "spectrum.csv", "barcode.svg"] {
        assert_eq!(std::fs::read(dirs[0].join(f)).unwrap(), std::fs::read(dirs[1].join(f)).unwrap(), "{f}");
    }
    assert_eq!(strip_timing(report(&dirs[0])), strip_timing(report(&dirs[1])));
}

#[test]
fn config_echo_reruns_the_same_experiment() {
    let tmp = tempfile::tempdir().unwrap();
    let first = tmp.path().join("first");
    let code = run(&["tubes", "--samples", "20000", "--deltas", "0.2,0.1", "--seed", "3", "--out", first.to_str().unwrap()]);
    assert_eq!(code, 0);
    let r = report(&first);
    let cfg: String = r["config"]
        .as_object()
        .unwrap()
        .iter()
        .map(|(k, v)| format!("{k}={}\n", v.as_str().unwrap()))
        .collect();
    let path = tmp.path().join("echo.cfg");
    std::fs::write(&path, cfg).unwrap();
    let second = tmp.path().join("second");
    let cmd = r["command"].as_str().unwrap();
    assert_eq!(run(&[cmd, "--config", path.to_str().unwrap(), "--out", second.to_str().unwrap()]), 0);
    assert_eq!(strip_timing(report(&first)), strip_timing(report(&second)));
    assert_eq!(std::fs::read(first.join("tubes.csv")).unwrap(), std::fs::read(second.join("tubes.csv")).unwrap());
}

#[test]
fn csv_tables_have_headers_and_full_precision() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run(&["laplace", "--space", "circle", "--m", "64", "--k", "3", "--out", tmp.path().to_str().unwrap()]), 0);
    let text = std::fs::read_to_string(tmp.path().join("eigenvalues.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("index,eigenvalue"));
    let row: Vec<&str> = lines.nth(1).unwrap().split(',').collect();
    let mantissa = row[1].split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(mantissa.len(), 17);
    assert!((row[1].parse::<f64>().unwrap() - 4.0 * std::f64::consts::PI.powi(2)).abs() < 0.1);
}
