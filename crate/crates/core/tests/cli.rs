use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use nlwave::cli::{run, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK};
use nlwave::experiments::{load_manifest, load_records, read_snapshot};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

/// Runs the CLI in-process and returns `(code, stdout, stderr)`.
fn nlwave(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(std::iter::once("nlwave").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn simulate_linear_damped_example() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("linear_damped.toml");
    let (code, out, err) = nlwave(&["simulate", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, EXIT_OK, "{out}{err}");

    let records = load_records(&dir.path().join("records.csv")).unwrap();
    assert_eq!(records.len(), 201);
    assert_eq!(records.last().unwrap().t, 20.0);
    for w in records.windows(2) {
        assert!(w[1].energy.total <= w[0].energy.total, "energy rose at t = {}", w[1].t);
    }
    assert!(records.last().unwrap().energy.total < 0.5 * records[0].energy.total);

    let manifest = load_manifest(&dir.path().join("manifest.json")).unwrap();
    assert_eq!(manifest.seed, 11);
    assert_eq!(manifest.basis.modes, 16);
    assert_eq!(manifest.outputs.len(), 2 + 5);
    assert!(manifest.outputs.contains(&"snapshots/00004.bin".to_string()));
    let last = read_snapshot(&dir.path().join("snapshots/00004.bin")).unwrap();
    assert_eq!(last.time, 20.0);
}

#[test]
fn header_is_documented_column_order() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("linear_damped.toml");
    let (code, ..) = nlwave(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--set",
        "run.T=0.1",
    ]);
    assert_eq!(code, EXIT_OK);
    let text = fs::read_to_string(dir.path().join("records.csv")).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "t,E_total,E_kin,E_el,E_pot,E_force,l2_u,l2_v,h1_u,V_eps,resid,tail_frac"
    );
}

#[test]
fn seed_changes_output_and_digest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("linear_damped.toml");
    let mut csv = Vec::new();
    let mut digests = Vec::new();
    for seed in ["1", "2"] {
        let out = dir.path().join(seed);
        let (code, ..) = nlwave(&[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--seed",
            seed,
            "--set",
            "run.T=1",
        ]);
        assert_eq!(code, EXIT_OK);
        csv.push(fs::read(out.join("records.csv")).unwrap());
        digests.push(load_manifest(&out.join("manifest.json")).unwrap().config_digest);
    }
    assert_ne!(csv[0], csv[1]);
    assert_ne!(digests[0], digests[1]);
}

#[test]
fn verify_default_config_passes() {
    let (code, out, err) = nlwave(&["verify", "--workers", "2"]);
    assert_eq!(code, EXIT_OK, "{out}{err}");
    assert_eq!(out.matches("PASS").count(), 6, "{out}");
    assert!(out.contains("6 checks, 0 failed"));
}

#[test]
fn verify_flags_conservative_control() {
    let (code, out, _) = nlwave(&["verify", "--set", "physics.k=0"]);
    assert_eq!(code, EXIT_NUMERICAL);
    assert!(out.contains("assumptions") && out.contains("FAIL"), "{out}");
}

#[test]
fn usage_errors_exit_one() {
    let (code, _, err) = nlwave(&["frobnicate"]);
    assert_eq!(code, EXIT_CONFIG);
    assert!(err.contains("Usage"), "{err}");
    let (code, ..) = nlwave(&[]);
    assert_eq!(code, EXIT_CONFIG);
    let (code, ..) = nlwave(&["verify", "--workers", "0"]);
    assert_eq!(code, EXIT_CONFIG);
    let (code, out, _) = nlwave(&["--help"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("simulate"));
}

#[test]
fn malformed_config_reports_field_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    let text = fs::read_to_string(config("linear_damped.toml")).unwrap();
    fs::write(&path, text.replace("p = 1.0", "p = \"one\"")).unwrap();
    let (code, _, err) = nlwave(&["simulate", "--config", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_CONFIG);
    assert!(err.contains("bad.toml") && err.contains("line"), "{err}");

    let (code, _, err) = nlwave(&["simulate", "--config", "/nonexistent/run.toml"]);
    assert_eq!(code, EXIT_CONFIG);
    assert!(err.contains("/nonexistent/run.toml"), "{err}");

    let (code, _, err) = nlwave(&["simulate", "--set", "step.scheme=euler"]);
    assert_eq!(code, EXIT_CONFIG);
    assert!(err.contains("unknown scheme 'euler'"), "{err}");
}

#[test]
fn resolvent_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("resolvent.toml");
    let out_dir = dir.path().join("ok");
    let (code, out, err) = nlwave(&["resolvent", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK, "{out}{err}");
    assert!(out.contains("sigma = "));
    let saved: serde_json::Value = serde_json::from_str(&fs::read_to_string(out_dir.join("resolvent.json")).unwrap()).unwrap();
    assert!(saved["sigma"].as_f64().unwrap() > 0.0);

    let (code, out, _) = nlwave(&[
        "resolvent",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("strict").to_str().unwrap(),
        "--set",
        "resolvent.tol=1e-300",
    ]);
    assert_eq!(code, EXIT_NUMERICAL);
    assert!(out.contains("above tolerance"));
}

#[test]
fn sweep_and_pair_write_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("linear_damped.toml");
    let sweep_dir = dir.path().join("sweep");
    let (code, out, err) = nlwave(&["sweep", "--config", cfg.to_str().unwrap(), "--out", sweep_dir.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK, "{out}{err}");
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(sweep_dir.join("absorbing.json")).unwrap()).unwrap();
    assert_eq!(report["outcomes"].as_array().unwrap().len(), 2);
    assert!(sweep_dir.join("manifest.json").exists());

    let pair_dir = dir.path().join("pair");
    let (code, out, err) = nlwave(&[
        "pair",
        "--config",
        config("nonlinear_forced.toml").to_str().unwrap(),
        "--out",
        pair_dir.to_str().unwrap(),
        "--set",
        "pair.times=[1.0, 5.0]",
        "--set",
        "pair.count=3",
    ]);
    assert_eq!(code, EXIT_OK, "{out}{err}");
    let m = fs::read_to_string(pair_dir.join("pair_001.csv")).unwrap();
    assert_eq!(m.lines().count(), 3);
    assert!(m.starts_with("0.0,"));
}

#[test]
fn pair_without_section_is_a_config_error() {
    let (code, _, err) = nlwave(&["pair", "--config", config("resolvent.toml").to_str().unwrap()]);
    assert_eq!(code, EXIT_CONFIG);
    assert!(err.contains("[pair]"), "{err}");
}

#[test]
fn binary_uses_output_root_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_nlwave"))
        .args(["simulate", "--config"])
        .arg(config("linear_damped.toml"))
        .args(["--set", "run.T=0.5"])
        .env("NLWAVE_OUT", dir.path())
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let runs: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(runs.len(), 1);
    let name = runs[0].to_string_lossy().into_owned();
    assert!(name.starts_with("simulate-"), "{name}");
    assert!(dir.path().join(&name).join("records.csv").exists());

    let bad = Command::new(env!("CARGO_BIN_EXE_nlwave")).arg("nope").output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
}
