use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_shiftlab"));
    for var in ["SHIFTLAB_CONFIG", "SHIFTLAB_OUT", "SHIFTLAB_THREADS", "SHIFTLAB_SEED", "SHIFTLAB_BUDGET", "SHIFTLAB_TIMINGS"] {
        c.env_remove(var);
    }
    c
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// A small experiment next to a copy of the shipped five-variable system.
fn small_config(dir: &Path, extra: &str) -> PathBuf {
    std::fs::copy(configs().join("systems/quad5.json"), dir.join("quad5.json")).unwrap();
    let path = dir.join("small.json");
    let text = format!(
        r#"{{"system": "quad5.json", "mu": {{"kind": "quadratic", "literal": "sqrt(2)"}}, "tau": ["0"], "eta": "1/4",
            "p": ["2", "4", "6"], "ladder": ["2", "4", "8"], "samples_per_shift": "4096", "max_samples_per_shift": "4096"{extra}}}"#
    );
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn analyze_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let q5 = configs().join("quad5.json");
    let o = run(&["--config", q5.to_str().unwrap(), "--out", out, "analyze"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("S = {1,2}"));
    assert!(dir.path().join("hypotheses.json").exists());

    let q4 = configs().join("quad4.json");
    let o = run(&["--config", q4.to_str().unwrap(), "--out", out, "analyze"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).lines().any(|l| l.starts_with("numvars: FAIL")));

    std::fs::write(dir.path().join("broken.json"), r#"{"n": 2, "d": 2, "forms": [[{"coeff": "x", "exps": [2, 0]}]]}"#).unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"system": "broken.json", "mu": {"kind": "rational", "literal": "1/2"}, "tau": ["0"], "eta": "1", "p": ["2"]}"#).unwrap();
    let o = run(&["--config", cfg.to_str().unwrap(), "--out", out, "analyze"]);
    assert_eq!(o.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "parse");
}

#[test]
fn count_auto_selects_mitm_and_matches_generic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "");
    let o = run(&["--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "count", "--cross-check"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.contains("(mitm)"));
    for line in text.lines() {
        let n = line.split("N = ").nth(1).unwrap().split(' ').next().unwrap();
        let g = line.split("generic N = ").nth(1).unwrap();
        assert_eq!(n, g);
    }
    let csv = std::fs::read_to_string(dir.path().join("counts.csv")).unwrap();
    assert!(csv.starts_with("P,N,method,boundary_flags\n"));
}

#[test]
fn identical_configs_give_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), r#", "seeds": {"density": "7", "hypotheses": "7"}"#);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = run(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "verify"]);
        assert!(matches!(o.status.code(), Some(0) | Some(2)), "{}", String::from_utf8_lossy(&o.stderr));
        let o = run(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "density"]);
        assert!(matches!(o.status.code(), Some(0) | Some(2)));
    }
    for f in ["ratios.csv", "arcs.csv", "kernel_grid.csv", "ladder.csv", "summary.json"] {
        let x = std::fs::read(a.join(f)).unwrap();
        let y = std::fs::read(b.join(f)).unwrap();
        assert_eq!(x, y, "{f} differs");
    }
}

#[test]
fn env_overrides_and_timings() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "");
    let out = dir.path().join("env");
    let o = bin()
        .env("SHIFTLAB_CONFIG", &cfg)
        .env("SHIFTLAB_OUT", &out)
        .env("SHIFTLAB_THREADS", "1")
        .env("SHIFTLAB_TIMINGS", "true")
        .arg("count")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("counts.csv")).unwrap();
    assert!(csv.lines().next().unwrap().ends_with(",seconds"));

    let o = bin().env("SHIFTLAB_CONFIG", &cfg).env("SHIFTLAB_OUT", &out).env("SHIFTLAB_BUDGET", "10").arg("count").output().unwrap();
    let o2 = run(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--budget", "10", "count"]);
    // the meet-in-the-middle route ignores the enumeration budget
    assert_eq!(o.status.code(), o2.status.code());
}

#[test]
fn kernel_check_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "");
    let o = run(&["--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "kernel-check", "--points", "21"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("sandwiched: 21/21"));
}

#[test]
fn approx_and_expsum_with_rational_shift() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(configs().join("systems/hyperbola.json"), dir.path().join("h.json")).unwrap();
    let cfg = dir.path().join("h_cfg.json");
    std::fs::write(
        &cfg,
        r#"{"system": "h.json", "mu": {"kind": "rational", "literal": "1/3"}, "tau": ["0"], "eta": "1/2", "p": ["200"], "theta0": "1/4", "alpha": ["2/5"]}"#,
    )
    .unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["--config", cfg.to_str().unwrap(), "--out", out, "expsum", "--alpha", "1/7"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("P = 200: S = "));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("expsum.json")).unwrap()).unwrap();
    assert!(v["residual"].as_f64().unwrap() < 1e-9);

    // P^delta is far beyond the Baker search cap here
    let start = std::time::Instant::now();
    let o = run(&["--config", cfg.to_str().unwrap(), "--out", out, "approx", "--theta", "1/2"]);
    assert!(start.elapsed().as_secs() < 10);
    assert_eq!(o.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert!(err["error"]["message"].as_str().unwrap().contains("search cap"));
}

#[test]
fn missing_config_is_an_error() {
    let o = run(&["analyze"]);
    assert_eq!(o.status.code(), Some(1));
}
