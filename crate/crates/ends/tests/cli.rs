//! End-to-end tests of the binary: exit codes, report schema, determinism.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ends"))
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(&path, text).unwrap();
    path
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn classify_single_discrete_end() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[[end]]\nprofile = \"exp(-r^2)\"\n");
    let json = dir.path().join("report.json");
    let out = bin().args(["classify", "--config"]).arg(&cfg).arg("--out").arg(&json).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("overall: discrete"));

    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    for key in ["version", "config_digest", "ends", "overall"] {
        assert!(doc.get(key).is_some(), "missing key {key}");
    }
    assert_eq!(doc["overall"], "Discrete");
    let ends = doc["ends"].as_array().unwrap();
    assert_eq!(ends.len(), 1);
    let end = &ends[0];
    for key in
        ["label", "volume_class", "criterion", "simplified", "curve", "bounds", "mazja", "completeness", "consistency"]
    {
        assert!(end.get(key).is_some(), "missing end key {key}");
    }
    assert_eq!(end["consistency"]["theorem_corollary_agree"], true);
    assert_eq!(end["consistency"]["completeness_consistent"], true);
}

#[test]
fn classify_conjunction_of_ends() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[[end]]\nprofile = \"exp(-r^2)\"\n\n[[end]]\nprofile = \"exp(r)\"\n",
    );
    let out = bin().args(["classify", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("overall: not_discrete"));
}

#[test]
fn classify_flat_profile_cites_essential_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[[end]]\nprofile = \"1\"\n");
    let out = bin().args(["classify", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("not_discrete"));
    assert!(text.contains("essential spectrum"), "{text}");
}

#[test]
fn corrupted_profile_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[[end]]\nprofile = \"exp(-r\"\n");
    let out = bin().args(["classify", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("error"));
}

#[test]
fn missing_config_exits_1() {
    let out = bin().arg("classify").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn empty_t_grid_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[[end]]\nprofile = \"exp(-r)\"\n");
    let out = bin()
        .args(["spectrum", "--config"])
        .arg(&cfg)
        .args(["--t-grid", ""])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("t-grid"));
}

#[test]
fn threshold_overrides_can_force_inconclusive() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[[end]]\nprofile = \"exp(-r^2)\"\n");
    let out = bin()
        .args(["classify", "--config"])
        .arg(&cfg)
        .args(["--tol-disc", "1e-30", "--tol-ess", "1e30"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(stdout(&out).contains("inconclusive"));
}

#[test]
fn report_requires_out_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[run]\nseed = 42\n\n[[end]]\nprofile = \"exp(-r^2)\"\n",
    );
    let out = bin().args(["report", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1), "report without --out must fail");

    let j1 = dir.path().join("a.json");
    let j2 = dir.path().join("b.json");
    for j in [&j1, &j2] {
        let out = bin()
            .args(["report", "--quiet", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(j)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    }
    let a = std::fs::read(&j1).unwrap();
    let b = std::fs::read(&j2).unwrap();
    assert_eq!(a, b, "same config + seed must give byte-identical reports");
}

#[test]
fn spectrum_csv_cusp_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[[end]]\nlabel = \"cusp\"\nprofile = \"exp(-r)\"\n");
    let csv_dir = dir.path().join("csv");
    let out = bin()
        .args(["spectrum", "--quiet", "--config"])
        .arg(&cfg)
        .arg("--csv")
        .arg(&csv_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = std::fs::read_to_string(csv_dir.join("cusp.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,R,N,lambda,richardson,lower_bound,upper_bound");
    let last = lines.last().unwrap();
    let lambda: f64 = last.split(',').nth(3).unwrap().parse().unwrap();
    assert!((0.24..=0.26).contains(&lambda), "{last}");
}

#[test]
fn stochastic_reports_explosion_fraction() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[run]\nmc_paths = 200\n\n[[end]]\nlabel = \"hot\"\nprofile = \"exp(r^3)\"\n",
    );
    let out = bin().args(["stochastic", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("hot"));
    assert!(text.contains("Incomplete"), "{text}");
    assert!(text.contains("1.0000"), "{text}");
}

#[test]
fn verify_builtin_corpus_passes() {
    let out = bin()
        .arg("verify")
        .env("ENDS_NUM_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("PASS"));
    assert!(!text.contains("FAIL"), "{text}");
}

#[test]
fn csv_profile_source_works() {
    let dir = tempfile::tempdir().unwrap();
    // sampled exp(-r): log-linear extrapolation reproduces the cusp
    let mut rows = String::from("r,omega_bar\n");
    for i in 0..=200 {
        let r = i as f64 * 0.1;
        rows.push_str(&format!("{r},{}\n", (-r).exp()));
    }
    std::fs::write(dir.path().join("cusp.csv"), rows).unwrap();
    let cfg = write_config(dir.path(), "[[end]]\ncsv = \"cusp.csv\"\n");
    let out = bin().args(["classify", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("not_discrete"));
}
