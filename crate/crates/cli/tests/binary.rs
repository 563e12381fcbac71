//! The `fheat` binary: verbs, flags and exit status.

use std::path::Path;
use std::process::{Command, Output};

fn fheat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fheat")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn catalog_lists_spaces_with_curvature() {
    let out = fheat(&["catalog"]);
    assert!(out.status.success());
    let text = stdout(&out);
    for needle in ["gaussian", "lower bound 1/2", "hyperbolic", "K = 1", "circle", "λ₁", "quadratic", "cosine"] {
        assert!(text.contains(needle), "{needle}");
    }
}

#[test]
fn liouville_only_campaign_exits_zero_and_renders() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.ini", "[campaign]\nseed = 5\n[table]\nverify = liouville\n");
    let out_dir = dir.path().join("out");
    let out = fheat(&["run", &cfg, "--out", out_dir.to_str().unwrap(), "--jobs", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["schema"], 1);
    assert_eq!(report["experiments"][0]["checks"][0]["detail"]["truth_table"].as_array().unwrap().len(), 5);
    let rendered = fheat(&["report", out_dir.to_str().unwrap()]);
    assert!(rendered.status.success());
    assert!(stdout(&rendered).contains("liouville") && stdout(&rendered).contains("overall: PASS"));
}

#[test]
fn constant_data_gives_a_zero_ratio_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.ini",
        "[campaign]\n[still]\nspace = flat\nn = 3\nverify = hamilton, souplet_zhang\nextent = 4\ncells = 32\n\
         levels = 2\ndt = 0.05\ninitial = constant\ninitial_base = 0.5\nD = 0.5\nT = 0.2\nR = 2\n",
    );
    let out_dir = dir.path().join("out");
    let out = fheat(&["run", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stdout(&out));
    let rows = std::fs::read_to_string(out_dir.join("still/hamilton_R2.csv")).unwrap();
    assert!(rows.starts_with("r,t,lhs,rhs_bracket,ratio\n"));
    let max_ratio =
        rows.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap()).fold(0.0, f64::max);
    // only Thomas-solve rounding remains
    assert!(max_ratio < 1e-12, "{max_ratio}");
}

#[test]
fn seed_flag_is_recorded_in_the_emitted_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.ini", "[campaign]\nseed = 1\n[t]\nverify = liouville\n");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(fheat(&["run", &cfg, "--out", a.to_str().unwrap(), "--seed", "9"]).status.success());
    assert!(fheat(&["run", &cfg, "--out", b.to_str().unwrap()]).status.success());
    let emitted = std::fs::read_to_string(a.join("config.ini")).unwrap();
    assert!(emitted.contains("seed = 9"));
    let read = |d: &Path| std::fs::read_to_string(d.join("report.json")).unwrap();
    assert_ne!(read(&a), read(&b));
}

#[test]
fn failing_check_exits_one_and_config_error_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    // D understates the data: collected as a failed check
    let bad = write(
        dir.path(),
        "bad.ini",
        "[campaign]\n[x]\nspace = flat\nn = 2\nverify = lemma1\nextent = 4\ncells = 32\ndt = 0.05\n\
         initial = bump\nD = 1.5\nT = 0.1\n",
    );
    let out = fheat(&["run", &bad, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("FAIL"));

    let invalid = write(dir.path(), "invalid.ini", "[campaign]\n[x]\nverify = cutoff\nR = 2\nepsilon = 1.5\nT = 1\n");
    let out = fheat(&["run", &invalid]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("x.epsilon"));
}
