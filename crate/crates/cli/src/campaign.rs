//! Campaign execution and the versioned JSON report.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::checks::{run_check, CheckOutcome, Solved};
use crate::config::{load_config, CampaignConfig, Check, ExperimentConfig};
use crate::error::Result;

pub const SCHEMA: u32 = 1;
pub const REPORT_FILE: &str = "report.json";
pub const CONFIG_FILE: &str = "config.ini";
const DEFAULT_OUT: &str = "fheat-out";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_sha256: String,
    pub seed: u64,
    pub versions: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub space: String,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<CheckOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub schema: u32,
    pub name: Option<String>,
    pub provenance: Provenance,
    /// Conjunction of every check contributing to each criterion.
    pub criteria: BTreeMap<String, bool>,
    pub all_passed: bool,
    pub experiments: Vec<ExperimentReport>,
}

impl CampaignReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn outcome(&self, experiment: &str, check: Check) -> Option<&CheckOutcome> {
        self.experiments.iter().find(|e| e.name == experiment)?.checks.iter().find(|c| c.check == check)
    }
}

/// Command-line overrides for a run.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub jobs: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

pub fn run_experiment(exp: &ExperimentConfig, seed: u64) -> ExperimentReport {
    let solved = exp.checks.iter().any(|c| c.needs_solution()).then(|| Solved::compute(exp));
    let checks: Vec<CheckOutcome> = exp.checks.iter().map(|&c| run_check(c, exp, solved.as_ref(), seed)).collect();
    ExperimentReport {
        name: exp.name.clone(),
        space: if exp.space_name.is_empty() { "none".into() } else { exp.space.describe() },
        seed,
        passed: checks.iter().all(|c| c.passed),
        checks,
    }
}

/// Runs every experiment on a pool of `jobs` workers (all cores when
/// `None`); results are assembled in configuration order.
pub fn run_config(cfg: &CampaignConfig, jobs: Option<usize>) -> Result<CampaignReport> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder.build().map_err(|e| std::io::Error::other(e.to_string()))?;
    let experiments: Vec<ExperimentReport> = pool.install(|| {
        cfg.experiments.par_iter().enumerate().map(|(i, exp)| run_experiment(exp, cfg.experiment_seed(i))).collect()
    });
    let mut criteria = BTreeMap::new();
    for outcome in experiments.iter().flat_map(|e| &e.checks) {
        *criteria.entry(outcome.check.criterion().to_string()).or_insert(true) &= outcome.passed;
    }
    let versions = BTreeMap::from([
        ("fheat-cli".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ("schema".to_string(), SCHEMA.to_string()),
    ]);
    Ok(CampaignReport {
        schema: SCHEMA,
        name: cfg.name.clone(),
        provenance: Provenance { config_sha256: cfg.sha256(), seed: cfg.seed, versions },
        all_passed: experiments.iter().all(|e| e.passed),
        criteria,
        experiments,
    })
}

/// Writes `config.ini`, `report.json` and per-experiment artifacts under `out`.
pub fn write_campaign(out: &Path, cfg: &CampaignConfig, report: &CampaignReport) -> Result<()> {
    fs::create_dir_all(out)?;
    fs::write(out.join(CONFIG_FILE), cfg.to_ini())?;
    for exp in &report.experiments {
        let dir = out.join(&exp.name);
        fs::create_dir_all(&dir)?;
        fs::write(dir.join("outcome.json"), serde_json::to_string_pretty(exp)? + "\n")?;
        for artifact in exp.checks.iter().flat_map(|c| &c.files) {
            fs::write(dir.join(&artifact.file), &artifact.contents)?;
        }
    }
    fs::write(out.join(REPORT_FILE), report.to_json()?)?;
    Ok(())
}

/// Loads, runs and writes a campaign; returns the report and its directory.
pub fn run(config_path: &Path, options: &RunOptions) -> Result<(CampaignReport, PathBuf)> {
    let mut cfg = load_config(config_path)?;
    if let Some(seed) = options.seed {
        cfg.seed = seed;
    }
    let out = options.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let report = run_config(&cfg, options.jobs)?;
    write_campaign(&out, &cfg, &report)?;
    Ok((report, out))
}

/// Human-readable table of a written report.
pub fn render_report(dir: &Path) -> Result<String> {
    let text = fs::read_to_string(dir.join(REPORT_FILE))?;
    let report: serde_json::Value = serde_json::from_str(&text)?;
    Ok(render_value(&report))
}

fn render_value(report: &serde_json::Value) -> String {
    let str_of = |v: &serde_json::Value| v.as_str().unwrap_or("").to_string();
    let mut rows = vec![["experiment".to_string(), "check".into(), "status".into(), "summary".into()]];
    for exp in report["experiments"].as_array().into_iter().flatten() {
        for check in exp["checks"].as_array().into_iter().flatten() {
            let status = if check["passed"].as_bool() == Some(true) { "PASS" } else { "FAIL" };
            rows.push([str_of(&exp["name"]), str_of(&check["check"]), status.into(), str_of(&check["summary"])]);
        }
    }
    let widths: Vec<usize> = (0..3).map(|i| rows.iter().map(|r| r[i].chars().count()).max().unwrap_or(0)).collect();
    let mut s = format!(
        "campaign {} (schema {}, config {})\n\n",
        report["name"].as_str().unwrap_or("-"),
        report["schema"],
        report["provenance"]["config_sha256"].as_str().unwrap_or("?")
    );
    for row in &rows {
        for (i, w) in widths.iter().enumerate() {
            s.push_str(&format!("{:<w$}  ", row[i], w = *w));
        }
        s.push_str(&row[3]);
        s.push('\n');
    }
    s.push_str("\ncriteria:\n");
    for (name, ok) in report["criteria"].as_object().into_iter().flatten() {
        s.push_str(&format!("  {:<24} {}\n", name, if ok.as_bool() == Some(true) { "PASS" } else { "FAIL" }));
    }
    s.push_str(&format!("\noverall: {}\n", if report["all_passed"].as_bool() == Some(true) { "PASS" } else { "FAIL" }));
    s
}

/// Spaces and weight profiles known to the configuration.
pub fn list_catalog() -> String {
    let mut s = String::from("model spaces\n");
    for entry in fheat_core::geometry::catalog() {
        s.push_str(&format!(
            "  {:<11} metric {}\n              weight {}\n              curvature {}\n              {}\n",
            entry.name, entry.metric, entry.weight, entry.curvature, entry.note
        ));
    }
    s.push_str(
        "\nweight profiles (key 'weight')\n\
         \x20 zero       f = 0\n\
         \x20 quadratic  f = weight_coef·r² + weight_offset (default 0.25·r², the Gaussian soliton)\n\
         \x20 cosine     f = weight_amplitude·cos(weight_wavenumber·r)\n",
    );
    s
}
