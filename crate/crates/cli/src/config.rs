//! INI campaign configuration.
//!
//! A campaign file has one `[campaign]` section (`seed`, optional `name` and
//! `out`) and one section per experiment; the section name is the experiment
//! name. Every experiment key is validated here so that a bad value is
//! reported against `section.key` before anything runs.
//!
//! ```ini
//! [campaign]
//! seed = 7
//!
//! [flat_hamilton]
//! space = flat
//! n = 2
//! verify = hamilton, lemma1
//! extent = 6
//! cells = 48
//! levels = 2
//! dt = 0.02
//! initial = bump
//! initial_base = 0.6
//! initial_amplitude = 0.9
//! a = 0
//! D = 1.5
//! T = 0.2
//! R = 2
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use fheat_core::discretize::OuterBoundary;
use fheat_core::estimates::Mutation;
use fheat_core::geometry::ModelSpace;
use fheat_core::logsobolev::Verdict;
use fheat_core::solver::{EvolutionMode, EvolutionParams, ReactionScheme, StepConfig};
use ini::Ini;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

/// Keys forwarded to the space catalog.
const SPACE_KEYS: &[&str] =
    &["n", "L", "weight", "weight_coef", "weight_offset", "weight_amplitude", "weight_wavenumber", "table"];

const EXPERIMENT_KEYS: &[&str] = &[
    "space",
    "verify",
    "extent",
    "cells",
    "levels",
    "dt",
    "boundary",
    "mode",
    "reaction",
    "initial",
    "initial_base",
    "initial_amplitude",
    "initial_width",
    "initial_wavenumber",
    "a",
    "D",
    "delta",
    "t0",
    "T",
    "tau",
    "R",
    "K",
    "m",
    "epsilon",
    "scale",
    "mutation",
    "cases",
    "starts",
    "iterations",
];

const CAMPAIGN_KEYS: &[&str] = &["seed", "name", "out"];

/// One verification an experiment can request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Manufactured,
    Bochner,
    Comparison,
    Hamilton,
    SoupletZhang,
    Lemma1,
    Lemma2,
    Cutoff,
    Logsobolev,
    Liouville,
}

impl Check {
    pub const ALL: [Check; 10] = [
        Check::Manufactured,
        Check::Bochner,
        Check::Comparison,
        Check::Hamilton,
        Check::SoupletZhang,
        Check::Lemma1,
        Check::Lemma2,
        Check::Cutoff,
        Check::Logsobolev,
        Check::Liouville,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Check::Manufactured => "manufactured",
            Check::Bochner => "bochner",
            Check::Comparison => "comparison",
            Check::Hamilton => "hamilton",
            Check::SoupletZhang => "souplet_zhang",
            Check::Lemma1 => "lemma1",
            Check::Lemma2 => "lemma2",
            Check::Cutoff => "cutoff",
            Check::Logsobolev => "logsobolev",
            Check::Liouville => "liouville",
        }
    }

    /// Acceptance criterion a check contributes to.
    pub fn criterion(self) -> &'static str {
        match self {
            Check::Manufactured => "manufactured_solution",
            Check::Lemma1 | Check::Lemma2 => "lemma_residuals",
            other => other.as_str(),
        }
    }

    pub fn needs_solution(self) -> bool {
        matches!(self, Check::Manufactured | Check::Hamilton | Check::SoupletZhang | Check::Lemma1 | Check::Lemma2)
    }
}

impl FromStr for Check {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Check::ALL.into_iter().find(|c| c.as_str() == s).ok_or_else(|| {
            let known: Vec<_> = Check::ALL.iter().map(|c| c.as_str()).collect();
            format!("unknown verification '{s}' (known: {})", known.join(", "))
        })
    }
}

/// Initial data, also used as the test function for `bochner`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialData {
    Constant {
        value: f64,
    },
    /// `base + amplitude·exp(−r²/width)`
    Bump {
        base: f64,
        amplitude: f64,
        width: f64,
    },
    /// `base + amplitude·sin(wavenumber·r)`
    Sine {
        base: f64,
        amplitude: f64,
        wavenumber: f64,
    },
}

impl InitialData {
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            InitialData::Constant { value } => value,
            InitialData::Bump { base, amplitude, width } => base + amplitude * (-r * r / width).exp(),
            InitialData::Sine { base, amplitude, wavenumber } => base + amplitude * (wavenumber * r).sin(),
        }
    }

    /// The same profile multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        match *self {
            InitialData::Constant { value } => InitialData::Constant { value: s * value },
            InitialData::Bump { base, amplitude, width } => {
                InitialData::Bump { base: s * base, amplitude: s * amplitude, width }
            }
            InitialData::Sine { base, amplitude, wavenumber } => {
                InitialData::Sine { base: s * base, amplitude: s * amplitude, wavenumber }
            }
        }
    }
}

/// One grid of a refinement sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub cells: usize,
    pub dt: Option<f64>,
}

/// A Liouville classification row, optionally with the expected verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiouvilleCase {
    pub a: f64,
    pub lower: f64,
    pub upper: f64,
    pub growth: bool,
    pub expected: Option<Verdict>,
}

impl LiouvilleCase {
    /// One row per branch of the classification.
    pub fn standard_table() -> Vec<Self> {
        let e2 = (-2.0f64).exp();
        let row = |a, lower, upper, growth, v| LiouvilleCase { a, lower, upper, growth, expected: Some(v) };
        vec![
            row(1.0, 0.01, e2, false, Verdict::NoSuchSolution),
            row(-1.0, e2, 0.5, false, Verdict::NoSuchSolution),
            row(-1.0, e2, 2.0, false, Verdict::IdenticallyOne),
            row(0.0, 0.1, 5.0, true, Verdict::Constant),
            row(1.0, 0.1, 0.5, true, Verdict::OutOfTheoremScope),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub space_name: String,
    pub space: ModelSpace,
    pub checks: Vec<Check>,
    pub levels: Vec<Level>,
    /// Radial grid extent; circles use their circumference.
    pub extent: Option<f64>,
    pub step: StepConfig,
    pub initial: Option<InitialData>,
    /// Present when a solver-based check is selected.
    pub params: Option<EvolutionParams>,
    pub a: f64,
    pub t0: Option<f64>,
    pub horizon: Option<f64>,
    pub tau: Vec<f64>,
    pub radii: Vec<f64>,
    pub k: f64,
    pub m: Vec<f64>,
    pub epsilon: Vec<f64>,
    pub scale: Option<f64>,
    pub mutation: Option<Mutation>,
    pub cases: Vec<LiouvilleCase>,
    pub starts: usize,
    pub iterations: usize,
    /// Trimmed key/value pairs as written, for re-emission.
    pub raw: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignConfig {
    pub seed: u64,
    pub name: Option<String>,
    /// Output directory from the file; not part of the canonical form.
    pub out: Option<PathBuf>,
    pub experiments: Vec<ExperimentConfig>,
}

impl CampaignConfig {
    /// Canonical INI text: `[campaign]` first, experiments in file order,
    /// keys sorted. `out` is omitted so a re-run elsewhere hashes the same.
    pub fn to_ini(&self) -> String {
        let mut s = String::from("[campaign]\n");
        if let Some(name) = &self.name {
            let _ = writeln!(s, "name = {name}");
        }
        let _ = writeln!(s, "seed = {}", self.seed);
        for exp in &self.experiments {
            let _ = write!(s, "\n[{}]\n", exp.name);
            for (k, v) in &exp.raw {
                let _ = writeln!(s, "{k} = {v}");
            }
        }
        s
    }

    /// Hex SHA-256 of [`Self::to_ini`].
    pub fn sha256(&self) -> String {
        let digest = Sha256::digest(self.to_ini().as_bytes());
        digest.iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    /// Per-experiment seed derived from the campaign seed.
    pub fn experiment_seed(&self, index: usize) -> u64 {
        self.seed.wrapping_add(index as u64)
    }
}

pub fn load_config(path: &Path) -> Result<CampaignConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<CampaignConfig> {
    let ini = Ini::load_from_str(text).map_err(|e| CliError::Syntax(e.to_string()))?;
    let mut campaign: Option<BTreeMap<String, String>> = None;
    let mut sections: Vec<(String, BTreeMap<String, String>)> = Vec::new();
    for (section, props) in ini.iter() {
        let Some(section) = section else {
            if let Some((k, _)) = props.iter().next() {
                return Err(config_err(k, "keys must belong to a section"));
            }
            continue;
        };
        let section = section.trim().to_string();
        let mut map = BTreeMap::new();
        for (k, v) in props.iter() {
            let key = k.trim().to_string();
            if map.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(config_err(&format!("{section}.{key}"), "duplicate key"));
            }
        }
        if section == "campaign" {
            if campaign.is_some() {
                return Err(config_err("campaign", "duplicate section"));
            }
            campaign = Some(map);
        } else {
            if sections.iter().any(|(s, _)| *s == section) {
                return Err(config_err(&section, "duplicate experiment name"));
            }
            sections.push((section, map));
        }
    }
    let campaign = campaign.ok_or_else(|| config_err("campaign", "missing [campaign] section"))?;
    for key in campaign.keys() {
        if !CAMPAIGN_KEYS.contains(&key.as_str()) {
            return Err(config_err(&format!("campaign.{key}"), "unknown key"));
        }
    }
    let seed = match campaign.get("seed") {
        Some(v) => v.parse::<u64>().map_err(|_| config_err("campaign.seed", &format!("'{v}' is not a u64")))?,
        None => 0,
    };
    if sections.is_empty() {
        return Err(config_err("campaign", "no experiments configured"));
    }
    let experiments = sections
        .into_iter()
        .map(|(name, raw)| ExperimentConfig::from_section(name, raw))
        .collect::<Result<Vec<_>>>()?;
    Ok(CampaignConfig {
        seed,
        name: campaign.get("name").cloned(),
        out: campaign.get("out").map(PathBuf::from),
        experiments,
    })
}

fn config_err(key: &str, message: &str) -> CliError {
    CliError::Config { key: key.to_string(), message: message.to_string() }
}

/// Typed access to one section, with errors naming `section.key`.
struct Section<'a> {
    name: &'a str,
    raw: &'a BTreeMap<String, String>,
}

impl Section<'_> {
    fn err(&self, key: &str, message: impl AsRef<str>) -> CliError {
        config_err(&format!("{}.{key}", self.name), message.as_ref())
    }

    fn str(&self, key: &str) -> Option<&str> {
        self.raw.get(key).map(String::as_str)
    }

    fn parse<T: FromStr>(&self, key: &str, what: &str) -> Result<Option<T>> {
        self.str(key).map(|v| v.parse::<T>().map_err(|_| self.err(key, format!("'{v}' is not {what}")))).transpose()
    }

    fn num(&self, key: &str) -> Result<Option<f64>> {
        let v = self.parse::<f64>(key, "a number")?;
        match v {
            Some(x) if !x.is_finite() => Err(self.err(key, "must be finite")),
            _ => Ok(v),
        }
    }

    fn require_num(&self, key: &str, why: &str) -> Result<f64> {
        self.num(key)?.ok_or_else(|| self.err(key, format!("required by {why}")))
    }

    fn list<T: FromStr>(&self, key: &str, what: &str) -> Result<Vec<T>> {
        let Some(v) = self.str(key) else { return Ok(Vec::new()) };
        v.split(',')
            .map(|item| {
                let item = item.trim();
                item.parse::<T>().map_err(|_| self.err(key, format!("'{item}' is not {what}")))
            })
            .collect()
    }

    fn nums(&self, key: &str) -> Result<Vec<f64>> {
        let v: Vec<f64> = self.list(key, "a number")?;
        if v.iter().any(|x| !x.is_finite()) {
            return Err(self.err(key, "values must be finite"));
        }
        Ok(v)
    }
}

impl ExperimentConfig {
    fn from_section(name: String, raw: BTreeMap<String, String>) -> Result<Self> {
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(config_err(&name, "experiment names may only use letters, digits, '_' and '-'"));
        }
        let sec = Section { name: &name, raw: &raw };
        for key in raw.keys() {
            if !EXPERIMENT_KEYS.contains(&key.as_str()) && !SPACE_KEYS.contains(&key.as_str()) {
                return Err(sec.err(key, "unknown key"));
            }
        }

        let checks: Vec<Check> = sec.list("verify", "a verification").map_err(|_| {
            let bad = sec
                .str("verify")
                .unwrap_or_default()
                .split(',')
                .map(str::trim)
                .find_map(|s| Check::from_str(s).err())
                .unwrap_or_default();
            sec.err("verify", bad)
        })?;
        if checks.is_empty() {
            return Err(sec.err("verify", "at least one verification is required"));
        }
        let has = |c: Check| checks.contains(&c);
        let solving = checks.iter().any(|c| c.needs_solution());

        let space_name = match sec.str("space") {
            Some(s) => s.to_string(),
            None if checks.iter().all(|c| matches!(c, Check::Liouville | Check::Cutoff)) => String::new(),
            None => return Err(sec.err("space", "required by the selected verifications")),
        };
        let space_params: BTreeMap<String, String> =
            raw.iter().filter(|(k, _)| SPACE_KEYS.contains(&k.as_str())).map(|(k, v)| (k.clone(), v.clone())).collect();
        let space = if space_name.is_empty() {
            ModelSpace::flat(1)?
        } else {
            ModelSpace::from_catalog(&space_name, &space_params).map_err(|e| {
                let message = e.to_string();
                let key = quoted_key(&message).filter(|k| SPACE_KEYS.contains(k)).unwrap_or("space");
                sec.err(key, &message)
            })?
        };

        let a = sec.num("a")?.unwrap_or(0.0);
        let k = sec.num("K")?.unwrap_or(0.0);
        if k < 0.0 {
            return Err(sec.err("K", "must be ≥ 0"));
        }
        let horizon = sec.num("T")?;
        if let Some(t) = horizon {
            if t <= 0.0 {
                return Err(sec.err("T", "must be positive"));
            }
        }
        let t0 = sec.num("t0")?.or(horizon);
        let tau = sec.nums("tau")?;
        let radii = sec.nums("R")?;
        let m = sec.nums("m")?;
        if m.iter().any(|&x| x <= 0.0) {
            return Err(sec.err("m", "values must be positive"));
        }
        let epsilon = sec.nums("epsilon")?;
        if epsilon.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
            return Err(sec.err("epsilon", "values must lie in (0, 1)"));
        }

        let levels = build_levels(&sec)?;
        let needs_cells = solving || has(Check::Bochner) || has(Check::Logsobolev);
        if needs_cells && levels.is_empty() {
            return Err(sec.err("cells", "required by the selected verifications"));
        }
        if solving && levels.iter().any(|l| l.dt.is_none()) {
            return Err(sec.err("dt", "required by the selected verifications"));
        }
        let extent = sec.num("extent")?;
        if (solving || has(Check::Bochner)) && !space.is_circle() {
            match extent {
                Some(x) if x > 0.0 => {}
                Some(_) => return Err(sec.err("extent", "must be positive")),
                None => return Err(sec.err("extent", "required for radial grids")),
            }
        }

        let initial = parse_initial(&sec)?;
        if (solving || has(Check::Bochner)) && initial.is_none() {
            return Err(sec.err("initial", "required by the selected verifications"));
        }
        if has(Check::Manufactured) && !matches!(initial, Some(InitialData::Constant { .. })) {
            return Err(sec.err("initial", "manufactured requires constant initial data"));
        }

        let step = StepConfig {
            outer: match sec.str("boundary").unwrap_or("neumann") {
                "neumann" => OuterBoundary::Neumann,
                "dirichlet" => OuterBoundary::Dirichlet,
                other => return Err(sec.err("boundary", format!("'{other}' is not neumann or dirichlet"))),
            },
            mode: match sec.str("mode").unwrap_or("direct") {
                "direct" => EvolutionMode::Direct,
                "logarithmic" => EvolutionMode::Logarithmic,
                other => return Err(sec.err("mode", format!("'{other}' is not direct or logarithmic"))),
            },
            reaction: match sec.str("reaction").unwrap_or("heun") {
                "heun" => ReactionScheme::Heun,
                "forward_euler" => ReactionScheme::ForwardEuler,
                other => return Err(sec.err("reaction", format!("'{other}' is not heun or forward_euler"))),
            },
        };

        let params = if solving {
            let upper = sec.require_num("D", "the solver")?;
            let horizon = horizon.ok_or_else(|| sec.err("T", "required by the solver"))?;
            let delta = sec.num("delta")?;
            if a < 0.0 && delta.is_none() {
                return Err(sec.err("delta", "required when a < 0"));
            }
            let p = EvolutionParams::new(a, upper, delta, t0.unwrap_or(horizon), horizon)
                .map_err(|e| sec.err(if delta.is_some() { "delta" } else { "D" }, e.to_string()))?;
            let p = match tau.as_slice() {
                [] => p,
                [t] => p.with_tau(*t).map_err(|e| sec.err("tau", e.to_string()))?,
                _ => return Err(sec.err("tau", "solver-based verifications take a single τ")),
            };
            Some(p)
        } else {
            None
        };

        if has(Check::Hamilton) || has(Check::SoupletZhang) {
            if radii.is_empty() {
                return Err(sec.err("R", "required by hamilton/souplet_zhang"));
            }
            if let Some(r) = radii.iter().find(|&&r| r < 2.0) {
                return Err(sec.err("R", format!("the gradient estimates assume R ≥ 2, got {r}")));
            }
        }
        if has(Check::Comparison) && radii.is_empty() {
            return Err(sec.err("R", "required by comparison"));
        }
        if has(Check::Cutoff) {
            if radii.is_empty() {
                return Err(sec.err("R", "required by cutoff"));
            }
            if epsilon.is_empty() {
                return Err(sec.err("epsilon", "required by cutoff"));
            }
            if horizon.is_none() {
                return Err(sec.err("T", "required by cutoff"));
            }
        }
        if has(Check::Logsobolev) && !space.is_circle() {
            return Err(sec.err("space", "logsobolev requires a circle"));
        }

        let scale = sec.num("scale")?;
        if let Some(s) = scale {
            if !(has(Check::Hamilton) || has(Check::SoupletZhang)) {
                return Err(sec.err("scale", "only used by hamilton/souplet_zhang"));
            }
            if s <= 0.0 {
                return Err(sec.err("scale", "must be positive"));
            }
            if a != 0.0 {
                return Err(sec.err("scale", "scale invariance only holds at a = 0"));
            }
        }
        let mutation = match sec.str("mutation") {
            None => None,
            Some(_) if !(has(Check::Lemma1) || has(Check::Lemma2)) => {
                return Err(sec.err("mutation", "only used by lemma1/lemma2"))
            }
            Some("flip_coupling") => Some(Mutation::FlipCoupling),
            Some("flip_quadratic") => Some(Mutation::FlipQuadratic),
            Some(other) => return Err(sec.err("mutation", format!("'{other}' is not flip_coupling or flip_quadratic"))),
        };
        let cases = match sec.str("cases") {
            Some(text) => parse_cases(&sec, text)?,
            None => LiouvilleCase::standard_table(),
        };
        let starts = sec.parse::<usize>("starts", "a count")?.unwrap_or(6);
        let iterations = sec.parse::<usize>("iterations", "a count")?.unwrap_or(400);
        if starts == 0 {
            return Err(sec.err("starts", "must be at least 1"));
        }

        Ok(Self {
            name: name.clone(),
            space_name,
            space,
            checks,
            levels,
            extent,
            step,
            initial,
            params,
            a,
            t0,
            horizon,
            tau,
            radii,
            k,
            m,
            epsilon,
            scale,
            mutation,
            cases,
            starts,
            iterations,
            raw: raw.clone(),
        })
    }

    pub fn has(&self, check: Check) -> bool {
        self.checks.contains(&check)
    }
}

/// The `k` in a catalog message of the form `key 'k' …`.
fn quoted_key(message: &str) -> Option<&str> {
    let rest = &message[message.find("key '")? + 5..];
    Some(&rest[..rest.find('\'')?])
}

/// `cells`/`dt` lists of equal length (a single value is broadcast), or
/// single values halved `levels − 1` times.
fn build_levels(sec: &Section) -> Result<Vec<Level>> {
    let cells: Vec<usize> = sec.list("cells", "a cell count")?;
    let dts = sec.nums("dt")?;
    if dts.iter().any(|&d| d <= 0.0) {
        return Err(sec.err("dt", "values must be positive"));
    }
    let levels = sec.parse::<usize>("levels", "a count")?;
    if levels == Some(0) {
        return Err(sec.err("levels", "must be at least 1"));
    }
    if cells.is_empty() {
        if !dts.is_empty() {
            return Err(sec.err("cells", "required when dt is given"));
        }
        return Ok(Vec::new());
    }
    let listed = cells.len().max(dts.len());
    if listed > 1 {
        for (key, len) in [("cells", cells.len()), ("dt", dts.len())] {
            if len > 1 && len != listed {
                return Err(sec.err(key, format!("expected {listed} values to match the other refinement list")));
            }
        }
        if levels.is_some_and(|l| l != listed) {
            return Err(sec.err("levels", format!("conflicts with the {listed}-entry refinement lists")));
        }
        let pick = |v: &[f64], i: usize| v.get(i).or(v.first()).copied();
        return Ok((0..listed)
            .map(|i| Level { cells: *cells.get(i).unwrap_or(&cells[0]), dt: pick(&dts, i) })
            .collect());
    }
    Ok((0..levels.unwrap_or(1))
        .map(|k| Level { cells: cells[0] << k, dt: dts.first().map(|d| d / (1u64 << k) as f64) })
        .collect())
}

fn parse_initial(sec: &Section) -> Result<Option<InitialData>> {
    let Some(kind) = sec.str("initial") else { return Ok(None) };
    let base = sec.num("initial_base")?;
    let amplitude = sec.num("initial_amplitude")?.unwrap_or(1.0);
    Ok(Some(match kind {
        "constant" => InitialData::Constant {
            value: base.ok_or_else(|| sec.err("initial_base", "required by constant initial data"))?,
        },
        "bump" => {
            let width = sec.num("initial_width")?.unwrap_or(1.0);
            if width <= 0.0 {
                return Err(sec.err("initial_width", "must be positive"));
            }
            InitialData::Bump { base: base.unwrap_or(1.0), amplitude, width }
        }
        "sine" => InitialData::Sine {
            base: base.unwrap_or(1.0),
            amplitude,
            wavenumber: sec.num("initial_wavenumber")?.unwrap_or(1.0),
        },
        other => return Err(sec.err("initial", format!("'{other}' is not constant, bump or sine"))),
    }))
}

/// `a lower upper growth [expected]; …`
fn parse_cases(sec: &Section, text: &str) -> Result<Vec<LiouvilleCase>> {
    text.split(';')
        .map(str::trim)
        .filter(|row| !row.is_empty())
        .map(|row| {
            let fields: Vec<&str> = row.split_whitespace().collect();
            if !(4..=5).contains(&fields.len()) {
                return Err(sec.err("cases", format!("row '{row}' needs 'a lower upper growth [expected]'")));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| sec.err("cases", format!("'{s}' is not a number")));
            let growth = fields[3]
                .parse::<bool>()
                .map_err(|_| sec.err("cases", format!("'{}' is not true or false", fields[3])))?;
            let expected = fields
                .get(4)
                .map(|v| {
                    serde_json::from_value::<Verdict>(serde_json::Value::String(v.to_string()))
                        .map_err(|_| sec.err("cases", format!("'{v}' is not a verdict")))
                })
                .transpose()?;
            Ok(LiouvilleCase { a: num(fields[0])?, lower: num(fields[1])?, upper: num(fields[2])?, growth, expected })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "[campaign]\nseed = 3\n\n";

    fn key_of(err: CliError) -> String {
        match err {
            CliError::Config { key, .. } => key,
            other => panic!("expected a config error, got {other}"),
        }
    }

    #[test]
    fn liouville_only_needs_nothing_else() {
        let cfg = parse_config(&format!("{BASE}[table]\nverify = liouville\n")).unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.experiments[0].cases.len(), 5);
    }

    #[test]
    fn errors_name_the_offending_key() {
        let cases = [
            ("[x]\nverify = hamilton\n", "x.space"),
            ("[x]\nverify = nonsense\n", "x.verify"),
            ("[x]\nverify = liouville\ncolour = red\n", "x.colour"),
            ("[x]\nspace = flat\nn = 2\nverify = hamilton\nextent = 4\ncells = 32\ndt = 0.1\ninitial = bump\nD = 2\nT = 1\nR = 1\n", "x.R"),
            ("[x]\nspace = flat\nn = 2\nverify = hamilton\nextent = 4\ncells = 32\ndt = 0.1\ninitial = bump\nD = 2\nT = 1\n", "x.R"),
            ("[x]\nspace = flat\nn = 2\nverify = lemma1\nextent = 4\ncells = 32\ndt = 0.1\ninitial = bump\nD = 2\nT = 1\na = -1\n", "x.delta"),
            ("[x]\nspace = flat\nn = 2\nverify = lemma1\nextent = 4\ncells = 32\ndt = abc\ninitial = bump\nD = 2\nT = 1\n", "x.dt"),
            ("[x]\nspace = flat\nn = 2\nverify = logsobolev\ncells = 64\n", "x.space"),
            ("[x]\nverify = cutoff\nR = 2\nT = 1\n", "x.epsilon"),
            ("[x]\nspace = flat\nverify = comparison\nR = 2\n", "x.n"),
            ("[x]\nspace = moon\nverify = comparison\nR = 2\n", "x.space"),
            ("[x]\nverify = liouville\ncases = 1 2 3\n", "x.cases"),
        ];
        for (body, key) in cases {
            let err = parse_config(&format!("{BASE}{body}")).unwrap_err();
            assert_eq!(key_of(err), key, "{body}");
        }
        assert_eq!(key_of(parse_config("[x]\nverify = liouville\n").unwrap_err()), "campaign");
        assert_eq!(
            key_of(parse_config("[campaign]\nseed = -1\n[x]\nverify = liouville\n").unwrap_err()),
            "campaign.seed"
        );
    }

    #[test]
    fn levels_halve_or_follow_lists() {
        let cfg = parse_config(&format!(
            "{BASE}[h]\nspace = flat\nn = 2\nverify = lemma1\nextent = 4\ncells = 32\nlevels = 3\ndt = 0.1\ninitial = bump\nD = 2\nT = 1\n\
             [m]\nspace = flat\nn = 1\nverify = manufactured\nextent = 1\ncells = 16\ndt = 0.01, 0.002, 0.001\ninitial = constant\ninitial_base = 0.5\nD = 1\nT = 1\na = 1\n"
        ))
        .unwrap();
        let h = &cfg.experiments[0].levels;
        assert_eq!(h.iter().map(|l| l.cells).collect::<Vec<_>>(), [32, 64, 128]);
        assert_eq!(h[2].dt, Some(0.025));
        let m = &cfg.experiments[1].levels;
        assert_eq!(m.iter().map(|l| l.cells).collect::<Vec<_>>(), [16, 16, 16]);
        assert_eq!(m[1].dt, Some(0.002));
        assert_eq!(cfg.experiments[1].params.unwrap().t0, 1.0);
    }

    #[test]
    fn canonical_form_round_trips() {
        let text = format!("{BASE}out = /tmp/somewhere\n[b]\nverify = liouville\n\n[a]\n  verify   =  cutoff  \nR = 2, 4\nepsilon = 0.5\nT = 1\n");
        let cfg = parse_config(&text).unwrap();
        assert_eq!(cfg.out.as_deref(), Some(Path::new("/tmp/somewhere")));
        let again = parse_config(&cfg.to_ini()).unwrap();
        assert_eq!(again.to_ini(), cfg.to_ini());
        assert_eq!(again.sha256(), cfg.sha256());
        assert!(!cfg.to_ini().contains("out"));
        assert_eq!(cfg.experiments[0].name, "b");
        assert_eq!(cfg.sha256().len(), 64);
    }

    #[test]
    fn custom_liouville_rows() {
        let cfg = parse_config(&format!(
            "{BASE}[l]\nverify = liouville\ncases = 1 0.01 0.1 false no_such_solution; 0 0.1 5 true\n"
        ))
        .unwrap();
        let cases = &cfg.experiments[0].cases;
        assert_eq!(cases.len(), 2);
        assert_eq!(cases[0].expected, Some(Verdict::NoSuchSolution));
        assert_eq!(cases[1].expected, None);
    }
}
