//! Named experiments driven by a config document, producing tabular reports.
//!
//! Configs are JSON objects or flat `key = value` lines. Parsing is strict:
//! unknown keys are rejected. Every report carries the residuals of the
//! invariant checks executed for it; a run passes iff all of them do.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::classical::{self, CellPartition, DensityField};
use crate::decoherence::{self, ConvergenceOptions, DecoherenceTime, SpinBathOptions};
use crate::dynamics::{self, Hamiltonian};
use crate::error::{Error, Result};
use crate::measurement::{self, Event, MeasurementChain, PointerFactor};
use crate::random::{random_density, random_hermitian, rng_from_seed};
use crate::reduction;
use crate::states::{expectation, purity, DensityOperator, Provenance, StateVector};
use crate::tensor::{self, pauli, SpaceSpec, C64, DEFAULT_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Consecutive,
    Contrast,
    Decohere,
    Recohere,
    CoarseGrain,
    Classical,
    Verify,
}

impl Scenario {
    pub const ALL: [Scenario; 7] = [
        Scenario::Consecutive,
        Scenario::Contrast,
        Scenario::Decohere,
        Scenario::Recohere,
        Scenario::CoarseGrain,
        Scenario::Classical,
        Scenario::Verify,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Consecutive => "consecutive",
            Scenario::Contrast => "contrast",
            Scenario::Decohere => "decohere",
            Scenario::Recohere => "recohere",
            Scenario::CoarseGrain => "coarse-grain",
            Scenario::Classical => "classical",
            Scenario::Verify => "verify",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scenario `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::Config(format!("unknown output format `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    #[default]
    X,
    Z,
}

fn default_half() -> [f64; 2] {
    [FRAC_1_SQRT_2, FRAC_1_SQRT_2]
}

fn default_contrast_amplitudes() -> [f64; 2] {
    [0.6, 0.8]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConsecutiveParams {
    #[serde(default = "default_half")]
    pub amplitudes: [f64; 2],
    #[serde(default)]
    pub relative_phase: f64,
    /// Axis of the second measurement; the first is always z.
    #[serde(default)]
    pub second: Axis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContrastParams {
    #[serde(default = "default_contrast_amplitudes")]
    pub amplitudes: [f64; 2],
    #[serde(default)]
    pub relative_phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CouplingSpec {
    Explicit(Vec<f64>),
    /// Only `"random"` is accepted.
    Named(String),
}

fn default_bath_size() -> usize {
    8
}
fn default_t_stop() -> f64 {
    50.0
}
fn default_t_count() -> usize {
    100
}
fn default_retained() -> Vec<String> {
    vec![decoherence::SYSTEM_LABEL.to_string()]
}
fn default_threshold() -> f64 {
    (-1f64).exp()
}
fn default_epsilon() -> f64 {
    0.05
}
fn default_window() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecohereParams {
    #[serde(default = "default_bath_size")]
    pub bath_size: usize,
    /// Explicit list or `"random"` (the default, needs a seed).
    #[serde(default)]
    pub couplings: Option<CouplingSpec>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_half")]
    pub amplitudes: [f64; 2],
    #[serde(default)]
    pub relative_phase: f64,
    #[serde(default)]
    pub t_start: f64,
    #[serde(default = "default_t_stop")]
    pub t_stop: f64,
    #[serde(default = "default_t_count")]
    pub t_count: usize,
    /// Factors kept when tracing; the rest form the environment.
    #[serde(default = "default_retained")]
    pub retained: Vec<String>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_window")]
    pub window_fraction: f64,
}

fn default_recohere_bath() -> usize {
    4
}
fn default_coupling() -> f64 {
    1.0
}
fn default_recohere_t_stop() -> f64 {
    2.0 * PI
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecohereParams {
    #[serde(default = "default_recohere_bath")]
    pub bath_size: usize,
    #[serde(default = "default_coupling")]
    pub coupling: f64,
    #[serde(default = "default_half")]
    pub amplitudes: [f64; 2],
    #[serde(default)]
    pub relative_phase: f64,
    #[serde(default = "default_recohere_t_stop")]
    pub t_stop: f64,
    #[serde(default = "default_t_count")]
    pub t_count: usize,
}

fn default_dims() -> Vec<usize> {
    vec![2, 3]
}
fn default_samples() -> usize {
    200
}
fn default_cg_t_stop() -> f64 {
    PI
}
fn default_cg_t_count() -> usize {
    21
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoarseGrainParams {
    #[serde(default)]
    pub seed: Option<u64>,
    /// Factor dimensions; factors are labeled A, B, C, ... and all but the
    /// first are traced.
    #[serde(default = "default_dims")]
    pub dims: Vec<usize>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_cg_t_stop")]
    pub t_stop: f64,
    #[serde(default = "default_cg_t_count")]
    pub t_count: usize,
}

fn default_resolution() -> usize {
    256
}
fn default_cells() -> usize {
    4
}
fn default_steps() -> usize {
    12
}
fn default_initial() -> String {
    "left-half".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalParams {
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[serde(default = "default_cells")]
    pub cells_per_side: usize,
    #[serde(default = "default_steps")]
    pub steps: usize,
    /// `"left-half"` or `"random"` (needs a seed).
    #[serde(default = "default_initial")]
    pub initial: String,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_verify_times() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyParams {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_dims")]
    pub dims: Vec<usize>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_verify_times")]
    pub times: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ScenarioParams {
    Consecutive(ConsecutiveParams),
    Contrast(ContrastParams),
    Decohere(DecohereParams),
    Recohere(RecohereParams),
    CoarseGrain(CoarseGrainParams),
    Classical(ClassicalParams),
    Verify(VerifyParams),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub params: ScenarioParams,
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub tolerance: f64,
}

fn from_map<T: DeserializeOwned>(map: Map<String, Value>) -> Result<T> {
    serde_json::from_value(Value::Object(map)).map_err(|e| Error::Config(e.to_string()))
}

impl ScenarioConfig {
    /// A config with every parameter at its documented default. Scenarios
    /// that need randomness still need a seed before they can run.
    pub fn defaults(scenario: Scenario) -> Self {
        ScenarioConfig::from_parts(scenario, Map::new()).expect("defaults always parse")
    }

    fn from_parts(scenario: Scenario, map: Map<String, Value>) -> Result<Self> {
        let mut map = map;
        let out = match map.remove("out") {
            None => None,
            Some(Value::String(s)) => Some(PathBuf::from(s)),
            Some(v) => return Err(Error::Config(format!("`out` must be a string, got {v}"))),
        };
        let format = match map.remove("format") {
            None => None,
            Some(Value::String(s)) => Some(s.parse()?),
            Some(v) => return Err(Error::Config(format!("`format` must be a string, got {v}"))),
        };
        let tolerance = match map.remove("tolerance") {
            None => DEFAULT_TOLERANCE,
            Some(v) => v
                .as_f64()
                .filter(|t| *t > 0.0)
                .ok_or_else(|| Error::Config(format!("`tolerance` must be a positive number, got {v}")))?,
        };
        map.remove("scenario");
        let params = match scenario {
            Scenario::Consecutive => ScenarioParams::Consecutive(from_map(map)?),
            Scenario::Contrast => ScenarioParams::Contrast(from_map(map)?),
            Scenario::Decohere => ScenarioParams::Decohere(from_map(map)?),
            Scenario::Recohere => ScenarioParams::Recohere(from_map(map)?),
            Scenario::CoarseGrain => ScenarioParams::CoarseGrain(from_map(map)?),
            Scenario::Classical => ScenarioParams::Classical(from_map(map)?),
            Scenario::Verify => ScenarioParams::Verify(from_map(map)?),
        };
        Ok(ScenarioConfig { scenario, params, out, format, tolerance })
    }

    fn needs_seed(&self) -> bool {
        match &self.params {
            ScenarioParams::Decohere(p) => !matches!(p.couplings, Some(CouplingSpec::Explicit(_))),
            ScenarioParams::CoarseGrain(_) | ScenarioParams::Verify(_) => true,
            ScenarioParams::Classical(p) => p.initial == "random",
            _ => false,
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match &self.params {
            ScenarioParams::Decohere(p) => p.seed,
            ScenarioParams::CoarseGrain(p) => p.seed,
            ScenarioParams::Classical(p) => p.seed,
            ScenarioParams::Verify(p) => p.seed,
            _ => None,
        }
    }

    fn check_seed(&self) -> Result<()> {
        if self.needs_seed() && self.seed().is_none() {
            return Err(Error::Config(format!("seed required for scenario `{}`", self.scenario)));
        }
        Ok(())
    }

    /// Sets the seed for scenarios that take one.
    pub fn set_seed(&mut self, seed: u64) -> Result<()> {
        match &mut self.params {
            ScenarioParams::Decohere(p) => p.seed = Some(seed),
            ScenarioParams::CoarseGrain(p) => p.seed = Some(seed),
            ScenarioParams::Classical(p) => p.seed = Some(seed),
            ScenarioParams::Verify(p) => p.seed = Some(seed),
            _ => return Err(Error::Config(format!("scenario `{}` takes no seed", self.scenario))),
        }
        Ok(())
    }
}

/// Parses a flat `key = value` document into a JSON object. Values are read
/// as JSON where possible; comma-separated values become arrays; anything
/// else is a string.
fn parse_key_values(text: &str) -> Result<Map<String, Value>> {
    let mut map = Map::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::Config(format!("line {}: empty key", lineno + 1)));
        }
        let scalar = |s: &str| serde_json::from_str::<Value>(s).unwrap_or_else(|_| Value::String(s.to_string()));
        let value = value.trim();
        let parsed = if !value.starts_with('[') && value.contains(',') {
            Value::Array(value.split(',').map(|s| scalar(s.trim())).collect())
        } else {
            scalar(value)
        };
        if map.insert(key.to_string(), parsed).is_some() {
            return Err(Error::Config(format!("duplicate key `{key}`")));
        }
    }
    Ok(map)
}

/// Parses a config document. `expected` is the subcommand, if any; it must
/// agree with a `scenario` key when both are present.
pub fn parse_config(text: &str, expected: Option<Scenario>) -> Result<ScenarioConfig> {
    let map = if text.trim_start().starts_with('{') {
        match serde_json::from_str::<Value>(text) {
            Ok(Value::Object(m)) => m,
            Ok(_) => return Err(Error::Config("config must be an object".into())),
            Err(e) => return Err(Error::Config(format!("malformed JSON: {e}"))),
        }
    } else {
        parse_key_values(text)?
    };
    let named = match map.get("scenario") {
        None => None,
        Some(Value::String(s)) => Some(s.parse::<Scenario>()?),
        Some(v) => return Err(Error::Config(format!("`scenario` must be a string, got {v}"))),
    };
    let scenario = match (named, expected) {
        (Some(a), Some(b)) if a != b => {
            return Err(Error::Config(format!("config is for `{a}` but `{b}` was requested")))
        }
        (Some(a), _) => a,
        (None, Some(b)) => b,
        (None, None) => return Err(Error::Config("missing required key `scenario`".into())),
    };
    let cfg = ScenarioConfig::from_parts(scenario, map)?;
    cfg.check_seed()?;
    Ok(cfg)
}

/// Reads a config from `path`, or from stdin when `path` is `-`.
pub fn parse_config_file(path: &Path, expected: Option<Scenario>) -> Result<ScenarioConfig> {
    let text = if path == Path::new("-") {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        s
    } else {
        std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?
    };
    parse_config(&text, expected)
}

// ---------------------------------------------------------------------------
// Reports

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:.16e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(*v),
            Cell::Int(v) => Some(*v as f64),
            Cell::Text(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Column {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(name: &str, columns: &[(&str, Option<Provenance>)]) -> Self {
        Table {
            name: name.to_string(),
            columns: columns
                .iter()
                .map(|(n, p)| Column { name: n.to_string(), provenance: *p })
                .collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let idx = self.columns.iter().position(|c| c.name == name)?;
        Some(self.rows.iter().map(|r| &r[idx]).collect())
    }

    /// Value in column `value` of the first row whose first cell is `key`.
    pub fn lookup(&self, key: &str, value: &str) -> Option<f64> {
        let idx = self.columns.iter().position(|c| c.name == value)?;
        self.rows
            .iter()
            .find(|r| matches!(&r[0], Cell::Text(s) if s == key))
            .and_then(|r| r[idx].as_f64())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub residual: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioReport {
    pub scenario: Scenario,
    pub config: Value,
    pub tables: Vec<Table>,
    pub checks: Vec<CheckResult>,
    pub notes: Vec<String>,
}

impl ScenarioReport {
    fn new(cfg: &ScenarioConfig) -> Self {
        ScenarioReport {
            scenario: cfg.scenario,
            config: serde_json::to_value(&cfg.params).unwrap_or(Value::Null),
            tables: Vec::new(),
            checks: Vec::new(),
            notes: Vec::new(),
        }
    }

    /// Records `residual < tolerance`.
    fn check_below(&mut self, name: &str, residual: f64, tolerance: f64) {
        self.checks.push(CheckResult {
            name: name.to_string(),
            passed: residual < tolerance,
            residual,
            tolerance,
        });
    }

    /// Records `residual > tolerance`.
    fn check_above(&mut self, name: &str, residual: f64, tolerance: f64) {
        self.checks.push(CheckResult {
            name: name.to_string(),
            passed: residual > tolerance,
            residual,
            tolerance,
        });
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn exit_code(&self) -> i32 {
        if self.all_passed() {
            0
        } else {
            1
        }
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    /// CSV rendering: one block per table, each introduced by `# table:` and
    /// optional `# provenance:` comment lines, followed by a `checks` block.
    /// Numbers use 17 significant digits; lines end in LF.
    pub fn to_csv(&self) -> Result<String> {
        let mut out = String::new();
        out.push_str(&format!("# scenario: {}\n", self.scenario));
        for note in &self.notes {
            out.push_str(&format!("# note: {note}\n"));
        }
        let mut blocks: Vec<(String, Vec<String>, Vec<Vec<String>>, String)> = self
            .tables
            .iter()
            .map(|t| {
                let prov: Vec<String> = t
                    .columns
                    .iter()
                    .filter_map(|c| c.provenance.map(|p| format!("{}={}", c.name, p)))
                    .collect();
                (
                    t.name.clone(),
                    t.columns.iter().map(|c| c.name.clone()).collect(),
                    t.rows.iter().map(|r| r.iter().map(Cell::render).collect()).collect(),
                    prov.join(";"),
                )
            })
            .collect();
        blocks.push((
            "checks".into(),
            vec!["name".into(), "passed".into(), "residual".into(), "tolerance".into()],
            self.checks
                .iter()
                .map(|c| {
                    vec![
                        c.name.clone(),
                        c.passed.to_string(),
                        Cell::Num(c.residual).render(),
                        Cell::Num(c.tolerance).render(),
                    ]
                })
                .collect(),
            String::new(),
        ));
        for (name, header, rows, prov) in blocks {
            out.push('\n');
            out.push_str(&format!("# table: {name}\n"));
            if !prov.is_empty() {
                out.push_str(&format!("# provenance: {prov}\n"));
            }
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(Vec::new());
            w.write_record(&header).map_err(|e| Error::Io(e.to_string()))?;
            for r in rows {
                w.write_record(&r).map_err(|e| Error::Io(e.to_string()))?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
            out.push_str(&String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))?);
        }
        Ok(out)
    }

    pub fn render(&self, format: OutputFormat) -> Result<String> {
        match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Json => self.to_json(),
        }
    }
}

// ---------------------------------------------------------------------------
// Runners

fn amplitudes(a: [f64; 2], phase: f64) -> Result<[C64; 2]> {
    let dev = (a[0] * a[0] + a[1] * a[1] - 1.0).abs();
    if dev > DEFAULT_TOLERANCE {
        return Err(Error::Config(format!(
            "amplitudes {a:?} are not normalized (|c+|² + |c−|² deviates by {dev:e})"
        )));
    }
    Ok([C64::new(a[0], 0.0), C64::from_polar(a[1], phase)])
}

fn linspace(a: f64, b: f64, n: usize) -> Result<Vec<f64>> {
    if n == 0 || !(a.is_finite() && b.is_finite()) || b < a {
        return Err(Error::Config(format!("invalid time grid [{a}, {b}] with {n} samples")));
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect())
}

fn factor_space(dims: &[usize]) -> Result<SpaceSpec> {
    if dims.len() < 2 {
        return Err(Error::Config("`dims` needs at least two factors".into()));
    }
    if dims.len() > 26 {
        return Err(Error::Config("`dims` supports at most 26 factors".into()));
    }
    SpaceSpec::new(dims.iter().enumerate().map(|(i, &d)| (((b'A' + i as u8) as char).to_string(), d)))
}

fn qubit(label: &str) -> SpaceSpec {
    SpaceSpec::single(label, 2).expect("qubit space")
}

/// Executes a scenario. Invariant failures are recorded in the report, not
/// returned as errors.
pub fn run(cfg: &ScenarioConfig) -> Result<ScenarioReport> {
    cfg.check_seed()?;
    let mut report = ScenarioReport::new(cfg);
    match &cfg.params {
        ScenarioParams::Consecutive(p) => run_consecutive(p, cfg.tolerance, &mut report)?,
        ScenarioParams::Contrast(p) => run_contrast(p, cfg.tolerance, &mut report)?,
        ScenarioParams::Decohere(p) => run_decohere(p, cfg.tolerance, &mut report)?,
        ScenarioParams::Recohere(p) => run_recohere(p, &mut report)?,
        ScenarioParams::CoarseGrain(p) => run_coarse_grain(p, cfg.tolerance, &mut report)?,
        ScenarioParams::Classical(p) => run_classical(p, cfg.tolerance, &mut report)?,
        ScenarioParams::Verify(p) => run_verify(p, cfg.tolerance, &mut report)?,
    }
    Ok(report)
}

fn z_chain(c: [C64; 2], label: &str) -> Result<MeasurementChain> {
    let system = StateVector::from_slice(qubit("S"), &c)?;
    MeasurementChain::new(system).premeasure(
        &pauli::sigma_z("S")?,
        &measurement::spin_z_basis(),
        PointerFactor::standard(label, 2)?,
    )
}

fn run_consecutive(p: &ConsecutiveParams, tol: f64, report: &mut ScenarioReport) -> Result<()> {
    let c = amplitudes(p.amplitudes, p.relative_phase)?;
    let first = z_chain(c, "Pz")?;
    let (tag, label, chain) = match p.second {
        Axis::X => {
            let xb = measurement::spin_basis_rotation(&measurement::spin_z_basis())?;
            ("x", "Px", first.premeasure(&pauli::sigma_x("S")?, &xb, PointerFactor::standard("Px", 2)?)?)
        }
        Axis::Z => (
            "z2",
            "Pz2",
            first.premeasure(&pauli::sigma_z("S")?, &measurement::spin_z_basis(), PointerFactor::standard("Pz2", 2)?)?,
        ),
    };
    let sign = ["+", "-"];
    let mut t = Table::new("probabilities", &[("quantity", None), ("value", Some(Provenance::Fundamental))]);
    let mut total = 0.0;
    for k in 0..2 {
        let pz = chain.probability(&Event::new("Pz", k))?;
        t.push(vec![format!("pr(p{}z)", sign[k]).into(), pz.into()]);
        let mut conditional_total = 0.0;
        for l in 0..2 {
            let joint = chain.joint_probability(&[Event::new(label, l), Event::new("Pz", k)])?;
            total += joint;
            t.push(vec![format!("pr(p{}{tag} & p{}z)", sign[l], sign[k]).into(), joint.into()]);
            if pz > measurement::ZERO_PROBABILITY {
                let cond = chain.conditional_probability(&Event::new(label, l), &[Event::new("Pz", k)])?;
                conditional_total += cond;
                t.push(vec![format!("pr(p{}{tag} | p{}z)", sign[l], sign[k]).into(), cond.into()]);
            } else {
                report.notes.push(format!("pr(p{}z) = 0; conditionals on it are undefined", sign[k]));
            }
        }
        if pz > measurement::ZERO_PROBABILITY {
            report.check_below(&format!("conditional_normalization_p{}z", sign[k]), (conditional_total - 1.0).abs(), tol);
        }
        report.check_below(&format!("born_rule_p{}z", sign[k]), (pz - c[k].norm_sqr()).abs(), tol);
    }
    report.check_below("joint_normalization", (total - 1.0).abs(), tol);

    let pzp = c[0].norm_sqr();
    if pzp > measurement::ZERO_PROBABILITY {
        let cond = chain.conditional_probability(&Event::new(label, 0), &[Event::new("Pz", 0)])?;
        let joint = chain.joint_probability(&[Event::new(label, 0), Event::new("Pz", 0)])?;
        match p.second {
            Axis::X => {
                report.check_below("joint_equals_half_born_weight", (joint - pzp / 2.0).abs(), tol);
                report.check_below("conditional_equals_half", (cond - 0.5).abs(), tol);
            }
            Axis::Z => {
                let miss = chain.conditional_probability(&Event::new(label, 1), &[Event::new("Pz", 0)])?;
                report.check_below("repeat_agrees", (cond - 1.0).abs(), tol);
                report.check_below("repeat_never_disagrees", miss.abs(), tol);
            }
        }
    }
    report.tables.push(t);
    Ok(())
}

fn run_contrast(p: &ContrastParams, tol: f64, report: &mut ScenarioReport) -> Result<()> {
    let c = amplitudes(p.amplitudes, p.relative_phase)?;
    let chain = z_chain(c, "Pz")?;
    let contrast = measurement::reduced_chain_predictor(&chain)?;
    let sign = ["+", "-"];
    let mut t = Table::new(
        "joint",
        &[
            ("first", None),
            ("repeat", None),
            ("true_joint", Some(Provenance::Fundamental)),
            ("flawed_joint", Some(Provenance::Reduced)),
        ],
    );
    let mut diag_residual: f64 = 0.0;
    let mut product_residual: f64 = 0.0;
    for k in 0..2 {
        for l in 0..2 {
            t.push(vec![
                sign[k].into(),
                sign[l].into(),
                contrast.true_joint[k][l].into(),
                contrast.flawed_joint[k][l].into(),
            ]);
            let expect_true = if k == l { c[k].norm_sqr() } else { 0.0 };
            diag_residual = diag_residual.max((contrast.true_joint[k][l] - expect_true).abs());
            let expect_flawed = c[k].norm_sqr() * c[l].norm_sqr();
            product_residual = product_residual.max((contrast.flawed_joint[k][l] - expect_flawed).abs());
        }
    }
    report.tables.push(t);

    let mut m = Table::new(
        "marginals",
        &[
            ("pointer", None),
            ("outcome", None),
            ("true", Some(Provenance::Fundamental)),
            ("flawed", Some(Provenance::Reduced)),
        ],
    );
    let mut marginal_residual: f64 = 0.0;
    for k in 0..2 {
        m.push(vec!["first".into(), sign[k].into(), contrast.true_first_marginal[k].into(), contrast.flawed_first_marginal[k].into()]);
        m.push(vec!["repeat".into(), sign[k].into(), contrast.true_repeat_marginal[k].into(), contrast.flawed_repeat_marginal[k].into()]);
        marginal_residual = marginal_residual
            .max((contrast.true_first_marginal[k] - contrast.flawed_first_marginal[k]).abs())
            .max((contrast.true_repeat_marginal[k] - contrast.flawed_repeat_marginal[k]).abs());
    }
    report.tables.push(m);

    report.check_below("true_joint_is_diagonal_born", diag_residual, tol);
    report.check_below("flawed_joint_is_product_of_marginals", product_residual, tol);
    report.check_below("marginals_agree", marginal_residual, tol);
    if contrast.disagrees {
        report.notes.push(format!(
            "DISCREPANCY: the reduced-state pipeline predicts joint outcomes the full chain rules out (max difference {:.6})",
            contrast.max_discrepancy
        ));
    }
    report.config_insert("discrepancy_flagged", Value::Bool(contrast.disagrees));
    Ok(())
}

impl ScenarioReport {
    fn config_insert(&mut self, key: &str, value: Value) {
        if let Value::Object(m) = &mut self.config {
            m.insert(key.to_string(), value);
        }
    }

    /// Whether a contrast run flagged the reduced-state discrepancy.
    pub fn discrepancy_flagged(&self) -> bool {
        self.config.get("discrepancy_flagged").and_then(Value::as_bool).unwrap_or(false)
    }
}

fn run_decohere(p: &DecohereParams, tol: f64, report: &mut ScenarioReport) -> Result<()> {
    let couplings = match &p.couplings {
        Some(CouplingSpec::Explicit(g)) => g.clone(),
        Some(CouplingSpec::Named(s)) if s == "random" => {
            decoherence::seeded_couplings(p.bath_size, p.seed.ok_or_else(|| Error::Config("seed required".into()))?)
        }
        None => decoherence::seeded_couplings(p.bath_size, p.seed.ok_or_else(|| Error::Config("seed required".into()))?),
        Some(CouplingSpec::Named(s)) => return Err(Error::Config(format!("unknown coupling spec `{s}`"))),
    };
    let model = decoherence::build_spin_bath(p.bath_size, &couplings, SpinBathOptions::default())?;
    report.config_insert("resolved_couplings", serde_json::json!(couplings));
    let c = amplitudes(p.amplitudes, p.relative_phase)?;
    let times = linspace(p.t_start, p.t_stop, p.t_count)?;
    let retained: Vec<&str> = p.retained.iter().map(String::as_str).collect();
    let traj = decoherence::run_trajectory_partitioned(&model, c, &times, &retained)?;
    let system_only = retained == [decoherence::SYSTEM_LABEL];

    let mut cols = vec![
        ("t", None),
        ("abs_rho01", Some(Provenance::Reduced)),
        ("purity_reduced", Some(Provenance::Reduced)),
        ("purity_full", Some(Provenance::Fundamental)),
    ];
    if system_only {
        cols.push(("closed_form", None));
    }
    let mut t = Table::new("trajectory", &cols);
    let mut closed_residual: f64 = 0.0;
    for i in 0..traj.len() {
        let mut row: Vec<Cell> = vec![
            traj.times()[i].into(),
            traj.offdiag_magnitudes()[i].into(),
            traj.purity_series()[i].into(),
            traj.full_purity_series()[i].into(),
        ];
        if system_only {
            let cf = model.closed_form_coherence(c, traj.times()[i]).expect("default model is diagonal");
            closed_residual = closed_residual.max((cf - traj.offdiag_magnitudes()[i]).abs());
            row.push(cf.into());
        }
        t.push(row);
    }
    report.tables.push(t);

    let mut s = Table::new("summary", &[("quantity", None), ("value", Some(Provenance::Reduced))]);
    let window = ((traj.len() as f64) * p.window_fraction).ceil().max(1.0) as usize;
    let late = &traj.offdiag_magnitudes()[traj.len() - window.min(traj.len())..];
    s.push(vec!["late_mean_abs_rho01".into(), (late.iter().sum::<f64>() / late.len() as f64).into()]);
    s.push(vec!["initial_abs_rho01".into(), traj.offdiag_magnitudes()[0].into()]);
    match decoherence::decoherence_time(&traj, p.threshold) {
        Ok(DecoherenceTime::Reached(t)) => s.push(vec!["decoherence_time".into(), t.into()]),
        Ok(DecoherenceTime::NotReached) => s.push(vec!["decoherence_time".into(), "not reached".into()]),
        Err(Error::ZeroCoherence) => s.push(vec!["decoherence_time".into(), "no initial coherence".into()]),
        Err(e) => return Err(e),
    }
    report.tables.push(s);

    if traj.reduced_states()[0].space().dim() == 2 {
        let label = retained[0];
        let obs = vec![
            ("sx".to_string(), pauli::sigma_x(label)?),
            ("sy".to_string(), pauli::sigma_y(label)?),
            ("sz".to_string(), pauli::sigma_z(label)?),
        ];
        let opts = ConvergenceOptions { window_fraction: p.window_fraction, epsilon: p.epsilon };
        let mut ct = Table::new(
            "convergence",
            &[
                ("observable", None),
                ("initial", Some(Provenance::Reduced)),
                ("late_mean", Some(Provenance::Reduced)),
                ("fluctuation", Some(Provenance::Reduced)),
                ("converged", None),
            ],
        );
        for e in decoherence::expectation_convergence(&traj, &obs, opts)? {
            ct.push(vec![
                e.observable.into(),
                e.initial_value.into(),
                e.late_mean.into(),
                e.fluctuation.into(),
                e.converged.to_string().into(),
            ]);
        }
        report.tables.push(ct);
    }

    let purity_residual = traj.full_purity_series().iter().map(|p| (p - 1.0).abs()).fold(0.0, f64::max);
    report.check_below("full_state_purity", purity_residual, 1e-9);
    let trace_residual = traj
        .reduced_states()
        .iter()
        .map(|r| (r.op().trace() - C64::new(1.0, 0.0)).norm())
        .fold(0.0, f64::max);
    report.check_below("reduced_trace", trace_residual, tol);
    if system_only {
        report.check_below("closed_form_agreement", closed_residual, tol);
        report.check_below("reduced_diagonal_constant", traj.diagonal_drift(), tol);
    }
    Ok(())
}

fn run_recohere(p: &RecohereParams, report: &mut ScenarioReport) -> Result<()> {
    let model = decoherence::build_spin_bath(p.bath_size, &vec![p.coupling; p.bath_size], SpinBathOptions::default())?;
    let c = amplitudes(p.amplitudes, p.relative_phase)?;
    let times = linspace(0.0, p.t_stop, p.t_count)?;
    let traj = decoherence::run_trajectory(&model, c, &times)?;
    let rep = decoherence::recoherence_check(&model, &traj)?;

    let mut t = Table::new(
        "trajectory",
        &[
            ("t", None),
            ("abs_rho01_improper", Some(Provenance::Reduced)),
            ("abs_rho01_proper", Some(Provenance::ProperMixture)),
        ],
    );
    for i in 0..traj.len() {
        t.push(vec![
            traj.times()[i].into(),
            traj.offdiag_magnitudes()[i].into(),
            rep.proper_mixture_offdiag[i].into(),
        ]);
    }
    report.tables.push(t);
    let mut s = Table::new("summary", &[("quantity", None), ("value", Some(Provenance::Reduced))]);
    s.push(vec!["revival_time".into(), rep.revival_time.into()]);
    s.push(vec!["initial_abs_rho01".into(), rep.initial_coherence.into()]);
    s.push(vec!["revived_abs_rho01".into(), rep.revived_coherence.into()]);
    report.tables.push(s);

    report.check_below("revival", rep.revival_residual, decoherence::REVIVAL_TOLERANCE);
    report.check_below("proper_mixture_stays_incoherent", rep.proper_mixture_max_offdiag, decoherence::PROPER_MIXTURE_TOLERANCE);
    if p.coupling != 0.0 {
        let period = 2.0 * PI / p.coupling.abs();
        let shifted: Vec<f64> = times.iter().map(|t| t + period).collect();
        let later = decoherence::run_trajectory(&model, c, &shifted)?;
        let drift = traj
            .reduced_states()
            .iter()
            .zip(later.reduced_states())
            .map(|(a, b)| tensor::frobenius_distance(a.op(), b.op()).unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max);
        report.check_below("periodicity", drift, decoherence::REVIVAL_TOLERANCE);
    }
    if rep.revived && !rep.proper_mixture_revives {
        report.notes.push(
            "the improper mixture recoheres; the matrix-equal proper mixture never develops coherence".into(),
        );
    }
    Ok(())
}

/// Largest local-expectation residual of coarse-graining over a complete
/// Hermitian basis of the retained factors.
fn local_expectation_residual(rho: &DensityOperator, traced: &[&str]) -> Result<f64> {
    let retained = rho.space().complement(traced);
    let sub = rho.space().restrict(&retained)?;
    let mut worst: f64 = 0.0;
    for o in reduction::hermitian_basis(&sub) {
        worst = worst.max(reduction::coarse_grained_expectation_check(rho, &o, traced)?);
    }
    Ok(worst)
}

/// Idempotence, recovery, local-expectation and definition residuals for one state.
pub fn projector_residuals(rho: &DensityOperator, traced: &[&str]) -> Result<[f64; 4]> {
    let cg = reduction::coarse_grain(rho, traced)?;
    let twice = reduction::coarse_grain(cg.rho_cg(), traced)?;
    let idem = tensor::frobenius_distance(twice.rho_cg().op(), cg.rho_cg().op())?;
    let red = reduction::partial_trace(rho, traced)?;
    let recovery = tensor::frobenius_distance(reduction::recover_reduced(&cg).op(), red.op())?;
    let expect = local_expectation_residual(rho, traced)?;
    let retained = rho.space().complement(traced);
    let definition = reduction::verify_reduced_definition(rho, &red, &retained)?;
    Ok([idem, recovery, expect, definition])
}

fn run_coarse_grain(p: &CoarseGrainParams, tol: f64, report: &mut ScenarioReport) -> Result<()> {
    let seed = p.seed.ok_or_else(|| Error::Config("seed required".into()))?;
    let space = factor_space(&p.dims)?;
    let labels = space.labels();
    let traced: Vec<&str> = labels[1..].to_vec();
    let mut rng = rng_from_seed(seed);
    let mut t = Table::new(
        "samples",
        &[
            ("sample", None),
            ("idempotence", Some(Provenance::CoarseGrained)),
            ("recovery", Some(Provenance::Reduced)),
            ("local_expectation", Some(Provenance::CoarseGrained)),
            ("definition", Some(Provenance::Reduced)),
        ],
    );
    let mut worst = [0.0f64; 4];
    for i in 0..p.samples {
        let rho = random_density(&space, &mut rng);
        let r = projector_residuals(&rho, &traced)?;
        for k in 0..4 {
            worst[k] = worst[k].max(r[k]);
        }
        t.push(vec![i.into(), r[0].into(), r[1].into(), r[2].into(), r[3].into()]);
    }
    report.tables.push(t);
    report.check_below("projector_idempotent", worst[0], 1e-12);
    report.check_below("reduced_state_recovered", worst[1], 1e-12);
    report.check_below("local_expectations_preserved", worst[2], tol);
    report.check_below("reduced_definition", worst[3], tol);

    if space.dim() <= reduction::SUPEROPERATOR_DIM_LIMIT {
        let sup = reduction::projector_superoperator(&space, &traced)?;
        report.check_below("superoperator_idempotent", (&sup * &sup - &sup).norm(), 1e-12);
        report.check_below("superoperator_self_adjoint", (&sup - sup.adjoint()).norm(), 1e-12);
    }

    // Correlations between A and B are cancelled by Π.
    let h = FRAC_1_SQRT_2;
    let pair = SpaceSpec::new([("A", 2), ("B", 2)])?;
    let bell = DensityOperator::pure(&StateVector::from_slice(
        pair.clone(),
        &[C64::new(h, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(h, 0.0)],
    )?);
    let cg = reduction::coarse_grain(&bell, &["B"])?;
    let mut corr = Table::new(
        "correlations",
        &[
            ("observable", None),
            ("fundamental", Some(Provenance::Fundamental)),
            ("coarse_grained", Some(Provenance::CoarseGrained)),
        ],
    );
    let zz = tensor::tensor_product(&pauli::sigma_z("A")?, &pauli::sigma_z("B")?)?;
    let zi = tensor::embed(&pauli::sigma_z("A")?, &pair, "A")?;
    let (zz0, zz1) = (expectation(&bell, &zz)?, expectation(cg.rho_cg(), &zz)?);
    let (zi0, zi1) = (expectation(&bell, &zi)?, expectation(cg.rho_cg(), &zi)?);
    corr.push(vec!["sz(A) sz(B) on Bell".into(), zz0.into(), zz1.into()]);
    corr.push(vec!["sz(A) on Bell".into(), zi0.into(), zi1.into()]);
    report.tables.push(corr);
    report.check_above("correlation_cancelled", (zz0 - zz1).abs(), 0.5);
    report.check_below("local_expectation_kept", (zi0 - zi1).abs(), tol);

    // Non-unitary evolution of the coarse-grained state.
    let plus = StateVector::from_slice(qubit("A"), &[C64::new(h, 0.0), C64::new(h, 0.0)])?;
    let zero = StateVector::basis(&qubit("B"), 0)?;
    let rho0 = DensityOperator::pure(&plus.tensor(&zero)?);
    let zx = tensor::tensor_product(&pauli::sigma_z("A")?, &pauli::sigma_x("B")?)?;
    let coupled = Hamiltonian::interaction_only(&pair, &["A"], zx)?;
    let times = linspace(0.0, p.t_stop, p.t_count)?;
    let traj = reduction::coarse_grained_trajectory(&rho0, &coupled, &times, &["B"])?;
    let mut tt = Table::new(
        "trajectory",
        &[
            ("t", None),
            ("purity_full", Some(Provenance::Fundamental)),
            ("purity_coarse_grained", Some(Provenance::CoarseGrained)),
        ],
    );
    let spectral = coupled.spectral()?;
    let mut full_drift: f64 = 0.0;
    for (t, cg) in times.iter().zip(&traj) {
        let full = purity(&spectral.evolve_density(&rho0, *t)?);
        full_drift = full_drift.max((full - 1.0).abs());
        tt.push(vec![(*t).into(), full.into(), purity(cg.rho_cg()).into()]);
    }
    report.tables.push(tt);
    report.check_below("full_purity_constant", full_drift, tol);
    Ok(())
}

fn run_classical(p: &ClassicalParams, tol: f64, report: &mut ScenarioReport) -> Result<()> {
    let partition = CellPartition::new(p.resolution, p.cells_per_side)?;
    let initial = match p.initial.as_str() {
        "left-half" => DensityField::left_half(p.resolution)?,
        "random" => {
            let seed = p.seed.ok_or_else(|| Error::Config("seed required".into()))?;
            DensityField::random(p.resolution, &mut rng_from_seed(seed))?
        }
        other => return Err(Error::Config(format!("unknown initial field `{other}`"))),
    };
    let s = classical::equilibrium_approach(&initial, &partition, p.steps)?;
    let mut t = Table::new(
        "series",
        &[("step", None), ("coarse_l1", None), ("fine_l1", None), ("occupied", None), ("mass", None)],
    );
    for i in 0..s.coarse_distance.len() {
        t.push(vec![
            i.into(),
            s.coarse_distance[i].into(),
            s.fine_distance[i].into(),
            s.occupied[i].into(),
            s.mass[i].into(),
        ]);
    }
    report.tables.push(t);
    let mass = s.mass.iter().map(|m| (m - 1.0).abs()).fold(0.0, f64::max);
    report.check_below("mass_conserved", mass, tol);
    let occ = s.occupied.iter().map(|&o| o.abs_diff(s.occupied[0]) as f64).fold(0.0, f64::max);
    report.check_below("support_invariant", occ, 0.5);
    let fine = s.fine_distance.iter().map(|d| (d - s.fine_distance[0]).abs()).fold(0.0, f64::max);
    report.check_below("fine_distance_invariant", fine, tol);
    let best = s.coarse_distance.iter().copied().fold(f64::INFINITY, f64::min);
    report.check_below("coarse_equilibrium_reached", best, 0.01);
    if let Some(step) = s.first_below(0.01) {
        report.notes.push(format!("coarse-grained distance below 0.01 from step {step}"));
    }
    Ok(())
}

fn run_verify(p: &VerifyParams, tol: f64, report: &mut ScenarioReport) -> Result<()> {
    let seed = p.seed.ok_or_else(|| Error::Config("seed required".into()))?;
    let space = factor_space(&p.dims)?;
    let labels = space.labels();
    let traced: Vec<&str> = labels[1..].to_vec();
    let mut rng = rng_from_seed(seed);

    let mut worst = [0.0f64; 4];
    for _ in 0..p.samples {
        let rho = random_density(&space, &mut rng);
        let r = projector_residuals(&rho, &traced)?;
        for k in 0..4 {
            worst[k] = worst[k].max(r[k]);
        }
    }

    // Non-interacting dynamics on the same factorization.
    let s1 = space.restrict(&labels[..1])?;
    let s2 = space.restrict(&traced)?;
    let h1 = random_hermitian(&s1, &mut rng, 1.0);
    let h2 = random_hermitian(&s2, &mut rng, 1.0);
    let h = Hamiltonian::non_interacting(&space, h1.clone(), h2)?;
    let rho0 = random_density(&space, &mut rng);
    let r0 = reduction::partial_trace(&rho0, &traced)?;
    let spec0 = r0.eigenvalues();
    let spectral = h.spectral()?;
    let mut local: f64 = 0.0;
    let mut spectrum: f64 = 0.0;
    let mut factor: f64 = 0.0;
    for k in 1..=p.times {
        let t = k as f64 * 0.7;
        let red = reduction::partial_trace(&spectral.evolve_density(&rho0, t)?, &traced)?;
        let expect = dynamics::evolve_reduced_noninteracting(&r0, &h1, t)?;
        local = local.max(tensor::frobenius_distance(red.op(), expect.op())?);
        let ev = red.eigenvalues();
        spectrum = spectrum.max(ev.iter().zip(&spec0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        factor = factor.max(dynamics::factorization_check(&h, t)?.residual);
    }
    let zz = tensor::tensor_product(&pauli::sigma_z("a")?, &pauli::sigma_z("b")?)?;
    let counter = Hamiltonian::interaction_only(zz.space(), &["a"], zz.clone())?;
    let counter_residual = dynamics::factorization_check(&counter, 1.0)?.residual;

    let mut t = Table::new("residuals", &[("check", None), ("max_residual", None), ("tolerance", None)]);
    let rows: [(&str, f64, f64); 7] = [
        ("projector_idempotent", worst[0], 1e-12),
        ("reduced_state_recovered", worst[1], 1e-12),
        ("local_expectations_preserved", worst[2], tol),
        ("reduced_definition", worst[3], tol),
        ("noninteracting_reduced_evolution", local, tol),
        ("reduced_spectrum_invariant", spectrum, 1e-9),
        ("propagator_factorizes", factor, tol),
    ];
    for (name, r, tolerance) in rows {
        t.push(vec![name.into(), r.into(), tolerance.into()]);
        report.check_below(name, r, tolerance);
    }
    t.push(vec!["zz_coupling_does_not_factorize".into(), counter_residual.into(), 1e-3.into()]);
    report.check_above("zz_coupling_does_not_factorize", counter_residual, 1e-3);
    report.tables.push(t);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config("scenario = consecutive\n", None).unwrap();
        assert_eq!(cfg.scenario, Scenario::Consecutive);
        let ScenarioParams::Consecutive(p) = &cfg.params else { panic!() };
        assert_eq!(p.amplitudes, default_half());
        assert_eq!(p.second, Axis::X);
        assert_eq!(cfg.tolerance, DEFAULT_TOLERANCE);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = parse_config(r#"{"scenario": "consecutive", "ampltudes": [0.6, 0.8]}"#, None).unwrap_err();
        assert!(matches!(&err, Error::Config(m) if m.contains("ampltudes")), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn random_couplings_need_seed() {
        let err = parse_config("scenario = decohere\nbath_size = 4\n", None).unwrap_err();
        assert!(matches!(&err, Error::Config(m) if m.contains("seed required")), "{err}");
        let ok = parse_config("scenario = decohere\nbath_size = 2\ncouplings = 1.0, 0.5\n", None).unwrap();
        let ScenarioParams::Decohere(p) = &ok.params else { panic!() };
        assert_eq!(p.couplings, Some(CouplingSpec::Explicit(vec![1.0, 0.5])));
    }

    #[test]
    fn scenario_mismatch_and_unknown_scenario() {
        assert!(parse_config("scenario = contrast", Some(Scenario::Consecutive)).is_err());
        assert!(parse_config("scenario = bogus", None).is_err());
        assert!(parse_config("amplitudes = 0.6, 0.8", None).is_err());
        assert!(parse_config("amplitudes = 0.6, 0.8", Some(Scenario::Contrast)).is_ok());
        assert!(parse_config("{ not json", None).is_err());
        assert!(parse_config("just words", None).is_err());
    }

    #[test]
    fn consecutive_half() {
        let report = run(&ScenarioConfig::defaults(Scenario::Consecutive)).unwrap();
        let t = report.table("probabilities").unwrap();
        assert!((t.lookup("pr(p+x | p+z)", "value").unwrap() - 0.5).abs() < 1e-12);
        assert!(report.all_passed());
    }

    #[test]
    fn contrast_defaults() {
        let report = run(&ScenarioConfig::defaults(Scenario::Contrast)).unwrap();
        assert!(report.discrepancy_flagged());
        assert!(report.all_passed());
        let t = report.table("joint").unwrap();
        let row = t.rows.iter().find(|r| r[0] == Cell::from("+") && r[1] == Cell::from("-")).unwrap();
        assert_eq!(row[2].as_f64().unwrap(), 0.0);
        assert!((row[3].as_f64().unwrap() - 0.2304).abs() < 1e-12);
    }

    #[test]
    fn unnormalized_amplitudes_rejected() {
        let cfg = parse_config("scenario = contrast\namplitudes = 0.6, 0.6\n", None).unwrap();
        assert!(matches!(run(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn csv_layout() {
        let report = run(&ScenarioConfig::defaults(Scenario::Contrast)).unwrap();
        let csv = report.to_csv().unwrap();
        assert!(!csv.contains('\r'));
        assert!(csv.starts_with("# scenario: contrast\n"));
        assert!(csv.contains("# table: joint\n# provenance: true_joint=fundamental;flawed_joint=reduced\nfirst,repeat,true_joint,flawed_joint\n"));
        let line = csv.lines().find(|l| l.starts_with("+,-,")).unwrap();
        let flawed: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!((flawed - 0.2304).abs() < 1e-15);
        assert_eq!(line.rsplit(',').next().unwrap().len(), "2.3040000000000005e-1".len());
    }
}
