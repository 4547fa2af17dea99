//! Batch front end: configuration, dispatch to the engines, and table output.
//!
//! A run is fully described by a [`RunConfig`]. Command-line flags override
//! values from an optional TOML config file, which in turn override the
//! `ENTANGLECERT_SEED` environment variable for the seed. Every emitted file
//! starts with a metadata block whose `[config]` table, fed back through
//! [`config_from_emitted`], reproduces the same table.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::certify::CertificationTest;
use crate::error::Error;
use crate::linalg::{DensityMatrix, PureState};
use crate::metrics::{
    concurrence, pauli_expectations, purity, sample_pauli_expectations, tomography_linear_inversion, AveragingPlan,
    Pauli, PauliExpectations, StateMetrics,
};
use crate::monitor::{mixed_state, run_monitoring, GateMode, OuProcess, SelectionConfig};
use crate::protocol::{
    certify_and_recover, linspace, sweep_certification, sweep_recovery, tradeoff_curves, EvaluationMode,
    ReversalPolicy, SweepGrid,
};
use crate::rng::RngStream;

pub const SEED_ENV: &str = "ENTANGLECERT_SEED";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    #[default]
    Certify,
    Sweep,
    Recover,
    Tradeoff,
    Monitor,
    Tomography,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Csv,
    Jsonl,
}

/// Everything needed to reproduce a run. Field names double as TOML keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub command: Command,
    /// `ideal`, `mixed:<gamma>` or `tomography:<path>`.
    pub state: String,
    pub tests: Vec<CertificationTest>,
    pub pa: f64,
    pub pb: f64,
    /// `start:end:n` or a comma-separated list of strengths.
    pub grid: String,
    /// Overrides `grid` with `n` points on `[0, 1]` when set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    /// Shots per setting (certification), trials per direction pair (recovery)
    /// or CHSH shots per window (monitoring). Unused in exact mode.
    pub shots: u64,
    pub exact: bool,
    /// `certify` only: estimate correlations from the weak outcomes of
    /// certify-then-recover trials and report the matched fraction as well.
    pub inline: bool,
    #[serde(default = "seed_from_env")]
    pub seed: u64,
    pub policy: ReversalPolicy,
    pub threshold: f64,
    pub windows: usize,
    pub ou_mu: f64,
    pub ou_theta: f64,
    pub ou_sigma: f64,
    pub window_shots: u64,
    /// Not echoed into emitted metadata, so re-running an emitted file's
    /// config never overwrites it.
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
    pub format: Format,
}

fn seed_from_env() -> u64 {
    std::env::var(SEED_ENV).ok().and_then(|s| s.trim().parse().ok()).unwrap_or(0)
}

impl Default for RunConfig {
    fn default() -> Self {
        let ou = OuProcess::default();
        let sel = SelectionConfig::default();
        Self {
            command: Command::Certify,
            state: "ideal".into(),
            tests: CertificationTest::ALL.to_vec(),
            pa: sel.p_a,
            pb: sel.p_b,
            grid: "0:1:21".into(),
            points: None,
            shots: 10_000,
            exact: true,
            inline: false,
            seed: seed_from_env(),
            policy: ReversalPolicy::AllBranches,
            threshold: sel.threshold,
            windows: 500,
            ou_mu: ou.mean,
            ou_theta: ou.theta,
            ou_sigma: ou.sigma,
            window_shots: sel.window_shots,
            out: None,
            format: Format::Csv,
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Parse { line: Option<usize>, message: String },
    Validation { field: &'static str, message: String },
    Runtime(Error),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Runtime(_) | CliError::Io(_) => 1,
            CliError::Parse { .. } => 3,
            CliError::Validation { .. } => 4,
        }
    }

    fn validation(field: &'static str, message: impl Into<String>) -> Self {
        CliError::Validation { field, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Parse { line: Some(l), message } => write!(f, "parse error at line {l}: {message}"),
            CliError::Parse { line: None, message } => write!(f, "parse error: {message}"),
            CliError::Validation { message, .. } => write!(f, "{message}"),
            CliError::Runtime(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "I/O error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Runtime(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

fn toml_error(text: &str, e: toml::de::Error) -> CliError {
    let line = e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
    CliError::Parse { line, message: e.message().to_string() }
}

/// Parses and validates a TOML run description; absent keys take their defaults.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let config: RunConfig = toml::from_str(text).map_err(|e| toml_error(text, e))?;
    config.validate()?;
    Ok(config)
}

#[derive(Debug, Clone, PartialEq)]
pub enum StateSpec {
    Ideal,
    Mixed(f64),
    Tomography(PathBuf),
}

impl StateSpec {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let bad =
            || CliError::validation("state", format!("state `{s}` is not ideal, mixed:<gamma> or tomography:<path>"));
        match s.split_once(':') {
            None if s.trim() == "ideal" => Ok(StateSpec::Ideal),
            Some(("mixed", g)) => {
                let gamma: f64 = g.trim().parse().map_err(|_| bad())?;
                if !(0.0..=1.0).contains(&gamma) {
                    return Err(CliError::validation("state", "gamma out of [0,1]"));
                }
                Ok(StateSpec::Mixed(gamma))
            }
            Some(("tomography", path)) if !path.trim().is_empty() => {
                Ok(StateSpec::Tomography(PathBuf::from(path.trim())))
            }
            _ => Err(bad()),
        }
    }
}

/// `start:end:n` or `a,b,c`.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = |m: String| CliError::validation("grid", m);
    let points = if let [start, end, n] = spec.split(':').collect::<Vec<_>>()[..] {
        let start: f64 = start.trim().parse().map_err(|_| bad(format!("bad grid start `{start}`")))?;
        let end: f64 = end.trim().parse().map_err(|_| bad(format!("bad grid end `{end}`")))?;
        let n: usize = n.trim().parse().map_err(|_| bad(format!("bad grid size `{n}`")))?;
        if n == 0 {
            return Err(bad("grid needs at least one point".into()));
        }
        linspace(start, end, n)
    } else {
        spec.split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| bad(format!("bad grid value `{t}`"))))
            .collect::<Result<Vec<_>, _>>()?
    };
    if points.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(bad("grid strengths out of [0,1]".into()));
    }
    Ok(points)
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !unit(self.pa) {
            return Err(CliError::validation("pa", "p_A out of [0,1]"));
        }
        if !unit(self.pb) {
            return Err(CliError::validation("pb", "p_B out of [0,1]"));
        }
        StateSpec::parse(&self.state)?;
        self.strengths()?;
        if self.tests.is_empty() {
            return Err(CliError::validation("tests", "at least one test is required"));
        }
        if self.inline && self.exact {
            return Err(CliError::validation("inline", "inline certification needs sampled mode (exact = false)"));
        }
        if !self.exact && self.shots == 0 {
            return Err(CliError::validation("shots", "shots must be positive in sampled mode"));
        }
        if self.threshold.is_nan() || self.threshold >= 0.0 {
            return Err(CliError::validation("threshold", "threshold must be negative"));
        }
        if self.windows == 0 {
            return Err(CliError::validation("windows", "windows must be positive"));
        }
        if !unit(self.ou_mu) {
            return Err(CliError::validation("ou_mu", "ou_mu out of [0,1]"));
        }
        if self.ou_theta.is_nan() || self.ou_theta < 0.0 {
            return Err(CliError::validation("ou_theta", "ou_theta must be non-negative"));
        }
        if self.ou_sigma.is_nan() || self.ou_sigma < 0.0 {
            return Err(CliError::validation("ou_sigma", "ou_sigma must be non-negative"));
        }
        if !self.exact && self.window_shots == 0 {
            return Err(CliError::validation("window_shots", "window_shots must be positive"));
        }
        if self.command == Command::Monitor {
            for (field, name, p) in [("pa", "p_A", self.pa), ("pb", "p_B", self.pb)] {
                if !(p > 0.0 && p < 1.0) {
                    return Err(CliError::validation(field, format!("monitoring needs 0 < {name} < 1")));
                }
            }
        }
        Ok(())
    }

    /// Strength values for sweeps and per-`p` tables.
    pub fn strengths(&self) -> Result<Vec<f64>, CliError> {
        match self.points {
            Some(0) => Err(CliError::validation("points", "points must be positive")),
            Some(n) => Ok(linspace(0.0, 1.0, n)),
            None => parse_grid(&self.grid),
        }
    }

    fn mode(&self) -> EvaluationMode {
        if self.exact {
            EvaluationMode::Exact
        } else {
            EvaluationMode::Sampled { shots: self.shots, seed: self.seed }
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configs serialize to TOML")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub version: String,
    pub seed: u64,
    pub config: RunConfig,
    #[serde(default)]
    pub summary: BTreeMap<String, f64>,
}

/// Row-major numeric table plus the metadata needed to regenerate it.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub metadata: Metadata,
}

impl ResultTable {
    pub fn new(columns: Vec<String>, config: &RunConfig) -> Self {
        let metadata =
            Metadata { version: VERSION.into(), seed: config.seed, config: config.clone(), summary: BTreeMap::new() };
        Self { columns, rows: Vec::new(), metadata }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }
}

fn load_state(spec: &StateSpec) -> Result<DensityMatrix, CliError> {
    match spec {
        StateSpec::Ideal => Ok(DensityMatrix::from_pure(&PureState::phi_plus())),
        StateSpec::Mixed(g) => Ok(mixed_state(*g)?),
        StateSpec::Tomography(path) => Ok(tomography_linear_inversion(&read_expectations(path)?)?.density()?),
    }
}

/// Reads Pauli expectations, one `<label> <value>` pair per line (e.g. `XZ -0.02`).
/// Blank lines and `#` comments are skipped; `II` defaults to 1.
pub fn parse_expectations(text: &str) -> Result<PauliExpectations, CliError> {
    let mut map = PauliExpectations::new();
    map.insert((Pauli::I, Pauli::I), 1.0);
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |m: &str| CliError::Parse { line: Some(n + 1), message: m.to_string() };
        let (label, value) = line.split_once(char::is_whitespace).ok_or_else(|| err("expected `<label> <value>`"))?;
        let mut chars = label.chars();
        let pair =
            match (chars.next().and_then(Pauli::from_label), chars.next().and_then(Pauli::from_label), chars.next()) {
                (Some(a), Some(b), None) => (a, b),
                _ => return Err(err("label must be two of I, X, Y, Z")),
            };
        let value: f64 = value.trim().parse().map_err(|_| err("expectation is not a number"))?;
        map.insert(pair, value);
    }
    Ok(map)
}

fn read_expectations(path: &Path) -> Result<PauliExpectations, CliError> {
    parse_expectations(&std::fs::read_to_string(path)?)
}

fn statistic_column(test: CertificationTest) -> &'static str {
    match test {
        CertificationTest::Witness => "W",
        CertificationTest::SteeringAtoB => "S3_ab",
        CertificationTest::SteeringBtoA => "S3_ba",
        CertificationTest::Chsh => "S",
    }
}

fn certification_table(
    config: &RunConfig,
    state: &DensityMatrix,
    p_a: Vec<f64>,
    p_b: Vec<f64>,
) -> Result<ResultTable, CliError> {
    let grid = SweepGrid { p_a, p_b, tests: config.tests.clone(), mode: config.mode() };
    let results = sweep_certification(&grid, state)?;
    let mut columns = vec!["p_a".to_string(), "p_b".to_string()];
    for &t in &config.tests {
        let c = statistic_column(t);
        columns.extend([c.to_string(), format!("{c}_se"), format!("{c}_certified")]);
    }
    let mut table = ResultTable::new(columns, config);
    let cells = grid.p_a.len() * grid.p_b.len();
    for cell in 0..cells {
        let (a, b) = (grid.p_a[cell / grid.p_b.len()], grid.p_b[cell % grid.p_b.len()]);
        let mut row = vec![a, b];
        for k in 0..config.tests.len() {
            let r = &results[k * cells + cell];
            row.extend([r.statistic, r.standard_error, if r.certified { 1.0 } else { 0.0 }]);
        }
        table.push(row);
    }
    Ok(table)
}

fn metric_values(m: Option<StateMetrics>) -> [f64; 4] {
    m.map_or([f64::NAN; 4], |m| [m.fidelity, m.purity, m.concurrence, m.eof])
}

/// Runs the configured command and returns its table.
pub fn run_command(config: &RunConfig) -> Result<ResultTable, CliError> {
    config.validate()?;
    let spec = StateSpec::parse(&config.state)?;
    match config.command {
        Command::Certify if config.inline => {
            let state = load_state(&spec)?;
            let mut columns = vec!["p_a".to_string(), "p_b".to_string()];
            let mut row = vec![config.pa, config.pb];
            let mut summary = BTreeMap::new();
            for (k, &t) in config.tests.iter().enumerate() {
                let c = statistic_column(t);
                columns.extend([c.to_string(), format!("{c}_se"), format!("{c}_certified")]);
                let rng = RngStream::new(config.seed, 3).child(k as u64);
                let run = certify_and_recover(&state, t, config.pa, config.pb, config.shots, config.policy, &rng)?;
                row.extend([
                    run.result.statistic,
                    run.result.standard_error,
                    f64::from(u8::from(run.result.certified)),
                ]);
                summary.insert(format!("{c}_matched_fraction"), run.summary.matched_fraction());
            }
            let mut table = ResultTable::new(columns, config);
            table.push(row);
            table.metadata.summary = summary;
            Ok(table)
        }
        Command::Certify => {
            let state = load_state(&spec)?;
            certification_table(config, &state, vec![config.pa], vec![config.pb])
        }
        Command::Sweep => {
            let state = load_state(&spec)?;
            let p = config.strengths()?;
            certification_table(config, &state, p.clone(), p)
        }
        Command::Recover => {
            let state = load_state(&spec)?;
            let p = config.strengths()?;
            let reference = PureState::phi_plus();
            let mut columns: Vec<String> = vec!["p".into(), "D".into(), "success_probability".into()];
            for stage in ["before", "after"] {
                for m in ["fidelity", "purity", "concurrence", "eof"] {
                    columns.push(format!("{m}_{stage}"));
                }
            }
            let mut table = ResultTable::new(columns, config);
            for plan in [AveragingPlan::witness(), AveragingPlan::chsh()] {
                for row in sweep_recovery(&p, &state, &reference, &plan, config.mode(), config.policy)? {
                    let mut values = vec![row.p, plan.len() as f64, row.success_probability];
                    values.extend(metric_values(Some(row.before)));
                    values.extend(metric_values(row.after));
                    table.push(values);
                }
            }
            Ok(table)
        }
        Command::Tradeoff => {
            let state = load_state(&spec)?;
            let columns = ["p", "R", "S", "S3", "eof_D3", "eof_D4"].map(String::from).to_vec();
            let mut table = ResultTable::new(columns, config);
            for r in tradeoff_curves(&config.strengths()?, &state)? {
                table.push(vec![r.p, r.reversibility, r.chsh, r.steering, r.eof_witness_plan, r.eof_chsh_plan]);
            }
            Ok(table)
        }
        Command::Monitor => {
            let selection = SelectionConfig {
                threshold: config.threshold,
                window_shots: config.window_shots,
                bell_shots: config.shots,
                p_a: config.pa,
                p_b: config.pb,
                mode: if config.exact { GateMode::Exact } else { GateMode::Sampled },
            };
            let ou = OuProcess::new(config.ou_mu, config.ou_theta, config.ou_sigma)?;
            let report = run_monitoring(&selection, &ou, config.windows, config.seed)?;
            let columns = ["window", "gamma", "W", "W_se", "selected", "recovery_attempts", "S", "S_se"]
                .map(String::from)
                .to_vec();
            let mut table = ResultTable::new(columns, config);
            for w in &report.windows {
                table.push(vec![
                    w.index as f64,
                    w.gamma,
                    w.witness,
                    w.witness_standard_error,
                    if w.selected { 1.0 } else { 0.0 },
                    w.recovery_attempts as f64,
                    w.chsh,
                    w.chsh_standard_error,
                ]);
            }
            let summary = &mut table.metadata.summary;
            summary.insert("selected_count".into(), report.selected_count as f64);
            summary.insert("S_selected".into(), report.selected_chsh.unwrap_or(f64::NAN));
            summary.insert("S_all".into(), report.all_chsh);
            Ok(table)
        }
        Command::Tomography => {
            let expectations = match &spec {
                StateSpec::Tomography(path) => read_expectations(path)?,
                _ => {
                    let state = load_state(&spec)?;
                    if config.exact {
                        pauli_expectations(&state)
                    } else {
                        sample_pauli_expectations(&state, config.shots, &RngStream::new(config.seed, 2))?
                    }
                }
            };
            let tomo = tomography_linear_inversion(&expectations)?;
            let columns = ["row", "col", "re", "im"].map(String::from).to_vec();
            let mut table = ResultTable::new(columns, config);
            for i in 0..4 {
                for j in 0..4 {
                    let z = tomo.matrix[(i, j)];
                    table.push(vec![i as f64, j as f64, z.re, z.im]);
                }
            }
            let summary = &mut table.metadata.summary;
            summary.insert("fidelity".into(), tomo.fidelity_with(&PureState::phi_plus()));
            summary.insert("min_eigenvalue".into(), tomo.min_eigenvalue);
            let (p, c) = match tomo.density() {
                Ok(rho) => (purity(&rho), concurrence(&rho)),
                Err(_) => (f64::NAN, f64::NAN),
            };
            summary.insert("purity".into(), p);
            summary.insert("concurrence".into(), c);
            Ok(table)
        }
    }
}

/// Twelve significant digits, `%g` style.
pub fn format_value(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn metadata_toml(meta: &Metadata) -> String {
    toml::to_string(meta).expect("metadata serializes to TOML")
}

/// Writes `table` as CSV (`#` metadata block, header, records) or JSON lines
/// (metadata object, then one object per record; NaN becomes `null`).
pub fn emit<W: Write>(table: &ResultTable, format: Format, out: &mut W) -> std::io::Result<()> {
    match format {
        Format::Csv => {
            for line in metadata_toml(&table.metadata).lines() {
                if line.is_empty() {
                    writeln!(out, "#")?;
                } else {
                    writeln!(out, "# {line}")?;
                }
            }
            writeln!(out, "{}", table.columns.join(","))?;
            for row in &table.rows {
                let cells: Vec<String> = row.iter().map(|&v| format_value(v)).collect();
                writeln!(out, "{}", cells.join(","))?;
            }
        }
        Format::Jsonl => {
            let meta = serde_json::json!({ "metadata": table.metadata });
            writeln!(out, "{meta}")?;
            for row in &table.rows {
                let record: serde_json::Map<String, serde_json::Value> = table
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(c, &v)| {
                        let value = format_value(v).parse::<f64>().ok().filter(|v| v.is_finite());
                        (c.clone(), serde_json::to_value(value).expect("numbers serialize"))
                    })
                    .collect();
                writeln!(out, "{}", serde_json::Value::Object(record))?;
            }
        }
    }
    Ok(())
}

pub fn emit_to_string(table: &ResultTable, format: Format) -> String {
    let mut buf = Vec::new();
    emit(table, format, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("emitted text is UTF-8")
}

/// Parses a CSV file produced by [`emit`].
pub fn read_csv(text: &str) -> Result<ResultTable, CliError> {
    let mut meta_lines = Vec::new();
    let mut body = Vec::new();
    for (n, line) in text.lines().enumerate() {
        match line.strip_prefix('#') {
            Some(rest) if body.is_empty() => meta_lines.push(rest.strip_prefix(' ').unwrap_or(rest)),
            _ => body.push((n + 1, line)),
        }
    }
    let meta_text = meta_lines.join("\n");
    let metadata: Metadata = toml::from_str(&meta_text).map_err(|e| toml_error(&meta_text, e))?;
    let mut body = body.into_iter();
    let (_, header) = body.next().ok_or(CliError::Parse { line: None, message: "missing header row".into() })?;
    let columns: Vec<String> = header.split(',').map(str::to_string).collect();
    let mut table = ResultTable { columns, rows: Vec::new(), metadata };
    for (n, line) in body {
        let row = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::Parse { line: Some(n), message: e.to_string() })?;
        if row.len() != table.columns.len() {
            return Err(CliError::Parse { line: Some(n), message: "row width differs from header".into() });
        }
        table.rows.push(row);
    }
    Ok(table)
}

/// Recovers the run configuration from an emitted CSV or JSON-lines file.
pub fn config_from_emitted(text: &str) -> Result<RunConfig, CliError> {
    let config = if text.trim_start().starts_with('{') {
        let first = text.lines().next().unwrap_or("");
        let value: serde_json::Value =
            serde_json::from_str(first).map_err(|e| CliError::Parse { line: Some(1), message: e.to_string() })?;
        serde_json::from_value(value["metadata"]["config"].clone())
            .map_err(|e| CliError::Parse { line: Some(1), message: e.to_string() })?
    } else {
        read_csv(text)?.metadata.config
    };
    config.validate()?;
    Ok(config)
}

/// Flags shared by every subcommand; each overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// TOML run description (or a previously emitted CSV/JSONL file).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// ideal | mixed:<gamma> | tomography:<path>
    #[arg(long)]
    pub state: Option<String>,
    /// Certification tests, comma separated (witness, steering-a-to-b, steering-b-to-a, chsh).
    #[arg(long, value_delimiter = ',')]
    pub test: Vec<String>,
    #[arg(long)]
    pub pa: Option<f64>,
    #[arg(long)]
    pub pb: Option<f64>,
    /// start:end:n or a comma-separated list.
    #[arg(long)]
    pub grid: Option<String>,
    /// Evenly spaced strengths on [0, 1]; overrides --grid.
    #[arg(long)]
    pub points: Option<usize>,
    /// Shots per setting; implies sampled mode unless --exact is also given.
    #[arg(long)]
    pub shots: Option<u64>,
    #[arg(long)]
    pub exact: bool,
    /// certify: estimate and recover from the same sampled trials.
    #[arg(long)]
    pub inline: bool,
    /// Defaults to the config file value, then $ENTANGLECERT_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub policy: Option<PolicyArg>,
    #[arg(long, allow_negative_numbers = true)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub windows: Option<usize>,
    #[arg(long)]
    pub window_shots: Option<u64>,
    #[arg(long)]
    pub ou_mu: Option<f64>,
    #[arg(long)]
    pub ou_theta: Option<f64>,
    #[arg(long)]
    pub ou_sigma: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    All,
    Plus,
}

#[derive(Debug, Parser)]
#[command(name = "entanglecert", version, about = "Entanglement certification with weak measurements and reversal")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// One certification result per test at (pa, pb).
    Certify(Overrides),
    /// Witness, steering and CHSH statistics over a strength grid.
    Sweep(Overrides),
    /// Averaged state quality before and after reversal.
    Recover(Overrides),
    /// Reversibility, CHSH, steering and entanglement versus strength.
    Tradeoff(Overrides),
    /// Drifting source with witness-gated selection.
    Monitor(Overrides),
    /// Linear-inversion reconstruction of a two-qubit state.
    Tomography(Overrides),
}

impl Cli {
    /// Merges config file and flags into a validated [`RunConfig`].
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let (command, o) = match &self.command {
            CliCommand::Certify(o) => (Command::Certify, o),
            CliCommand::Sweep(o) => (Command::Sweep, o),
            CliCommand::Recover(o) => (Command::Recover, o),
            CliCommand::Tradeoff(o) => (Command::Tradeoff, o),
            CliCommand::Monitor(o) => (Command::Monitor, o),
            CliCommand::Tomography(o) => (Command::Tomography, o),
        };
        let mut config = match &o.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                let emitted = text.lines().next().is_some_and(|l| l.starts_with('#') || l.starts_with('{'));
                if emitted {
                    config_from_emitted(&text)?
                } else {
                    toml::from_str(&text).map_err(|e| toml_error(&text, e))?
                }
            }
            None => RunConfig::default(),
        };
        config.command = command;
        if let Some(s) = &o.state {
            config.state = s.clone();
        }
        if !o.test.is_empty() {
            config.tests = o
                .test
                .iter()
                .map(|t| t.parse::<CertificationTest>())
                .collect::<Result<_, _>>()
                .map_err(|e| CliError::validation("tests", e.to_string()))?;
        }
        if let Some(v) = o.pa {
            config.pa = v;
        }
        if let Some(v) = o.pb {
            config.pb = v;
        }
        if let Some(g) = &o.grid {
            config.grid = g.clone();
            config.points = None;
        }
        if o.points.is_some() {
            config.points = o.points;
        }
        if let Some(s) = o.shots {
            config.shots = s;
            config.exact = false;
        }
        if o.exact {
            config.exact = true;
        }
        if o.inline {
            config.inline = true;
        }
        if let Some(s) = o.seed {
            config.seed = s;
        }
        if let Some(p) = o.policy {
            config.policy = match p {
                PolicyArg::All => ReversalPolicy::AllBranches,
                PolicyArg::Plus => ReversalPolicy::PlusOnly,
            };
        }
        if let Some(v) = o.threshold {
            config.threshold = v;
        }
        if let Some(v) = o.windows {
            config.windows = v;
        }
        if let Some(v) = o.window_shots {
            config.window_shots = v;
        }
        if let Some(v) = o.ou_mu {
            config.ou_mu = v;
        }
        if let Some(v) = o.ou_theta {
            config.ou_theta = v;
        }
        if let Some(v) = o.ou_sigma {
            config.ou_sigma = v;
        }
        if o.out.is_some() {
            config.out = o.out.clone();
        }
        if let Some(f) = o.format {
            config.format = f;
        }
        config.validate()?;
        Ok(config)
    }
}

/// Entry point shared by the binary and tests; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let config = cli.resolve()?;
    let table = run_command(&config)?;
    match &config.out {
        Some(path) => {
            let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
            emit(&table, config.format, &mut file)?;
            file.flush()?;
        }
        None => emit(&table, config.format, &mut std::io::stdout().lock())?,
    }
    Ok(())
}
