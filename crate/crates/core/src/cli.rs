//! The `avn` command line: predict, lhv, simulate, reproduce-paper.
//!
//! Every subcommand reads one JSON [`RunConfig`] (file or `-` for stdin);
//! `--set path=value` overrides any field by its dotted path, and the
//! `--seed`, `--format` and `--preset` flags override the top-level fields.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::AvnError;
use crate::experiment::{predict_exact, run_schedule, ContextPair, ExperimentReport, Schedule};
use crate::lhv::Certificate;
use crate::observables::CorrelationId;
use crate::published;
use crate::qstate::DensityMatrix;
use crate::render;
use crate::source::{apply_noise, build_psi, fit_noise, NoiseFit, NoiseModel, SourceConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CERTIFICATE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] AvnError),
    #[error("certificate check failed: {0}")]
    Certificate(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Certificate(_) => EXIT_CERTIFICATE,
            _ => EXIT_USAGE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
    Text,
}

/// Named configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Noise fitted to the published correlations and per-row event counts
    /// matched to the published errors. Replaces `noise` and `schedule`.
    Paper,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub source: SourceConfig,
    pub noise: NoiseModel,
    pub schedule: Schedule,
    pub seed: u64,
    pub output_format: OutputFormat,
    pub preset: Option<Preset>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        self.source.validate()?;
        self.noise.validate()?;
        self.schedule.validate()?;
        Ok(())
    }

    /// Noise model and schedule after applying the preset.
    pub fn effective(&self) -> Result<(NoiseModel, Schedule), CliError> {
        match self.preset {
            None => Ok((self.noise, self.schedule.clone())),
            Some(Preset::Paper) => Ok((paper_fit()?.model, Schedule::matched_to_published())),
        }
    }

    pub fn density(&self) -> Result<DensityMatrix, CliError> {
        let (noise, _) = self.effective()?;
        Ok(apply_noise(&build_psi(&self.source), &noise)?)
    }
}

pub fn paper_fit() -> Result<NoiseFit, CliError> {
    Ok(fit_noise(&published::targets())?)
}

fn parse_value(text: &str) -> Value {
    serde_json::from_str(text).unwrap_or_else(|_| Value::String(text.to_string()))
}

/// Applies `a.b.c=value`. The value is read as JSON, or as a string when it
/// does not parse.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<(), CliError> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("expected path=value, got {assignment:?}")))?;
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::Config(format!("bad field path {path:?}")));
    }
    let mut node = doc;
    for key in &keys[..keys.len() - 1] {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| CliError::Config(format!("{path}: {key} is inside a non-object")))?;
        node = obj
            .entry(key.to_string())
            .or_insert_with(|| Value::Object(Map::new()));
    }
    let obj = node
        .as_object_mut()
        .ok_or_else(|| CliError::Config(format!("{path}: parent is not an object")))?;
    obj.insert(keys[keys.len() - 1].to_string(), parse_value(raw));
    Ok(())
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct ConfigArgs {
    /// JSON config file, or - for standard input.
    #[arg(long, value_name = "PATH")]
    pub config: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Write the document here instead of standard output.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Override a config field by dotted path, e.g. noise.white_noise_weight=0.1.
    #[arg(long = "set", value_name = "PATH=VALUE")]
    pub sets: Vec<String>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
}

#[derive(Debug, Parser)]
#[command(
    name = "avn",
    version,
    about = "Two-photon all-versus-nothing nonlocality: predictions, local-realism certificate, simulation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact quantum predictions for the configured state.
    Predict(ConfigArgs),
    /// Exhaustive local-realism audit of the nine constraints.
    Lhv(ConfigArgs),
    /// Seeded coincidence-counting simulation.
    Simulate(ConfigArgs),
    /// Published values side by side with exact and simulated ones.
    ReproducePaper(ConfigArgs),
}

impl Command {
    fn args(&self) -> &ConfigArgs {
        match self {
            Command::Predict(a)
            | Command::Lhv(a)
            | Command::Simulate(a)
            | Command::ReproducePaper(a) => a,
        }
    }
}

/// Builds the effective config from the file (if any), `--set` overrides and flags.
pub fn load_config(args: &ConfigArgs, stdin: &mut dyn Read) -> Result<RunConfig, CliError> {
    let mut doc = match args.config.as_deref() {
        None => Value::Object(Map::new()),
        Some(path) => {
            let text = if path == "-" {
                let mut s = String::new();
                stdin.read_to_string(&mut s)?;
                s
            } else {
                std::fs::read_to_string(path)
                    .map_err(|e| CliError::Config(format!("{path}: {e}")))?
            };
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{path}: {e}")))?
        }
    };
    if !doc.is_object() {
        return Err(CliError::Config("config must be a JSON object".into()));
    }
    for s in &args.sets {
        apply_override(&mut doc, s)?;
    }
    let obj = doc.as_object_mut().expect("checked above");
    if let Some(seed) = args.seed {
        obj.insert("seed".into(), seed.into());
    }
    if let Some(format) = args.format {
        obj.insert(
            "output_format".into(),
            serde_json::to_value(format).expect("enum"),
        );
    }
    if let Some(preset) = args.preset {
        obj.insert("preset".into(), serde_json::to_value(preset).expect("enum"));
    }
    let config: RunConfig =
        serde_json::from_value(doc).map_err(|e| CliError::Config(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

/// Document emitted by `predict` and `simulate`.
#[derive(Debug, Clone, Serialize)]
pub struct RunDocument {
    pub command: &'static str,
    pub source: SourceConfig,
    pub noise: NoiseModel,
    pub preset: Option<Preset>,
    pub report: ExperimentReport,
}

pub fn predict(config: &RunConfig) -> Result<RunDocument, CliError> {
    let (noise, _) = config.effective()?;
    Ok(RunDocument {
        command: "predict",
        source: config.source,
        noise,
        preset: config.preset,
        report: predict_exact(&config.density()?)?,
    })
}

pub fn simulate(config: &RunConfig) -> Result<RunDocument, CliError> {
    let (noise, schedule) = config.effective()?;
    let rho = apply_noise(&build_psi(&config.source), &noise)?;
    Ok(RunDocument {
        command: "simulate",
        source: config.source,
        noise,
        preset: config.preset,
        report: run_schedule(&rho, &schedule, config.seed)?,
    })
}

fn run_text(doc: &RunDocument, qm_hist: &[f64; 16]) -> String {
    let r = &doc.report;
    let mut out = format!("{} (phi = {})\n", doc.command, doc.source.phi);
    let n = &doc.noise;
    let _ = writeln!(
        out,
        "noise: w = {}, pol_visibility = {}, path_visibility = {}, phase_offset = {}",
        n.white_noise_weight, n.pol_visibility, n.path_visibility, n.phase_offset
    );
    if let Some(seed) = r.seed {
        let _ = writeln!(out, "seed: {seed}");
    }
    out.push('\n');
    out.push_str(&render::correlation_table(r));
    out.push('\n');
    out.push_str(&render::lr_panel(&crate::lhv::lr_m_histogram()));
    out.push('\n');
    out.push_str(&render::qm_panel(qm_hist));
    if doc.command == "simulate" {
        out.push('\n');
        out.push_str(&render::observed_panel(
            &r.m_histogram,
            r.estimate(CorrelationId::M).n,
        ));
    }
    out
}

fn render_run(doc: &RunDocument, config: &RunConfig) -> Result<String, CliError> {
    Ok(match config.output_format {
        OutputFormat::Json => render::json(doc),
        OutputFormat::Csv => render::report_csv(&doc.report),
        OutputFormat::Text => {
            let qm = crate::experiment::outcome_distribution(
                &config.density()?,
                ContextPair::for_correlation(CorrelationId::M),
            )?;
            run_text(doc, &qm)
        }
    })
}

pub fn cmd_predict(config: &RunConfig) -> Result<String, CliError> {
    render_run(&predict(config)?, config)
}

pub fn cmd_simulate(config: &RunConfig) -> Result<String, CliError> {
    render_run(&simulate(config)?, config)
}

/// Rendered certificate and whether every check passed.
pub fn cmd_lhv(format: OutputFormat) -> (String, bool) {
    let cert = Certificate::build();
    let doc = match format {
        OutputFormat::Json => render::json(&cert),
        OutputFormat::Csv => render::certificate_csv(&cert),
        OutputFormat::Text => render::certificate_text(&cert),
    };
    (doc, cert.is_valid())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub quantity: String,
    /// Value quoted in the publication.
    pub paper: Option<f64>,
    /// Arithmetic on quoted values only.
    pub paper_derived: Option<f64>,
    pub exact: Option<f64>,
    pub simulated: f64,
    pub tolerance: f64,
    /// |simulated − reference| ≤ tolerance, reference = paper, else paper_derived.
    pub pass: bool,
}

impl ComparisonRow {
    fn new(
        quantity: &str,
        paper: Option<f64>,
        paper_derived: Option<f64>,
        exact: Option<f64>,
        simulated: f64,
        tolerance: f64,
    ) -> Self {
        let reference = paper.or(paper_derived).expect("a reference value");
        ComparisonRow {
            quantity: quantity.to_string(),
            paper,
            paper_derived,
            exact,
            simulated,
            tolerance,
            pass: (simulated - reference).abs() <= tolerance,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PaperComparison {
    pub seed: u64,
    pub fit: NoiseFit,
    pub schedule: Schedule,
    pub rows: Vec<ComparisonRow>,
}

impl PaperComparison {
    pub fn row(&self, quantity: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.quantity == quantity)
    }
}

/// Fitted model, exact predictions and one seeded run against the published values.
pub fn reproduce_paper(seed: u64) -> Result<PaperComparison, CliError> {
    let fit = paper_fit()?;
    let schedule = Schedule::matched_to_published();
    let rho = apply_noise(&build_psi(&SourceConfig::default()), &fit.model)?;
    let exact = predict_exact(&rho)?;
    let sim = run_schedule(&rho, &schedule, seed)?;

    let mut rows = Vec::new();
    for id in CorrelationId::ALL {
        let s = sim.estimate(id);
        let (paper, derived, err) = match published::measured(id) {
            Some(m) => (Some(m.value), None, m.error),
            None => (
                None,
                Some(published::implied_m_value()),
                published::implied_m_error(),
            ),
        };
        rows.push(ComparisonRow::new(
            id.name(),
            paper,
            derived,
            Some(exact.estimate(id).value),
            s.value,
            3.0 * err.hypot(s.stderr),
        ));
    }
    rows.push(ComparisonRow::new(
        "O",
        Some(published::BELL_VALUE),
        None,
        Some(exact.bell_value),
        sim.bell_value,
        0.05,
    ));
    rows.push(ComparisonRow::new(
        "sigma_violation",
        Some(published::SIGMA_VIOLATION),
        Some(published::implied_sigma_violation()),
        None,
        sim.sigma_violation.unwrap_or(f64::NAN),
        0.2 * published::SIGMA_VIOLATION,
    ));
    rows.push(ComparisonRow::new(
        "m_fidelity",
        Some(published::M_FIDELITY),
        Some(published::fidelity_from_m(published::implied_m_value())),
        Some(exact.m_fidelity),
        sim.m_fidelity,
        0.01,
    ));
    rows.push(ComparisonRow::new(
        "visibility",
        Some(published::VISIBILITY),
        Some(published::implied_visibility()),
        Some(exact.mean_abs_correlation()),
        sim.mean_abs_correlation(),
        0.005,
    ));
    Ok(PaperComparison {
        seed,
        fit,
        schedule,
        rows,
    })
}

fn opt(v: Option<f64>, precision: usize) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.precision$}"))
}

fn opt_csv(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

pub fn cmd_reproduce_paper(config: &RunConfig) -> Result<String, CliError> {
    let cmp = reproduce_paper(config.seed)?;
    Ok(match config.output_format {
        OutputFormat::Json => render::json(&cmp),
        OutputFormat::Csv => {
            let mut out =
                String::from("quantity,paper,paper_derived,exact,simulated,tolerance,pass\n");
            for r in &cmp.rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    r.quantity,
                    opt_csv(r.paper),
                    opt_csv(r.paper_derived),
                    opt_csv(r.exact),
                    r.simulated,
                    r.tolerance,
                    if r.pass { "pass" } else { "fail" }
                );
            }
            out
        }
        OutputFormat::Text => {
            let m = &cmp.fit.model;
            let mut out = format!(
                "fitted noise: w = {:.6}, pol_visibility = {:.5}, path_visibility = {:.5}, phase_offset = {:.4} (residual {:.2e})\nseed: {}\n\n",
                m.white_noise_weight, m.pol_visibility, m.path_visibility, m.phase_offset, cmp.fit.residual, cmp.seed
            );
            let _ = writeln!(
                out,
                "{:<16} {:>10} {:>13} {:>10} {:>10} {:>9}  result",
                "quantity", "paper", "paper-derived", "exact", "simulated", "tolerance"
            );
            for r in &cmp.rows {
                let p = if r.quantity == "sigma_violation" {
                    2
                } else {
                    5
                };
                let _ = writeln!(
                    out,
                    "{:<16} {:>10} {:>13} {:>10} {:>10.p$} {:>9.5}  {}",
                    r.quantity,
                    opt(r.paper, p),
                    opt(r.paper_derived, p),
                    opt(r.exact, p),
                    r.simulated,
                    r.tolerance,
                    if r.pass { "pass" } else { "FAIL" }
                );
            }
            out
        }
    })
}

fn execute(command: &Command, stdin: &mut dyn Read) -> Result<(String, bool), CliError> {
    let config = load_config(command.args(), stdin)?;
    match command {
        Command::Predict(_) => Ok((cmd_predict(&config)?, true)),
        Command::Simulate(_) => Ok((cmd_simulate(&config)?, true)),
        Command::ReproducePaper(_) => Ok((cmd_reproduce_paper(&config)?, true)),
        Command::Lhv(_) => Ok(cmd_lhv(config.output_format)),
    }
}

/// Parses `args` (program name first), runs the subcommand and returns the exit code.
pub fn run<I, T>(
    args: I,
    stdin: &mut dyn Read,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(stdout, "{text}");
                EXIT_OK
            };
        }
    };
    let result = execute(&cli.command, stdin).and_then(|(doc, valid)| {
        match &cli.command.args().out {
            Some(path) => std::fs::write(path, &doc)?,
            None => stdout.write_all(doc.as_bytes())?,
        }
        if valid {
            Ok(())
        } else {
            Err(CliError::Certificate(
                "local-realism audit did not produce a contradiction".into(),
            ))
        }
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "avn: {e}");
            e.exit_code()
        }
    }
}
