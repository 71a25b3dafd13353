//! Scenario runner for the invariant-based solutions in `lrcore`.
//!
//! A run solves the auxiliary equation, samples the basis states on a grid,
//! evaluates a set of named checks and writes plot-ready CSV files plus a
//! JSON report.
//!
//! Exit codes of the binary: `0` every check passed, `1` some check failed,
//! `2` configuration or I/O error, `3` numerical abort.

pub mod checks;
pub mod config;
pub mod scenarios;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

pub use checks::{CheckOutcome, Context, CHECKS};
pub use config::ScenarioConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("unknown scenario \"{name}\"; did you mean: {}", suggestions.join(", "))]
    UnknownScenario { name: String, suggestions: Vec<&'static str> },
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("numerical abort: {0}")]
    Numerical(lrcore::Error),
}

impl From<lrcore::Error> for CliError {
    fn from(e: lrcore::Error) -> Self {
        match e {
            lrcore::Error::InvalidArgument(msg) | lrcore::Error::Grid(msg) => CliError::Config(msg),
            lrcore::Error::InvalidIndex { n, m } => CliError::Config(format!("invalid state index ({n}, {m})")),
            other => CliError::Numerical(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) => 3,
            _ => 2,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

/// Command-line overrides applied on top of a scenario.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub tolerance: Option<f64>,
    pub points: Option<usize>,
    pub kappa: Option<f64>,
    pub n_max: Option<u32>,
    pub output: Option<PathBuf>,
}

/// A built-in scenario name (or alias) or a path to a TOML file.
pub fn resolve(target: &str, overrides: &Overrides) -> Result<ScenarioConfig, CliError> {
    let mut cfg = if let Some(s) = scenarios::find(target) {
        s.config()?
    } else if Path::new(target).is_file() {
        let path = Path::new(target);
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        ScenarioConfig::from_toml(&text)
            .map_err(|e| CliError::Config(format!("{}: {}", path.display(), e.to_string().trim_start_matches("configuration error: "))))?
    } else {
        return Err(CliError::UnknownScenario { name: target.into(), suggestions: scenarios::suggestions(target) });
    };
    if let Some(x) = overrides.tolerance {
        cfg.tolerance = x;
    }
    if let Some(n) = overrides.points {
        cfg.grid.points = n;
    }
    if let Some(k) = overrides.kappa {
        cfg.kappa = k;
    }
    if let Some(n) = overrides.n_max {
        cfg.n_max = n;
    }
    if let Some(p) = &overrides.output {
        cfg.output = Some(p.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Clone, Debug, Serialize)]
pub struct Timing {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub config_hash: String,
    pub version: String,
    pub passed: bool,
    pub checks: Vec<CheckOutcome>,
    pub warnings: Vec<String>,
    pub timings: Vec<Timing>,
}

impl RunReport {
    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let op = match c.bound {
                checks::Bound::AtMost => "<=",
                checks::Bound::AtLeast => ">=",
            };
            out.push_str(&format!(
                "{:4}  {:22} {:.3e} {op} {:.1e}  ({})\n",
                if c.passed { "ok" } else { "FAIL" },
                c.name,
                c.measured,
                c.threshold,
                c.detail
            ));
        }
        for w in &self.warnings {
            out.push_str(&format!("warning: {w}\n"));
        }
        let failed = self.failures().count();
        out.push_str(&format!("{}: {} checks, {} failed\n", self.scenario, self.checks.len(), failed));
        out
    }
}

fn timed<T>(timings: &mut Vec<Timing>, stage: &str, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = f();
    timings.push(Timing { stage: stage.into(), seconds: start.elapsed().as_secs_f64() });
    out
}

/// Runs the configured checks (every applicable one when none are listed).
pub fn run_scenario(config: &ScenarioConfig) -> Result<(Context, RunReport), CliError> {
    execute(config, config.checks.clone())
}

/// Runs every applicable check regardless of the configured list.
pub fn verify_all(config: &ScenarioConfig) -> Result<(Context, RunReport), CliError> {
    execute(config, None)
}

fn execute(config: &ScenarioConfig, names: Option<Vec<String>>) -> Result<(Context, RunReport), CliError> {
    let mut timings = Vec::new();
    let ctx = timed(&mut timings, "pipeline", || Context::build(config))?;
    let names: Vec<String> = names.unwrap_or_else(|| ctx.applicable().into_iter().map(String::from).collect());
    let outcomes = timed(&mut timings, "checks", || names.iter().map(|n| ctx.run(n)).collect::<Result<Vec<_>, _>>())?;
    let report = RunReport {
        scenario: config.name.clone(),
        config_hash: config.hash(),
        version: env!("CARGO_PKG_VERSION").into(),
        passed: outcomes.iter().all(|c| c.passed),
        checks: outcomes,
        warnings: ctx.warnings(),
        timings,
    };
    Ok((ctx, report))
}

/// Output directory: the configured one or `lrinv-out/<name>`.
pub fn output_dir(config: &ScenarioConfig) -> PathBuf {
    config.output.clone().unwrap_or_else(|| PathBuf::from("lrinv-out").join(&config.name))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

/// Writes `sigma.csv`, `phases_<n>_<m>.csv`, `residuals.csv` and
/// `report.json` into `dir`.
pub fn write_outputs(dir: &Path, ctx: &Context, report: &RunReport) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_sigma(dir, ctx)?;
    write_phases(dir, ctx)?;
    write_residuals(dir, ctx)?;
    let path = dir.join("report.json");
    let mut w = create(&path)?;
    serde_json::to_writer_pretty(&mut w, report).map_err(|e| CliError::Io { path: path.clone(), source: e.into() })?;
    writeln!(w).and_then(|_| w.flush()).map_err(io_err(&path))
}

/// One row per accepted integrator step:
/// `t,sigma,sigma_dot,mu,omega_sq,nu,alpha,beta,gamma,conservation`.
fn write_sigma(dir: &Path, ctx: &Context) -> Result<(), CliError> {
    let path = dir.join("sigma.csv");
    let mut w = create(&path)?;
    let k2 = ctx.config.kappa * ctx.config.kappa;
    let mut body = String::from("t,sigma,sigma_dot,mu,omega_sq,nu,alpha,beta,gamma,conservation\n");
    for t in ctx.solution.times() {
        let f = ctx.solution.frame(t)?;
        let c = f.coeffs();
        body.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            t,
            f.sigma,
            f.sigma_dot,
            f.mu,
            f.omega_sq,
            f.nu,
            c.alpha,
            c.beta,
            c.gamma,
            c.discriminant() + k2
        ));
    }
    w.write_all(body.as_bytes()).and_then(|_| w.flush()).map_err(io_err(&path))
}

fn write_phases(dir: &Path, ctx: &Context) -> Result<(), CliError> {
    for (k, rec) in ctx.records.iter().enumerate() {
        let path = dir.join(format!("phases_{}_{}.csv", rec.idx.n, rec.idx.m));
        let residuals: Vec<f64> =
            ctx.samples.iter().map(|s| s.states[k].schrodinger.unwrap_or(f64::NAN)).collect();
        let mut w = create(&path)?;
        rec.write_csv(&mut w, Some(&residuals)).and_then(|_| w.flush()).map_err(io_err(&path))?;
    }
    Ok(())
}

/// One row per (state, sample time):
/// `n,m,t,norm_defect,invariant_residual,angular_residual,energy_relative,schrodinger,control,overlap_error`.
fn write_residuals(dir: &Path, ctx: &Context) -> Result<(), CliError> {
    let path = dir.join("residuals.csv");
    let mut w = create(&path)?;
    let mut body = String::from(
        "n,m,t,norm_defect,invariant_residual,angular_residual,energy_relative,schrodinger,control,overlap_error\n",
    );
    let opt = |x: Option<f64>| x.unwrap_or(f64::NAN);
    for (k, idx) in ctx.indices.iter().enumerate() {
        for s in &ctx.samples {
            let r = &s.states[k];
            body.push_str(&format!(
                "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                idx.n,
                idx.m,
                s.t,
                r.norm_defect,
                r.invariant_residual,
                r.angular_residual,
                r.energy_relative,
                opt(r.schrodinger),
                opt(r.control),
                opt(r.overlap_error)
            ));
        }
    }
    w.write_all(body.as_bytes()).and_then(|_| w.flush()).map_err(io_err(&path))
}
