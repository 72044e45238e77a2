//! Command dispatch behind the `belavkin-lab` binary.
//!
//! [`run`] never prints or exits; it returns a [`RunOutcome`] holding the
//! exit code, the files written, the text meant for stdout and, on error,
//! the JSON meant for stderr. That keeps the whole pipeline testable
//! in-process.

mod config;
mod output;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;

pub use config::{ExperimentSpec, OutputSpec, ScenarioConfig, SCHEMA_VERSION};
use output::{write_csv, write_json, write_text, Header};

use crate::continuous::{em_integrate, grid_steps, EmOptions};
use crate::discrete::{build_model, simulate_steps, ModelKind, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::harness::mean::level_stream;
use crate::harness::montecarlo::replicate;
use crate::harness::oracles::limit_sde;
use crate::harness::weak::sde_stream;
use crate::harness::{
    deviation_scan, martingale_diagnostics, mean_convergence, residual_order, robustness_scan, weak_marginal_compare,
    ExperimentReport, Functional, Status,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;
pub const EXIT_INCONCLUSIVE: i32 = 4;
pub const EXIT_FAIL: i32 = 5;
/// I/O trouble and anything else outside the model.
pub const EXIT_OTHER: i32 = 1;

pub const THREADS_ENV: &str = "BELAVKIN_LAB_THREADS";
const DEFAULT_OUT_DIR: &str = "belavkin-out";
/// Replications held in memory at once while streaming paths to CSV.
const WRITE_CHUNK: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Simulate,
    Integrate,
    Experiment,
    Constants,
    Validate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Integrate => "integrate",
            Command::Experiment => "experiment",
            Command::Constants => "constants",
            Command::Validate => "validate",
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    /// Drop timestamps and wall-clock fields so reruns are byte-identical.
    pub deterministic: bool,
    /// Worker count; `None` uses rayon's global pool.
    pub threads: Option<usize>,
    pub quiet: bool,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub files: Vec<PathBuf>,
    pub stdout: String,
    /// Structured error for stderr.
    pub error_json: Option<String>,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::Dimension(_)
        | Error::NotHermitian(_)
        | Error::NotPsd(_)
        | Error::InvalidDensity(_)
        | Error::Assumption { .. }
        | Error::Covariance(_)
        | Error::Resonance(..)
        | Error::RankDeficient(_)
        | Error::Construction { .. } => EXIT_VALIDATION,
        Error::Degenerate(_) | Error::Divergence { .. } => EXIT_DEGENERATE,
        Error::Io(_) => EXIT_OTHER,
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Dimension(_) => "dimension",
        Error::NotHermitian(_) => "not_hermitian",
        Error::NotPsd(_) => "not_psd",
        Error::RankDeficient(_) => "rank_deficient",
        Error::InvalidDensity(_) => "invalid_density",
        Error::Resonance(..) => "resonance",
        Error::Assumption { .. } => "assumption",
        Error::Covariance(_) => "covariance",
        Error::Construction { .. } => "construction",
        Error::Degenerate(_) => "degenerate",
        Error::Divergence { .. } => "divergence",
        Error::Config(_) => "config",
        Error::Io(_) => "io",
    }
}

pub fn error_json(command: Command, e: &Error) -> String {
    let mut body = json!({
        "command": command.name(),
        "kind": error_kind(e),
        "message": e.to_string(),
        "exit_code": exit_code(e),
    });
    if let Error::Assumption { name, .. } = e {
        body["assumption"] = json!(name);
    }
    serde_json::to_string(&json!({ "error": body })).expect("error JSON")
}

/// Loads `config_path` and runs `command` on it.
pub fn run(command: Command, config_path: &Path, options: &RunOptions) -> RunOutcome {
    match ScenarioConfig::load(config_path) {
        Ok(cfg) => run_config(command, &cfg, options),
        Err(e) => failure(command, &e),
    }
}

pub fn run_config(command: Command, cfg: &ScenarioConfig, options: &RunOptions) -> RunOutcome {
    let go = || execute(command, cfg, options);
    let result = match options.threads {
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build() {
            Ok(pool) => pool.install(go),
            Err(e) => Err(Error::Config(format!("cannot build a pool of {t} threads: {e}"))),
        },
        None => go(),
    };
    match result {
        Ok(mut outcome) => {
            if options.quiet {
                outcome.stdout.clear();
            }
            outcome
        }
        Err(e) => failure(command, &e),
    }
}

fn failure(command: Command, e: &Error) -> RunOutcome {
    RunOutcome { exit_code: exit_code(e), files: Vec::new(), stdout: String::new(), error_json: Some(error_json(command, e)) }
}

struct Context<'a> {
    cfg: &'a ScenarioConfig,
    seed: u64,
    dir: PathBuf,
    header: Header,
    deterministic: bool,
}

impl Context<'_> {
    fn path(&self, default_stem: &str, ext: &str) -> PathBuf {
        let stem = self.cfg.output.prefix.as_deref().unwrap_or(default_stem);
        self.dir.join(format!("{stem}.{ext}"))
    }
}

fn execute(command: Command, cfg: &ScenarioConfig, options: &RunOptions) -> Result<RunOutcome> {
    cfg.validate()?;
    let seed = options.seed.unwrap_or(cfg.seed);
    let dir = options
        .out_dir
        .clone()
        .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    let header = Header::new(cfg.model_digest(), command, seed, options.deterministic);
    let ctx = Context { cfg, seed, dir, header, deterministic: options.deterministic };
    if command != Command::Validate {
        std::fs::create_dir_all(&ctx.dir)?;
    }
    match command {
        Command::Validate => Ok(validate(&ctx)),
        Command::Simulate => simulate(&ctx),
        Command::Integrate => integrate(&ctx),
        Command::Constants => constants(&ctx),
        Command::Experiment => experiment(&ctx),
    }
}

fn ok(files: Vec<PathBuf>, stdout: String) -> RunOutcome {
    RunOutcome { exit_code: EXIT_OK, files, stdout, error_json: None }
}

fn validate(ctx: &Context) -> RunOutcome {
    let cfg = ctx.cfg;
    let mut text = format!(
        "valid: kind {} at n = {}, T = {}, M = {}, model_digest {}\n",
        cfg.model.kind.name(),
        cfg.model.n,
        cfg.t_final,
        cfg.replications,
        ctx.header.model_digest
    );
    if let Some(e) = &cfg.experiment {
        text.push_str(&format!("experiment: {}\n", e.name()));
    }
    ok(Vec::new(), text)
}

/// Steps covering [0, T] at spacing 1/n.
fn horizon_steps(n: usize, t_final: f64) -> Result<usize> {
    let exact = t_final * n as f64;
    let steps = exact.round();
    if (exact - steps).abs() > 1e-9 * exact.max(1.0) || steps < 1.0 {
        return Err(Error::Config(format!("T = {t_final} is not a whole number of steps at n = {n}")));
    }
    Ok(steps as usize)
}

fn matrix_cells(m: &crate::linalg::ComplexMatrix) -> impl Iterator<Item = String> + '_ {
    m.as_slice().iter().flat_map(|z| [z.re.to_string(), z.im.to_string()])
}

fn simulate(ctx: &Context) -> Result<RunOutcome> {
    let cfg = ctx.cfg;
    let model = build_model(&cfg.model)?;
    let steps = horizon_steps(model.n, cfg.t_final)?;
    let m = cfg.replications;
    let path = ctx.path("trajectories", "csv");
    let mut header = vec!["rep"];
    header.extend(TrajectoryRecord::csv_header());
    let mut out = write_csv(&path, &ctx.header, &header)?;
    let mut outcomes = vec![0usize; model.outcome_count().max(1)];
    for start in (0..m).step_by(WRITE_CHUNK) {
        let end = (start + WRITE_CHUNK).min(m);
        let records = replicate(end - start, |i| simulate_steps(&model, steps, ctx.seed, level_stream(0, start + i)))?;
        for (i, r) in records.iter().enumerate() {
            for &o in &r.outcomes {
                outcomes[o] += 1;
            }
            let rep = (start + i).to_string();
            for row in r.csv_rows() {
                out.write_record(std::iter::once(rep.clone()).chain(row))?;
            }
        }
    }
    out.finish()?;
    let mut text = format!("simulate: {m} trajectories of kind {} with {steps} steps\n", model.kind.name());
    if model.kind != ModelKind::MemorySwap {
        let total: usize = outcomes.iter().sum();
        let freq: Vec<String> = outcomes.iter().map(|&c| format!("{:.4}", c as f64 / total.max(1) as f64)).collect();
        text.push_str(&format!("outcome frequencies: {}\n", freq.join(" ")));
    }
    text.push_str(&format!("wrote {}\n", path.display()));
    Ok(ok(vec![path], text))
}

fn integrate(ctx: &Context) -> Result<RunOutcome> {
    let cfg = ctx.cfg;
    let dt = cfg.dt.ok_or_else(|| Error::Config("integrate needs dt".into()))?;
    let model = build_model(&cfg.model)?;
    let sde = limit_sde(&model, cfg.noise_drift)?;
    let steps = grid_steps(dt, cfg.t_final)?;
    let options = EmOptions { record_every: cfg.output.record_every.unwrap_or(1), ..EmOptions::default() };
    let rho0 = model.initial.matrix();
    let m = cfg.replications;
    let path = ctx.path("sde_paths", "csv");
    let header = [
        "rep", "k", "t", "rho00_re", "rho00_im", "rho01_re", "rho01_im", "rho10_re", "rho10_im", "rho11_re", "rho11_im",
    ];
    let mut out = write_csv(&path, &ctx.header, &header)?;
    let mut max_trace_dev: f64 = 0.0;
    for start in (0..m).step_by(WRITE_CHUNK) {
        let end = (start + WRITE_CHUNK).min(m);
        let paths = replicate(end - start, |i| {
            em_integrate(&sde.spec, rho0, dt, cfg.t_final, ctx.seed, sde_stream(start + i), None, &options)
        })?;
        for (i, p) in paths.iter().enumerate() {
            let rep = (start + i).to_string();
            for (t, x) in p.times.iter().zip(&p.states) {
                let rho = sde.density(*t, x);
                max_trace_dev = max_trace_dev.max((rho.trace().re - 1.0).abs());
                let k = (t / dt).round() as usize;
                let row = [rep.clone(), k.to_string(), t.to_string()].into_iter().chain(matrix_cells(&rho));
                out.write_record(row)?;
            }
        }
    }
    out.finish()?;
    let text = format!(
        "integrate: {m} paths of {} with dt = {dt}, {steps} steps\nmax |tr rho - 1| = {max_trace_dev:.3e}\nwrote {}\n",
        sde.spec.label,
        path.display()
    );
    Ok(ok(vec![path], text))
}

fn constants(ctx: &Context) -> Result<RunOutcome> {
    let model = build_model(&ctx.cfg.model)?;
    let derived = model.constants.as_ref().ok_or_else(|| {
        Error::Config(format!("kind {} has no measurement constants", model.kind.name()))
    })?;
    let path = ctx.path("constants", "json");
    write_json(&path, &ctx.header, json!({ "kind": model.kind.name(), "constants": derived }))?;
    let mut text = String::new();
    if let Some(s) = derived.single() {
        text.push_str(&format!("alpha = {:.12}\ngamma = {:.12} {:+.12}i\n", s.alpha, s.gamma.re, s.gamma.im));
    }
    if let Some(nc) = derived.noise() {
        text.push_str("b_ij:\n");
        for row in &nc.b {
            text.push_str(&format!("  {:.12} {:.12} {:.12}\n", row[0], row[1], row[2]));
        }
        text.push_str("B:\n");
        for i in 0..3 {
            let r: Vec<String> = (0..3).map(|j| format!("{:+.12}", nc.b_matrix[(i, j)].re)).collect();
            text.push_str(&format!("  {}\n", r.join(" ")));
        }
        text.push_str("B~ (PSD square root of B):\n");
        for i in 0..3 {
            let r: Vec<String> = (0..3).map(|j| format!("{:+.12}", nc.b_sqrt[(i, j)].re)).collect();
            text.push_str(&format!("  {}\n", r.join(" ")));
        }
        let ev: Vec<String> = nc.b_eigenvalues.iter().map(|v| format!("{v:.6}")).collect();
        text.push_str(&format!("eigenvalues of B: {}\n", ev.join(" ")));
    }
    text.push_str(&format!("wrote {}\n", path.display()));
    Ok(ok(vec![path], text))
}

fn run_experiment(spec: &ExperimentSpec, cfg: &ScenarioConfig, seed: u64) -> Result<ExperimentReport> {
    let model = &cfg.model;
    let m = cfg.replications;
    match spec {
        ExperimentSpec::MeanConvergence { ns } => mean_convergence(model, ns, m, seed),
        ExperimentSpec::WeakMarginalCompare { n, dt, functionals } => {
            let f = functionals.as_deref().unwrap_or(&Functional::DEFAULTS);
            weak_marginal_compare(model, *n, *dt, m, seed, f)
        }
        ExperimentSpec::MartingaleDiagnostics { n } => martingale_diagnostics(model, *n, m, seed),
        ExperimentSpec::ResidualOrder { experiment, sweep } => {
            let s = sweep.clone().unwrap_or_else(|| experiment.default_sweep());
            residual_order(*experiment, model, &s, seed)
        }
        ExperimentSpec::RobustnessScan { eps, dt } => robustness_scan(model, eps, m, *dt, seed),
        ExperimentSpec::DeviationScan { alpha, eps, dt } => deviation_scan(model, *alpha, eps, m, *dt, seed),
    }
}

fn experiment(ctx: &Context) -> Result<RunOutcome> {
    let spec = ctx.cfg.experiment.as_ref().ok_or_else(|| Error::Config("no experiment block".into()))?;
    let clock = Instant::now();
    let mut report = run_experiment(spec, ctx.cfg, ctx.seed)?;
    if !ctx.deterministic {
        report.wall_seconds = Some(clock.elapsed().as_secs_f64());
    }
    let stem = spec.name();
    let (json_path, text_path, csv_path) = (ctx.path(stem, "json"), ctx.path(stem, "txt"), ctx.path(stem, "csv"));
    write_json(&json_path, &ctx.header, json!({ "status": report.status(), "report": &report }))?;
    let text = report.to_text();
    write_text(&text_path, &ctx.header, &text)?;
    let mut out = write_csv(&csv_path, &ctx.header, &ExperimentReport::csv_header())?;
    for row in report.csv_rows() {
        out.write_record(row)?;
    }
    out.finish()?;
    let exit_code = match report.status() {
        Status::Pass => EXIT_OK,
        Status::Inconclusive => EXIT_INCONCLUSIVE,
        Status::Fail => EXIT_FAIL,
    };
    let files = vec![json_path, text_path, csv_path];
    let listing: Vec<String> = files.iter().map(|p| format!("wrote {}\n", p.display())).collect();
    Ok(RunOutcome { exit_code, files, stdout: format!("{text}{}", listing.concat()), error_json: None })
}
