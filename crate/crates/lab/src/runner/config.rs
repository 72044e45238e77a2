//! Scenario files: one JSON object per run, unknown keys rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::continuous::NoiseDrift;
use crate::discrete::{build_model, ModelConfig, ModelKind};
use crate::error::{Error, Result};
use crate::harness::mean::MEAN_GRID;
use crate::harness::martingale::MIN_MARTINGALE_REPLICATIONS;
use crate::harness::weak::MIN_WEAK_REPLICATIONS;
use crate::harness::{Functional, ResidualExperiment};

pub const SCHEMA_VERSION: u32 = 1;

fn one() -> usize {
    1
}

fn unit_horizon() -> f64 {
    1.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub model: ModelConfig,
    #[serde(default)]
    pub seed: u64,
    /// Replications M.
    #[serde(default = "one")]
    pub replications: usize,
    /// Euler–Maruyama step of `integrate`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Horizon T.
    #[serde(default = "unit_horizon", rename = "T")]
    pub t_final: f64,
    /// Drift of the noise SDE under `integrate`.
    #[serde(default)]
    pub noise_drift: NoiseDrift,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentSpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Directory for result files; `--out-dir` wins over it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    /// File stem; defaults to the command (and experiment) name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prefix: Option<String>,
    /// Keep every k-th state of `integrate` paths.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_every: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExperimentSpec {
    MeanConvergence {
        ns: Vec<usize>,
    },
    WeakMarginalCompare {
        n: usize,
        dt: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        functionals: Option<Vec<Functional>>,
    },
    MartingaleDiagnostics {
        n: usize,
    },
    ResidualOrder {
        experiment: ResidualExperiment,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sweep: Option<Vec<f64>>,
    },
    RobustnessScan {
        eps: Vec<f64>,
        dt: f64,
    },
    DeviationScan {
        alpha: f64,
        eps: Vec<f64>,
        dt: f64,
    },
}

impl ExperimentSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentSpec::MeanConvergence { .. } => "mean_convergence",
            ExperimentSpec::WeakMarginalCompare { .. } => "weak_marginal_compare",
            ExperimentSpec::MartingaleDiagnostics { .. } => "martingale_diagnostics",
            ExperimentSpec::ResidualOrder { .. } => "residual_order",
            ExperimentSpec::RobustnessScan { .. } => "robustness_scan",
            ExperimentSpec::DeviationScan { .. } => "deviation_scan",
        }
    }

    /// Preconditions checkable without running anything.
    fn validate(&self, model: &ModelConfig, m: usize) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(format!("{}: {msg}", self.name())));
        let eps_ok = |eps: &[f64]| eps.len() >= 4 && eps.iter().all(|&e| e > 0.0 && e <= 0.3) && eps.windows(2).all(|w| w[0] < w[1]);
        match self {
            ExperimentSpec::MeanConvergence { ns } => {
                if ns.len() < 2 || ns.windows(2).any(|w| w[0] >= w[1]) {
                    return fail("ns must hold at least two increasing values".into());
                }
                if ns.iter().any(|n| n % MEAN_GRID != 0) {
                    return fail(format!("every n must be a multiple of {MEAN_GRID}"));
                }
                if model.kind.is_stochastic() && m < 1000 {
                    return fail(format!("needs replications >= 1000, got {m}"));
                }
            }
            ExperimentSpec::WeakMarginalCompare { n, dt, functionals } => {
                if !model.kind.is_stochastic() {
                    return fail("needs a stochastic kind".into());
                }
                if *n == 0 || !(*dt > 0.0 && *dt <= 1e-2) {
                    return fail(format!("need n >= 1 and 0 < dt <= 1e-2, got n = {n}, dt = {dt}"));
                }
                if m < MIN_WEAK_REPLICATIONS {
                    return fail(format!("needs replications >= {MIN_WEAK_REPLICATIONS}, got {m}"));
                }
                if functionals.as_ref().is_some_and(|f| f.is_empty()) {
                    return fail("functionals must not be empty".into());
                }
            }
            ExperimentSpec::MartingaleDiagnostics { n } => {
                if !model.kind.is_stochastic() {
                    return fail("needs a stochastic kind".into());
                }
                if *n < 16 {
                    return fail(format!("needs n >= 16, got {n}"));
                }
                if m < MIN_MARTINGALE_REPLICATIONS {
                    return fail(format!("needs replications >= {MIN_MARTINGALE_REPLICATIONS}, got {m}"));
                }
            }
            ExperimentSpec::ResidualOrder { sweep, .. } => {
                if sweep.as_ref().is_some_and(|s| s.len() < 4) {
                    return fail("sweep needs at least 4 levels".into());
                }
            }
            ExperimentSpec::RobustnessScan { eps, dt } | ExperimentSpec::DeviationScan { eps, dt, .. } => {
                if !eps_ok(eps) {
                    return fail("eps needs at least 4 increasing values in (0, 0.3]".into());
                }
                if !(*dt > 0.0 && *dt <= 1e-2) {
                    return fail(format!("need 0 < dt <= 1e-2, got {dt}"));
                }
                if let ExperimentSpec::DeviationScan { alpha, .. } = self {
                    if !(0.0..0.5).contains(alpha) {
                        return fail(format!("alpha must lie in [0, 0.5), got {alpha}"));
                    }
                }
            }
        }
        Ok(())
    }
}

impl ScenarioConfig {
    pub fn new(model: ModelConfig) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            model,
            seed: 0,
            replications: 1,
            dt: None,
            t_final: 1.0,
            noise_drift: NoiseDrift::default(),
            experiment: None,
            output: OutputSpec::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("scenario: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn model_digest(&self) -> String {
        self.model.digest()
    }

    /// Schema, model assumptions and experiment preconditions; runs no
    /// simulation.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.replications == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        if !(self.t_final > 0.0) {
            return Err(Error::Config(format!("T must be positive, got {}", self.t_final)));
        }
        if self.model.kind == ModelKind::MemorySwap && self.t_final != 1.0 {
            return Err(Error::Config("memory_swap runs on [0, 1] only".into()));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt <= 1e-2) {
                return Err(Error::Config(format!("dt must lie in (0, 1e-2], got {dt}")));
            }
        }
        if self.output.record_every == Some(0) {
            return Err(Error::Config("output.record_every must be at least 1".into()));
        }
        build_model(&self.model)?;
        if let Some(e) = &self.experiment {
            e.validate(&self.model, self.replications)?;
        }
        Ok(())
    }
}
