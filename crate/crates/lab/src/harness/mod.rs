//! Monte Carlo experiments that check the limit theorems numerically.
//! Every experiment returns an [`ExperimentReport`] whose thresholds are
//! recorded next to the numbers they judge.

pub mod martingale;
pub mod mean;
pub mod montecarlo;
pub mod oracles;
pub mod report;
pub mod residual;
pub mod robustness;
pub mod stats;
pub mod weak;

pub use martingale::martingale_diagnostics;
pub use mean::mean_convergence;
pub use oracles::Functional;
pub use residual::{residual_order, ResidualExperiment};
pub use robustness::{deviation_scan, robustness_scan};
pub use report::{Check, ExperimentReport, Fit, Row, Status};
pub use weak::weak_marginal_compare;
