//! Convergence of the mean trajectory to its deterministic limit.

use serde_json::json;

use super::montecarlo::{replicate_mean, VectorEstimate};
use super::oracles::{alternative_oracle, coord_norm, coords, mean_oracle, ODE_DT, VOLTERRA_DT};
use super::report::{Check, ExperimentReport, Fit, Status};
use super::stats::loglog_fit;
use crate::continuous::{solve_ode, OdePath};
use crate::discrete::{build_model, evolve_memory_swap, run_chain, ModelConfig, ModelKind};
use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Time grid points on [0, 1] where the sup error is taken.
pub const MEAN_GRID: usize = 100;
/// Absolute slack in the decay checks, covering rounding when every error
/// is at machine level.
pub const ROUNDING_SLACK: f64 = 1e-12;
/// Extra tolerance of the deterministic memory chain check, which sits at
/// the accuracy of its Volterra reference.
pub const SWAP_TOLERANCE: f64 = 1e-6;

pub fn level_stream(level: usize, rep: usize) -> u64 {
    ((level as u64) << 32) | rep as u64
}

struct Level {
    n: usize,
    err: f64,
    floor: f64,
    alt_err: Option<f64>,
}

/// Monte Carlo mean of the chain at each level in `ns` against the RK4 (or
/// Volterra) reference, sup over a grid of `MEAN_GRID` + 1 times.
pub fn mean_convergence(cfg: &ModelConfig, ns: &[usize], m: usize, seed: u64) -> Result<ExperimentReport> {
    if ns.len() < 2 || ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("mean_convergence needs at least two increasing values of n".into()));
    }
    if let Some(n) = ns.iter().find(|&&n| n % MEAN_GRID != 0) {
        return Err(Error::Config(format!("n = {n} is not a multiple of the grid size {MEAN_GRID}")));
    }
    let stochastic = cfg.kind.is_stochastic();
    if stochastic && m < 1000 {
        return Err(Error::Config(format!("mean_convergence needs M >= 1000, got {m}")));
    }
    let base = build_model(&cfg.with_n(ns[0]))?;
    let rho0 = base.initial.matrix().clone();
    let dt = if cfg.kind == ModelKind::MemorySwap { VOLTERRA_DT } else { ODE_DT };
    let oracle = solve_ode(&mean_oracle(cfg)?, &rho0, dt, 1.0)?;
    let alt = match alternative_oracle(cfg)? {
        Some((name, kind)) => Some((name, solve_ode(&kind, &rho0, dt, 1.0)?)),
        None => None,
    };

    let mut report = ExperimentReport::new(
        "mean_convergence",
        json!({
            "kind": cfg.kind.name(),
            "ns": ns,
            "replications": if stochastic { m } else { 1 },
            "seed": seed,
            "grid_points": MEAN_GRID + 1,
            "reference_dt": dt,
            "model_digest": base.digest,
        }),
    );
    let mut levels = Vec::with_capacity(ns.len());
    for (level, &n) in ns.iter().enumerate() {
        let model = build_model(&cfg.with_n(n))?;
        let stride = n / MEAN_GRID;
        let est = if stochastic {
            replicate_mean(m, 4 * (MEAN_GRID + 1), |rep| {
                let mut rng = RngStream::new(seed, level_stream(level, rep));
                let mut out = Vec::with_capacity(4 * (MEAN_GRID + 1));
                run_chain(&model, n, &mut rng, |k, s, _| {
                    if k % stride == 0 {
                        out.extend_from_slice(&coords(s.matrix()));
                    }
                })?;
                Ok(out)
            })?
        } else {
            let states = evolve_memory_swap(&model)?;
            let mean = states.iter().step_by(stride).flat_map(|s| coords(s)).collect::<Vec<_>>();
            VectorEstimate { se: vec![0.0; mean.len()], mean, count: 1 }
        };
        let sup = |path: &OdePath| sup_error(&est, path);
        let (err, floor) = sup(&oracle);
        let alt_err = alt.as_ref().map(|(_, p)| sup(p).0);
        let count = est.count;
        report.row(n as f64, "sup_error", err, floor, count);
        report.row(n as f64, "noise_floor", floor, 0.0, count);
        if let (Some((name, _)), Some(e)) = (&alt, alt_err) {
            report.row(n as f64, &format!("sup_error_vs_{name}"), e, floor, count);
        }
        levels.push(Level { n, err, floor, alt_err });
    }

    let xs: Vec<f64> = levels.iter().map(|l| l.n as f64).collect();
    let signal: Vec<f64> = levels.iter().map(|l| l.err - l.floor).collect();
    let min_err = levels.iter().map(|l| l.err).fold(f64::INFINITY, f64::min);
    let max_floor = levels.iter().map(|l| l.floor).fold(0.0, f64::max);
    let noisy = max_floor > 0.5 * min_err;
    let fit = match loglog_fit(&xs, &signal) {
        Some(f) => Some(Fit::new("sup_error_minus_floor", &f)),
        None => loglog_fit(&xs, &levels.iter().map(|l| l.err).collect::<Vec<_>>()).map(|f| Fit::new("sup_error", &f)),
    };
    match fit {
        Some(mut f) => {
            f.inconclusive = noisy;
            report.fits.push(f);
        }
        None => report.notes.push("all errors are zero; no slope to fit".into()),
    }
    if noisy {
        report.notes.push(format!(
            "noise floor {max_floor:.3e} exceeds half the smallest error {min_err:.3e}; slope is inconclusive"
        ));
    }

    let (first, last) = (&levels[0], &levels[levels.len() - 1]);
    if stochastic {
        let bound = first.err / 4.0 + 3.0 * last.floor + ROUNDING_SLACK;
        let mut c = Check::at_most("decay", last.err, bound);
        c.rule = format!(
            "err(n_last) <= err(n_first)/4 + 3 * noise_floor(n_last) + {ROUNDING_SLACK:e} (= {bound:.6e})"
        );
        c.tolerance = ROUNDING_SLACK;
        c.se_multiplier = 3.0;
        report.checks.push(c);
    } else {
        let bound = first.err / 8.0 + SWAP_TOLERANCE;
        let mut c = Check::at_most("decay", last.err, bound);
        c.rule = format!("err(n_last) <= err(n_first)/8 + {SWAP_TOLERANCE:e} (= {bound:.6e})");
        c.tolerance = SWAP_TOLERANCE;
        report.checks.push(c);
    }
    if cfg.kind == ModelKind::MemoryReset {
        if let Some(alt_err) = last.alt_err {
            // The memory mean must sit clearly closer to its own reference.
            let bound = last.err + 3.0 * last.floor;
            let mut c = Check::at_least("discriminates_from_plain_master", alt_err, bound);
            c.rule = format!("sup error vs plain master >= err + 3 * noise_floor (= {bound:.6e}) at n_last");
            c.se_multiplier = 3.0;
            report.checks.push(c);
        }
    }
    debug_assert!(report.checks.iter().all(|c| c.status != Status::Inconclusive));
    Ok(report)
}

/// (sup_g ‖mean_g − φ(t_g)‖, sup_g floor_g) over the grid.
fn sup_error(est: &VectorEstimate, path: &OdePath) -> (f64, f64) {
    let mut err: f64 = 0.0;
    let mut floor: f64 = 0.0;
    for g in 0..=MEAN_GRID {
        let want = coords(path.at(g as f64 / MEAN_GRID as f64));
        let i = 4 * g;
        let d = [0, 1, 2, 3].map(|c| est.mean[i + c] - want[c]);
        err = err.max(coord_norm(d));
        floor = floor.max(coord_norm([0, 1, 2, 3].map(|c| est.se[i + c])));
    }
    (err, floor)
}
