//! Fixed-time marginals of the discrete chain against its limiting SDE.

use serde_json::json;

use super::mean::{level_stream, ROUNDING_SLACK};
use super::montecarlo::replicate;
use super::oracles::{limit_sde, Functional};
use super::report::{Check, ExperimentReport};
use super::stats::{batch_mean, batch_variance, ks_distance};
use crate::continuous::{em_run, grid_steps, EmOptions, Increments, NoiseDrift};
use crate::discrete::{build_model, run_chain, ModelConfig, ModelKind};
use crate::error::{Error, Result};
use crate::rng::RngStream;

pub const WEAK_TIMES: [f64; 3] = [0.25, 0.5, 1.0];
pub const KS_BOOTSTRAP: usize = 100;
/// Width of the acceptance band in combined standard errors.
pub const WEAK_SE_MULTIPLIER: f64 = 4.0;
pub const MIN_WEAK_REPLICATIONS: usize = 10_000;

/// Stream of replication `rep` of an SDE path; disjoint from the chain
/// streams, which keep the high bits for the level.
pub fn sde_stream(rep: usize) -> u64 {
    (1u64 << 40) | rep as u64
}

fn bootstrap_stream(cell: usize, b: usize) -> u64 {
    (2u64 << 40) | ((cell as u64) << 20) | b as u64
}

/// Chain at level `n` vs Euler–Maruyama at step `dt`, both with `m`
/// replications, compared through `functionals` at `WEAK_TIMES`.
pub fn weak_marginal_compare(
    cfg: &ModelConfig,
    n: usize,
    dt: f64,
    m: usize,
    seed: u64,
    functionals: &[Functional],
) -> Result<ExperimentReport> {
    if m < MIN_WEAK_REPLICATIONS {
        return Err(Error::Config(format!("weak_marginal_compare needs M >= {MIN_WEAK_REPLICATIONS}, got {m}")));
    }
    if functionals.is_empty() {
        return Err(Error::Config("no functionals to compare".into()));
    }
    let model = build_model(&cfg.with_n(n))?;
    let sde = limit_sde(&model, NoiseDrift::TracePreserving)?;
    let steps = grid_steps(dt, 1.0)?;
    // The alternating chain is read at even indices 2⌊nt/2⌋.
    let chain_index = |t: f64| {
        let k = (t * n as f64).floor() as usize;
        if model.kind == ModelKind::Alternating {
            k - k % 2
        } else {
            k
        }
    };
    let chain_k: Vec<usize> = WEAK_TIMES.iter().map(|&t| chain_index(t)).collect();
    let sde_k: Vec<usize> = WEAK_TIMES.iter().map(|&t| (t / dt).round() as usize).collect();
    let nt = WEAK_TIMES.len();
    let width = functionals.len() * nt;
    let record = |out: &mut [f64], ti: usize, rho: &crate::linalg::ComplexMatrix| {
        for (fi, f) in functionals.iter().enumerate() {
            out[fi * nt + ti] = f.eval(rho);
        }
    };

    let chain: Vec<Vec<f64>> = replicate(m, |rep| {
        let mut rng = RngStream::new(seed, level_stream(0, rep));
        let mut out = vec![0.0; width];
        run_chain(&model, n, &mut rng, |k, s, _| {
            for (ti, &kt) in chain_k.iter().enumerate() {
                if k == kt {
                    record(&mut out, ti, s.matrix());
                }
            }
        })?;
        Ok(out)
    })?;
    let rho0 = model.initial.matrix();
    let options = EmOptions::default();
    let euler: Vec<Vec<f64>> = replicate(m, |rep| {
        let mut rng = RngStream::new(seed, sde_stream(rep));
        let mut out = vec![0.0; width];
        em_run(&sde.spec, rho0, dt, steps, Increments::Rng(&mut rng), &options, |k, t, x| {
            for (ti, &kt) in sde_k.iter().enumerate() {
                if k == kt {
                    record(&mut out, ti, &sde.density(t, x));
                }
            }
        })?;
        Ok(out)
    })?;

    let mut report = ExperimentReport::new(
        "weak_marginal_compare",
        json!({
            "kind": cfg.kind.name(),
            "n": n,
            "dt": dt,
            "replications": m,
            "seed": seed,
            "times": WEAK_TIMES,
            "functionals": functionals.iter().map(|f| f.name()).collect::<Vec<_>>(),
            "ks_bootstrap": KS_BOOTSTRAP,
            "sde": sde.spec.label,
            "model_digest": model.digest,
        }),
    );
    let mut ks_over = 0;
    for (fi, f) in functionals.iter().enumerate() {
        for (ti, &t) in WEAK_TIMES.iter().enumerate() {
            let cell = fi * nt + ti;
            let a: Vec<f64> = chain.iter().map(|r| r[cell]).collect();
            let b: Vec<f64> = euler.iter().map(|r| r[cell]).collect();
            let name = f.name();
            let (ma, mb) = (batch_mean(&a), batch_mean(&b));
            let (va, vb) = (batch_variance(&a), batch_variance(&b));
            report.row(t, &format!("{name}_mean_chain"), ma.mean, ma.se, m);
            report.row(t, &format!("{name}_mean_sde"), mb.mean, mb.se, m);
            report.row(t, &format!("{name}_var_chain"), va.mean, va.se, m);
            report.row(t, &format!("{name}_var_sde"), vb.mean, vb.se, m);
            let se_mean = ma.se.hypot(mb.se);
            let se_var = va.se.hypot(vb.se);
            report.checks.push(Check::within(
                &format!("{name}_mean_t{t}"),
                ma.mean - mb.mean,
                0.0,
                ROUNDING_SLACK,
                WEAK_SE_MULTIPLIER,
                se_mean,
            ));
            report.checks.push(Check::within(
                &format!("{name}_var_t{t}"),
                va.mean - vb.mean,
                0.0,
                ROUNDING_SLACK,
                WEAK_SE_MULTIPLIER,
                se_var,
            ));
            let ks = ks_distance(&a, &b);
            let band = ks_band(&a, &b, seed, cell)?;
            report.row(t, &format!("{name}_ks"), ks, band, m);
            if ks > band {
                ks_over += 1;
            }
        }
    }
    report.notes.push(format!(
        "KS distance above its 95% bootstrap band in {ks_over} of {} cells (reported, not judged); \
         the se column of *_ks rows holds the band",
        functionals.len() * nt
    ));
    Ok(report)
}

/// 95th percentile of the KS distance between two resamples of the pooled
/// sample, i.e. its spread when both sides share one law.
fn ks_band(a: &[f64], b: &[f64], seed: u64, cell: usize) -> Result<f64> {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let np = pooled.len();
    let mut stats = replicate(KS_BOOTSTRAP, |i| {
        let mut rng = RngStream::new(seed, bootstrap_stream(cell, i));
        let mut draw = |len: usize| -> Vec<f64> {
            (0..len).map(|_| pooled[(rng.uniform() * np as f64) as usize % np]).collect()
        };
        let ra = draw(a.len());
        let rb = draw(b.len());
        Ok(ks_distance(&ra, &rb))
    })?;
    stats.sort_by(f64::total_cmp);
    let idx = ((0.95 * KS_BOOTSTRAP as f64).ceil() as usize).saturating_sub(1);
    Ok(stats[idx])
}
