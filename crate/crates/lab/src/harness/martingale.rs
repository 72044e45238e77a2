//! Martingale structure of W_n(t) = Σ_{k < nt} X_k/√n: quadratic and
//! cross variation, jump sizes and moments of the outcome variables.

use serde_json::json;

use super::mean::level_stream;
use super::montecarlo::replicate_mean;
use super::report::{Check, ExperimentReport, Fit};
use super::stats::loglog_fit;
use crate::discrete::{build_model, run_chain, DiscreteModel, ModelConfig, ModelKind};
use crate::error::{Error, Result};
use crate::rng::RngStream;

pub const MARTINGALE_SE_MULTIPLIER: f64 = 4.0;
pub const MIN_MARTINGALE_REPLICATIONS: usize = 10_000;
/// Steps at which E[X⁴] is tabulated, as fractions of n.
const MOMENT_FRACTIONS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

/// Channel count: one per outcome variable, or one per unitary for the
/// alternating kind (W⁺ collects the U⁺ steps, W⁻ the U⁻ steps).
fn channels(kind: ModelKind) -> Result<usize> {
    match kind {
        ModelKind::Single | ModelKind::MemoryReset => Ok(1),
        ModelKind::Alternating => Ok(2),
        ModelKind::Noise => Ok(3),
        ModelKind::MemorySwap => Err(Error::Config("memory_swap has no outcome process".into())),
    }
}

fn pairs(c: usize) -> Vec<(usize, usize)> {
    (0..c).flat_map(|i| (i + 1..c).map(move |j| (i, j))).collect()
}

/// Layout of one replication's statistics.
struct Layout {
    c: usize,
    pairs: Vec<(usize, usize)>,
    moment_steps: Vec<usize>,
}

impl Layout {
    fn qv(&self, i: usize) -> usize {
        i
    }
    fn bracket(&self, p: usize) -> usize {
        self.c + p
    }
    fn product(&self, p: usize) -> usize {
        self.c + self.pairs.len() + p
    }
    fn terminal(&self, i: usize) -> usize {
        self.c + 2 * self.pairs.len() + i
    }
    fn jump(&self) -> usize {
        2 * self.c + 2 * self.pairs.len()
    }
    fn fourth(&self, s: usize) -> usize {
        self.jump() + 1 + s
    }
    fn first(&self) -> usize {
        self.fourth(self.moment_steps.len())
    }
    fn second(&self) -> usize {
        self.first() + 1
    }
    fn width(&self) -> usize {
        self.second() + 1
    }
}

fn one_path(model: &DiscreteModel, lay: &Layout, rng: &mut RngStream) -> Result<Vec<f64>> {
    let n = model.n;
    let scale = 1.0 / (n as f64).sqrt();
    let mut out = vec![0.0; lay.width()];
    let mut w = vec![0.0; lay.c];
    let mid = n / 2;
    run_chain(model, n, rng, |k, _, step| {
        let Some(step) = step else { return };
        // k is the index of the produced state; the step itself is k − 1.
        let s = k - 1;
        let mut dw = [0.0; 3];
        if model.kind == ModelKind::Alternating {
            dw[model.unitary_index(s)] = step.x[0];
        } else {
            dw[..lay.c].copy_from_slice(&step.x[..lay.c]);
        }
        for i in 0..lay.c {
            out[lay.qv(i)] += dw[i] * dw[i] / n as f64;
            w[i] += dw[i] * scale;
        }
        for (p, &(i, j)) in lay.pairs.iter().enumerate() {
            out[lay.bracket(p)] += dw[i] * dw[j] / n as f64;
        }
        let jump = dw[..lay.c].iter().fold(0.0f64, |a, x| a.max(x.abs())) * scale;
        out[lay.jump()] = out[lay.jump()].max(jump);
        let x0 = step.x[0];
        for (m, &ms) in lay.moment_steps.iter().enumerate() {
            if s == ms {
                out[lay.fourth(m)] = x0.powi(4);
            }
        }
        if s == mid {
            out[lay.first()] = x0;
            out[lay.second()] = x0 * x0;
        }
    })?;
    for (p, &(i, j)) in lay.pairs.iter().enumerate() {
        out[lay.product(p)] = w[i] * w[j];
    }
    for i in 0..lay.c {
        out[lay.terminal(i)] = w[i];
    }
    Ok(out)
}

pub fn martingale_diagnostics(cfg: &ModelConfig, n: usize, m: usize, seed: u64) -> Result<ExperimentReport> {
    if m < MIN_MARTINGALE_REPLICATIONS {
        return Err(Error::Config(format!(
            "martingale_diagnostics needs M >= {MIN_MARTINGALE_REPLICATIONS}, got {m}"
        )));
    }
    if n < 16 {
        return Err(Error::Config(format!("martingale_diagnostics needs n >= 16, got {n}")));
    }
    let c = channels(cfg.kind)?;
    let model = build_model(&cfg.with_n(n))?;
    let lay = Layout {
        c,
        pairs: pairs(c),
        moment_steps: MOMENT_FRACTIONS.iter().map(|f| ((f * n as f64) as usize).min(n - 1)).collect(),
    };
    let est = replicate_mean(m, lay.width(), |rep| {
        let mut rng = RngStream::new(seed, level_stream(0, rep));
        one_path(&model, &lay, &mut rng)
    })?;

    // Targets at t = 1.
    let qv_target = if cfg.kind == ModelKind::Alternating { 0.5 } else { 1.0 };
    let cross_target = |i: usize, j: usize| match model.constants.as_ref().and_then(|d| d.noise()) {
        Some(nc) => -nc.b[i][j],
        None => 0.0,
    };
    let mut report = ExperimentReport::new(
        "martingale_diagnostics",
        json!({
            "kind": cfg.kind.name(),
            "n": n,
            "replications": m,
            "seed": seed,
            "channels": c,
            "model_digest": model.digest,
        }),
    );
    let k = MARTINGALE_SE_MULTIPLIER;
    let nf = n as f64;
    for i in 0..c {
        let j = lay.qv(i);
        report.row(nf, &format!("qv_{i}"), est.mean[j], est.se[j], m);
        report.checks.push(Check::within(&format!("qv_{i}"), est.mean[j], qv_target, 0.0, k, est.se[j]));
        let t = lay.terminal(i);
        report.row(nf, &format!("w_{i}"), est.mean[t], est.se[t], m);
        report.checks.push(Check::within(&format!("mean_w_{i}"), est.mean[t], 0.0, 0.0, k, est.se[t]));
    }
    for (p, &(i, j)) in lay.pairs.iter().enumerate() {
        let target = cross_target(i, j);
        let (b, w) = (lay.bracket(p), lay.product(p));
        report.row(nf, &format!("bracket_{i}{j}"), est.mean[b], est.se[b], m);
        report.row(nf, &format!("product_w{i}_w{j}"), est.mean[w], est.se[w], m);
        report.checks.push(Check::within(&format!("bracket_{i}{j}"), est.mean[b], target, 0.0, k, est.se[b]));
        report.checks.push(Check::within(&format!("product_w{i}_w{j}"), est.mean[w], target, 0.0, k, est.se[w]));
    }
    for (s, &ms) in lay.moment_steps.iter().enumerate() {
        let j = lay.fourth(s);
        report.row(ms as f64, "fourth_moment_x0", est.mean[j], est.se[j], m);
    }
    let (f1, f2) = (lay.first(), lay.second());
    report.row(nf, "x0_mid_mean", est.mean[f1], est.se[f1], m);
    report.row(nf, "x0_mid_second_moment", est.mean[f2], est.se[f2], m);
    report.checks.push(Check::within("x0_mid_mean", est.mean[f1], 0.0, 0.0, k, est.se[f1]));
    report.checks.push(Check::within("x0_mid_second_moment", est.mean[f2], 1.0, 0.0, k, est.se[f2]));

    // E[max jump] at n/16, n/4 and n.
    let mut jn = Vec::new();
    let mut jv = Vec::new();
    for (level, div) in [(1usize, 16usize), (2, 4)] {
        let nl = n / div;
        let ml = build_model(&cfg.with_n(nl))?;
        let ll = Layout { c, pairs: pairs(c), moment_steps: vec![] };
        let e = replicate_mean(m, ll.width(), |rep| {
            let mut rng = RngStream::new(seed, level_stream(level, rep));
            one_path(&ml, &ll, &mut rng)
        })?;
        report.row(nl as f64, "max_jump", e.mean[ll.jump()], e.se[ll.jump()], m);
        jn.push(nl as f64);
        jv.push(e.mean[ll.jump()]);
    }
    report.row(nf, "max_jump", est.mean[lay.jump()], est.se[lay.jump()], m);
    jn.push(nf);
    jv.push(est.mean[lay.jump()]);
    if let Some(f) = loglog_fit(&jn, &jv) {
        report.fits.push(Fit::new("max_jump", &f));
    }
    let mut c = Check::at_most("max_jump_decreasing", jv[2], jv[0]);
    c.rule = format!("E[max jump](n) <= E[max jump](n/16) (= {:.6e})", jv[0]);
    report.checks.push(c);
    Ok(report)
}
