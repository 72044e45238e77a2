//! Order of the remainder in the small-step expansions, by log-log fit of
//! exact quantities against their expansions over a sweep.

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::oracles::{gaussian_matrix, random_state};
use super::report::{Check, ExperimentReport, Fit};
use super::stats::loglog_fit;
use crate::asymptotics::{
    build_dilation_unitary, build_noise_unitary, expansion_check, noise_column_residual, phi_inv, phi_op, roundtrip,
    GeneratorTriple, PhiMethod, RICHARDSON_LEVELS,
};
use crate::continuous::{lindblad_apply, omega_trace_preserving, NoiseDrift};
use crate::discrete::{build_model, increment_residual, ModelConfig, ModelKind};
use crate::error::{Error, Result};
use crate::linalg::consts::{sigma_x, sigma_y, sigma_z};
use crate::linalg::{ComplexMatrix, I};
use crate::rng::RngStream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualExperiment {
    IncrementSingle,
    IncrementAlternating,
    IncrementNoise,
    IncrementMemory,
    ExpLemma,
    DilationBlocks,
    HamiltonianRoundtrip,
}

impl ResidualExperiment {
    pub const ALL: [ResidualExperiment; 7] = [
        ResidualExperiment::IncrementSingle,
        ResidualExperiment::IncrementAlternating,
        ResidualExperiment::IncrementNoise,
        ResidualExperiment::IncrementMemory,
        ResidualExperiment::ExpLemma,
        ResidualExperiment::DilationBlocks,
        ResidualExperiment::HamiltonianRoundtrip,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ResidualExperiment::IncrementSingle => "increment_single",
            ResidualExperiment::IncrementAlternating => "increment_alternating",
            ResidualExperiment::IncrementNoise => "increment_noise",
            ResidualExperiment::IncrementMemory => "increment_memory",
            ResidualExperiment::ExpLemma => "exp_lemma",
            ResidualExperiment::DilationBlocks => "dilation_blocks",
            ResidualExperiment::HamiltonianRoundtrip => "hamiltonian_roundtrip",
        }
    }

    fn increment_kind(self) -> Option<ModelKind> {
        match self {
            ResidualExperiment::IncrementSingle => Some(ModelKind::Single),
            ResidualExperiment::IncrementAlternating => Some(ModelKind::Alternating),
            ResidualExperiment::IncrementNoise => Some(ModelKind::Noise),
            ResidualExperiment::IncrementMemory => Some(ModelKind::MemoryReset),
            _ => None,
        }
    }

    /// Sweep used when none is given: n for the increments and blocks, ε
    /// for the exponential lemma.
    pub fn default_sweep(self) -> Vec<f64> {
        match self {
            ResidualExperiment::ExpLemma => vec![0.2, 0.1, 0.05, 0.025],
            ResidualExperiment::HamiltonianRoundtrip => RICHARDSON_LEVELS.to_vec(),
            _ => vec![1e2, 1e3, 1e4, 1e5],
        }
    }
}

/// Slope needed for a remainder that is o(1/n) beyond the √n term.
pub const INCREMENT_MIN_SLOPE: f64 = 1.4;
/// Residuals at or below this are treated as exact.
pub const EXACT_FLOOR: f64 = 1e-12;
pub const EXP_LEMMA_SLOPE: f64 = 3.0;
pub const EXP_LEMMA_TOL: f64 = 0.2;
pub const PHI_TOL: f64 = 1e-9;
pub const ROUNDTRIP_TOL: f64 = 1e-4;
const RANDOM_STATES: usize = 5;
const RANDOM_TRIPLES: usize = 5;

/// Runs `experiment` over `sweep`. The increment experiments take their
/// matrices from `cfg` (its kind is replaced by the experiment's).
pub fn residual_order(
    experiment: ResidualExperiment,
    cfg: &ModelConfig,
    sweep: &[f64],
    seed: u64,
) -> Result<ExperimentReport> {
    if sweep.len() < 4 {
        return Err(Error::Config(format!("{} needs at least 4 sweep levels", experiment.name())));
    }
    let mut report = ExperimentReport::new(
        "residual_order",
        json!({ "experiment": experiment.name(), "sweep": sweep, "seed": seed }),
    );
    let mut rng = RngStream::new(seed, 0);
    if let Some(kind) = experiment.increment_kind() {
        increments(&mut report, &ModelConfig { kind, ..cfg.clone() }, sweep, &mut rng)?;
    } else {
        match experiment {
            ResidualExperiment::ExpLemma => exp_lemma(&mut report, sweep, &mut rng)?,
            ResidualExperiment::DilationBlocks => dilation_blocks(&mut report, cfg, sweep, &mut rng)?,
            ResidualExperiment::HamiltonianRoundtrip => hamiltonian_roundtrip(&mut report, &mut rng)?,
            _ => unreachable!("increment experiments handled above"),
        }
    }
    Ok(report)
}

/// Fit `values` against `xs` and require the decay slope −s ≥ `min`, or
/// accept an exact expansion when every residual is at rounding level.
fn decay_check(report: &mut ExperimentReport, name: &str, xs: &[f64], values: &[f64], min: f64) {
    let worst = values.iter().fold(0.0f64, |a, &v| a.max(v));
    if worst <= EXACT_FLOOR {
        report.checks.push(Check::at_most(&format!("{name}_exact"), worst, EXACT_FLOOR));
        return;
    }
    match loglog_fit(xs, values) {
        Some(f) => {
            report.fits.push(Fit::new(name, &f));
            report.checks.push(Check::at_least(&format!("{name}_slope"), -f.slope, min));
        }
        None => report.checks.push(Check::at_most(&format!("{name}_exact"), worst, EXACT_FLOOR)),
    }
}

fn increments(report: &mut ExperimentReport, cfg: &ModelConfig, sweep: &[f64], rng: &mut RngStream) -> Result<()> {
    let states: Vec<ComplexMatrix> = (0..RANDOM_STATES).map(|_| random_state(rng, 2)).collect();
    let mut res = Vec::with_capacity(sweep.len());
    for &n in sweep {
        let model = build_model(&cfg.with_n(n as usize))?;
        let mut worst: f64 = 0.0;
        for s in &states {
            worst = worst.max(increment_residual(&model, s, NoiseDrift::TracePreserving)?);
        }
        report.row(n, "increment_residual", worst, 0.0, states.len());
        res.push(worst);
    }
    report.parameters["kind"] = json!(cfg.kind.name());
    decay_check(report, "increment_residual", sweep, &res, INCREMENT_MIN_SLOPE);
    Ok(())
}

fn unit(m: ComplexMatrix) -> ComplexMatrix {
    let f = m.frobenius_norm();
    m.scale_re(1.0 / f)
}

fn exp_lemma(report: &mut ExperimentReport, sweep: &[f64], rng: &mut RngStream) -> Result<()> {
    let mut triples = vec![(sigma_z().scale(I), sigma_x(), sigma_y())];
    for _ in 0..RANDOM_TRIPLES {
        let d = unit(gaussian_matrix(rng, 4, 1.0).hermitian_part());
        triples.push((d.scale(I), unit(gaussian_matrix(rng, 4, 1.0)), unit(gaussian_matrix(rng, 4, 1.0))));
    }
    let mut phi_gap: f64 = 0.0;
    let mut inv_gap: f64 = 0.0;
    for (t, (x, y, z)) in triples.iter().enumerate() {
        let fit = expansion_check(x, y, z, sweep)?;
        for (e, r) in fit.eps.iter().zip(&fit.residuals) {
            report.row(*e, &format!("triple{t}_residual"), *r, 0.0, 1);
        }
        let name = format!("triple{t}");
        match fit.fit {
            Some(f) => {
                report.fits.push(Fit::new(&name, &f));
                report.checks.push(Check::within(&format!("{name}_slope"), f.slope, EXP_LEMMA_SLOPE, EXP_LEMMA_TOL, 0.0, 0.0));
            }
            None => report.checks.push(Check::at_least(&format!("{name}_slope"), f64::NAN, EXP_LEMMA_SLOPE)),
        }
        let closed = phi_op(x, y, PhiMethod::ClosedForm)?;
        let quad = phi_op(x, y, PhiMethod::Quadrature)?;
        phi_gap = phi_gap.max(closed.dist(&quad));
        let d = x.scale(-I);
        inv_gap = inv_gap.max(phi_inv(&d, &closed)?.dist(y));
    }
    report.row(0.0, "phi_closed_vs_quadrature", phi_gap, 0.0, triples.len());
    report.row(0.0, "phi_inv_roundtrip", inv_gap, 0.0, triples.len());
    report.checks.push(Check::at_most("phi_closed_vs_quadrature", phi_gap, PHI_TOL));
    report.checks.push(Check::at_most("phi_inv_roundtrip", inv_gap, PHI_TOL));

    // Eigenvalues 2π apart make φ_{iD} singular.
    let pi = std::f64::consts::PI;
    let resonant = ComplexMatrix::diag_real(&[0.3, 0.3 + 2.0 * pi]);
    let rejected = matches!(phi_inv(&resonant, &ComplexMatrix::identity(2)), Err(Error::Resonance(..)));
    let mut c = Check::at_least("resonance_rejected", if rejected { 1.0 } else { 0.0 }, 1.0);
    c.rule = "phi_inv on eigenvalues 2π apart returns a resonance error (value 1)".into();
    report.checks.push(c);
    Ok(())
}

fn dilation_blocks(report: &mut ExperimentReport, cfg: &ModelConfig, sweep: &[f64], rng: &mut RngStream) -> Result<()> {
    let h0 = cfg.h0_matrix()?;
    let c = cfg.c_matrix()?;
    let conv = cfg.convention;
    let j = conv.jump(&c);
    let jdj = j.adjoint().matmul(&j);
    let rho = random_state(rng, 2);
    let l = lindblad_apply(&rho, &h0, &c, conv);
    let kraus = [sigma_x(), ComplexMatrix::zeros(2, 2), ComplexMatrix::zeros(2, 2)];
    let eps = cfg.eps_value()?;
    let omega = omega_trace_preserving(&kraus, eps, &rho);
    let (mut b00, mut b10, mut chan, mut noise) = (vec![], vec![], vec![], vec![]);
    let mut defect: f64 = 0.0;
    let mut column_excess: f64 = f64::NEG_INFINITY;
    for &nf in sweep {
        let n = nf as usize;
        let u = build_dilation_unitary(&h0, &c, n, conv)?;
        defect = defect.max(u.unitarity_defect());
        let mut want = ComplexMatrix::identity(2);
        want.axpy_re(-1.0 / nf, &(&h0.scale(I) + &jdj.scale_re(0.5)));
        b00.push(u.block(0, 0).dist(&want));
        b10.push(u.block(1, 0).scale_re(nf.sqrt()).dist(&j));
        let mut pred = rho.clone();
        pred.axpy_re(1.0 / nf, &l);
        chan.push(u.reduced_map(&rho).dist(&pred));

        let v = build_noise_unitary(&kraus, eps, n)?;
        defect = defect.max(v.unitarity_defect());
        let r = noise_column_residual(&kraus, eps, &v);
        column_excess = column_excess.max(r.normalized * nf.powf(1.5));
        let mut pred = rho.clone();
        pred.axpy_re(1.0 / nf, &omega);
        noise.push(v.reduced_map(&rho).dist(&pred));
    }
    for (name, vals) in [("u00_residual", &b00), ("sqrt_n_u10_residual", &b10), ("channel_residual", &chan), ("noise_channel_residual", &noise)] {
        for (x, v) in sweep.iter().zip(vals.iter()) {
            report.row(*x, name, *v, 0.0, 1);
        }
    }
    decay_check(report, "u00_residual", sweep, &b00, INCREMENT_MIN_SLOPE);
    // √n U₁₀ − J is O(1/n).
    decay_check(report, "sqrt_n_u10_residual", sweep, &b10, 0.9);
    decay_check(report, "channel_residual", sweep, &chan, INCREMENT_MIN_SLOPE);
    decay_check(report, "noise_channel_residual", sweep, &noise, INCREMENT_MIN_SLOPE);
    report.checks.push(Check::at_most("unitarity_defect", defect, 1e-12));
    let mut c = Check::at_most("noise_column_n32_residual", column_excess, 5.0);
    c.rule = "n^{3/2} times the normalized first-column residual <= 5".into();
    report.checks.push(c);
    Ok(())
}

fn hamiltonian_roundtrip(report: &mut ExperimentReport, rng: &mut RngStream) -> Result<()> {
    report.parameters["richardson_levels"] = json!(RICHARDSON_LEVELS);
    report.notes.push("the sweep is fixed to the Richardson levels of the reconstruction".into());
    let mut worst = [0.0f64; 3];
    for t in 0..RANDOM_TRIPLES {
        let h = |r: &mut RngStream| gaussian_matrix(r, 2, 0.5).hermitian_part();
        let truth = GeneratorTriple { d: h(rng), e: h(rng), f: h(rng) };
        let got = roundtrip(&truth)?;
        let errs = [got.d.dist(&truth.d), got.e.dist(&truth.e), got.f.dist(&truth.f)];
        for (w, e) in worst.iter_mut().zip(errs) {
            *w = w.max(e);
        }
        for (name, e) in ["d", "e", "f"].iter().zip(errs) {
            report.row(t as f64, &format!("{name}_error"), e, 0.0, 1);
        }
    }
    for (name, w) in ["d", "e", "f"].iter().zip(worst) {
        report.checks.push(Check::at_most(&format!("{name}_roundtrip"), w, ROUNDTRIP_TOL));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete::MatrixSpec;

    fn run(e: ResidualExperiment) -> ExperimentReport {
        residual_order(e, &ModelConfig::new(ModelKind::Single, 100), &e.default_sweep(), 11).unwrap()
    }

    #[test]
    fn sigma_x_increments_pass() {
        for e in [ResidualExperiment::IncrementSingle, ResidualExperiment::IncrementAlternating, ResidualExperiment::IncrementMemory] {
            let r = run(e);
            assert!(r.passed(), "{}", r.to_text());
        }
    }

    #[test]
    fn noise_increment_is_first_order() {
        let r = run(ResidualExperiment::IncrementNoise);
        assert!((r.fits[0].slope + 1.0).abs() < 0.1, "{}", r.to_text());
        assert!(!r.passed());
    }

    #[test]
    fn zero_coupling_is_exact() {
        let mut cfg = ModelConfig::new(ModelKind::Single, 100);
        cfg.c = Some(MatrixSpec::named("zero"));
        cfg.h0 = Some(MatrixSpec::named("zero"));
        let r = residual_order(ResidualExperiment::IncrementSingle, &cfg, &[1e2, 1e3, 1e4, 1e5], 1).unwrap();
        assert!(r.passed() && r.checks[0].name.ends_with("_exact"), "{}", r.to_text());
    }

    #[test]
    fn lemma_blocks_and_roundtrip_pass() {
        for e in [ResidualExperiment::ExpLemma, ResidualExperiment::DilationBlocks, ResidualExperiment::HamiltonianRoundtrip] {
            let r = run(e);
            assert!(r.passed(), "{}", r.to_text());
        }
    }

    #[test]
    fn short_sweep_rejected() {
        let cfg = ModelConfig::new(ModelKind::Single, 100);
        assert!(residual_order(ResidualExperiment::ExpLemma, &cfg, &[0.1, 0.2], 1).is_err());
    }
}
