//! Compensated sums, batch-means standard errors and log-log fits.

use serde::Serialize;

/// Kahan–Babuška (Neumaier) compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn kahan_mean(xs: &[f64]) -> f64 {
    let mut k = KahanSum::default();
    xs.iter().for_each(|&x| k.add(x));
    k.value() / xs.len() as f64
}

pub const MIN_BATCHES: usize = 20;

/// Mean and batch-means standard error of an ordered sample.
#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
    pub count: usize,
}

/// Splits the sample into `MIN_BATCHES` contiguous batches (the remainder
/// goes to the last batch) and uses the spread of batch means.
pub fn batch_mean(xs: &[f64]) -> Estimate {
    let n = xs.len();
    let mean = kahan_mean(xs);
    if n < 2 * MIN_BATCHES {
        // Too few points to batch; fall back to the plain sample SE.
        let mut k = KahanSum::default();
        xs.iter().for_each(|&x| k.add((x - mean) * (x - mean)));
        let var = if n > 1 { k.value() / (n - 1) as f64 } else { 0.0 };
        return Estimate { mean, se: (var / n as f64).sqrt(), count: n };
    }
    let b = MIN_BATCHES;
    let size = n / b;
    let means: Vec<f64> = (0..b)
        .map(|i| {
            let end = if i == b - 1 { n } else { (i + 1) * size };
            kahan_mean(&xs[i * size..end])
        })
        .collect();
    let bm = kahan_mean(&means);
    let mut k = KahanSum::default();
    means.iter().for_each(|&m| k.add((m - bm) * (m - bm)));
    let var = k.value() / (b - 1) as f64;
    Estimate { mean, se: (var / b as f64).sqrt(), count: n }
}

/// Sample variance with a batch-means SE (variance computed per batch).
pub fn batch_variance(xs: &[f64]) -> Estimate {
    let n = xs.len();
    let mean = kahan_mean(xs);
    let mut k = KahanSum::default();
    xs.iter().for_each(|&x| k.add((x - mean) * (x - mean)));
    let var = if n > 1 { k.value() / (n - 1) as f64 } else { 0.0 };
    if n < 2 * MIN_BATCHES {
        return Estimate { mean: var, se: f64::NAN, count: n };
    }
    let b = MIN_BATCHES;
    let size = n / b;
    let vars: Vec<f64> = (0..b)
        .map(|i| {
            let end = if i == b - 1 { n } else { (i + 1) * size };
            let s = &xs[i * size..end];
            let m = kahan_mean(s);
            let mut k = KahanSum::default();
            s.iter().for_each(|&x| k.add((x - m) * (x - m)));
            k.value() / (s.len() - 1) as f64
        })
        .collect();
    let vm = kahan_mean(&vars);
    let mut k = KahanSum::default();
    vars.iter().for_each(|&v| k.add((v - vm) * (v - vm)));
    Estimate { mean: var, se: (k.value() / (b - 1) as f64 / b as f64).sqrt(), count: n }
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Two standard errors of the slope.
    pub half_width: f64,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
}

pub fn ols(x: &[f64], y: &[f64]) -> LineFit {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let residual = (ss / n).sqrt();
    let half_width = if x.len() > 2 { 2.0 * (ss / (n - 2.0) / sxx).sqrt() } else { f64::NAN };
    LineFit { slope, intercept, half_width, residual }
}

/// Fit log y = a + s log x. Returns `None` if any y is not positive.
pub fn loglog_fit(x: &[f64], y: &[f64]) -> Option<LineFit> {
    if y.iter().any(|&v| !(v > 0.0)) || x.iter().any(|&v| !(v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    Some(ols(&lx, &ly))
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_recovers_small_terms() {
        let mut k = KahanSum::default();
        k.add(1e16);
        for _ in 0..1000 {
            k.add(1.0);
        }
        k.add(-1e16);
        assert_eq!(k.value(), 1000.0);
    }

    #[test]
    fn ols_exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 1.5 * v).collect();
        let f = ols(&x, &y);
        assert!((f.slope + 1.5).abs() < 1e-14 && (f.intercept - 3.0).abs() < 1e-14);
        assert!(f.residual < 1e-14);
        let p = loglog_fit(&[1.0, 10.0, 100.0], &[1.0, 1e-3, 1e-6]).unwrap();
        assert!((p.slope + 3.0).abs() < 1e-12);
        assert!(loglog_fit(&[1.0, 2.0], &[0.0, 1.0]).is_none());
    }

    #[test]
    fn batch_se_of_iid_sample() {
        let mut r = crate::rng::RngStream::new(9, 0);
        let xs: Vec<f64> = (0..40_000).map(|_| r.normal()).collect();
        let e = batch_mean(&xs);
        // SE of the mean of 4e4 unit normals is 0.005; batch estimate is
        // within ~35% of it with 20 batches.
        assert!((e.se - 0.005).abs() < 0.002, "{}", e.se);
        assert!(e.mean.abs() < 4.0 * 0.005);
        let v = batch_variance(&xs);
        assert!((v.mean - 1.0).abs() < 4.0 * v.se + 1e-3);
    }

    #[test]
    fn ks_basic() {
        assert_eq!(ks_distance(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]), 0.0);
        assert_eq!(ks_distance(&[0.0, 0.0], &[1.0, 1.0]), 1.0);
        assert!((ks_distance(&[1.0, 2.0], &[2.0, 3.0]) - 0.5).abs() < 1e-15);
    }
}
