//! Empirical decay-rate estimation.
//!
//! The decay rate of a light-tailed sample is read off as minus the slope of
//! log survival against the sample points, restricted to a quantile window
//! deep enough to be "in the tail" but high enough to keep the point count
//! up. Busy-period-like laws carry an x^{-3/2} prefactor in front of the
//! exponential; the optional correction removes it before fitting.

use serde::Serialize;

use crate::error::{Error, Result};

/// Exact empirical survival function P(X > x), queryable anywhere.
#[derive(Debug, Clone)]
pub struct EmpiricalSurvival {
    sorted: Vec<f64>,
}

impl EmpiricalSurvival {
    pub fn new(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySamples);
        }
        if samples.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::Estimator(
                "samples must be finite and nonnegative".into(),
            ));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(Self { sorted })
    }

    /// Fraction of samples strictly above `x`.
    pub fn query(&self, x: f64) -> f64 {
        let below_or_eq = self.sorted.partition_point(|&s| s <= x);
        (self.sorted.len() - below_or_eq) as f64 / self.sorted.len() as f64
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Window and mode for [`estimate_decay`].
#[derive(Debug, Clone, Copy)]
pub struct EstimatorConfig {
    /// Lower quantile of the fit window.
    pub q_lo: f64,
    /// Upper quantile of the fit window.
    pub q_hi: f64,
    /// Regress `log P(X > x) + (3/2) log x` instead of bare log survival.
    pub poly_correction: bool,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            q_lo: 0.90,
            q_hi: 0.999,
            poly_correction: false,
        }
    }
}

impl EstimatorConfig {
    pub fn with_poly_correction() -> Self {
        Self {
            poly_correction: true,
            ..Self::default()
        }
    }
}

/// A fitted decay rate with its regression diagnostics.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DecayEstimate {
    /// Minus the fitted slope of log survival.
    pub rate: f64,
    /// Standard error of the slope.
    pub stderr: f64,
    /// The x-window the fit used.
    pub window: (f64, f64),
    /// Distinct sample points entering the regression.
    pub points: usize,
    /// Coefficient of determination of the fit.
    pub r_squared: f64,
}

/// Ordinary least squares of log empirical survival against the distinct
/// sample points between the `q_lo` and `q_hi` quantiles.
///
/// Needs at least 1000 samples and 10 usable points in the window.
pub fn estimate_decay(samples: &[f64], config: EstimatorConfig) -> Result<DecayEstimate> {
    if samples.len() < 1000 {
        return Err(Error::Estimator(format!(
            "need at least 1000 samples, got {}",
            samples.len()
        )));
    }
    if !(config.q_lo < config.q_hi && config.q_hi < 1.0 && config.q_lo > 0.0) {
        return Err(Error::Estimator(format!(
            "quantile window must satisfy 0 < q_lo < q_hi < 1, got ({}, {})",
            config.q_lo, config.q_hi
        )));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::Estimator("samples must be finite".into()));
    }

    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let idx = |q: f64| (((n - 1) as f64) * q).floor() as usize;
    let x_lo = sorted[idx(config.q_lo)];
    let x_hi = sorted[idx(config.q_hi)];

    // One (x, log survival) point per distinct sample value in the window.
    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    let mut i = 0;
    while i < n {
        let x = sorted[i];
        let mut j = i + 1;
        while j < n && sorted[j] == x {
            j += 1;
        }
        if x >= x_lo && x <= x_hi {
            let surv = (n - j) as f64 / n as f64;
            if surv > 0.0 {
                let mut y = surv.ln();
                if config.poly_correction {
                    if x <= 0.0 {
                        i = j;
                        continue;
                    }
                    y += 1.5 * x.ln();
                }
                xs.push(x);
                ys.push(y);
            }
        }
        i = j;
    }

    let m = xs.len();
    if m < 10 {
        return Err(Error::Estimator(format!(
            "only {m} usable points in the window [{x_lo}, {x_hi}]; need 10"
        )));
    }

    let mf = m as f64;
    let x_mean = xs.iter().sum::<f64>() / mf;
    let y_mean = ys.iter().sum::<f64>() / mf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for k in 0..m {
        let dx = xs[k] - x_mean;
        let dy = ys[k] - y_mean;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::Estimator("degenerate window: all x equal".into()));
    }
    let slope = sxy / sxx;
    let ssr = (syy - slope * sxy).max(0.0);
    let stderr = (ssr / (mf - 2.0) / sxx).sqrt();
    let r_squared = if syy > 0.0 { 1.0 - ssr / syy } else { 1.0 };
    let rate = -slope;
    if !(rate > 0.0) {
        return Err(Error::Estimator(format!(
            "fitted rate is not positive ({rate}); the input does not look light-tailed"
        )));
    }
    Ok(DecayEstimate {
        rate,
        stderr,
        window: (x_lo, x_hi),
        points: m,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{exp_draw, stream_rng, Purpose};

    #[test]
    fn survival_counting_examples() {
        let s = EmpiricalSurvival::new(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.query(1.5), 2.0 / 3.0);
        assert_eq!(s.query(0.5), 1.0);
        assert_eq!(s.query(1.0), 2.0 / 3.0);
        assert_eq!(s.query(3.0), 0.0);
        assert_eq!(s.query(10.0), 0.0);
        assert!(EmpiricalSurvival::new(&[]).is_err());
    }

    #[test]
    fn exponential_rate_recovered_within_two_percent() {
        let mut rng = stream_rng(11, Purpose::Synthetic, 0);
        let samples: Vec<f64> = (0..1_000_000).map(|_| exp_draw(&mut rng, 2.0)).collect();
        let est = estimate_decay(&samples, EstimatorConfig::default()).unwrap();
        assert!(
            (est.rate - 2.0).abs() / 2.0 < 0.02,
            "estimated {} (stderr {})",
            est.rate,
            est.stderr
        );
        assert!(est.points >= 10);
        assert!(est.r_squared > 0.99);
    }

    #[test]
    fn doubling_samples_halves_the_rate() {
        let mut rng = stream_rng(3, Purpose::Synthetic, 0);
        let samples: Vec<f64> = (0..20_000).map(|_| exp_draw(&mut rng, 1.0)).collect();
        let doubled: Vec<f64> = samples.iter().map(|x| 2.0 * x).collect();
        let a = estimate_decay(&samples, EstimatorConfig::default()).unwrap();
        let b = estimate_decay(&doubled, EstimatorConfig::default()).unwrap();
        // doubling is exact in binary floating point, so this is bitwise
        assert_eq!(a.rate, 2.0 * b.rate);
    }

    #[test]
    fn permutation_invariant() {
        let mut rng = stream_rng(5, Purpose::Synthetic, 0);
        let mut samples: Vec<f64> = (0..5_000).map(|_| exp_draw(&mut rng, 1.0)).collect();
        let a = estimate_decay(&samples, EstimatorConfig::default()).unwrap();
        samples.reverse();
        samples.rotate_left(1234);
        let b = estimate_decay(&samples, EstimatorConfig::default()).unwrap();
        assert_eq!(a.rate, b.rate);
        assert_eq!(a.stderr, b.stderr);
    }

    #[test]
    fn error_paths() {
        let short = vec![1.0; 100];
        assert!(estimate_decay(&short, EstimatorConfig::default()).is_err());
        let mut rng = stream_rng(6, Purpose::Synthetic, 0);
        let ok: Vec<f64> = (0..2_000).map(|_| exp_draw(&mut rng, 1.0)).collect();
        let bad = EstimatorConfig {
            q_lo: 0.9,
            q_hi: 0.9,
            poly_correction: false,
        };
        assert!(estimate_decay(&ok, bad).is_err());
        // constant data: degenerate window
        let flat = vec![1.0; 2_000];
        assert!(estimate_decay(&flat, EstimatorConfig::default()).is_err());
    }

    #[test]
    fn rate_error_shrinks_with_sample_size() {
        // median absolute error over 20 seeds at n = 10^4 vs n = 10^6
        let alpha = 1.0;
        let mut errs_small = Vec::new();
        let mut errs_large = Vec::new();
        for seed in 0..20u64 {
            let mut rng = stream_rng(seed, Purpose::Synthetic, 0);
            let big: Vec<f64> = (0..1_000_000).map(|_| exp_draw(&mut rng, alpha)).collect();
            let small = &big[..10_000];
            let e_small = estimate_decay(small, EstimatorConfig::default()).unwrap();
            let e_big = estimate_decay(&big, EstimatorConfig::default()).unwrap();
            errs_small.push((e_small.rate - alpha).abs());
            errs_large.push((e_big.rate - alpha).abs());
        }
        errs_small.sort_by(|a, b| a.partial_cmp(b).unwrap());
        errs_large.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(
            errs_large[10] < errs_small[10],
            "median error did not shrink: {} vs {}",
            errs_large[10],
            errs_small[10]
        );
    }

    #[test]
    fn poly_correction_reduces_bias_on_poly_exponential_tails() {
        use crate::validate::sample_poly_exp_tail;
        // law with survival (x/x0)^{-3/2} e^{-(x-x0)} on [x0, inf)
        let alpha = 1.0;
        let x0 = 1.0;
        let mut bias_plain = Vec::new();
        let mut bias_corrected = Vec::new();
        for seed in 0..20u64 {
            let mut rng = stream_rng(seed, Purpose::Synthetic, 1);
            let samples: Vec<f64> = (0..200_000)
                .map(|_| sample_poly_exp_tail(alpha, x0, &mut rng))
                .collect();
            let plain = estimate_decay(&samples, EstimatorConfig::default()).unwrap();
            let corr = estimate_decay(&samples, EstimatorConfig::with_poly_correction()).unwrap();
            bias_plain.push(plain.rate - alpha);
            bias_corrected.push(corr.rate - alpha);
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!(
            mean(&bias_corrected).abs() < mean(&bias_plain).abs(),
            "correction did not help: {} vs {}",
            mean(&bias_corrected),
            mean(&bias_plain)
        );
    }
}
