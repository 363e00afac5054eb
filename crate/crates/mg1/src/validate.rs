//! Executable checks of the distributional identities.
//!
//! Equality-in-distribution claims are tested with a two-sample
//! Kolmogorov-Smirnov statistic at level 0.05; equality-of-decay-rate claims
//! with the regression estimator from [`crate::tail`]. Each check builds its
//! two sides from disjoint random streams of one seed, so a check is a pure
//! function of `(model, n, seed)`.

use rand::Rng;
use serde::Serialize;

use crate::analytic::{self, QueueModel};
use crate::error::{Error, Result};
use crate::rng::{exp_draw, stream_rng, Purpose, SimRng};
use crate::sim::{self, Discipline, FirstService};
use crate::tail::{estimate_decay, DecayEstimate, EstimatorConfig};

/// Critical coefficient of the two-sample KS test at level 0.05.
const KS_COEFF_05: f64 = 1.358;

/// Result of a two-sample Kolmogorov-Smirnov comparison.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct KsReport {
    /// sup_x |F_n(x) - G_m(x)|.
    pub statistic: f64,
    pub n: usize,
    pub m: usize,
    /// 1.358 sqrt((n+m)/(nm)): the level-0.05 critical value.
    pub threshold: f64,
    pub pass: bool,
}

/// Exact two-sample KS statistic via a merged walk over both sorted samples.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsReport> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|p, q| p.partial_cmp(q).unwrap());
    ys.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let (n, m) = (xs.len(), ys.len());
    let x_step = 1.0 / n as f64;
    let y_step = 1.0 / m as f64;
    let mut i = 0;
    let mut j = 0;
    let mut diff = 0.0f64;
    let mut best = 0.0f64;
    while i < n || j < m {
        let take_x = if i == n {
            false
        } else if j == m {
            true
        } else {
            xs[i] <= ys[j]
        };
        if take_x {
            let v = xs[i];
            while i < n && xs[i] == v {
                diff += x_step;
                i += 1;
            }
            while j < m && ys[j] == v {
                diff -= y_step;
                j += 1;
            }
        } else {
            let v = ys[j];
            while j < m && ys[j] == v {
                diff -= y_step;
                j += 1;
            }
        }
        best = best.max(diff.abs());
    }
    let threshold = KS_COEFF_05 * ((n + m) as f64 / (n as f64 * m as f64)).sqrt();
    Ok(KsReport {
        statistic: best,
        n,
        m,
        threshold,
        pass: best < threshold,
    })
}

/// KS comparison of a directly simulated quantity against its composed
/// counterpart, with the companion busy-probability check.
#[derive(Debug, Clone, Serialize)]
pub struct DecompositionReport {
    pub ks: KsReport,
    /// Fraction of tagged arrivals that found the (possibly clipped) queue
    /// busy.
    pub busy_fraction: f64,
    /// Its analytic value: the offered load of the (clipped) queue.
    pub busy_fraction_expected: f64,
}

/// Emptying-time decomposition: the time from a Poisson arrival until the
/// system next empties is distributed as `A * Lres + L`, with `A` Bernoulli
/// of the load, `Lres` a residual busy period, `L` a fresh busy period, all
/// independent.
pub fn check_d_decomposition(
    model: &QueueModel,
    n: usize,
    seed: u64,
    threads: usize,
) -> Result<DecompositionReport> {
    let warmup = sim::default_injection_warmup(model);
    let direct = sim::sample_time_to_empty(model, n, seed, warmup, threads)?;
    let composed = compose_busy_mixture(model, n, seed, FirstService::Generic, threads)?;
    let ks = ks_two_sample(&direct.samples, &composed)?;
    Ok(DecompositionReport {
        ks,
        busy_fraction: direct.busy_fraction,
        busy_fraction_expected: model.rho(),
    })
}

/// Sojourn decomposition for a tagged customer with requirement `tau` under
/// FB: against `A(tau) * Lres(tau) + Lstar(tau)` built from the queue with
/// service clipped at `tau`, where `Lstar` starts with a first service of
/// exactly `tau`.
pub fn check_vtau_decomposition(
    model: &QueueModel,
    tau: f64,
    n: usize,
    seed: u64,
    threads: usize,
) -> Result<DecompositionReport> {
    let warmup = sim::default_injection_warmup(model);
    let direct = sim::conditional_sojourn_fb(model, tau, n, seed, warmup, threads)?;
    let clipped = model.truncate_service(tau)?;
    let composed = compose_busy_mixture(&clipped, n, seed, FirstService::Exactly(tau), threads)?;
    let ks = ks_two_sample(&direct.sojourns, &composed)?;
    Ok(DecompositionReport {
        ks,
        busy_fraction: direct.busy_fraction,
        busy_fraction_expected: clipped.rho(),
    })
}

/// `A * residual + busy_period` with independent components, `A` Bernoulli
/// of the model's load and the busy period's first service drawn per
/// `first`.
fn compose_busy_mixture(
    model: &QueueModel,
    n: usize,
    seed: u64,
    first: FirstService,
    threads: usize,
) -> Result<Vec<f64>> {
    let busy = sim::sample_busy_periods(model, n, seed, first, threads)?;
    let residual = sim::sample_residual_busy(model, n, seed, threads)?;
    let p = model.rho();
    let mut rng = stream_rng(seed, Purpose::Bernoulli, 0);
    Ok((0..n)
        .map(|i| {
            let a: f64 = rng.random();
            if a < p {
                residual[i] + busy[i]
            } else {
                busy[i]
            }
        })
        .collect())
}

/// Draw from the law with survival `(x/x0)^{-3/2} e^{-alpha (x-x0)}` on
/// `[x0, inf)`: an exponential tail with the busy-period polynomial
/// prefactor. Rejection from a shifted exponential envelope.
pub fn sample_poly_exp_tail<R: Rng + ?Sized>(alpha: f64, x0: f64, rng: &mut R) -> f64 {
    let density_at = |x: f64| (x / x0).powf(-1.5) * (1.5 / x + alpha);
    let ceiling = density_at(x0);
    loop {
        let x = x0 + exp_draw(rng, alpha);
        let u: f64 = rng.random();
        if u * ceiling < density_at(x) {
            return x;
        }
    }
}

/// Per-seed decay estimates for the sum of two independent variables with
/// equal decay rate `alpha`.
#[derive(Debug, Clone, Serialize)]
pub struct SumDecayReport {
    pub alpha: f64,
    pub estimates: Vec<f64>,
    pub median: f64,
}

/// Sum-stability of the decay rate: `X + Y` for iid light-tailed `X, Y`
/// with rate `alpha` keeps rate `alpha`. The inputs carry the canonical
/// `x^{-3/2}` prefactor so the corrected estimator applies to the sum as
/// well.
pub fn check_sum_decay_lemma(alpha: f64, n: usize, seeds: &[u64]) -> Result<SumDecayReport> {
    if !(alpha > 0.0) {
        return Err(Error::Precondition(format!(
            "decay rate must be positive, got {alpha}"
        )));
    }
    let x0 = 1.0 / alpha;
    let mut estimates = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let mut rng: SimRng = stream_rng(seed, Purpose::Synthetic, 0);
        let sums: Vec<f64> = (0..n)
            .map(|_| {
                sample_poly_exp_tail(alpha, x0, &mut rng) + sample_poly_exp_tail(alpha, x0, &mut rng)
            })
            .collect();
        let est = estimate_decay(&sums, EstimatorConfig::with_poly_correction())?;
        estimates.push(est.rate);
    }
    let mut sorted = estimates.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = sorted[sorted.len() / 2];
    Ok(SumDecayReport {
        alpha,
        estimates,
        median,
    })
}

/// Side-by-side decay rates of the four disciplines on one arrival trace.
#[derive(Debug, Clone, Serialize)]
pub struct OrderingReport {
    /// Busy-period decay rate: the analytic FB / preemptive-LIFO sojourn
    /// rate.
    pub analytic_c: f64,
    /// The analytic FIFO rate.
    pub analytic_theta0: f64,
    pub fb: DecayEstimate,
    pub lifo: DecayEstimate,
    pub fifo: DecayEstimate,
    pub ps: DecayEstimate,
    /// Preemptive-LIFO sojourns against independently sampled busy periods.
    pub lifo_vs_busy: KsReport,
}

/// Fit window for sojourn-decay estimation, by tail depth.
///
/// Survival of a busy-period-like law reaches its `x^{-3/2} e^{-cx}` shape
/// only once `c x` is well past 1, so laws whose fit window sits at small
/// `c x` (busy periods themselves, preemptive-LIFO sojourns) need a deeper
/// window than FB sojourns, which are stochastically larger. FIFO tails are
/// purely exponential and need no correction at all. Values calibrated
/// against the closed-form exponential-service rates.
pub fn sojourn_estimator_config(discipline: Discipline) -> EstimatorConfig {
    match discipline {
        Discipline::Fifo => EstimatorConfig {
            q_lo: 0.99,
            q_hi: 0.9999,
            poly_correction: false,
        },
        Discipline::Fb | Discipline::Ps => EstimatorConfig {
            q_lo: 0.99,
            q_hi: 0.9999,
            poly_correction: true,
        },
        Discipline::LifoPreemptive => busy_period_estimator_config(),
    }
}

/// Deep-tail window for busy periods and their derived laws.
pub fn busy_period_estimator_config() -> EstimatorConfig {
    EstimatorConfig {
        q_lo: 0.999,
        q_hi: 0.99999,
        poly_correction: true,
    }
}

/// Runs all four disciplines on common random numbers, estimates each
/// sojourn decay rate, and KS-compares the preemptive-LIFO sojourns with
/// independent busy periods (they share a law: a LIFO sojourn is the
/// sub-busy period the customer starts).
pub fn check_discipline_ordering(
    model: &QueueModel,
    n_customers: usize,
    warmup: usize,
    seed: u64,
    threads: usize,
) -> Result<OrderingReport> {
    let rates = analytic::analytic_rates(model)?;
    let mut estimates = Vec::with_capacity(4);
    let mut lifo_sojourns = Vec::new();
    for d in Discipline::ALL {
        let run = sim::run_queue(model, d, n_customers, warmup, seed)?;
        let sojourns = run.sojourns();
        estimates.push(estimate_decay(&sojourns, sojourn_estimator_config(d))?);
        if d == Discipline::LifoPreemptive {
            lifo_sojourns = sojourns;
        }
    }
    let ks_n = lifo_sojourns.len().min(100_000);
    let busy = sim::sample_busy_periods(model, ks_n, seed, FirstService::Generic, threads)?;
    let lifo_vs_busy = ks_two_sample(&lifo_sojourns[..ks_n], &busy)?;
    Ok(OrderingReport {
        analytic_c: rates.c,
        analytic_theta0: rates.theta0,
        fb: estimates[0],
        fifo: estimates[1],
        lifo: estimates[2],
        ps: estimates[3],
        lifo_vs_busy,
    })
}

/// Mixing the fixed-requirement tagged sojourns over the service law must
/// reproduce the unconditional stationary FB sojourn: tagged replications
/// with drawn requirements against one long FB run.
pub fn check_pise_mixture(
    model: &QueueModel,
    n: usize,
    seed: u64,
    threads: usize,
) -> Result<KsReport> {
    let run_warmup = 10_000.min(n / 2);
    let long_run = sim::run_queue(model, Discipline::Fb, n + run_warmup, run_warmup, seed)?;
    let tag_warmup = sim::default_injection_warmup(model);
    let mixed = sim::stationary_sojourn_replications(model, n, seed, tag_warmup, threads)?;
    ks_two_sample(&long_run.sojourns(), &mixed)
}
