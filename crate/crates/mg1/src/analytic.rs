//! Decay rates of the M/G/1 queue computed from the service MGF.
//!
//! Everything here is a function of the concave map
//! `h(theta) = theta - lambda (E e^{theta B} - 1)`:
//! the busy-period decay rate is `sup h`, the workload / FIFO decay rate is
//! the positive root of `h`, and the service radius bounds both. Truncating
//! the service law at `tau` gives the decreasing curve `c(tau)` that controls
//! sojourn tails under least-attained-service scheduling.

use serde::Serialize;

use crate::dist::ServiceDistribution;
use crate::error::{Error, Result};

/// Poisson arrivals at rate `lambda` feeding a single server with iid
/// service times. Construction enforces stability (`rho < 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct QueueModel {
    lambda: f64,
    service: ServiceDistribution,
    rho: f64,
}

impl QueueModel {
    pub fn new(lambda: f64, service: ServiceDistribution) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "arrival rate must be positive and finite, got {lambda}"
            )));
        }
        let mean_service = service.mean();
        let rho = lambda * mean_service;
        if rho >= 1.0 {
            return Err(Error::Unstable {
                lambda,
                mean_service,
                rho,
            });
        }
        Ok(Self {
            lambda,
            service,
            rho,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn service(&self) -> &ServiceDistribution {
        &self.service
    }

    /// Offered load `lambda * E B`, strictly below 1.
    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// The same arrival stream with service clipped at `tau`.
    pub fn truncate_service(&self, tau: f64) -> Result<Self> {
        let clipped = ServiceDistribution::truncated(self.service.clone(), tau)?;
        Self::new(self.lambda, clipped)
    }
}

/// `theta - lambda (E e^{theta B} - 1)`, with `-inf` wherever the MGF
/// diverges.
pub fn h(model: &QueueModel, theta: f64) -> f64 {
    let m = model.service.mgf(theta);
    if m.is_finite() {
        theta - model.lambda * (m - 1.0)
    } else {
        f64::NEG_INFINITY
    }
}

/// `log E e^{theta A(1)} = lambda (E e^{theta B} - 1)`: the log-MGF of the
/// work arriving in a unit window (compound Poisson).
pub fn arrival_log_mgf(model: &QueueModel, theta: f64) -> f64 {
    let m = model.service.mgf(theta);
    if m.is_finite() {
        model.lambda * (m - 1.0)
    } else {
        f64::INFINITY
    }
}

/// A solved decay rate with solver diagnostics.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DecaySolution {
    /// The decay rate itself (the supremum value).
    pub rate: f64,
    /// Where the supremum is attained.
    pub theta_star: f64,
    /// Half-width of the final bracket around `theta_star`.
    pub theta_tolerance: f64,
    /// Central finite-difference derivative at `theta_star`.
    pub derivative_residual: f64,
}

/// Busy-period decay rate `c = sup_theta h(theta)`, attained at
/// `theta_star` strictly inside `(0, radius)`.
pub fn busy_period_decay(model: &QueueModel) -> Result<DecaySolution> {
    maximize_concave(
        &|t| h(model, t),
        model.service.mgf_radius(),
        "the busy-period rate maximizer",
    )
}

/// The same supremum expressed through the compound-Poisson route:
/// `sup_theta { theta - log E e^{theta A(1)} }`.
pub fn cramer_decay(model: &QueueModel) -> Result<DecaySolution> {
    maximize_concave(
        &|t| {
            let lm = arrival_log_mgf(model, t);
            if lm.is_finite() {
                t - lm
            } else {
                f64::NEG_INFINITY
            }
        },
        model.service.mgf_radius(),
        "the compound-Poisson rate maximizer",
    )
}

/// Busy-period decay rate in first-passage form.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CoxSmithDecay {
    /// `lambda - zeta - lambda g(zeta)` where `g(s) = E e^{-sB}`.
    pub rate: f64,
    /// The negative root of `g'(zeta) = -1/lambda`.
    pub zeta: f64,
}

/// Solves `g'(zeta) = -1/lambda` for `zeta < 0` (with `g` the service
/// Laplace transform) and evaluates `lambda - zeta - lambda g(zeta)`.
/// Agrees with [`busy_period_decay`] with `zeta = -theta_star`; the two
/// routes share no solver code beyond the MGF itself.
pub fn cox_smith_decay(model: &QueueModel) -> Result<CoxSmithDecay> {
    // In theta = -zeta > 0 the equation reads mgf'(theta) = 1/lambda, and
    // the left side is increasing. mgf'(0) = E B < 1/lambda by stability.
    let radius = model.service.mgf_radius();
    let target = 1.0 / model.lambda;
    let deriv = |t: f64| mgf_derivative(&model.service, t);

    let mut hi = if radius.is_finite() {
        radius - 0.5 * radius.min(1.0)
    } else {
        1.0
    };
    let mut guard = 0;
    while deriv(hi) < target {
        hi = if radius.is_finite() {
            radius - 0.5 * (radius - hi)
        } else {
            hi * 2.0
        };
        guard += 1;
        if guard > 200 {
            return Err(Error::Bracket {
                what: "the Laplace-transform derivative root",
            });
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if deriv(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let theta = 0.5 * (lo + hi);
    let zeta = -theta;
    let g_zeta = model.service.mgf(theta); // g(zeta) = E e^{-zeta B}
    let rate = model.lambda - zeta - model.lambda * g_zeta;
    Ok(CoxSmithDecay { rate, zeta })
}

/// FIFO sojourn / workload decay rate: the positive root `theta0` of `h`,
/// which lies strictly between the maximizer and the MGF radius.
pub fn fifo_decay(model: &QueueModel) -> Result<f64> {
    let radius = model.service.mgf_radius();
    let sol = busy_period_decay(model)?;
    let f = |t: f64| h(model, t);

    // h(theta_star) = c > 0; walk toward the radius until h goes negative.
    let mut lo = sol.theta_star;
    let mut hi = if radius.is_finite() {
        0.5 * (lo + radius)
    } else {
        2.0 * lo.max(0.5)
    };
    let mut guard = 0;
    while f(hi) > 0.0 {
        lo = hi;
        hi = if radius.is_finite() {
            0.5 * (hi + radius)
        } else {
            hi * 2.0
        };
        guard += 1;
        if guard > 200 {
            return Err(Error::Bracket {
                what: "the positive root of h",
            });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `c(tau)`: busy-period decay rates of the queue with service clipped at
/// each grid point. Rates are nonincreasing in `tau`. Grid points beyond the
/// service endpoint are rejected (clipping there is meaningless).
pub fn truncated_decay_curve(model: &QueueModel, taus: &[f64]) -> Result<Vec<(f64, f64)>> {
    let endpoint = model.service.endpoint();
    let mut out = Vec::with_capacity(taus.len());
    for &tau in taus {
        if !(tau > 0.0) {
            return Err(Error::Precondition(format!(
                "truncation point must be positive, got {tau}"
            )));
        }
        if tau > endpoint {
            return Err(Error::Precondition(format!(
                "truncation point {tau} lies beyond the service endpoint {endpoint}, \
                 where P(B >= tau) = 0"
            )));
        }
        let clipped = model.truncate_service(tau)?;
        let sol = busy_period_decay(&clipped)?;
        out.push((tau, sol.rate));
    }
    Ok(out)
}

/// Pollaczek-Khinchin transform of the stationary workload,
/// `E e^{-sW} = s (1-rho) / (s - lambda + lambda E e^{-sB})`, for `s > 0`.
pub fn workload_transform(model: &QueueModel, s: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::Precondition(format!(
            "the workload transform needs s > 0, got {s} (the denominator vanishes at 0)"
        )));
    }
    let g = model.service.mgf(-s);
    let denom = s - model.lambda + model.lambda * g;
    Ok(s * (1.0 - model.rho) / denom)
}

/// Closed forms for exponential service with rate `mu`:
/// busy-period rate `(sqrt(mu) - sqrt(lambda))^2`, FIFO rate `mu - lambda`,
/// service radius `mu`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Mm1Rates {
    pub c_fb: f64,
    pub c_fifo: f64,
    pub dr_b: f64,
}

pub fn mm1_closed_forms(lambda: f64, mu: f64) -> Result<Mm1Rates> {
    if !(lambda > 0.0 && mu > 0.0 && lambda < mu) {
        return Err(Error::Unstable {
            lambda,
            mean_service: 1.0 / mu,
            rho: lambda / mu,
        });
    }
    let c_fb = (mu.sqrt() - lambda.sqrt()).powi(2);
    Ok(Mm1Rates {
        c_fb,
        c_fifo: mu - lambda,
        dr_b: mu,
    })
}

/// The analytic bundle for one model.
#[derive(Debug, Clone, Serialize)]
pub struct AnalyticRates {
    pub lambda: f64,
    pub rho: f64,
    /// Busy-period decay rate (= FB and preemptive-LIFO sojourn rate).
    pub c: f64,
    /// Maximizer of h.
    pub theta_star: f64,
    /// FIFO sojourn / workload decay rate.
    pub theta0: f64,
    /// Service MGF radius (decay rate of B itself); may be +inf.
    pub dr_b: f64,
}

/// Computes `c`, `theta_star`, `theta0` and the radius in one shot.
/// The chain `0 < c < theta0 < dr_b` holds for every stable model.
pub fn analytic_rates(model: &QueueModel) -> Result<AnalyticRates> {
    let sol = busy_period_decay(model)?;
    let theta0 = fifo_decay(model)?;
    Ok(AnalyticRates {
        lambda: model.lambda,
        rho: model.rho,
        c: sol.rate,
        theta_star: sol.theta_star,
        theta0,
        dr_b: model.service.mgf_radius(),
    })
}

/// Central finite-difference step for a C^3 function at `t`.
#[inline]
fn fd_step(t: f64) -> f64 {
    6.06e-6 * (1.0 + t.abs())
}

/// Central-difference MGF derivative; +inf when the forward probe leaves
/// the finite region.
fn mgf_derivative(dist: &ServiceDistribution, t: f64) -> f64 {
    let d = fd_step(t);
    let hi = dist.mgf(t + d);
    if !hi.is_finite() {
        return f64::INFINITY;
    }
    (hi - dist.mgf(t - d)) / (2.0 * d)
}

/// Maximizes a concave `f` over `[0, radius)`: golden-section search down to
/// a short bracket, then bisection on the central-difference derivative.
fn maximize_concave(
    f: &dyn Fn(f64) -> f64,
    radius: f64,
    what: &'static str,
) -> Result<DecaySolution> {
    // Upper end of the search interval.
    let hi = if radius.is_finite() {
        // Exponential back-off from the radius until f is finite.
        let mut margin = radius * 1e-12 + f64::MIN_POSITIVE;
        let mut guard = 0;
        while !f(radius - margin).is_finite() {
            margin *= 4.0;
            guard += 1;
            if margin >= radius || guard > 200 {
                return Err(Error::Bracket { what });
            }
        }
        radius - margin
    } else {
        let mut hi = 1.0;
        let mut guard = 0;
        while f(hi) >= f(0.5 * hi) {
            hi *= 2.0;
            guard += 1;
            if guard > 200 {
                return Err(Error::Bracket { what });
            }
        }
        hi
    };

    // Golden-section shrink of [lo, hi] around the maximizer.
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut lo = 0.0;
    let mut b = hi;
    let mut x1 = b - INV_PHI * (b - lo);
    let mut x2 = lo + INV_PHI * (b - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let coarse_tol = 1e-6 * (1.0 + hi.abs());
    while b - lo > coarse_tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (b - lo);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - lo);
            f1 = f(x1);
        }
    }

    // Refine by bisecting the sign of f' on a slightly padded bracket.
    let deriv = |t: f64| {
        let d = fd_step(t);
        let up = f(t + d);
        let down = f(t - d);
        if !up.is_finite() {
            return f64::NEG_INFINITY; // past the peak for concave f
        }
        (up - down) / (2.0 * d)
    };
    let pad = coarse_tol;
    let mut dlo = (lo - pad).max(0.0);
    let mut dhi = (b + pad).min(hi);
    // The bracket may have drifted off the sign change; re-expand if needed.
    if deriv(dlo) < 0.0 {
        dlo = 0.0;
    }
    if deriv(dhi) > 0.0 {
        dhi = hi;
    }
    let fine_tol = 1e-12 * (1.0 + dhi.abs());
    while dhi - dlo > fine_tol {
        let mid = 0.5 * (dlo + dhi);
        if mid <= dlo || mid >= dhi {
            break;
        }
        if deriv(mid) > 0.0 {
            dlo = mid;
        } else {
            dhi = mid;
        }
    }
    let theta_star = 0.5 * (dlo + dhi);
    Ok(DecaySolution {
        rate: f(theta_star),
        theta_star,
        theta_tolerance: 0.5 * (dhi - dlo),
        derivative_residual: deriv(theta_star),
    })
}
