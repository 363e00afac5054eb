//! Service-time distributions.
//!
//! Everything downstream needs exactly five things from a service law:
//! draws, the moment generating function, its finiteness radius, the mean,
//! and the right endpoint of the support. All five are exact (closed form or
//! quadrature to 1e-12) so that decay-rate solvers can trust them blindly.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::Distribution as _;

use crate::error::{Error, Result};
use crate::quad;

/// Absolute tolerance for quadrature-backed expectations.
const QUAD_TOL: f64 = 1e-12;

/// A nonnegative service-time law with a finite exponential moment.
///
/// Construct through the checked constructors or parse from a spec string
/// such as `exp:1.0`, `det:2`, `gamma:0.5,1.0`, `unif:0,2`,
/// `hyper:0.4,1.0,0.6,3.0` or `trunc(exp:1.0,2.5)`.
#[derive(Debug, Clone, PartialEq)]
pub enum ServiceDistribution {
    /// Point mass at `value`.
    Deterministic { value: f64 },
    /// Exponential with the given rate.
    Exponential { rate: f64 },
    /// Gamma with shape `shape` and rate `rate` (mean shape/rate).
    Gamma { shape: f64, rate: f64 },
    /// Uniform on [lo, hi].
    Uniform { lo: f64, hi: f64 },
    /// Mixture of exponentials: (weight, rate) pairs, weights summing to 1.
    HyperExponential { components: Vec<(f64, f64)> },
    /// The law of `min(B, cutoff)` for a base law `B`.
    Truncated {
        base: Box<ServiceDistribution>,
        cutoff: f64,
    },
}

use ServiceDistribution::*;

impl ServiceDistribution {
    pub fn deterministic(value: f64) -> Result<Self> {
        ensure_pos(value, "deterministic value")?;
        Ok(Deterministic { value })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        ensure_pos(rate, "exponential rate")?;
        Ok(Exponential { rate })
    }

    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        ensure_pos(shape, "gamma shape")?;
        ensure_pos(rate, "gamma rate")?;
        Ok(Gamma { shape, rate })
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && hi > lo) {
            return Err(Error::InvalidParameter(format!(
                "uniform bounds must satisfy 0 <= lo < hi, got [{lo}, {hi}]"
            )));
        }
        Ok(Uniform { lo, hi })
    }

    pub fn hyper_exponential(components: Vec<(f64, f64)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidParameter(
                "hyperexponential needs at least one component".into(),
            ));
        }
        let mut total = 0.0;
        for &(w, r) in &components {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "hyperexponential weight must be positive, got {w}"
                )));
            }
            ensure_pos(r, "hyperexponential rate")?;
            total += w;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "hyperexponential weights sum to {total}, expected 1"
            )));
        }
        Ok(HyperExponential { components })
    }

    /// Law of `min(base, cutoff)`. Nested truncations collapse to the
    /// smaller cutoff.
    pub fn truncated(base: ServiceDistribution, cutoff: f64) -> Result<Self> {
        ensure_pos(cutoff, "truncation cutoff")?;
        match base {
            Truncated { base, cutoff: c0 } => Ok(Truncated {
                base,
                cutoff: cutoff.min(c0),
            }),
            base => Ok(Truncated {
                base: Box::new(base),
                cutoff,
            }),
        }
    }

    /// E B, exact.
    pub fn mean(&self) -> f64 {
        match self {
            Deterministic { value } => *value,
            Exponential { rate } => 1.0 / rate,
            Gamma { shape, rate } => shape / rate,
            Uniform { lo, hi } => 0.5 * (lo + hi),
            HyperExponential { components } => {
                components.iter().map(|(w, r)| w / r).sum()
            }
            Truncated { base, cutoff } => base.truncated_mean(*cutoff),
        }
    }

    /// Right endpoint of the support: inf { u >= 0 : P(B <= u) = 1 }.
    pub fn endpoint(&self) -> f64 {
        match self {
            Deterministic { value } => *value,
            Exponential { .. } | Gamma { .. } | HyperExponential { .. } => f64::INFINITY,
            Uniform { hi, .. } => *hi,
            Truncated { base, cutoff } => base.endpoint().min(*cutoff),
        }
    }

    /// Supremum of the set where the MGF is finite. Bounded-support laws
    /// report +inf; `Exponential(r)` reports `r`, `Gamma(_, r)` reports `r`,
    /// a mixture reports the smallest component rate.
    pub fn mgf_radius(&self) -> f64 {
        match self {
            Deterministic { .. } | Uniform { .. } | Truncated { .. } => f64::INFINITY,
            Exponential { rate } => *rate,
            Gamma { rate, .. } => *rate,
            HyperExponential { components } => components
                .iter()
                .map(|&(_, r)| r)
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// E exp(theta B) as an extended real: +inf at and beyond the radius.
    pub fn mgf(&self, theta: f64) -> f64 {
        if theta == 0.0 {
            return 1.0;
        }
        match self {
            Deterministic { value } => (theta * value).exp(),
            Exponential { rate } => {
                if theta >= *rate {
                    f64::INFINITY
                } else {
                    rate / (rate - theta)
                }
            }
            Gamma { shape, rate } => {
                if theta >= *rate {
                    f64::INFINITY
                } else {
                    // (1 - theta/rate)^(-shape)
                    (-shape * (1.0 - theta / rate).ln()).exp()
                }
            }
            Uniform { lo, hi } => exp_integral(theta, *lo, *hi) / (hi - lo),
            HyperExponential { components } => {
                let mut acc = 0.0;
                for &(w, r) in components {
                    if theta >= r {
                        return f64::INFINITY;
                    }
                    acc += w * r / (r - theta);
                }
                acc
            }
            Truncated { base, cutoff } => base.truncated_mgf(theta, *cutoff),
        }
    }

    /// One draw. `Truncated` clips the base draw; the hyperexponential picks
    /// a branch first; gamma uses the usual shape-dependent rejection
    /// sampler; the rest invert the CDF.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Deterministic { value } => *value,
            Exponential { rate } => crate::rng::exp_draw(rng, *rate),
            Gamma { shape, rate } => rand_distr::Gamma::new(*shape, 1.0 / rate)
                .expect("validated at construction")
                .sample(rng),
            Uniform { lo, hi } => {
                let u: f64 = rng.random();
                lo + (hi - lo) * u
            }
            HyperExponential { components } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for &(w, r) in components {
                    acc += w;
                    if u < acc {
                        return crate::rng::exp_draw(rng, r);
                    }
                }
                // weight roundoff: fall through to the last branch
                crate::rng::exp_draw(rng, components.last().unwrap().1)
            }
            Truncated { base, cutoff } => base.sample(rng).min(*cutoff),
        }
    }

    /// E min(B, tau) for the *base* law.
    fn truncated_mean(&self, tau: f64) -> f64 {
        match self {
            Deterministic { value } => value.min(tau),
            Exponential { rate } => -(-rate * tau).exp_m1() / rate,
            Uniform { lo, hi } => {
                if tau >= *hi {
                    0.5 * (lo + hi)
                } else if tau <= *lo {
                    tau
                } else {
                    (0.5 * (tau * tau - lo * lo) + tau * (hi - tau)) / (hi - lo)
                }
            }
            HyperExponential { components } => components
                .iter()
                .map(|&(w, r)| -w * (-r * tau).exp_m1() / r)
                .sum(),
            Gamma { shape, rate } => {
                let below = gamma_partial_expectation(*shape, *rate, 0.0, tau, 1);
                let mass_below = gamma_partial_expectation(*shape, *rate, 0.0, tau, 0);
                below + tau * (1.0 - mass_below).max(0.0)
            }
            Truncated { base, cutoff } => base.truncated_mean(tau.min(*cutoff)),
        }
    }

    /// E exp(theta min(B, tau)) for the *base* law. Finite for every theta.
    fn truncated_mgf(&self, theta: f64, tau: f64) -> f64 {
        match self {
            Deterministic { value } => (theta * value.min(tau)).exp(),
            Exponential { rate } => {
                // integral of rate * e^{(theta-rate)u} over [0,tau]
                // plus the clipped mass e^{theta tau} P(B > tau)
                let s = theta - rate;
                let tail = (s * tau).exp();
                let body = if s == 0.0 {
                    rate * tau
                } else {
                    rate * (s * tau).exp_m1() / s
                };
                body + tail
            }
            Uniform { lo, hi } => {
                if tau >= *hi {
                    self.mgf(theta)
                } else if tau <= *lo {
                    (theta * tau).exp()
                } else {
                    (exp_integral(theta, *lo, tau) + (theta * tau).exp() * (hi - tau)) / (hi - lo)
                }
            }
            HyperExponential { components } => components
                .iter()
                .map(|&(w, r)| w * Exponential { rate: r }.truncated_mgf(theta, tau))
                .sum(),
            Gamma { shape, rate } => {
                let body = gamma_partial_expectation(*shape, *rate, theta, tau, 0);
                let mass_below = gamma_partial_expectation(*shape, *rate, 0.0, tau, 0);
                body + (theta * tau).exp() * (1.0 - mass_below).max(0.0)
            }
            Truncated { base, cutoff } => base.truncated_mgf(theta, tau.min(*cutoff)),
        }
    }

    /// Quadrature route to the truncated MGF, independent of the closed
    /// forms above. Only meaningful for continuous bases; used to cross-check
    /// them.
    #[doc(hidden)]
    pub fn truncated_mgf_quadrature(&self, theta: f64, tau: f64) -> Option<f64> {
        let density: Box<dyn Fn(f64) -> f64> = match self {
            Exponential { rate } => {
                let r = *rate;
                Box::new(move |u: f64| r * (-r * u).exp())
            }
            Uniform { lo, hi } => {
                let (a, b) = (*lo, *hi);
                Box::new(move |u: f64| if u >= a && u <= b { 1.0 / (b - a) } else { 0.0 })
            }
            HyperExponential { components } => {
                let comps = components.clone();
                Box::new(move |u: f64| comps.iter().map(|&(w, r)| w * r * (-r * u).exp()).sum())
            }
            Gamma { shape, rate } => {
                let (a, b) = (*shape, *rate);
                let lg = quad::ln_gamma(a);
                Box::new(move |u: f64| {
                    if u <= 0.0 {
                        0.0
                    } else {
                        (a * b.ln() + (a - 1.0) * u.ln() - b * u - lg).exp()
                    }
                })
            }
            _ => return None,
        };
        let body = quad::integrate(&|u| (theta * u).exp() * density(u), 0.0, tau, QUAD_TOL);
        let mass_below = quad::integrate(&|u| density(u), 0.0, tau, QUAD_TOL);
        Some(body + (theta * tau).exp() * (1.0 - mass_below).max(0.0))
    }
}

/// integral of e^{theta u} du over [lo, hi], stable near theta = 0.
fn exp_integral(theta: f64, lo: f64, hi: f64) -> f64 {
    if theta == 0.0 {
        return hi - lo;
    }
    // e^{theta lo} (hi-lo) * expm1(theta (hi-lo)) / (theta (hi-lo))
    let x = theta * (hi - lo);
    (theta * lo).exp() * (hi - lo) * (x.exp_m1() / x)
}

/// (rate^shape / Gamma(shape)) * integral of u^{shape-1+power} e^{(theta-rate)u} du
/// over [0, tau]. For shape+power < 1 the endpoint singularity is removed by
/// the substitution u = v^{1/(shape+power)} before handing the integrand to
/// the adaptive rule.
fn gamma_partial_expectation(shape: f64, rate: f64, theta: f64, tau: f64, power: i32) -> f64 {
    let a_eff = shape + power as f64;
    let norm = (shape * rate.ln() - quad::ln_gamma(shape)).exp();
    let s = theta - rate;
    let integral = if a_eff >= 1.0 {
        quad::integrate(
            &|u: f64| {
                if u <= 0.0 {
                    if a_eff == 1.0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    ((a_eff - 1.0) * u.ln() + s * u).exp()
                }
            },
            0.0,
            tau,
            QUAD_TOL,
        )
    } else {
        let p = 1.0 / a_eff;
        quad::integrate(
            &|v: f64| {
                if v <= 0.0 {
                    p
                } else {
                    p * (s * v.powf(p)).exp()
                }
            },
            0.0,
            tau.powf(a_eff),
            QUAD_TOL,
        )
    };
    norm * integral
}

fn ensure_pos(x: f64, what: &str) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{what} must be positive and finite, got {x}"
        )))
    }
}

impl fmt::Display for ServiceDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Deterministic { value } => write!(f, "det:{value}"),
            Exponential { rate } => write!(f, "exp:{rate}"),
            Gamma { shape, rate } => write!(f, "gamma:{shape},{rate}"),
            Uniform { lo, hi } => write!(f, "unif:{lo},{hi}"),
            HyperExponential { components } => {
                write!(f, "hyper:")?;
                for (i, (w, r)) in components.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{w},{r}")?;
                }
                Ok(())
            }
            Truncated { base, cutoff } => write!(f, "trunc({base},{cutoff})"),
        }
    }
}

impl FromStr for ServiceDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = SpecParser { input: s, pos: 0 };
        let dist = p.parse_spec()?;
        p.skip_ws();
        if p.pos != s.len() {
            return Err(p.error("trailing input after distribution spec"));
        }
        Ok(dist)
    }
}

/// Recursive-descent parser for spec strings. Errors carry the byte offset
/// of the offending token.
struct SpecParser<'a> {
    input: &'a str,
    pos: usize,
}

impl<'a> SpecParser<'a> {
    fn error(&self, msg: impl Into<String>) -> Error {
        Error::ParseSpec {
            input: self.input.to_string(),
            pos: self.pos,
            msg: msg.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.rest().starts_with(' ') {
            self.pos += 1;
        }
    }

    fn rest(&self) -> &'a str {
        &self.input[self.pos..]
    }

    fn eat(&mut self, token: char) -> Result<()> {
        self.skip_ws();
        if self.rest().starts_with(token) {
            self.pos += token.len_utf8();
            Ok(())
        } else {
            Err(self.error(format!("expected '{token}'")))
        }
    }

    fn ident(&mut self) -> &'a str {
        self.skip_ws();
        let start = self.pos;
        while self
            .rest()
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_alphabetic())
        {
            self.pos += 1;
        }
        &self.input[start..self.pos]
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        let bytes = self.input.as_bytes();
        let mut i = self.pos;
        if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
            i += 1;
        }
        let digits_start = i;
        while i < bytes.len()
            && (bytes[i].is_ascii_digit() || bytes[i] == b'.' || bytes[i] == b'e' || bytes[i] == b'E')
        {
            if (bytes[i] == b'e' || bytes[i] == b'E')
                && i + 1 < bytes.len()
                && (bytes[i + 1] == b'+' || bytes[i + 1] == b'-')
            {
                i += 1;
            }
            i += 1;
        }
        if i == digits_start {
            return Err(self.error("expected a number"));
        }
        let text = &self.input[start..i];
        match text.parse::<f64>() {
            Ok(v) => {
                self.pos = i;
                Ok(v)
            }
            Err(_) => Err(self.error(format!("malformed number {text:?}"))),
        }
    }

    /// `, <number>` if present; backtracks entirely when absent. This keeps
    /// variable-arity argument lists from swallowing a `trunc(...)` cutoff.
    fn comma_number(&mut self) -> Option<f64> {
        let checkpoint = self.pos;
        self.skip_ws();
        if self.rest().starts_with(',') {
            self.pos += 1;
            if let Ok(v) = self.number() {
                return Some(v);
            }
        }
        self.pos = checkpoint;
        None
    }

    fn parse_spec(&mut self) -> Result<ServiceDistribution> {
        self.skip_ws();
        let at_name = self.pos;
        let name = self.ident();
        if name.is_empty() {
            return Err(self.error("expected a distribution name"));
        }
        match name {
            "trunc" => {
                self.eat('(')?;
                let base = self.parse_spec()?;
                self.eat(',')?;
                let tau = self.number()?;
                self.eat(')')?;
                ServiceDistribution::truncated(base, tau).map_err(|e| self.lift(at_name, e))
            }
            "exp" | "det" => {
                self.eat(':')?;
                let v = self.number()?;
                let made = if name == "exp" {
                    ServiceDistribution::exponential(v)
                } else {
                    ServiceDistribution::deterministic(v)
                };
                made.map_err(|e| self.lift(at_name, e))
            }
            "gamma" | "unif" => {
                self.eat(':')?;
                let a = self.number()?;
                self.eat(',')?;
                let b = self.number()?;
                let made = if name == "gamma" {
                    ServiceDistribution::gamma(a, b)
                } else {
                    ServiceDistribution::uniform(a, b)
                };
                made.map_err(|e| self.lift(at_name, e))
            }
            "hyper" => {
                self.eat(':')?;
                let w = self.number()?;
                self.eat(',')?;
                let r = self.number()?;
                let mut comps = vec![(w, r)];
                // more pairs only while *two* further numbers follow, so a
                // single trailing number stays with the enclosing trunc
                loop {
                    let checkpoint = self.pos;
                    match self.comma_number() {
                        Some(w) => match self.comma_number() {
                            Some(r) => comps.push((w, r)),
                            None => {
                                self.pos = checkpoint;
                                break;
                            }
                        },
                        None => break,
                    }
                }
                ServiceDistribution::hyper_exponential(comps).map_err(|e| self.lift(at_name, e))
            }
            other => {
                self.pos = at_name;
                Err(self.error(format!(
                    "unknown distribution {other:?} (expected exp, det, gamma, unif, hyper or trunc)"
                )))
            }
        }
    }

    /// Re-anchor a constructor error at the spec position.
    fn lift(&self, at: usize, e: Error) -> Error {
        match e {
            Error::InvalidParameter(msg) => Error::ParseSpec {
                input: self.input.to_string(),
                pos: at,
                msg,
            },
            other => other,
        }
    }
}
