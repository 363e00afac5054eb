//! Adaptive Gauss-Legendre quadrature and the few special functions the
//! distribution layer needs. Kept internal; the public surface exposes only
//! finished expectations.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1],
/// computed by Newton iteration on the Legendre recurrence.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut rule = Vec::with_capacity(n);
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre P_n(x) and P_n'(x) via the three-term recurrence
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = -p1 / dp;
            x += dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.push((-x, w));
        if n - 1 - i != i {
            rule.push((x, w));
        }
    }
    rule
}

fn rule32() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(32))
}

fn rule64() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(64))
}

fn panel(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, rule: &[(f64, f64)]) -> f64 {
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    let mut acc = 0.0;
    for &(x, w) in rule {
        acc += w * f(mid + half * x);
    }
    acc * half
}

/// Integrate `f` over [lo, hi] to absolute tolerance `abs_tol`, splitting
/// panels where the embedded 32- vs 64-point estimates disagree.
pub fn integrate(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, abs_tol: f64) -> f64 {
    if lo >= hi {
        return 0.0;
    }
    let width = hi - lo;
    let mut total = 0.0;
    let mut stack = vec![(lo, hi)];
    let mut splits = 0usize;
    while let Some((a, b)) = stack.pop() {
        let coarse = panel(f, a, b, rule32());
        let fine = panel(f, a, b, rule64());
        let local_tol = abs_tol * ((b - a) / width) + 1e-16 * fine.abs();
        if (fine - coarse).abs() <= local_tol || splits > 10_000 {
            total += fine;
        } else {
            splits += 1;
            let m = 0.5 * (a + b);
            stack.push((a, m));
            stack.push((m, b));
        }
    }
    total
}

/// log Gamma(x) for x > 0 (Lanczos, g = 7, 9 coefficients).
pub fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    debug_assert!(x > 0.0);
    let z = x - 1.0;
    let mut series = COEF[0];
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        series += c / (z + i as f64);
    }
    let g = 7.0;
    let t = z + g + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + series.ln()
}
