//! Special functions behind the Poisson and binomial CDFs.

use std::f64::consts::PI;

const EPS: f64 = 1e-12;
const MAX_ITER: usize = 10_000;
const TINY: f64 = 1e-300;

// Lanczos approximation, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural logarithm of Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection keeps the series in its accurate range.
        (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x)
    } else {
        let x = x - 1.0;
        let mut acc = LANCZOS[0];
        let t = x + LANCZOS_G + 0.5;
        for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
            acc += c / (x + i as f64);
        }
        0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
    }
}

/// ln(n!).
pub fn ln_factorial(n: u64) -> f64 {
    if n < 2 {
        0.0
    } else {
        ln_gamma(n as f64 + 1.0)
    }
}

/// Regularized lower incomplete gamma P(s, x), s > 0, x ≥ 0.
pub fn gamma_p(s: f64, x: f64) -> f64 {
    gamma_pq(s, x).0
}

/// Regularized upper incomplete gamma Q(s, x) = 1 − P(s, x).
pub fn gamma_q(s: f64, x: f64) -> f64 {
    gamma_pq(s, x).1
}

/// Both P(s, x) and Q(s, x). Series for x < s + 1, Lentz continued
/// fraction otherwise; whichever is computed directly, the other is its
/// complement.
pub fn gamma_pq(s: f64, x: f64) -> (f64, f64) {
    assert!(s > 0.0, "gamma_pq: shape must be positive, got {s}");
    assert!(x >= 0.0, "gamma_pq: argument must be non-negative, got {x}");
    if x == 0.0 {
        return (0.0, 1.0);
    }
    let log_prefactor = s * x.ln() - x - ln_gamma(s);
    if x < s + 1.0 {
        let mut term = 1.0 / s;
        let mut sum = term;
        let mut a = s;
        for _ in 0..MAX_ITER {
            a += 1.0;
            term *= x / a;
            sum += term;
            if term.abs() < sum.abs() * EPS {
                break;
            }
        }
        let p = (sum.ln() + log_prefactor).exp().min(1.0);
        (p, 1.0 - p)
    } else {
        let mut b = x + 1.0 - s;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..MAX_ITER {
            let an = -(i as f64) * (i as f64 - s);
            b += 2.0;
            d = an * d + b;
            if d.abs() < TINY {
                d = TINY;
            }
            c = b + an / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < EPS {
                break;
            }
        }
        let q = (h.ln() + log_prefactor).exp().min(1.0);
        (1.0 - q, q)
    }
}

/// Poisson probability mass P(X = k) for mean `mean` ≥ 0.
pub fn poisson_pmf(k: u64, mean: f64) -> f64 {
    if mean == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    (k as f64 * mean.ln() - mean - ln_factorial(k)).exp()
}

/// Poisson CDF P(X ≤ k) via the identity P(X ≤ k) = Q(k + 1, mean).
pub fn poisson_cdf(k: u64, mean: f64) -> f64 {
    if mean == 0.0 {
        return 1.0;
    }
    gamma_q(k as f64 + 1.0, mean)
}

/// Poisson CDF by direct summation of the mass function.
pub fn poisson_cdf_direct(k: u64, mean: f64) -> f64 {
    if mean == 0.0 {
        return 1.0;
    }
    // Recurrence from P(0) = e^{-mean}.
    let mut term = (-mean).exp();
    let mut sum = term;
    for j in 1..=k {
        term *= mean / j as f64;
        sum += term;
    }
    sum.min(1.0)
}

/// Binomial mass P(X = m) for `trials` trials with success probability `p`.
pub fn binomial_pmf(m: u64, trials: u64, p: f64) -> f64 {
    if m > trials {
        return 0.0;
    }
    if p <= 0.0 {
        return if m == 0 { 1.0 } else { 0.0 };
    }
    if p >= 1.0 {
        return if m == trials { 1.0 } else { 0.0 };
    }
    let ln_choose = ln_factorial(trials) - ln_factorial(m) - ln_factorial(trials - m);
    (ln_choose + m as f64 * p.ln() + (trials - m) as f64 * (-p).ln_1p()).exp()
}

/// Binomial CDF P(X ≤ m).
pub fn binomial_cdf(m: u64, trials: u64, p: f64) -> f64 {
    if m >= trials {
        return 1.0;
    }
    (0..=m)
        .map(|j| binomial_pmf(j, trials, p))
        .sum::<f64>()
        .min(1.0)
}
