//! Special functions and the random-variate constructions shared by the
//! rest of the crate.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Open01};

use crate::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Stopping rule for series and continued-fraction evaluations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesTolerance {
    pub abs_tol: f64,
    pub max_terms: usize,
}

impl Default for SeriesTolerance {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            max_terms: 10_000,
        }
    }
}

impl SeriesTolerance {
    pub fn new(abs_tol: f64, max_terms: usize) -> Result<Self> {
        if !(abs_tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "abs_tol must be positive, got {abs_tol}"
            )));
        }
        if max_terms == 0 {
            return Err(Error::InvalidParameter("max_terms must be >= 1".into()));
        }
        Ok(Self { abs_tol, max_terms })
    }
}

/// Generalised rising factorial `x (x + step) ... (x + (m-1) step)`.
pub fn rising_factorial(x: f64, m: usize, step: f64) -> f64 {
    (0..m).map(|i| x + i as f64 * step).product()
}

/// Logarithm of [`rising_factorial`]; every factor must be positive.
pub fn ln_rising_factorial(x: f64, m: usize, step: f64) -> f64 {
    debug_assert!(m == 0 || (x > 0.0 && x + (m - 1) as f64 * step > 0.0));
    (0..m).map(|i| (x + i as f64 * step).ln()).sum()
}

pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

pub fn ln_factorial(n: usize) -> f64 {
    statrs::function::factorial::ln_factorial(n as u64)
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// `ln E[v^p (1-v)^q]` for `v ~ Be(a, b)`, i.e. `ln B(a+p, b+q) - ln B(a, b)`.
pub fn ln_beta_moment(a: f64, b: f64, p: f64, q: f64) -> f64 {
    ln_beta(a + p, b + q) - ln_beta(a, b)
}

/// Distribution function of `Be(a, b)`.
pub fn beta_cdf(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else if a == 1.0 {
        // closed form, and the path every Be(1, theta) caller takes
        -((-x).ln_1p() * b).exp_m1()
    } else {
        statrs::function::beta::beta_reg(a, b, x)
    }
}

pub fn ln_beta_pdf(a: f64, b: f64, x: f64) -> f64 {
    if !(0.0..=1.0).contains(&x) {
        return f64::NEG_INFINITY;
    }
    (a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() - ln_beta(a, b)
}

/// `2F1(1, 1; c; z)` by direct summation of its power series.
///
/// Terms satisfy `t_{n+1} = t_n (n + 1) z / (c + n)`, so for `0 <= z < 1`
/// the partial sums increase monotonically.
pub fn gauss_2f1_11(c: f64, z: f64, tol: SeriesTolerance) -> Result<f64> {
    if !(c > 0.0) {
        return Err(Error::Domain(format!("2F1(1,1;c;z) needs c > 0, got {c}")));
    }
    if !(z.abs() < 1.0) {
        return Err(Error::Domain(format!(
            "2F1(1,1;c;z) series needs |z| < 1, got {z}"
        )));
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 0..tol.max_terms {
        let nf = n as f64;
        term *= (nf + 1.0) * z / (c + nf);
        sum += term;
        if term.abs() < tol.abs_tol {
            return Ok(sum);
        }
    }
    Err(Error::NoConvergence {
        max_terms: tol.max_terms,
        last_term: term,
    })
}

/// Exponential integral `E1(x) = \int_x^\infty e^{-t}/t dt` for `x > 0`.
pub fn exp_integral_e1(x: f64, tol: SeriesTolerance) -> Result<f64> {
    if x >= 1.0 {
        Ok(scaled_e1_continued_fraction(x, tol)? * (-x).exp())
    } else {
        e1_series(x, tol)
    }
}

/// `e^x E1(x)`, which stays finite where `E1` underflows.
pub fn scaled_exp_integral_e1(x: f64, tol: SeriesTolerance) -> Result<f64> {
    if x >= 1.0 {
        scaled_e1_continued_fraction(x, tol)
    } else {
        Ok(e1_series(x, tol)? * x.exp())
    }
}

fn e1_series(x: f64, tol: SeriesTolerance) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("E1(x) needs x > 0, got {x}")));
    }
    // E1(x) = -gamma - ln x - sum_{k>=1} (-x)^k / (k k!)
    let mut sum = 0.0;
    let mut fact_term = 1.0; // (-x)^k / k!
    for k in 1..=tol.max_terms {
        fact_term *= -x / k as f64;
        let term = fact_term / k as f64;
        sum += term;
        if term.abs() < tol.abs_tol * sum.abs().max(1.0) {
            return Ok(-EULER_GAMMA - x.ln() - sum);
        }
    }
    Err(Error::NoConvergence {
        max_terms: tol.max_terms,
        last_term: fact_term,
    })
}

// Modified Lentz evaluation of the continued fraction
// e^x E1(x) = 1/(x+1- 1/(x+3- 4/(x+5- ...))).
fn scaled_e1_continued_fraction(x: f64, tol: SeriesTolerance) -> Result<f64> {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delta = f64::INFINITY;
    for i in 1..=tol.max_terms {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        delta = c * d;
        h *= delta;
        if (delta - 1.0).abs() < tol.abs_tol {
            return Ok(h);
        }
    }
    Err(Error::NoConvergence {
        max_terms: tol.max_terms,
        last_term: delta - 1.0,
    })
}

/// A draw from `Ga(shape, 1)` (Marsaglia–Tsang squeeze, as provided by
/// `rand_distr`).
pub fn sample_gamma<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    Gamma::new(shape, 1.0)
        .expect("gamma shape validated by caller")
        .sample(rng)
}

/// A draw from `Be(a, b)` as `X / (X + Y)` with independent gamma variates.
pub fn sample_beta<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    loop {
        let x = sample_gamma(a, rng);
        let y = sample_gamma(b, rng);
        let s = x + y;
        if s > 0.0 {
            let v = x / s;
            // lengths live on the open interval
            if v > 0.0 && v < 1.0 {
                return v;
            }
        }
    }
}

/// Inverse-CDF draw from `Be(1, theta)` restricted to `(lo, hi)`.
pub fn sample_truncated_be1<R: Rng + ?Sized>(theta: f64, lo: f64, hi: f64, rng: &mut R) -> f64 {
    let upper = (1.0 - lo).powf(theta);
    let lower = (1.0 - hi).powf(theta);
    let u: f64 = Open01.sample(rng);
    let v = 1.0 - (upper - u * (upper - lower)).powf(1.0 / theta);
    v.clamp(lo, hi)
}

pub fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Open01.sample(rng)
}

/// `ln(sum exp(x_i))`, ignoring `-inf` entries.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}
