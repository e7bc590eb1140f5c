//! Exchangeable partition probability functions.
//!
//! Four families are supported: the Dirichlet (Ewens) EPPF, the two-parameter
//! Pitman–Yor EPPF and the two degenerate laws obtained at the extremes of
//! the tie probability (all singletons, or a single block). Degenerate
//! families report impossible configurations through a `-inf` log value so
//! partition sums can drop them uniformly.

use serde::{Deserialize, Serialize};

use crate::numerics::{self, ln_factorial, ln_rising_factorial, SeriesTolerance};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum EppfModel {
    Dirichlet { beta: f64 },
    PitmanYor { alpha: f64, beta: f64 },
    /// Law of an iid sequence from a diffuse distribution: never ties.
    IidDegenerate,
    /// Law of a sequence of identical copies: always one block.
    IdenticalDegenerate,
}

impl EppfModel {
    pub fn dirichlet(beta: f64) -> Result<Self> {
        let m = Self::Dirichlet { beta };
        m.validate()?;
        Ok(m)
    }

    pub fn pitman_yor(alpha: f64, beta: f64) -> Result<Self> {
        let m = Self::PitmanYor { alpha, beta };
        m.validate()?;
        Ok(m)
    }

    /// Dirichlet EPPF with the total mass that yields tie probability `rho`.
    pub fn dirichlet_from_tie(rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "tie probability must lie in (0, 1), got {rho}"
            )));
        }
        Self::dirichlet((1.0 - rho) / rho)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Dirichlet { beta } if !(beta > 0.0 && beta.is_finite()) => Err(
                Error::InvalidParameter(format!("Dirichlet EPPF needs beta > 0, got {beta}")),
            ),
            Self::PitmanYor { alpha, beta }
                if !((0.0..1.0).contains(&alpha) && beta > -alpha && beta.is_finite()) =>
            {
                Err(Error::InvalidParameter(format!(
                    "Pitman-Yor EPPF needs alpha in [0,1) and beta > -alpha, got ({alpha}, {beta})"
                )))
            }
            _ => Ok(()),
        }
    }

    /// `ln pi(n_1, .., n_k)`, `-inf` for configurations of probability zero.
    pub fn log_eppf(&self, sizes: &[usize]) -> Result<f64> {
        self.validate()?;
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(Error::InvalidParameter(format!(
                "block sizes must be nonempty and positive, got {sizes:?}"
            )));
        }
        Ok(self.log_eppf_unchecked(sizes))
    }

    pub(crate) fn log_eppf_unchecked(&self, sizes: &[usize]) -> f64 {
        let blocks = sizes.len();
        let n: usize = sizes.iter().sum();
        match *self {
            Self::Dirichlet { beta } => dirichlet_log_eppf(beta, sizes, n),
            Self::PitmanYor { alpha, beta } if alpha == 0.0 => dirichlet_log_eppf(beta, sizes, n),
            Self::PitmanYor { alpha, beta } => {
                ln_rising_factorial(beta + alpha, blocks - 1, alpha)
                    + sizes
                        .iter()
                        .map(|&s| ln_rising_factorial(1.0 - alpha, s - 1, 1.0))
                        .sum::<f64>()
                    - ln_rising_factorial(beta + 1.0, n - 1, 1.0)
            }
            Self::IidDegenerate => {
                if sizes.iter().all(|&s| s == 1) {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            Self::IdenticalDegenerate => {
                if blocks == 1 {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    pub fn eppf(&self, sizes: &[usize]) -> Result<f64> {
        self.log_eppf(sizes).map(f64::exp)
    }

    /// `P[x_1 = x_2] = pi(2)`.
    pub fn tie_probability(&self) -> f64 {
        match *self {
            Self::Dirichlet { beta } => 1.0 / (1.0 + beta),
            Self::PitmanYor { alpha, beta } => (1.0 - alpha) / (beta + 1.0),
            Self::IidDegenerate => 0.0,
            Self::IdenticalDegenerate => 1.0,
        }
    }

    /// Prediction rule given the multiplicities of the distinct values seen
    /// so far: the probability of joining each existing value, and of a
    /// fresh draw from the base measure.
    pub fn prediction_weights(&self, counts: &[usize]) -> (Vec<f64>, f64) {
        let mut existing = vec![0.0; counts.len()];
        let new = self.prediction_weights_into(counts, &mut existing);
        (existing, new)
    }

    /// Allocation-free variant of [`Self::prediction_weights`]; `existing` must
    /// have the same length as `counts`. Returns the new-value weight.
    pub fn prediction_weights_into(&self, counts: &[usize], existing: &mut [f64]) -> f64 {
        debug_assert_eq!(counts.len(), existing.len());
        if counts.is_empty() {
            return 1.0;
        }
        let n: usize = counts.iter().sum();
        let k = counts.len() as f64;
        let n = n as f64;
        match *self {
            Self::Dirichlet { beta } => {
                let denom = beta + n;
                for (e, &c) in existing.iter_mut().zip(counts) {
                    *e = c as f64 / denom;
                }
                beta / denom
            }
            Self::PitmanYor { alpha, beta } => {
                let denom = beta + n;
                for (e, &c) in existing.iter_mut().zip(counts) {
                    *e = (c as f64 - alpha) / denom;
                }
                (beta + k * alpha) / denom
            }
            Self::IidDegenerate => {
                existing.fill(0.0);
                1.0
            }
            Self::IdenticalDegenerate => {
                // only a single block has positive probability
                for (e, &c) in existing.iter_mut().zip(counts) {
                    *e = c as f64 / n;
                }
                0.0
            }
        }
    }
}

fn dirichlet_log_eppf(beta: f64, sizes: &[usize], n: usize) -> f64 {
    sizes.len() as f64 * beta.ln() - ln_rising_factorial(beta, n, 1.0)
        + sizes.iter().map(|&s| ln_factorial(s - 1)).sum::<f64>()
}

/// `|pi(n) - pi(n, 1) - sum_j pi(n + e_j)|`, the addition-rule residual.
pub fn check_addition_rule(model: &EppfModel, sizes: &[usize]) -> Result<f64> {
    let base = model.eppf(sizes)?;
    let mut with_new = sizes.to_vec();
    with_new.push(1);
    let mut total = model.eppf(&with_new)?;
    let mut grown = sizes.to_vec();
    for j in 0..sizes.len() {
        grown[j] += 1;
        total += model.eppf(&grown)?;
        grown[j] -= 1;
    }
    Ok((base - total).abs())
}

/// Tie probability of a normalised inverse-Gaussian process with total mass
/// `beta`: `(1 + beta^2 e^beta E1(beta) - beta) / 2`.
pub fn nig_tie_probability(beta: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::Domain(format!(
            "normalised inverse-Gaussian tie probability needs beta > 0, got {beta}"
        )));
    }
    let scaled = numerics::scaled_exp_integral_e1(beta, SeriesTolerance::default())?;
    Ok(0.5 * (1.0 + beta * beta * scaled - beta))
}
