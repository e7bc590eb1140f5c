//! Probability that consecutive weights are in decreasing order.

use rand::Rng;

use crate::eppf::EppfModel;
use crate::numerics::{beta_cdf, gauss_2f1_11, sample_beta, SeriesTolerance};
use crate::parallel::{run_replicates, Exec, McEstimate, Moments};
use crate::sticks::{sample_lengths_prefix, sb_transform, LengthPrefix, LengthProcessSpec};
use crate::{Error, Result};

/// `c(v) = min(1, v / (1 - v))`: `w_j >= w_{j+1}` exactly when
/// `v_{j+1} <= c(v_j)`.
pub fn ordering_threshold(v: f64) -> f64 {
    if v >= 0.5 {
        1.0
    } else {
        v / (1.0 - v)
    }
}

/// `E[(1 - c(v))^theta]` for `v ~ Be(1, theta)`, through `2F1(1,1;theta+2;1/2)`.
fn be1_descent_complement(theta: f64) -> Result<f64> {
    let f = gauss_2f1_11(theta + 2.0, 0.5, SeriesTolerance::default())?;
    Ok(f * theta / (2.0 * (theta + 1.0)))
}

/// `P[w_j >= w_{j+1}]` for Dirichlet-driven weights with parameters
/// `(beta, theta)`; the same for every `j`.
pub fn ordering_probability_dsb(beta: f64, theta: f64) -> Result<f64> {
    if !(beta > 0.0 && theta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need beta > 0 and theta > 0, got ({beta}, {theta})"
        )));
    }
    Ok(1.0 - beta / (beta + 1.0) * be1_descent_complement(theta)?)
}

/// `P[w_j >= w_{j+1}] = rho + (1 - rho) E[F(c(v))]` for lengths driven by
/// `model` with a `Be(base_a, base_b)` base measure.
///
/// `E[F(c(v))]` uses the hypergeometric closed form when `base_a == 1` and a
/// Monte Carlo average of `mc_draws` base draws otherwise.
pub fn ordering_probability_general<R: Rng + ?Sized>(
    model: &EppfModel,
    base_a: f64,
    base_b: f64,
    mc_draws: usize,
    rng: &mut R,
) -> Result<f64> {
    model.validate()?;
    if !(base_a > 0.0 && base_b > 0.0) {
        return Err(Error::InvalidParameter("Beta base needs positive shapes".into()));
    }
    let rho = model.tie_probability();
    if rho == 1.0 {
        return Ok(1.0);
    }
    let expected_cdf = if base_a == 1.0 {
        1.0 - be1_descent_complement(base_b)?
    } else {
        if mc_draws == 0 {
            return Err(Error::InvalidParameter("mc_draws must be positive".into()));
        }
        let total: f64 = (0..mc_draws)
            .map(|_| {
                let v = sample_beta(base_a, base_b, rng);
                beta_cdf(base_a, base_b, ordering_threshold(v))
            })
            .sum();
        total / mc_draws as f64
    };
    Ok(rho + (1.0 - rho) * expected_cdf)
}

/// `P[w_j >= w_{j+1} | w_1, .., w_j]` where `j` is the prefix length.
pub fn conditional_ordering_probability(
    prefix: &LengthPrefix,
    model: &EppfModel,
    base_a: f64,
    base_b: f64,
) -> Result<f64> {
    let last = *prefix
        .values()
        .last()
        .ok_or_else(|| Error::InvalidParameter("prefix must be nonempty".into()))?;
    let c = ordering_threshold(last);
    let (existing, new) = model.prediction_weights(prefix.counts());
    let tied: f64 = existing
        .iter()
        .zip(prefix.distinct())
        .filter(|(_, &v)| v <= c)
        .map(|(w, _)| w)
        .sum();
    Ok(tied + new * beta_cdf(base_a, base_b, c))
}

/// Monte Carlo estimate of `P[w_j >= w_{j+1}]` from simulated weight
/// prefixes (`j` is 1-based).
pub fn mc_ordering_probability(
    spec: &LengthProcessSpec,
    j: usize,
    replicates: usize,
    seed: u64,
    exec: Exec,
) -> Result<McEstimate> {
    spec.validate()?;
    if j == 0 || replicates == 0 {
        return Err(Error::InvalidParameter("j and replicates must be positive".into()));
    }
    let moments = run_replicates(
        seed,
        replicates,
        exec,
        |rng, count| {
            let mut m = Moments::default();
            for _ in 0..count {
                let w = sb_transform(sample_lengths_prefix(spec, j + 1, rng).values());
                m.push(if w[j - 1] >= w[j] { 1.0 } else { 0.0 });
            }
            m
        },
        Moments::merge,
    )
    .expect("replicates > 0");
    Ok(moments.estimate())
}
