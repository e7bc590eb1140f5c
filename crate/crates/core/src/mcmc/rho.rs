//! Update of a random tie probability under the Dirichlet-driven prior.

use rand::Rng;

use crate::numerics::open01;

const STEP_WIDTH: f64 = 2.0;
const MAX_STEPS: usize = 20;

/// Unnormalised log density of `rho` given `m` lengths with `k` distinct
/// values, under a uniform prior on `(lo, hi)`:
/// `(1-rho)^(k-1) rho^(m-k) / prod_{l=0}^{m-2} (1 + l rho)`.
pub fn rho_log_density(rho: f64, m: usize, k: usize, lo: f64, hi: f64) -> f64 {
    if !(rho > lo && rho < hi) {
        return f64::NEG_INFINITY;
    }
    let mut ln = (k as f64 - 1.0) * (-rho).ln_1p() + (m - k) as f64 * rho.ln();
    for l in 0..m.saturating_sub(1) {
        ln -= (l as f64 * rho).ln_1p();
    }
    ln
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Same density on the logit scale, Jacobian included.
fn logit_log_density(x: f64, m: usize, k: usize, lo: f64, hi: f64) -> f64 {
    let rho = logistic(x);
    if !(rho > 0.0 && rho < 1.0) {
        return f64::NEG_INFINITY;
    }
    rho_log_density(rho, m, k, lo, hi) + rho.ln() + (-rho).ln_1p()
}

/// One slice-sampling transition (stepping out, then shrinkage) for `rho`
/// on the logit scale. `current` must lie in `(lo, hi)`.
pub fn sample_rho<R: Rng + ?Sized>(current: f64, m: usize, k: usize, lo: f64, hi: f64, rng: &mut R) -> f64 {
    let f = |x: f64| logit_log_density(x, m, k, lo, hi);
    let x0 = (current / (1.0 - current)).ln();
    let level = f(x0) + open01(rng).ln();
    let mut left = x0 - STEP_WIDTH * open01(rng);
    let mut right = left + STEP_WIDTH;
    let mut steps_left = (MAX_STEPS as f64 * open01(rng)) as usize;
    let mut steps_right = MAX_STEPS - 1 - steps_left;
    while steps_left > 0 && f(left) > level {
        left -= STEP_WIDTH;
        steps_left -= 1;
    }
    while steps_right > 0 && f(right) > level {
        right += STEP_WIDTH;
        steps_right -= 1;
    }
    loop {
        let x = left + (right - left) * open01(rng);
        if f(x) > level {
            let rho = logistic(x);
            if rho > lo && rho < hi {
                return rho;
            }
        }
        if x < x0 {
            left = x;
        } else {
            right = x;
        }
        if right - left < 1e-14 {
            return current;
        }
    }
}
