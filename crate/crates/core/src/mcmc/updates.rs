//! Full-conditional updates making up one sweep.

use rand::Rng;

use super::data::Dataset;
use super::kernel::{MixtureKernel, SuffStats};
use super::rho::sample_rho;
use super::state::GibbsState;
use super::FitPrior;
use crate::eppf::EppfModel;
use crate::numerics::{open01, sample_truncated_be1};
use crate::sticks::{extend_weights_until, pick_slot, sb_transform, LengthPrefix, LengthProcessSpec};
use crate::{Error, Result};

const MAX_SHRINK: usize = 200;

/// Redraws `u_k ~ U(0, w_{d_k})`.
pub fn update_slices<R: Rng + ?Sized>(state: &mut GibbsState, rng: &mut R) -> Result<()> {
    for (k, (u, &j)) in state.u.iter_mut().zip(&state.d).enumerate() {
        let w = state.weights[j];
        if !(w > 0.0) {
            return Err(Error::Invariant(format!(
                "observation {k} sits on component {j} of zero weight"
            )));
        }
        *u = w * open01(rng);
    }
    Ok(())
}

/// Drops sticks (and atoms) beyond `keep`, never below the last occupied one.
pub(crate) fn trim(state: &mut GibbsState, keep: usize) {
    let floor = state.d.iter().max().map_or(0, |&m| m + 1).max(keep);
    while state.lengths.len() > floor {
        state.lengths.pop();
        state.atoms.pop();
    }
    state.weights.truncate(state.lengths.len());
}

/// Instantiates sticks from their conditional prior, with prior atoms, until
/// there are at least `min_sticks` and the leftover stick is no larger than
/// the smallest slice.
pub(crate) fn extend<R: Rng + ?Sized>(
    state: &mut GibbsState,
    spec: &LengthProcessSpec,
    kernel: &MixtureKernel,
    min_sticks: usize,
    rng: &mut R,
) -> Result<()> {
    while state.lengths.len() < min_sticks {
        state.lengths.draw_next(spec, rng);
    }
    let min_u = state.u.iter().copied().fold(1.0, f64::min);
    let threshold = (1.0 - min_u).min(1.0 - f64::EPSILON);
    state.weights = extend_weights_until(&mut state.lengths, spec, threshold, rng)?;
    while state.atoms.len() < state.lengths.len() {
        state.atoms.push(kernel.sample_prior(rng)?);
    }
    Ok(())
}

/// Redraws each `d_k` with probability proportional to `G(y_k | xi_j)` over
/// the components whose weight exceeds `u_k`.
pub fn update_allocations<R: Rng + ?Sized>(state: &mut GibbsState, data: &Dataset, rng: &mut R) -> Result<()> {
    state.check_data(data)?;
    let mut logp = Vec::with_capacity(state.phi());
    let mut cand = Vec::with_capacity(state.phi());
    for k in 0..data.len() {
        let y = data.row(k);
        let u = state.u[k];
        logp.clear();
        cand.clear();
        for (j, &w) in state.weights.iter().enumerate() {
            if u < w {
                cand.push(j);
                logp.push(state.atoms[j].log_density(y));
            }
        }
        if cand.is_empty() {
            return Err(Error::Invariant(format!("no component admits observation {k}")));
        }
        let max = logp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return Err(Error::Invariant(format!("observation {k} has zero likelihood everywhere")));
        }
        for l in logp.iter_mut() {
            *l = (*l - max).exp();
        }
        let pick = pick_slot(&logp, 0.0, rng).expect("positive total weight");
        state.d[k] = cand[pick];
    }
    Ok(())
}

/// Redraws every instantiated atom from its conjugate posterior.
pub fn update_atoms<R: Rng + ?Sized>(
    state: &mut GibbsState,
    data: &Dataset,
    kernel: &MixtureKernel,
    rng: &mut R,
) -> Result<()> {
    state.check_data(data)?;
    let mut stats = vec![SuffStats::new(kernel.dim()); state.phi()];
    for (y, &j) in data.rows().zip(&state.d) {
        stats[j].push(y);
    }
    for (atom, s) in state.atoms.iter_mut().zip(&stats) {
        *atom = kernel.sample_posterior(s, rng)?;
    }
    Ok(())
}

/// Bounds `(a_j, b_j)` of the slice constraints on `v_j`.
pub(crate) fn length_bounds(values: &[f64], slice_max: &[f64], j: usize, head: f64) -> (f64, f64) {
    let a = slice_max[j] / head;
    let mut excl = head;
    let mut worst: f64 = 0.0;
    for c in j + 1..values.len() {
        if c - 1 != j {
            excl *= 1.0 - values[c - 1];
        }
        if slice_max[c] > 0.0 {
            worst = worst.max(slice_max[c] / (values[c] * excl));
        }
    }
    (a, 1.0 - worst.min(1.0))
}

/// `(1 - a)^theta - (1 - b)^theta`, the `Be(1, theta)` mass of `(a, b)`.
fn be1_mass(theta: f64, a: f64, b: f64) -> f64 {
    ((theta * (-a).ln_1p()).exp() - (theta * (-b).ln_1p()).exp()).max(0.0)
}

/// Redraws each `v_j` given the others: an existing distinct value inside
/// `(a_j, b_j)` with probability proportional to its prediction weight, or a
/// fresh `Be(1, theta)` value truncated to `(a_j, b_j)`. Returns how many
/// positions kept their value because rounding left an empty interval.
pub fn update_lengths<R: Rng + ?Sized>(
    state: &mut GibbsState,
    spec: &LengthProcessSpec,
    rng: &mut R,
) -> Result<u64> {
    let theta = be1_theta(spec)?;
    let eppf = spec.eppf();
    let slice_max = state.slice_maxima();
    let mut head = 1.0;
    let mut stuck = 0;
    for j in 0..state.phi() {
        let (a, b) = length_bounds(state.lengths.values(), &slice_max, j, head);
        if update_length_at(&mut state.lengths, j, a, b, &eppf, theta, rng) == LengthMove::Stuck {
            stuck += 1;
        }
        head *= 1.0 - state.lengths.values()[j];
    }
    state.weights = sb_transform(state.lengths.values());
    Ok(stuck)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LengthMove {
    Existing,
    New,
    Stuck,
}

/// Weights of joining each distinct value of the other lengths, and of a
/// fresh truncated draw, for a length constrained to `(a, b)`.
pub(crate) fn length_choice_weights(
    eppf: &EppfModel,
    theta: f64,
    counts: &[usize],
    distinct: &[f64],
    a: f64,
    b: f64,
) -> (Vec<f64>, f64) {
    let mut existing = vec![0.0; counts.len()];
    let new = eppf.prediction_weights_into(counts, &mut existing);
    for (e, &x) in existing.iter_mut().zip(distinct) {
        if !(a < x && x < b) {
            *e = 0.0;
        }
    }
    let new = if a < b { new * be1_mass(theta, a, b) } else { 0.0 };
    (existing, new)
}

pub(crate) fn update_length_at<R: Rng + ?Sized>(
    lengths: &mut LengthPrefix,
    j: usize,
    a: f64,
    b: f64,
    eppf: &EppfModel,
    theta: f64,
    rng: &mut R,
) -> LengthMove {
    let old = lengths.values()[j];
    let old_slot = lengths.atom_index()[j];
    let shared = lengths.counts()[old_slot] > 1;
    lengths.detach(j);
    let (existing, new) = length_choice_weights(eppf, theta, lengths.counts(), lengths.distinct(), a, b);
    let keep = |lengths: &mut LengthPrefix| {
        if shared {
            lengths.attach_existing(j, old_slot);
        } else {
            lengths.attach_new(j, old);
        }
    };
    if !(new + existing.iter().sum::<f64>() > 0.0) {
        keep(lengths);
        return LengthMove::Stuck;
    }
    match pick_slot(&existing, new, rng) {
        Some(slot) => {
            lengths.attach_existing(j, slot);
            LengthMove::Existing
        }
        None => {
            let v = sample_truncated_be1(theta, a, b, rng);
            // inverse-CDF rounding can land on a closed end point
            if v > a && v < b {
                lengths.attach_new(j, v);
                LengthMove::New
            } else {
                keep(lengths);
                LengthMove::Stuck
            }
        }
    }
}

/// Moves every tied group of lengths jointly: each distinct value shared by
/// two or more sticks is redrawn from `Be(1, theta)` restricted to the
/// values that keep all slice constraints, by shrinkage on the CDF scale.
pub fn update_distinct_values<R: Rng + ?Sized>(
    state: &mut GibbsState,
    spec: &LengthProcessSpec,
    rng: &mut R,
) -> Result<()> {
    let theta = be1_theta(spec)?;
    let slice_max = state.slice_maxima();
    let last = slice_max.iter().rposition(|&m| m > 0.0).map_or(0, |c| c + 1);
    let cdf = |x: f64| -(theta * (-x).ln_1p()).exp_m1();
    let quantile = |z: f64| -((-z).ln_1p() / theta).exp_m1();
    for slot in 0..state.lengths.num_distinct() {
        if state.lengths.counts()[slot] < 2 {
            continue;
        }
        let z0 = cdf(state.lengths.distinct()[slot]);
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..MAX_SHRINK {
            let z = lo + (hi - lo) * open01(rng);
            let x = quantile(z);
            if x > 0.0 && x < 1.0 && fits(&state.lengths, slot, x, &slice_max[..last]) {
                state.lengths.set_distinct(slot, x);
                break;
            }
            if z < z0 {
                lo = z;
            } else {
                hi = z;
            }
        }
    }
    state.weights = sb_transform(state.lengths.values());
    Ok(())
}

/// Whether moving the lengths in `slot` to `x` keeps every component's
/// weight above its largest slice.
fn fits(lengths: &LengthPrefix, slot: usize, x: f64, slice_max: &[f64]) -> bool {
    let mut rem = 1.0;
    for (c, &m) in slice_max.iter().enumerate() {
        let v = if lengths.atom_index()[c] == slot {
            x
        } else {
            lengths.values()[c]
        };
        if m > 0.0 && !(m < v * rem) {
            return false;
        }
        rem *= 1.0 - v;
    }
    true
}

/// Redraws the tie probability from its full conditional given the
/// instantiated lengths.
pub fn update_rho<R: Rng + ?Sized>(state: &mut GibbsState, lo: f64, hi: f64, rng: &mut R) -> Result<()> {
    let current = state
        .rho
        .ok_or_else(|| Error::InvalidParameter("the tie probability is fixed in this state".into()))?;
    state.rho = Some(sample_rho(
        current,
        state.phi(),
        state.lengths.num_distinct(),
        lo,
        hi,
        rng,
    ));
    Ok(())
}

pub(crate) fn be1_theta(spec: &LengthProcessSpec) -> Result<f64> {
    match spec.base() {
        (a, theta) if a == 1.0 => Ok(theta),
        (a, _) => Err(Error::InvalidParameter(format!(
            "the sampler needs a Be(1, theta) base, got first shape {a}"
        ))),
    }
}

/// Settings a sweep needs besides the state and the data.
#[derive(Debug, Clone, Copy)]
pub struct SweepContext<'a> {
    pub prior: &'a FitPrior,
    pub kernel: &'a MixtureKernel,
    pub min_truncation: usize,
}

/// Counters accumulated across sweeps.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SweepStats {
    pub stuck_lengths: u64,
}

/// One full sweep: slices, truncation, lengths, tied groups, truncation
/// again, allocations, atoms and, when random, the tie probability. The
/// stored log score is refreshed at the end.
pub fn gibbs_sweep<R: Rng + ?Sized>(
    state: &mut GibbsState,
    data: &Dataset,
    ctx: &SweepContext,
    stats: &mut SweepStats,
    rng: &mut R,
) -> Result<()> {
    state.check_data(data)?;
    update_slices(state, rng)?;
    let spec = ctx.prior.spec(state.rho)?;
    trim(state, ctx.min_truncation);
    extend(state, &spec, ctx.kernel, ctx.min_truncation, rng)?;
    stats.stuck_lengths += update_lengths(state, &spec, rng)?;
    update_distinct_values(state, &spec, rng)?;
    extend(state, &spec, ctx.kernel, ctx.min_truncation, rng)?;
    update_allocations(state, data, rng)?;
    update_atoms(state, data, ctx.kernel, rng)?;
    if let FitPrior::RandomRho { lo, hi, .. } = *ctx.prior {
        update_rho(state, lo, hi, rng)?;
    }
    let spec = ctx.prior.spec(state.rho)?;
    state.log_score = super::complete_data_log_score(state, data, ctx.kernel, &spec)?;
    if cfg!(debug_assertions) {
        state.check_invariants()?;
    }
    Ok(())
}
