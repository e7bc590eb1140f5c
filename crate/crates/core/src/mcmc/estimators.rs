//! Posterior summaries computed from retained sweeps.

use std::collections::BTreeMap;

use super::data::Dataset;
use super::kernel::MixtureKernel;
use super::state::GibbsState;
use super::updates::be1_theta;
use crate::analytics::KnSummary;
use crate::numerics::ln_beta_pdf;
use crate::parallel::{map_ordered, Exec};
use crate::partitions::partition_of;
use crate::sticks::LengthProcessSpec;
use crate::{Error, Result};

const EAP_CHUNK: usize = 64;

/// Complete-data log score of a state: kernel log-likelihood with the slice
/// indicators, plus the prior log density of the atoms and lengths up to the
/// last occupied component.
pub fn complete_data_log_score(
    state: &GibbsState,
    data: &Dataset,
    kernel: &MixtureKernel,
    spec: &LengthProcessSpec,
) -> Result<f64> {
    state.check_data(data)?;
    let theta = be1_theta(spec)?;
    let mut score = 0.0;
    for (k, (&u, &j)) in state.u.iter().zip(&state.d).enumerate() {
        if !(u < state.weights[j]) {
            return Ok(f64::NEG_INFINITY);
        }
        score += state.atoms[j].log_density(data.row(k));
    }
    let used = state.d.iter().max().map_or(0, |&m| m + 1);
    if used == 0 {
        return Ok(score);
    }
    score += state.atoms[..used].iter().map(|a| kernel.log_prior(a)).sum::<f64>();
    let ties = partition_of(&state.lengths.atom_index()[..used])?;
    score += spec.eppf().log_eppf(&ties.block_sizes())?;
    for block in ties.blocks() {
        score += ln_beta_pdf(1.0, theta, state.lengths.values()[block[0]]);
    }
    Ok(score)
}

/// Posterior mean density on `grid`, averaging the slice-weighted mixture of
/// every sample.
pub fn eap_density(samples: &[GibbsState], grid: &Dataset, exec: Exec) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("no samples".into()));
    }
    if samples.iter().any(|s| s.u.is_empty()) {
        return Err(Error::InvalidParameter("density estimates need data".into()));
    }
    let chunks = samples.len().div_ceil(EAP_CHUNK);
    let partials = map_ordered(chunks, exec, |c| {
        let mut acc = vec![0.0; grid.len()];
        for s in &samples[c * EAP_CHUNK..((c + 1) * EAP_CHUNK).min(samples.len())] {
            let pis = s.slice_weights();
            for (a, y) in acc.iter_mut().zip(grid.rows()) {
                *a += s.slice_density(&pis, y);
            }
        }
        acc
    });
    let mut total = vec![0.0; grid.len()];
    for p in partials {
        for (t, x) in total.iter_mut().zip(p) {
            *t += x;
        }
    }
    let m = samples.len() as f64;
    total.iter_mut().for_each(|t| *t /= m);
    Ok(total)
}

/// Slice-weighted mixture density of one sample on `grid`.
pub fn sample_density(sample: &GibbsState, grid: &Dataset) -> Vec<f64> {
    let pis = sample.slice_weights();
    grid.rows().map(|y| sample.slice_density(&pis, y)).collect()
}

/// Index of the sample with the largest stored log score, the earliest one
/// on ties. `None` for an empty list.
pub fn map_select(samples: &[GibbsState]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in samples.iter().enumerate() {
        let x = s.log_score;
        if x.is_nan() {
            continue;
        }
        if best.is_none_or(|(_, b)| x > b) {
            best = Some((i, x));
        }
    }
    best.map(|(i, _)| i).or(if samples.is_empty() { None } else { Some(0) })
}

/// Cluster labels: observation `k` goes to `argmax_j pi_j G(y_k | xi_j)`
/// (smallest `j` on ties); labels are renumbered from 0 in order of first
/// appearance.
pub fn cluster_assign(sample: &GibbsState, data: &Dataset) -> Result<Vec<usize>> {
    sample.check_data(data)?;
    let pis = sample.slice_weights();
    let mut relabel = BTreeMap::new();
    let mut labels = Vec::with_capacity(data.len());
    for y in data.rows() {
        let mut best = (usize::MAX, f64::NEG_INFINITY);
        for (j, (&p, atom)) in pis.iter().zip(&sample.atoms).enumerate() {
            if p > 0.0 {
                let score = p.ln() + atom.log_density(y);
                if score > best.1 {
                    best = (j, score);
                }
            }
        }
        if best.0 == usize::MAX {
            return Err(Error::Invariant("no component carries slice weight".into()));
        }
        let next = relabel.len();
        labels.push(*relabel.entry(best.0).or_insert(next));
    }
    Ok(labels)
}

/// Posterior pmf of the number of occupied components.
pub fn posterior_kn(samples: &[GibbsState]) -> Result<KnSummary> {
    let n = samples
        .first()
        .ok_or_else(|| Error::InvalidParameter("no samples".into()))?
        .d
        .len();
    let mut counts = BTreeMap::new();
    for s in samples {
        *counts.entry(s.occupied()).or_insert(0) += 1;
    }
    KnSummary::from_counts(n, counts)
}

/// Rand index between two labellings of the same observations.
pub fn rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "labellings of different lengths");
    let n = a.len();
    if n < 2 {
        return 1.0;
    }
    let mut agree = 0u64;
    for i in 0..n {
        for j in i + 1..n {
            if (a[i] == a[j]) == (b[i] == b[j]) {
                agree += 1;
            }
        }
    }
    agree as f64 / (n * (n - 1) / 2) as f64
}
