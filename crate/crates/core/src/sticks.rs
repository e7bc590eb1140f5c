//! Stick-breaking transform, its inverse, and samplers for exchangeable
//! length-variable sequences.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::eppf::EppfModel;
use crate::numerics::sample_beta;
use crate::{Error, Result};

/// Hard limit on the number of sticks instantiated by
/// [`extend_weights_until`].
pub const MAX_STICKS: usize = 1_000_000;

/// Prior on the sequence of length variables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LengthProcessSpec {
    /// Independent `Be(a, b)` lengths; `Be(1, theta)` gives the Dirichlet
    /// process.
    IidBeta { a: f64, b: f64 },
    /// One `Be(a, b)` draw shared by every stick (Geometric process).
    SharedBeta { a: f64, b: f64 },
    /// Lengths sampled from a species sampling process with the given EPPF
    /// and `Be(base_a, base_b)` base measure.
    SpeciesDriven {
        eppf: EppfModel,
        base_a: f64,
        base_b: f64,
    },
}

impl LengthProcessSpec {
    /// Dirichlet-driven stick-breaking process with parameters `(beta, theta)`.
    pub fn dsb(beta: f64, theta: f64) -> Result<Self> {
        let spec = Self::SpeciesDriven {
            eppf: EppfModel::dirichlet(beta)?,
            base_a: 1.0,
            base_b: theta,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn dirichlet_process(theta: f64) -> Result<Self> {
        let spec = Self::IidBeta { a: 1.0, b: theta };
        spec.validate()?;
        Ok(spec)
    }

    pub fn geometric(theta: f64) -> Result<Self> {
        let spec = Self::SharedBeta { a: 1.0, b: theta };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b) = self.base();
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Beta shape parameters must be positive, got ({a}, {b})"
            )));
        }
        self.eppf().validate()
    }

    /// Parameters of the marginal Beta law of every length.
    pub fn base(&self) -> (f64, f64) {
        match *self {
            Self::IidBeta { a, b } | Self::SharedBeta { a, b } => (a, b),
            Self::SpeciesDriven { base_a, base_b, .. } => (base_a, base_b),
        }
    }

    /// EPPF governing ties among the lengths.
    pub fn eppf(&self) -> EppfModel {
        match *self {
            Self::IidBeta { .. } => EppfModel::IidDegenerate,
            Self::SharedBeta { .. } => EppfModel::IdenticalDegenerate,
            Self::SpeciesDriven { eppf, .. } => eppf,
        }
    }

    pub fn tie_probability(&self) -> f64 {
        self.eppf().tie_probability()
    }
}

const DETACHED: usize = usize::MAX;

/// A finite run of length variables with explicit tie bookkeeping: equal
/// lengths share a slot in `distinct`, so equality is structural.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct LengthPrefix {
    values: Vec<f64>,
    atom_index: Vec<usize>,
    distinct: Vec<f64>,
    counts: Vec<usize>,
}

impl LengthPrefix {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a prefix from slot labels and slot values.
    pub fn from_atoms(atom_index: Vec<usize>, distinct: Vec<f64>) -> Result<Self> {
        let mut counts = vec![0; distinct.len()];
        for &a in &atom_index {
            *counts
                .get_mut(a)
                .ok_or_else(|| Error::InvalidParameter(format!("slot {a} out of range")))? += 1;
        }
        if counts.contains(&0) {
            return Err(Error::InvalidParameter("unused distinct value".into()));
        }
        if distinct.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::InvalidParameter("lengths must lie in [0, 1]".into()));
        }
        for (i, x) in distinct.iter().enumerate() {
            if distinct[..i].contains(x) {
                return Err(Error::InvalidParameter(format!("duplicate distinct value {x}")));
            }
        }
        let values = atom_index.iter().map(|&a| distinct[a]).collect();
        Ok(Self {
            values,
            atom_index,
            distinct,
            counts,
        })
    }

    /// All lengths distinct.
    pub fn from_distinct_values(values: &[f64]) -> Result<Self> {
        Self::from_atoms((0..values.len()).collect(), values.to_vec())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn atom_index(&self) -> &[usize] {
        &self.atom_index
    }

    pub fn distinct(&self) -> &[f64] {
        &self.distinct
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn num_distinct(&self) -> usize {
        self.distinct.len()
    }

    pub fn push_existing(&mut self, slot: usize) {
        self.values.push(self.distinct[slot]);
        self.atom_index.push(slot);
        self.counts[slot] += 1;
    }

    pub fn push_new(&mut self, value: f64) {
        self.values.push(value);
        self.atom_index.push(self.distinct.len());
        self.distinct.push(value);
        self.counts.push(1);
    }

    /// Drops the last length.
    pub fn pop(&mut self) -> Option<f64> {
        let pos = self.len().checked_sub(1)?;
        let value = self.values[pos];
        self.detach(pos);
        self.atom_index.pop();
        self.values.pop();
        Some(value)
    }

    /// Removes position `pos` from the tie structure, leaving a hole to be
    /// filled by [`Self::attach_existing`] or [`Self::attach_new`]. Slots
    /// left empty are compacted away, so `counts()` then describes the other
    /// positions only.
    pub(crate) fn detach(&mut self, pos: usize) {
        let slot = self.atom_index[pos];
        debug_assert_ne!(slot, DETACHED);
        self.atom_index[pos] = DETACHED;
        self.values[pos] = f64::NAN;
        self.counts[slot] -= 1;
        if self.counts[slot] == 0 {
            let last = self.distinct.len() - 1;
            self.distinct.swap_remove(slot);
            self.counts.swap_remove(slot);
            if slot != last {
                for a in self.atom_index.iter_mut().filter(|a| **a == last) {
                    *a = slot;
                }
            }
        }
    }

    pub(crate) fn attach_existing(&mut self, pos: usize, slot: usize) {
        debug_assert_eq!(self.atom_index[pos], DETACHED);
        self.atom_index[pos] = slot;
        self.values[pos] = self.distinct[slot];
        self.counts[slot] += 1;
    }

    pub(crate) fn attach_new(&mut self, pos: usize, value: f64) {
        debug_assert_eq!(self.atom_index[pos], DETACHED);
        self.atom_index[pos] = self.distinct.len();
        self.values[pos] = value;
        self.distinct.push(value);
        self.counts.push(1);
    }

    /// Moves every length sharing `slot` to `value`.
    pub(crate) fn set_distinct(&mut self, slot: usize, value: f64) {
        self.distinct[slot] = value;
        for (v, &a) in self.values.iter_mut().zip(&self.atom_index) {
            if a == slot {
                *v = value;
            }
        }
    }

    /// Rebuilds counts from `atom_index` and checks them, and the values,
    /// against the stored bookkeeping.
    pub fn check_consistency(&self) -> Result<()> {
        let mut counts = vec![0; self.distinct.len()];
        for (pos, &a) in self.atom_index.iter().enumerate() {
            if a >= self.distinct.len() {
                return Err(Error::Invariant(format!("position {pos} has no slot")));
            }
            counts[a] += 1;
            if self.values[pos].to_bits() != self.distinct[a].to_bits() {
                return Err(Error::Invariant(format!("value mismatch at position {pos}")));
            }
        }
        if counts != self.counts {
            return Err(Error::Invariant(format!(
                "counts {:?} disagree with atom index ({counts:?})",
                self.counts
            )));
        }
        if counts.contains(&0) {
            return Err(Error::Invariant("empty slot".into()));
        }
        Ok(())
    }

    /// Appends one length drawn from its conditional law given the prefix.
    pub fn draw_next<R: Rng + ?Sized>(&mut self, spec: &LengthProcessSpec, rng: &mut R) {
        let (a, b) = spec.base();
        match spec {
            LengthProcessSpec::IidBeta { .. } => self.push_new(sample_beta(a, b, rng)),
            LengthProcessSpec::SharedBeta { .. } => {
                if self.is_empty() {
                    self.push_new(sample_beta(a, b, rng));
                } else {
                    self.push_existing(0);
                }
            }
            LengthProcessSpec::SpeciesDriven { eppf, .. } => {
                let (existing, new) = eppf.prediction_weights(&self.counts);
                match pick_slot(&existing, new, rng) {
                    Some(slot) => self.push_existing(slot),
                    None => self.push_new(sample_beta(a, b, rng)),
                }
            }
        }
    }

    /// `prod_i (1 - v_i)`, the stick left after the prefix.
    pub fn residual(&self) -> f64 {
        self.values.iter().map(|v| 1.0 - v).product()
    }
}

/// Chooses an existing slot with probability proportional to `existing`, or
/// `None` (a new value) with probability proportional to `new`.
pub(crate) fn pick_slot<R: Rng + ?Sized>(existing: &[f64], new: f64, rng: &mut R) -> Option<usize> {
    let total: f64 = existing.iter().sum::<f64>() + new;
    let mut u = rng.random::<f64>() * total;
    for (j, &w) in existing.iter().enumerate() {
        if u < w {
            return Some(j);
        }
        u -= w;
    }
    if new > 0.0 {
        None
    } else {
        // rounding pushed u past the last positive weight
        existing.iter().rposition(|&w| w > 0.0)
    }
}

/// Weights `w_j = v_j prod_{i<j} (1 - v_i)`.
pub fn sb_transform(v: &[f64]) -> Vec<f64> {
    let mut remaining = 1.0;
    v.iter()
        .map(|&vj| {
            let w = vj * remaining;
            remaining *= 1.0 - vj;
            w
        })
        .collect()
}

/// Length variables reproducing a weight prefix: `v_k = w_k / (1 - sum_{j<k} w_j)`,
/// and `0` once the stick is exhausted.
pub fn sb_inverse(w: &[f64]) -> Result<Vec<f64>> {
    let mut partial = 0.0;
    for (j, &wj) in w.iter().enumerate() {
        if !(wj >= 0.0) {
            return Err(Error::InvalidParameter(format!("weight {j} is negative: {wj}")));
        }
        partial += wj;
        if partial > 1.0 + 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "partial sum {partial} exceeds one at index {j}"
            )));
        }
    }
    // The denominator is carried as the running product of (1 - v_i), which
    // equals 1 - sum_{j<k} w_j but keeps full relative precision deep into
    // the sequence.
    let mut remaining: f64 = 1.0;
    Ok(w.iter()
        .map(|&wj| {
            if remaining <= 0.0 {
                return 0.0;
            }
            let v = (wj / remaining).min(1.0);
            remaining *= 1.0 - v;
            v
        })
        .collect())
}

/// `m` exchangeable lengths from `spec`, built sequentially from the
/// prediction rule.
pub fn sample_lengths_prefix<R: Rng + ?Sized>(
    spec: &LengthProcessSpec,
    m: usize,
    rng: &mut R,
) -> LengthPrefix {
    let mut prefix = LengthPrefix::new();
    for _ in 0..m {
        prefix.draw_next(spec, rng);
    }
    prefix
}

/// Extends `prefix` (by at least one stick if it is empty) until the weights
/// cover `threshold`, i.e. `sum_{j<=phi} w_j >= threshold`, and returns the
/// weights of the extended prefix.
pub fn extend_weights_until<R: Rng + ?Sized>(
    prefix: &mut LengthPrefix,
    spec: &LengthProcessSpec,
    threshold: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&threshold) {
        return Err(Error::InvalidParameter(format!(
            "threshold must lie in [0, 1), got {threshold}"
        )));
    }
    let target = 1.0 - threshold;
    let mut remaining = prefix.residual();
    if prefix.is_empty() {
        prefix.draw_next(spec, rng);
        remaining *= 1.0 - prefix.values()[0];
    }
    while remaining > target {
        if prefix.len() >= MAX_STICKS {
            return Err(Error::TruncationCap {
                threshold,
                cap: MAX_STICKS,
                residual: remaining,
            });
        }
        prefix.draw_next(spec, rng);
        remaining *= 1.0 - prefix.values()[prefix.len() - 1];
    }
    Ok(sb_transform(prefix.values()))
}
