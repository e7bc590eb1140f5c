use super::data::Dataset;
use super::kernel::Atom;
use crate::sticks::{sb_transform, LengthPrefix};
use crate::{Error, Result};

/// Latent state of the slice-within-Gibbs sampler. Components are indexed
/// from 0 (`d_k = 0` is the first stick); `phi` is the number of
/// instantiated sticks and atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsState {
    pub(crate) u: Vec<f64>,
    pub(crate) d: Vec<usize>,
    pub(crate) lengths: LengthPrefix,
    pub(crate) weights: Vec<f64>,
    pub(crate) atoms: Vec<Atom>,
    pub(crate) rho: Option<f64>,
    pub(crate) log_score: f64,
}

impl GibbsState {
    /// Assembles a state and checks every invariant. `log_score` starts at
    /// `NaN` until a sweep or [`super::complete_data_log_score`] sets it.
    pub fn from_parts(
        u: Vec<f64>,
        d: Vec<usize>,
        lengths: LengthPrefix,
        atoms: Vec<Atom>,
        rho: Option<f64>,
    ) -> Result<Self> {
        let weights = sb_transform(lengths.values());
        let state = Self {
            u,
            d,
            lengths,
            weights,
            atoms,
            rho,
            log_score: f64::NAN,
        };
        state.check_invariants()?;
        Ok(state)
    }

    pub fn slices(&self) -> &[f64] {
        &self.u
    }

    pub fn allocations(&self) -> &[usize] {
        &self.d
    }

    pub fn lengths(&self) -> &LengthPrefix {
        &self.lengths
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn rho(&self) -> Option<f64> {
        self.rho
    }

    pub fn phi(&self) -> usize {
        self.lengths.len()
    }

    pub fn log_score(&self) -> f64 {
        self.log_score
    }

    /// Number of distinct allocations, `K_n`.
    pub fn occupied(&self) -> usize {
        let mut seen = vec![false; self.phi()];
        self.d.iter().filter(|&&j| !std::mem::replace(&mut seen[j], true)).count()
    }

    /// Largest slice variable attached to each component, 0 when empty.
    pub(crate) fn slice_maxima(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.phi()];
        for (&u, &j) in self.u.iter().zip(&self.d) {
            m[j] = f64::max(m[j], u);
        }
        m
    }

    /// `n^{-1} sum_k 1{j in A_k} / |A_k|` with `A_k = {j : u_k < w_j}`.
    pub fn slice_weights(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.phi()];
        if self.u.is_empty() {
            return out;
        }
        let share = 1.0 / self.u.len() as f64;
        for &u in &self.u {
            let size = self.weights.iter().filter(|&&w| u < w).count();
            let inc = share / size as f64;
            for (o, &w) in out.iter_mut().zip(&self.weights) {
                if u < w {
                    *o += inc;
                }
            }
        }
        out
    }

    /// Mixture density `sum_j pi_j G(y | xi_j)` with the slice weights above.
    pub fn slice_density(&self, pis: &[f64], y: &[f64]) -> f64 {
        pis.iter()
            .zip(&self.atoms)
            .filter(|(&p, _)| p > 0.0)
            .map(|(p, a)| p * a.density(y))
            .sum()
    }

    pub fn check_invariants(&self) -> Result<()> {
        let phi = self.phi();
        if self.u.len() != self.d.len() {
            return Err(Error::Invariant("one slice per observation".into()));
        }
        if self.atoms.len() != phi || self.weights.len() != phi {
            return Err(Error::Invariant(format!(
                "{} atoms and {} weights for {phi} sticks",
                self.atoms.len(),
                self.weights.len()
            )));
        }
        self.lengths.check_consistency()?;
        let w = sb_transform(self.lengths.values());
        if w.iter().zip(&self.weights).any(|(a, b)| (a - b).abs() > 1e-12) {
            return Err(Error::Invariant("weights out of sync with lengths".into()));
        }
        for (k, (&u, &j)) in self.u.iter().zip(&self.d).enumerate() {
            if j >= phi || !(u > 0.0 && u < self.weights[j]) {
                return Err(Error::Invariant(format!("slice of observation {k} misses its component")));
            }
        }
        let min_u = self.u.iter().copied().fold(1.0, f64::min);
        let residual = self.lengths.residual();
        if !self.u.is_empty() && residual > min_u {
            return Err(Error::Invariant(format!(
                "truncation leaves {residual:e} of the stick, above the smallest slice {min_u:e}"
            )));
        }
        Ok(())
    }

    pub(crate) fn check_data(&self, data: &Dataset) -> Result<()> {
        if data.len() != self.d.len() {
            return Err(Error::InvalidParameter(format!(
                "state has {} observations, data has {}",
                self.d.len(),
                data.len()
            )));
        }
        Ok(())
    }
}
