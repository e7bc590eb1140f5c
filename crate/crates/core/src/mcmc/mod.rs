//! Slice-within-Gibbs sampler for mixtures whose weights follow an
//! exchangeable stick-breaking prior with `Be(1, theta)` lengths.
//!
//! Each sweep updates, in order: the slice variables, the truncation level,
//! the lengths one at a time, tied groups of lengths jointly, the
//! allocations, the atoms and (under [`FitPrior::RandomRho`]) the tie
//! probability.

mod chain;
mod data;
mod estimators;
mod kernel;
mod rho;
mod state;
mod updates;


pub use chain::{initial_state, run_chain, run_chain_with, run_chains, ChainOutput, TraceRecord};
pub use data::Dataset;
pub use estimators::{
    cluster_assign, complete_data_log_score, eap_density, map_select, posterior_kn, rand_index,
    sample_density,
};
pub use kernel::{Atom, Gaussian2, MixtureKernel, SuffStats};
pub use rho::{rho_log_density, sample_rho};
pub use state::GibbsState;
pub use updates::{
    gibbs_sweep, update_allocations, update_atoms, update_distinct_values, update_lengths, update_rho,
    update_slices, SweepContext, SweepStats,
};

use crate::eppf::EppfModel;
use crate::sticks::LengthProcessSpec;
use crate::{Error, Result};

/// Prior on the mixture weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitPrior {
    /// Fixed length process; its base must be `Be(1, theta)`.
    Lengths(LengthProcessSpec),
    /// Dirichlet-driven lengths with `beta = (1 - rho)/rho` and
    /// `rho ~ U(lo, hi)`.
    RandomRho { theta: f64, lo: f64, hi: f64 },
}

impl FitPrior {
    pub fn random_rho(theta: f64) -> Self {
        Self::RandomRho {
            theta,
            lo: 0.0,
            hi: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Lengths(spec) => {
                spec.validate()?;
                updates::be1_theta(&spec).map(|_| ())
            }
            Self::RandomRho { theta, lo, hi } => {
                if !(theta > 0.0 && theta.is_finite()) {
                    return Err(Error::InvalidParameter(format!("theta must be positive, got {theta}")));
                }
                if !(0.0 <= lo && lo < hi && hi <= 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "rho prior support ({lo}, {hi}) must be a nonempty subinterval of (0, 1)"
                    )));
                }
                Ok(())
            }
        }
    }

    pub(crate) fn initial_rho(&self) -> Option<f64> {
        match *self {
            Self::Lengths(_) => None,
            Self::RandomRho { lo, hi, .. } => Some(0.5 * (lo + hi)),
        }
    }

    /// Length process in force for the given tie probability.
    pub fn spec(&self, rho: Option<f64>) -> Result<LengthProcessSpec> {
        match (*self, rho) {
            (Self::Lengths(spec), _) => Ok(spec),
            (Self::RandomRho { theta, .. }, Some(rho)) => Ok(LengthProcessSpec::SpeciesDriven {
                eppf: EppfModel::dirichlet_from_tie(rho)?,
                base_a: 1.0,
                base_b: theta,
            }),
            (Self::RandomRho { .. }, None) => {
                Err(Error::InvalidParameter("random tie probability missing from the state".into()))
            }
        }
    }
}

/// Run settings; `iterations` counts burn-in sweeps too.
#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub prior: FitPrior,
    pub kernel: MixtureKernel,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    /// Sticks kept instantiated even when no observation needs them.
    pub min_truncation: usize,
}

impl FitConfig {
    pub fn new(prior: FitPrior, kernel: MixtureKernel) -> Self {
        Self {
            prior,
            kernel,
            iterations: 10_000,
            burn_in: 2000,
            thin: 4,
            seed: 0,
            min_truncation: 10,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.prior.validate()?;
        self.kernel.validate()?;
        if self.thin == 0 || self.iterations == 0 || self.burn_in >= self.iterations {
            return Err(Error::InvalidParameter(format!(
                "need thin >= 1 and burn_in < iterations, got thin {}, burn_in {}, iterations {}",
                self.thin, self.burn_in, self.iterations
            )));
        }
        Ok(())
    }

    /// Number of sweeps kept.
    pub fn retained(&self) -> usize {
        (self.iterations - self.burn_in.min(self.iterations)) / self.thin.max(1)
    }
}
