//! JSON run configurations, one document per subcommand.
//!
//! Every struct rejects unknown keys and is re-validated against the domain
//! constructors after loading.

use std::path::Path;

use esbmix::mcmc::{FitPrior, MixtureKernel};
use esbmix::{EppfModel, LengthProcessSpec};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{io_err, CliError, Result};

/// Prior on the length variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum PriorConfig {
    /// Dirichlet-driven sticks; give exactly one of `beta` and `rho`
    /// (`rho = 1 / (1 + beta)`).
    Dsb {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        beta: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rho: Option<f64>,
        theta: f64,
    },
    /// Pitman-Yor driven sticks with a `Be(1, theta)` base.
    PitmanYor { alpha: f64, beta: f64, theta: f64 },
    /// The `beta -> infinity` limit: independent `Be(1, theta)` lengths.
    Dirichlet { theta: f64 },
    /// The `beta -> 0` limit: one shared `Be(1, theta)` length.
    Geometric { theta: f64 },
    /// Any EPPF with a `Be(a, b)` base.
    SpeciesDriven { eppf: EppfModel, a: f64, b: f64 },
    /// Dirichlet-driven sticks with `rho ~ U(lo, hi)`; only for `fit`.
    RandomRho {
        theta: f64,
        #[serde(default)]
        lo: f64,
        #[serde(default = "one")]
        hi: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl PriorConfig {
    pub fn spec(&self) -> Result<LengthProcessSpec> {
        let spec = match *self {
            Self::Dsb { beta, rho, theta } => match (beta, rho) {
                (Some(beta), None) => LengthProcessSpec::dsb(beta, theta)?,
                (None, Some(rho)) => LengthProcessSpec::SpeciesDriven {
                    eppf: EppfModel::dirichlet_from_tie(rho)?,
                    base_a: 1.0,
                    base_b: theta,
                },
                _ => return Err(CliError::Invalid("dsb prior needs exactly one of beta and rho".into())),
            },
            Self::PitmanYor { alpha, beta, theta } => LengthProcessSpec::SpeciesDriven {
                eppf: EppfModel::pitman_yor(alpha, beta)?,
                base_a: 1.0,
                base_b: theta,
            },
            Self::Dirichlet { theta } => LengthProcessSpec::dirichlet_process(theta)?,
            Self::Geometric { theta } => LengthProcessSpec::geometric(theta)?,
            Self::SpeciesDriven { eppf, a, b } => LengthProcessSpec::SpeciesDriven { eppf, base_a: a, base_b: b },
            Self::RandomRho { .. } => {
                return Err(CliError::Invalid("random_rho is only available for fit".into()));
            }
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn fit_prior(&self) -> Result<FitPrior> {
        let prior = match *self {
            Self::RandomRho { theta, lo, hi } => FitPrior::RandomRho { theta, lo, hi },
            _ => FitPrior::Lengths(self.spec()?),
        };
        prior.validate()?;
        Ok(prior)
    }

    /// Column label, e.g. `dsb_beta0.5_theta3`.
    pub fn label(&self) -> String {
        match self {
            Self::Dsb { beta: Some(b), theta, .. } => format!("dsb_beta{b}_theta{theta}"),
            Self::Dsb { rho, theta, .. } => format!("dsb_rho{}_theta{theta}", rho.unwrap_or(f64::NAN)),
            Self::PitmanYor { alpha, beta, theta } => format!("py_alpha{alpha}_beta{beta}_theta{theta}"),
            Self::Dirichlet { theta } => format!("dirichlet_theta{theta}"),
            Self::Geometric { theta } => format!("geometric_theta{theta}"),
            Self::SpeciesDriven { a, b, .. } => format!("species_a{a}_b{b}"),
            Self::RandomRho { theta, .. } => format!("random_rho_theta{theta}"),
        }
    }
}

/// Unique column labels for a list of priors.
pub fn labels(priors: &[PriorConfig]) -> Vec<String> {
    let mut out: Vec<String> = Vec::with_capacity(priors.len());
    for p in priors {
        let base = p.label();
        let mut label = base.clone();
        let mut i = 2;
        while out.contains(&label) {
            label = format!("{base}_{i}");
            i += 1;
        }
        out.push(label);
    }
    out
}

/// A `beta` grid value: a positive number or one of the two limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BetaValue {
    Finite(f64),
    Limit(BetaLimit),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaLimit {
    /// `beta -> 0`
    Geometric,
    /// `beta -> infinity`
    Dirichlet,
}

impl BetaValue {
    pub fn prior(self, theta: f64) -> PriorConfig {
        match self {
            Self::Finite(beta) => PriorConfig::Dsb {
                beta: Some(beta),
                rho: None,
                theta,
            },
            Self::Limit(BetaLimit::Geometric) => PriorConfig::Geometric { theta },
            Self::Limit(BetaLimit::Dirichlet) => PriorConfig::Dirichlet { theta },
        }
    }

    pub fn label(self) -> String {
        match self {
            Self::Finite(b) => b.to_string(),
            Self::Limit(BetaLimit::Geometric) => "geometric".into(),
            Self::Limit(BetaLimit::Dirichlet) => "dirichlet".into(),
        }
    }
}

fn default_grid() -> Vec<PriorConfig> {
    let betas = [
        BetaValue::Limit(BetaLimit::Geometric),
        BetaValue::Finite(0.5),
        BetaValue::Finite(1.0),
        BetaValue::Finite(10.0),
        BetaValue::Finite(100.0),
        BetaValue::Limit(BetaLimit::Dirichlet),
    ];
    let thetas = [0.5, 1.0, 3.0, 6.0, 10.0];
    betas
        .iter()
        .flat_map(|b| thetas.iter().map(move |&t| b.prior(t)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorKnConfig {
    pub specs: Vec<PriorConfig>,
    pub n: usize,
    pub replicates: usize,
    pub seed: u64,
}

impl Default for PriorKnConfig {
    fn default() -> Self {
        Self {
            specs: default_grid(),
            n: 20,
            replicates: 10_000,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorEknConfig {
    pub specs: Vec<PriorConfig>,
    pub n_max: usize,
    pub replicates: usize,
    pub seed: u64,
}

impl Default for PriorEknConfig {
    fn default() -> Self {
        let theta = 1.0;
        Self {
            specs: vec![
                PriorConfig::Geometric { theta },
                BetaValue::Finite(0.5).prior(theta),
                BetaValue::Finite(5.0).prior(theta),
                PriorConfig::Dirichlet { theta },
            ],
            n_max: 200,
            replicates: 10_000,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrderProbConfig {
    pub betas: Vec<BetaValue>,
    pub thetas: Vec<f64>,
    pub mc_replicates: usize,
    pub seed: u64,
}

impl Default for OrderProbConfig {
    fn default() -> Self {
        Self {
            betas: vec![
                BetaValue::Limit(BetaLimit::Geometric),
                BetaValue::Finite(0.25),
                BetaValue::Finite(1.0),
                BetaValue::Finite(9.0),
                BetaValue::Limit(BetaLimit::Dirichlet),
            ],
            thetas: vec![0.5, 1.0, 2.0, 3.0],
            mc_replicates: 100_000,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AllocProbConfig {
    pub prior: PriorConfig,
    /// 1-based allocation vectors.
    pub vectors: Vec<Vec<usize>>,
    pub cap: usize,
    pub mc_replicates: usize,
    pub seed: u64,
}

impl Default for AllocProbConfig {
    fn default() -> Self {
        Self {
            prior: BetaValue::Finite(1.0).prior(1.0),
            vectors: vec![vec![1], vec![2], vec![1, 1], vec![1, 2], vec![2, 1], vec![1, 1, 2]],
            cap: esbmix::partitions::DEFAULT_PARTITION_CAP,
            mc_replicates: 100_000,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Axis {
    pub fn validate(&self) -> Result<()> {
        if !(self.lo < self.hi && self.lo.is_finite() && self.hi.is_finite() && self.points >= 2) {
            return Err(CliError::Invalid(format!(
                "grid axis needs lo < hi and at least 2 points, got {self:?}"
            )));
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.points - 1) as f64
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.points).map(|i| self.lo + i as f64 * self.step())
    }
}

/// Evaluation grid; `y` is required for bivariate data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub x: Axis,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<Axis>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitRunConfig {
    pub prior: PriorConfig,
    /// Defaults to the data-centred hyperparameters when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<MixtureKernel>,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub min_truncation: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    pub rho_bins: usize,
}

impl Default for FitRunConfig {
    fn default() -> Self {
        Self {
            prior: PriorConfig::Dsb {
                beta: None,
                rho: Some(0.5),
                theta: 1.0,
            },
            kernel: None,
            iterations: 10_000,
            burn_in: 2000,
            thin: 4,
            min_truncation: 10,
            seed: 1,
            grid: None,
            rho_bins: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub seed: u64,
    pub mc_replicates: usize,
    pub prior_recovery_sweeps: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            mc_replicates: 200_000,
            prior_recovery_sweeps: 20_000,
        }
    }
}

/// Reads a config file, or the defaults when no path is given.
pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| CliError::Config {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn positive(name: &str, value: usize) -> Result<()> {
    if value == 0 {
        return Err(CliError::Invalid(format!("{name} must be positive")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = r#"{"n": 10, "replicates": 5, "sed": 3}"#;
        assert!(serde_json::from_str::<PriorKnConfig>(bad).is_err());
        let bad_prior = r#"{"family": "dsb", "beta": 1, "theta": 1, "gamma": 2}"#;
        assert!(serde_json::from_str::<PriorConfig>(bad_prior).is_err());
    }

    #[test]
    fn limits_are_named() {
        let c: OrderProbConfig =
            serde_json::from_str(r#"{"betas": ["geometric", 2.5, "dirichlet"], "thetas": [1]}"#).unwrap();
        assert_eq!(
            c.betas,
            vec![
                BetaValue::Limit(BetaLimit::Geometric),
                BetaValue::Finite(2.5),
                BetaValue::Limit(BetaLimit::Dirichlet)
            ]
        );
        assert!(serde_json::from_str::<BetaValue>(r#""infinity""#).is_err());
    }

    #[test]
    fn dsb_takes_beta_or_rho() {
        let by_rho = PriorConfig::Dsb {
            beta: None,
            rho: Some(0.25),
            theta: 2.0,
        };
        let by_beta = BetaValue::Finite(3.0).prior(2.0);
        assert_eq!(by_rho.spec().unwrap(), by_beta.spec().unwrap());
        let both = PriorConfig::Dsb {
            beta: Some(3.0),
            rho: Some(0.25),
            theta: 2.0,
        };
        assert!(both.spec().is_err());
    }

    #[test]
    fn domain_constraints_are_rechecked() {
        let p: PriorConfig = serde_json::from_str(r#"{"family": "dsb", "beta": -1, "theta": 1}"#).unwrap();
        assert!(p.spec().is_err());
        let p: PriorConfig = serde_json::from_str(r#"{"family": "random_rho", "theta": 1, "lo": 0.7, "hi": 0.2}"#).unwrap();
        assert!(p.fit_prior().is_err());
        assert!(PriorConfig::RandomRho { theta: 1.0, lo: 0.0, hi: 1.0 }.spec().is_err());
        let non_unit_base = PriorConfig::SpeciesDriven {
            eppf: EppfModel::Dirichlet { beta: 1.0 },
            a: 2.0,
            b: 1.0,
        };
        assert!(non_unit_base.spec().is_ok());
        assert!(non_unit_base.fit_prior().is_err());
    }

    #[test]
    fn default_grid_has_thirty_specs_with_unique_labels() {
        let c = PriorKnConfig::default();
        let l = labels(&c.specs);
        assert_eq!(l.len(), 30);
        let mut sorted = l.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 30);
        assert_eq!(labels(&[c.specs[0].clone(), c.specs[0].clone()])[1], format!("{}_2", l[0]));
    }

    #[test]
    fn configs_round_trip() {
        let c = FitRunConfig::default();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<FitRunConfig>(&text).unwrap(), c);
    }
}
