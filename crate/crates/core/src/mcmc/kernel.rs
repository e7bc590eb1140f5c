//! Conjugate kernel and base-measure pairs for the mixture components.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Vector2};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::data::Dataset;
use crate::numerics::{ln_gamma, sample_gamma};
use crate::{Error, Result};

/// Kernel `G(y | xi)` together with the base measure `mu_0` of the atoms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum MixtureKernel {
    /// `y ~ N(m, 1/tau)` with `tau ~ Ga(a, rate b)` and `m | tau ~ N(mu0, 1/(lambda tau))`.
    UnivariateNormalGamma { mu0: f64, lambda: f64, a: f64, b: f64 },
    /// `y ~ N_2(m, Sigma)` with `Sigma ~ IW(psi, nu)` and `m | Sigma ~ N_2(mu0, Sigma/lambda)`.
    BivariateNormalInvWishart {
        mu0: [f64; 2],
        lambda: f64,
        psi: [[f64; 2]; 2],
        nu: f64,
    },
}

impl MixtureKernel {
    /// `a = b = 1/2`, `lambda = 1/100`, centred at the sample mean.
    pub fn default_univariate(data: &Dataset) -> Self {
        Self::UnivariateNormalGamma {
            mu0: data.mean().first().copied().unwrap_or(0.0),
            lambda: 0.01,
            a: 0.5,
            b: 0.5,
        }
    }

    /// `lambda = 1/100`, `nu = 2`, `psi = I`, centred at the sample mean.
    pub fn default_bivariate(data: &Dataset) -> Self {
        let m = data.mean();
        let mu0 = if m.len() == 2 { [m[0], m[1]] } else { [0.0; 2] };
        Self::BivariateNormalInvWishart {
            mu0,
            lambda: 0.01,
            psi: [[1.0, 0.0], [0.0, 1.0]],
            nu: 2.0,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::UnivariateNormalGamma { .. } => 1,
            Self::BivariateNormalInvWishart { .. } => 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be positive, got {x}")))
            }
        };
        match *self {
            Self::UnivariateNormalGamma { mu0, lambda, a, b } => {
                if !mu0.is_finite() {
                    return Err(Error::InvalidParameter("mu0 must be finite".into()));
                }
                positive("lambda", lambda)?;
                positive("a", a)?;
                positive("b", b)
            }
            Self::BivariateNormalInvWishart { mu0, lambda, psi, nu } => {
                if !mu0.iter().all(|x| x.is_finite()) {
                    return Err(Error::InvalidParameter("mu0 must be finite".into()));
                }
                positive("lambda", lambda)?;
                if !(nu > 1.0 && nu.is_finite()) {
                    return Err(Error::InvalidParameter(format!("nu must exceed 1, got {nu}")));
                }
                let m = to_matrix(psi);
                if m != m.transpose() || m.cholesky().is_none() {
                    return Err(Error::NotPositiveDefinite(format!("psi = {psi:?}")));
                }
                Ok(())
            }
        }
    }

    pub fn sample_prior<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Atom> {
        self.sample_posterior(&SuffStats::new(self.dim()), rng)
    }

    /// Draw from the conjugate posterior given the observations summarised
    /// in `stats`.
    pub fn sample_posterior<R: Rng + ?Sized>(&self, stats: &SuffStats, rng: &mut R) -> Result<Atom> {
        let n = stats.n as f64;
        match *self {
            Self::UnivariateNormalGamma { mu0, lambda, a, b } => {
                let ybar = stats.mean[0];
                let ln = lambda + n;
                let mn = (lambda * mu0 + n * ybar) / ln;
                let an = a + 0.5 * n;
                let dev = ybar - mu0;
                let bn = b + 0.5 * stats.scatter[(0, 0)] + lambda * n * dev * dev / (2.0 * ln);
                let precision = sample_gamma(an, rng) / bn;
                let z: f64 = StandardNormal.sample(rng);
                Ok(Atom::Normal {
                    mean: mn + z / (ln * precision).sqrt(),
                    precision,
                })
            }
            Self::BivariateNormalInvWishart { mu0, lambda, psi, nu } => {
                let mu0 = Vector2::from(mu0);
                let ybar = stats.mean;
                let ln = lambda + n;
                let mn = (mu0 * lambda + ybar * n) / ln;
                let nun = nu + n;
                let dev = ybar - mu0;
                let psin = to_matrix(psi) + stats.scatter + dev * dev.transpose() * (lambda * n / ln);
                let cov = sample_inverse_wishart(psin, nun, rng)?;
                let chol = (cov / ln)
                    .cholesky()
                    .ok_or_else(|| Error::NotPositiveDefinite("posterior covariance".into()))?;
                let z = Vector2::new(StandardNormal.sample(rng), StandardNormal.sample(rng));
                Ok(Atom::Bivariate(Gaussian2::new(mn + chol.l() * z, cov)?))
            }
        }
    }

    /// `ln mu_0(xi)`.
    pub fn log_prior(&self, atom: &Atom) -> f64 {
        match (*self, atom) {
            (Self::UnivariateNormalGamma { mu0, lambda, a, b }, &Atom::Normal { mean, precision }) => {
                let dev = mean - mu0;
                a * b.ln() - ln_gamma(a) + (a - 1.0) * precision.ln() - b * precision
                    + 0.5 * (lambda * precision / (2.0 * PI)).ln()
                    - 0.5 * lambda * precision * dev * dev
            }
            (Self::BivariateNormalInvWishart { mu0, lambda, psi, nu }, Atom::Bivariate(g)) => {
                let psi = to_matrix(psi);
                let ln_det_psi = psi.determinant().ln();
                let ln_mvgamma = 0.5 * PI.ln() + ln_gamma(0.5 * nu) + ln_gamma(0.5 * nu - 0.5);
                let ln_iw = 0.5 * nu * ln_det_psi - nu * 2f64.ln() - ln_mvgamma
                    - 0.5 * (nu + 3.0) * g.log_det
                    - 0.5 * (psi * g.prec).trace();
                let dev = g.mean - Vector2::from(mu0);
                let ln_normal = -(2.0 * PI).ln() - 0.5 * (g.log_det - 2.0 * lambda.ln())
                    - 0.5 * lambda * (dev.transpose() * g.prec * dev)[(0, 0)];
                ln_iw + ln_normal
            }
            _ => f64::NEG_INFINITY,
        }
    }
}

fn to_matrix(m: [[f64; 2]; 2]) -> Matrix2<f64> {
    Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1])
}

/// `Sigma ~ IW(psi, nu)` as the inverse of a Bartlett-decomposed
/// `W(psi^{-1}, nu)` draw. A non-positive-definite `psi` gets a diagonal
/// jitter before giving up.
fn sample_inverse_wishart<R: Rng + ?Sized>(psi: Matrix2<f64>, nu: f64, rng: &mut R) -> Result<Matrix2<f64>> {
    let mut jitter = 0.0;
    let scale = psi.trace().abs().max(1.0);
    for attempt in 0..4 {
        let m = psi + Matrix2::identity() * jitter;
        if let Some(l) = m.try_inverse().and_then(|inv| inv.cholesky()) {
            let l = l.l();
            let chi2 = |df: f64, rng: &mut R| 2.0 * sample_gamma(0.5 * df, rng);
            let a = Matrix2::new(
                chi2(nu, rng).sqrt(),
                0.0,
                StandardNormal.sample(rng),
                chi2(nu - 1.0, rng).sqrt(),
            );
            let la = l * a;
            if let Some(sigma) = (la * la.transpose()).try_inverse() {
                return Ok(0.5 * (sigma + sigma.transpose()));
            }
        }
        jitter = scale * 1e-10 * 100f64.powi(attempt);
    }
    Err(Error::NotPositiveDefinite(format!("scale matrix {psi}")))
}

/// Component parameters `xi_j`.
#[derive(Debug, Clone, PartialEq)]
pub enum Atom {
    Normal { mean: f64, precision: f64 },
    Bivariate(Gaussian2),
}

impl Atom {
    /// `ln G(y | xi)`.
    pub fn log_density(&self, y: &[f64]) -> f64 {
        match self {
            Atom::Normal { mean, precision } => {
                let dev = y[0] - mean;
                0.5 * (precision / (2.0 * PI)).ln() - 0.5 * precision * dev * dev
            }
            Atom::Bivariate(g) => g.log_density(y),
        }
    }

    pub fn density(&self, y: &[f64]) -> f64 {
        self.log_density(y).exp()
    }
}

/// Bivariate normal with cached precision and log-determinant.
#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian2 {
    pub mean: Vector2<f64>,
    pub cov: Matrix2<f64>,
    prec: Matrix2<f64>,
    log_det: f64,
}

impl Gaussian2 {
    pub fn new(mean: Vector2<f64>, cov: Matrix2<f64>) -> Result<Self> {
        let chol = cov
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite(format!("covariance {cov}")))?;
        let l = chol.l();
        let log_det = 2.0 * (l[(0, 0)].ln() + l[(1, 1)].ln());
        Ok(Self {
            mean,
            cov,
            prec: chol.inverse(),
            log_det,
        })
    }

    pub fn log_density(&self, y: &[f64]) -> f64 {
        let dev = Vector2::new(y[0], y[1]) - self.mean;
        -(2.0 * PI).ln() - 0.5 * self.log_det - 0.5 * (dev.transpose() * self.prec * dev)[(0, 0)]
    }
}

/// Count, mean and scatter matrix of a group of observations (Welford).
#[derive(Debug, Clone, PartialEq)]
pub struct SuffStats {
    pub n: usize,
    pub mean: Vector2<f64>,
    pub scatter: Matrix2<f64>,
    dim: usize,
}

impl SuffStats {
    pub fn new(dim: usize) -> Self {
        Self {
            n: 0,
            mean: Vector2::zeros(),
            scatter: Matrix2::zeros(),
            dim,
        }
    }

    pub fn push(&mut self, y: &[f64]) {
        let y = if self.dim == 1 {
            Vector2::new(y[0], 0.0)
        } else {
            Vector2::new(y[0], y[1])
        };
        self.n += 1;
        let delta = y - self.mean;
        self.mean += delta / self.n as f64;
        self.scatter += delta * (y - self.mean).transpose();
    }
}
