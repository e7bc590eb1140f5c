//! Monte Carlo laws of `K_n`, the number of occupied components among `n`
//! allocation variables.

use std::collections::BTreeMap;

use rand::Rng;
use serde::Serialize;

use super::allocation::StickCover;
use crate::parallel::{run_replicates, Exec, McEstimate, Moments};
use crate::sticks::LengthProcessSpec;
use crate::{Error, Result};

/// Empirical distribution of `K_n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KnSummary {
    pub n: usize,
    pub pmf: BTreeMap<usize, f64>,
    pub counts: BTreeMap<usize, u64>,
    pub replicates: usize,
}

impl KnSummary {
    pub fn from_counts(n: usize, counts: BTreeMap<usize, u64>) -> Result<Self> {
        let replicates: u64 = counts.values().sum();
        if replicates == 0 {
            return Err(Error::InvalidParameter("no replicates".into()));
        }
        let pmf = counts
            .iter()
            .map(|(&k, &c)| (k, c as f64 / replicates as f64))
            .collect();
        Ok(Self {
            n,
            pmf,
            counts,
            replicates: replicates as usize,
        })
    }

    pub fn probability(&self, k: usize) -> f64 {
        self.pmf.get(&k).copied().unwrap_or(0.0)
    }

    /// Most frequent value; the smallest one on ties.
    pub fn mode(&self) -> usize {
        let mut best = (0, 0);
        for (&k, &c) in &self.counts {
            if c > best.1 {
                best = (k, c);
            }
        }
        best.0
    }

    pub fn mean(&self) -> f64 {
        self.pmf.iter().map(|(&k, &p)| k as f64 * p).sum()
    }
}

/// `sup_A |P(A) - Q(A)|` between two pmfs on the integers.
pub fn total_variation(p: &KnSummary, q: &KnSummary) -> f64 {
    let keys: std::collections::BTreeSet<usize> = p.pmf.keys().chain(q.pmf.keys()).copied().collect();
    0.5 * keys
        .into_iter()
        .map(|k| (p.probability(k) - q.probability(k)).abs())
        .sum::<f64>()
}

/// Tracks which components have been hit so far.
#[derive(Default)]
struct Occupancy {
    seen: Vec<usize>,
    distinct: usize,
}

impl Occupancy {
    fn clear(&mut self) {
        self.seen.clear();
        self.distinct = 0;
    }

    fn hit(&mut self, j: usize) {
        if let Err(pos) = self.seen.binary_search(&j) {
            self.seen.insert(pos, j);
            self.distinct += 1;
        }
    }
}

/// Draws `K_n` once: `n` uniforms are located against lazily broken sticks.
fn draw_kn<R: Rng + ?Sized>(
    spec: &LengthProcessSpec,
    n: usize,
    cover: &mut StickCover,
    occupancy: &mut Occupancy,
    rng: &mut R,
) -> Result<usize> {
    cover.reset();
    occupancy.clear();
    for _ in 0..n {
        let u = rng.random::<f64>();
        occupancy.hit(cover.locate(u, spec, rng)?);
    }
    Ok(occupancy.distinct)
}

fn check_sizes(n: usize, replicates: usize) -> Result<()> {
    if n == 0 || replicates == 0 {
        return Err(Error::InvalidParameter(
            "n and replicates must both be positive".into(),
        ));
    }
    Ok(())
}

/// Empirical pmf of `K_n` over `replicates` independent prior draws.
pub fn sample_kn(
    spec: &LengthProcessSpec,
    n: usize,
    replicates: usize,
    seed: u64,
    exec: Exec,
) -> Result<KnSummary> {
    spec.validate()?;
    check_sizes(n, replicates)?;
    let counts = run_replicates(
        seed,
        replicates,
        exec,
        |rng, count| -> Result<BTreeMap<usize, u64>> {
            let mut cover = StickCover::new();
            let mut occupancy = Occupancy::default();
            let mut tally = BTreeMap::new();
            for _ in 0..count {
                let k = draw_kn(spec, n, &mut cover, &mut occupancy, rng)?;
                *tally.entry(k).or_insert(0) += 1;
            }
            Ok(tally)
        },
        |a, b| {
            let mut a = a?;
            for (k, c) in b? {
                *a.entry(k).or_insert(0) += c;
            }
            Ok(a)
        },
    )
    .expect("replicates > 0")?;
    KnSummary::from_counts(n, counts)
}

/// Monte Carlo estimates of `E[K_n]` for `n = 1..=n_max`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KnCurve {
    pub mean: Vec<f64>,
    pub std_error: Vec<f64>,
    pub replicates: usize,
}

impl KnCurve {
    /// Estimate at sample size `n` (1-based).
    pub fn at(&self, n: usize) -> McEstimate {
        McEstimate {
            mean: self.mean[n - 1],
            std_error: self.std_error[n - 1],
            replicates: self.replicates,
        }
    }
}

/// `E[K_n]` curve, each replicate growing one allocation sequence to
/// `n_max` and recording `K_n` along the way.
pub fn expected_kn_curve(
    spec: &LengthProcessSpec,
    n_max: usize,
    replicates: usize,
    seed: u64,
    exec: Exec,
) -> Result<KnCurve> {
    spec.validate()?;
    check_sizes(n_max, replicates)?;
    let moments = run_replicates(
        seed,
        replicates,
        exec,
        |rng, count| -> Result<Vec<Moments>> {
            let mut cover = StickCover::new();
            let mut occupancy = Occupancy::default();
            let mut acc = vec![Moments::default(); n_max];
            for _ in 0..count {
                cover.reset();
                occupancy.clear();
                for m in acc.iter_mut() {
                    let u = rng.random::<f64>();
                    occupancy.hit(cover.locate(u, spec, rng)?);
                    m.push(occupancy.distinct as f64);
                }
            }
            Ok(acc)
        },
        |a, b| Ok(a?.into_iter().zip(b?).map(|(x, y)| x.merge(y)).collect()),
    )
    .expect("replicates > 0")?;
    let est: Vec<McEstimate> = moments.iter().map(Moments::estimate).collect();
    Ok(KnCurve {
        mean: est.iter().map(|e| e.mean).collect(),
        std_error: est.iter().map(|e| e.std_error).collect(),
        replicates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_draw_always_occupies_one_component() {
        let spec = LengthProcessSpec::dsb(1.0, 1.0).unwrap();
        let s = sample_kn(&spec, 1, 500, 1, Exec::Parallel).unwrap();
        assert_eq!(s.pmf, BTreeMap::from([(1, 1.0)]));
        let c = expected_kn_curve(&spec, 1, 500, 1, Exec::Parallel).unwrap();
        assert_eq!(c.mean, vec![1.0]);
        assert_eq!(c.std_error, vec![0.0]);
    }

    #[test]
    fn pmf_is_normalised_on_its_support() {
        let spec = LengthProcessSpec::dsb(0.5, 3.0).unwrap();
        let s = sample_kn(&spec, 20, 5000, 2, Exec::Parallel).unwrap();
        assert!((s.pmf.values().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(s.pmf.keys().all(|&k| (1..=20).contains(&k)));
        assert_eq!(s.replicates, 5000);
    }

    #[test]
    fn shared_beta_mode_is_stable_across_seeds() {
        let spec = LengthProcessSpec::geometric(1.0).unwrap();
        let a = sample_kn(&spec, 20, 10_000, 10, Exec::Parallel).unwrap();
        let b = sample_kn(&spec, 20, 10_000, 11, Exec::Parallel).unwrap();
        assert!(a.mode().abs_diff(b.mode()) <= 1);
    }

    #[test]
    fn large_beta_approaches_iid_lengths() {
        let dsb = LengthProcessSpec::dsb(1000.0, 1.0).unwrap();
        let iid = LengthProcessSpec::dirichlet_process(1.0).unwrap();
        let a = sample_kn(&dsb, 20, 100_000, 3, Exec::Parallel).unwrap();
        let b = sample_kn(&iid, 20, 100_000, 4, Exec::Parallel).unwrap();
        assert!(total_variation(&a, &b) < 0.05);
    }

    #[test]
    fn dirichlet_process_curve_matches_harmonic_sum() {
        let theta = 1.0;
        let spec = LengthProcessSpec::dirichlet_process(theta).unwrap();
        let curve = expected_kn_curve(&spec, 50, 20_000, 5, Exec::Parallel).unwrap();
        let mut exact = 0.0;
        for n in 1..=50 {
            exact += theta / (theta + (n - 1) as f64);
            let e = curve.at(n);
            assert!(
                (e.mean - exact).abs() < 3.0 * e.std_error.max(1e-12),
                "n={n}: {} vs {exact}",
                e.mean
            );
        }
    }

    #[test]
    fn curve_is_monotone() {
        let spec = LengthProcessSpec::dsb(2.0, 2.0).unwrap();
        let curve = expected_kn_curve(&spec, 100, 2000, 6, Exec::Parallel).unwrap();
        assert!(curve.mean.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn execution_mode_does_not_change_results() {
        let spec = LengthProcessSpec::dsb(1.0, 1.0).unwrap();
        let a = sample_kn(&spec, 20, 9000, 7, Exec::Sequential).unwrap();
        let b = sample_kn(&spec, 20, 9000, 7, Exec::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn total_variation_of_disjoint_supports_is_one() {
        let p = KnSummary::from_counts(3, BTreeMap::from([(1, 4)])).unwrap();
        let q = KnSummary::from_counts(3, BTreeMap::from([(2, 1), (3, 1)])).unwrap();
        assert_eq!(total_variation(&p, &q), 1.0);
        assert_eq!(total_variation(&p, &p), 0.0);
    }
}
