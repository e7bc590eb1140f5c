//! Finite-dimensional laws of the latent allocation variables
//! `d_1, .., d_n | W ~iid sum_j w_j delta_j`.

use std::collections::BTreeMap;

use rand::Rng;

use crate::eppf::EppfModel;
use crate::numerics::{ln_beta_moment, ln_factorial, ln_gamma, ln_rising_factorial, sample_beta};
use crate::parallel::{run_replicates, Exec, McEstimate, Moments};
use crate::partitions::{RgsIter, DEFAULT_PARTITION_CAP};
use crate::sticks::{pick_slot, LengthProcessSpec, MAX_STICKS};
use crate::{Error, Result};

/// Allocation vector `(d_1, .., d_n)` with 1-based component labels, together
/// with `r_i = #{l: d_l = i}` and `t_i = #{l: d_l > i}` for `i = 1..k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AllocationVector {
    d: Vec<usize>,
    r: Vec<usize>,
    t: Vec<usize>,
}

impl AllocationVector {
    pub fn new(d: Vec<usize>) -> Result<Self> {
        if d.is_empty() || d.contains(&0) {
            return Err(Error::InvalidParameter(format!(
                "allocations must be a nonempty list of positive integers, got {d:?}"
            )));
        }
        let k = *d.iter().max().unwrap();
        let mut r = vec![0; k];
        for &di in &d {
            r[di - 1] += 1;
        }
        let mut t = vec![0; k];
        let mut above = 0;
        for i in (0..k).rev() {
            t[i] = above;
            above += r[i];
        }
        Ok(Self { d, r, t })
    }

    pub fn d(&self) -> &[usize] {
        &self.d
    }

    pub fn r(&self) -> &[usize] {
        &self.r
    }

    pub fn t(&self) -> &[usize] {
        &self.t
    }

    /// `max_i d_i`.
    pub fn k(&self) -> usize {
        self.r.len()
    }
}

/// Sums `term(rgs, blocks)` over all set partitions of `{0..k-1}`, in log space.
fn log_partition_sum<F>(k: usize, cap: usize, mut log_term: F) -> Result<f64>
where
    F: FnMut(&[usize], usize) -> f64,
{
    if k > cap {
        return Err(Error::PartitionCap {
            k,
            cap,
            bell: crate::partitions::bell_number(k),
        });
    }
    // running log-sum-exp
    let mut max = f64::NEG_INFINITY;
    let mut acc = 0.0;
    let mut iter = RgsIter::new(k);
    while let Some((rgs, blocks)) = iter.advance() {
        let x = log_term(rgs, blocks);
        if x == f64::NEG_INFINITY {
            continue;
        }
        if x > max {
            acc = acc * (max - x).exp() + 1.0;
            max = x;
        } else {
            acc += (x - max).exp();
        }
    }
    Ok(if max == f64::NEG_INFINITY {
        max
    } else {
        max + acc.ln()
    })
}

/// Per-block `(|A_j|, sum_{i in A_j} r_i, sum_{i in A_j} t_i)`.
fn block_stats(alloc: &AllocationVector, rgs: &[usize], blocks: usize, out: &mut Vec<[usize; 3]>) {
    out.clear();
    out.resize(blocks, [0; 3]);
    for (i, &b) in rgs.iter().enumerate() {
        out[b][0] += 1;
        out[b][1] += alloc.r[i];
        out[b][2] += alloc.t[i];
    }
}

/// `P[d_1 = d_1, .., d_n = d_n]` for lengths driven by `model` with a
/// `Be(base_a, base_b)` base measure: a sum over the set partitions of
/// `{1..k}` of the EPPF times products of Beta moments.
pub fn allocation_probability(
    alloc: &AllocationVector,
    model: &EppfModel,
    base_a: f64,
    base_b: f64,
) -> Result<f64> {
    allocation_probability_capped(alloc, model, base_a, base_b, DEFAULT_PARTITION_CAP)
}

pub fn allocation_probability_capped(
    alloc: &AllocationVector,
    model: &EppfModel,
    base_a: f64,
    base_b: f64,
    cap: usize,
) -> Result<f64> {
    model.validate()?;
    if !(base_a > 0.0 && base_b > 0.0) {
        return Err(Error::InvalidParameter("Beta base needs positive shapes".into()));
    }
    let mut stats = Vec::new();
    let mut sizes = Vec::new();
    let ln_p = log_partition_sum(alloc.k(), cap, |rgs, blocks| {
        block_stats(alloc, rgs, blocks, &mut stats);
        sizes.clear();
        sizes.extend(stats.iter().map(|s| s[0]));
        let ln_eppf = model.log_eppf_unchecked(&sizes);
        if ln_eppf == f64::NEG_INFINITY {
            return ln_eppf;
        }
        ln_eppf
            + stats
                .iter()
                .map(|&[_, r, t]| ln_beta_moment(base_a, base_b, r as f64, t as f64))
                .sum::<f64>()
    })?;
    Ok(ln_p.exp())
}

/// Dirichlet-driven closed form:
/// `sum (beta theta)^m / (beta)_k prod (|A_j|-1)! R_j! / (theta + T_j)_{1+R_j}`.
pub fn allocation_probability_dsb(alloc: &AllocationVector, beta: f64, theta: f64) -> Result<f64> {
    if !(beta > 0.0 && theta > 0.0) {
        return Err(Error::InvalidParameter("need beta > 0 and theta > 0".into()));
    }
    let k = alloc.k();
    let ln_beta_theta = (beta * theta).ln();
    let ln_norm = ln_rising_factorial(beta, k, 1.0);
    let mut stats = Vec::new();
    let ln_p = log_partition_sum(k, DEFAULT_PARTITION_CAP, |rgs, blocks| {
        block_stats(alloc, rgs, blocks, &mut stats);
        blocks as f64 * ln_beta_theta - ln_norm
            + stats
                .iter()
                .map(|&[size, r, t]| {
                    ln_factorial(size - 1) + ln_factorial(r)
                        - ln_rising_factorial(theta + t as f64, 1 + r, 1.0)
                })
                .sum::<f64>()
    })?;
    Ok(ln_p.exp())
}

/// Draws `n` allocation variables (1-based) from freshly simulated weights,
/// instantiating sticks only until they cover the largest uniform.
pub fn sample_allocations<R: Rng + ?Sized>(
    spec: &LengthProcessSpec,
    n: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let uniforms: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let mut cover = StickCover::new();
    uniforms
        .iter()
        .map(|&u| cover.locate(u, spec, rng).map(|j| j + 1))
        .collect()
}

/// A value shared by at least this many sticks, and by no other, has its
/// further ties drawn as one run.
const RUN_AFTER: usize = 64;

/// Largest run length drawn explicitly; longer runs are treated as endless.
const RUN_LIMIT: usize = 1 << 52;

/// Consecutive sticks `start..start + len` sharing the length `v`, with the
/// stick left before them and the cumulative weight after them.
#[derive(Debug, Clone, Copy)]
struct Segment {
    start: usize,
    len: usize,
    v: f64,
    left: f64,
    cumulative: f64,
}

/// Lazily grown weight prefix with cumulative sums `1 - prod_{i<=j}(1 - v_i)`.
/// Long runs of ties to a single value are stored as one segment.
pub(crate) struct StickCover {
    counts: Vec<usize>,
    distinct: Vec<f64>,
    weights: Vec<f64>,
    segments: Vec<Segment>,
    sticks: usize,
    remaining: f64,
}

impl StickCover {
    pub(crate) fn new() -> Self {
        Self {
            counts: Vec::new(),
            distinct: Vec::new(),
            weights: Vec::new(),
            segments: Vec::new(),
            sticks: 0,
            remaining: 1.0,
        }
    }

    pub(crate) fn reset(&mut self) {
        self.counts.clear();
        self.distinct.clear();
        self.segments.clear();
        self.sticks = 0;
        self.remaining = 1.0;
    }

    fn push(&mut self, slot: usize, len: usize) {
        let v = self.distinct[slot];
        self.counts[slot] = self.counts[slot].saturating_add(len);
        let left = self.remaining;
        self.remaining = if len == 1 {
            left * (1.0 - v)
        } else {
            left * (len as f64 * (-v).ln_1p()).exp()
        };
        self.segments.push(Segment {
            start: self.sticks,
            len,
            v,
            left,
            cumulative: 1.0 - self.remaining,
        });
        self.sticks = self.sticks.saturating_add(len);
    }

    fn push_new(&mut self, v: f64) {
        self.distinct.push(v);
        self.counts.push(0);
        self.push(self.distinct.len() - 1, 1);
    }

    fn extend<R: Rng + ?Sized>(&mut self, spec: &LengthProcessSpec, rng: &mut R) {
        let (a, b) = spec.base();
        let eppf = spec.eppf();
        if self.counts.len() == 1 && self.counts[0] >= RUN_AFTER && eppf != EppfModel::IidDegenerate {
            match tie_run(&eppf, self.counts[0], rng) {
                Some(t) => {
                    if t > 0 {
                        self.push(0, t);
                    }
                    self.push_new(sample_beta(a, b, rng));
                }
                None => self.push(0, RUN_LIMIT),
            }
            return;
        }
        match spec {
            LengthProcessSpec::IidBeta { .. } => self.push_new(sample_beta(a, b, rng)),
            LengthProcessSpec::SharedBeta { .. } => {
                if self.distinct.is_empty() {
                    self.push_new(sample_beta(a, b, rng));
                } else {
                    self.push(0, 1);
                }
            }
            LengthProcessSpec::SpeciesDriven { eppf, .. } => {
                self.weights.resize(self.counts.len(), 0.0);
                let new = eppf.prediction_weights_into(&self.counts, &mut self.weights);
                match pick_slot(&self.weights, new, rng) {
                    Some(slot) => self.push(slot, 1),
                    None => self.push_new(sample_beta(a, b, rng)),
                }
            }
        }
    }

    /// 0-based index `i` with `S_{i-1} <= u < S_i`.
    pub(crate) fn locate<R: Rng + ?Sized>(
        &mut self,
        u: f64,
        spec: &LengthProcessSpec,
        rng: &mut R,
    ) -> Result<usize> {
        while self.segments.last().is_none_or(|s| s.cumulative <= u) {
            if self.segments.len() >= MAX_STICKS {
                return Err(Error::TruncationCap {
                    threshold: u,
                    cap: MAX_STICKS,
                    residual: self.remaining,
                });
            }
            self.extend(spec, rng);
        }
        let seg = self.segments[self.segments.partition_point(|s| s.cumulative <= u)];
        if seg.len == 1 {
            return Ok(seg.start);
        }
        let offset = ((1.0 - u) / seg.left).ln() / (-seg.v).ln_1p();
        Ok(seg.start + (offset.max(0.0) as usize).min(seg.len - 1))
    }
}

/// Number of further ties to a value already shared by `m` lengths before
/// the next new value, when no other value has appeared. `None` when the run
/// exceeds [`RUN_LIMIT`].
fn tie_run<R: Rng + ?Sized>(eppf: &EppfModel, m: usize, rng: &mut R) -> Option<usize> {
    let (alpha, beta) = match *eppf {
        EppfModel::Dirichlet { beta } => (0.0, beta),
        EppfModel::PitmanYor { alpha, beta } => (alpha, beta),
        EppfModel::IdenticalDegenerate => return None,
        EppfModel::IidDegenerate => return Some(0),
    };
    let m = m as f64;
    // -ln P(the next t lengths all tie)
    let hazard = |t: usize| {
        let t = t as f64;
        ln_gamma(m + t + beta) - ln_gamma(m + beta) - ln_gamma(m + t - alpha) + ln_gamma(m - alpha)
    };
    let e = -(1.0 - rng.random::<f64>()).ln();
    let mut hi = 1usize;
    while hazard(hi) < e {
        if hi >= RUN_LIMIT {
            return None;
        }
        hi *= 2;
    }
    // largest t with hazard(t) < e lies in [lo, hi)
    let mut lo = hi / 2;
    if hazard(lo) >= e {
        lo = 0;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if hazard(mid) < e {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}

/// Monte Carlo frequency of one allocation vector.
pub fn allocation_probability_mc(
    alloc: &AllocationVector,
    spec: &LengthProcessSpec,
    replicates: usize,
    seed: u64,
    exec: Exec,
) -> Result<McEstimate> {
    spec.validate()?;
    if replicates == 0 {
        return Err(Error::InvalidParameter("replicates must be positive".into()));
    }
    let n = alloc.d().len();
    run_replicates(
        seed,
        replicates,
        exec,
        |rng, count| -> Result<Moments> {
            let mut m = Moments::default();
            for _ in 0..count {
                let hit = sample_allocations(spec, n, rng)? == alloc.d();
                m.push(if hit { 1.0 } else { 0.0 });
            }
            Ok(m)
        },
        |a, b| Ok(a?.merge(b?)),
    )
    .expect("replicates > 0")
    .map(|m| m.estimate())
}

/// Frequencies of every allocation vector of length `n` seen in `replicates`
/// simulations, keyed by the vector.
pub fn allocation_tally(
    spec: &LengthProcessSpec,
    n: usize,
    replicates: usize,
    seed: u64,
    exec: Exec,
) -> Result<BTreeMap<Vec<usize>, u64>> {
    spec.validate()?;
    if replicates == 0 {
        return Err(Error::InvalidParameter("replicates must be positive".into()));
    }
    run_replicates(
        seed,
        replicates,
        exec,
        |rng, count| -> Result<BTreeMap<Vec<usize>, u64>> {
            let mut tally = BTreeMap::new();
            for _ in 0..count {
                *tally.entry(sample_allocations(spec, n, rng)?).or_insert(0) += 1;
            }
            Ok(tally)
        },
        |a, b| {
            let mut a = a?;
            for (key, c) in b? {
                *a.entry(key).or_insert(0) += c;
            }
            Ok(a)
        },
    )
    .expect("replicates > 0")
}
