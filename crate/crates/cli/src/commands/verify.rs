use std::collections::BTreeMap;
use std::time::Instant;

use esbmix::analytics::{
    allocation_probability, allocation_probability_dsb, allocation_tally, mc_ordering_probability,
    ordering_probability_dsb, total_variation, AllocationVector, KnSummary,
};
use esbmix::eppf::check_addition_rule;
use esbmix::mcmc::{run_chain, Dataset, FitConfig, FitPrior, MixtureKernel, SuffStats};
use esbmix::numerics::{gauss_2f1_11, SeriesTolerance};
use esbmix::parallel::{stream_rng, Moments};
use esbmix::sticks::{sample_lengths_prefix, sb_inverse, sb_transform};
use esbmix::{EppfModel, Exec, LengthPrefix, LengthProcessSpec};
use rand::Rng;
use serde::Serialize;

use super::{write_manifest, RunContext};
use crate::config::{self, positive, VerifyConfig};
use crate::error::Result;
use crate::io::OutDir;

/// Deliberate defects for exercising the harness itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Fault {
    /// Flip the sign of the correction term in the ordering closed form.
    OrderingSign,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Largest discrepancy seen; compared with `threshold`.
    pub statistic: f64,
    pub threshold: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub fault: Option<Fault>,
    pub passed: bool,
    pub checks: Vec<Check>,
}

fn check(name: &str, statistic: f64, threshold: f64, detail: String) -> Check {
    Check {
        name: name.into(),
        passed: statistic < threshold,
        statistic,
        threshold,
        detail,
    }
}

/// `|a - b|` in standard errors; exact agreement counts as zero.
fn z(a: f64, b: f64, se: f64) -> f64 {
    let d = (a - b).abs();
    if d == 0.0 {
        0.0
    } else {
        d / se
    }
}

fn addition_rule(seed: u64) -> Result<Check> {
    let models = [
        EppfModel::dirichlet(0.5)?,
        EppfModel::dirichlet(1.0)?,
        EppfModel::dirichlet(3.0)?,
        EppfModel::pitman_yor(0.25, 0.5)?,
        EppfModel::pitman_yor(0.5, 1.0)?,
    ];
    let mut rng = stream_rng(seed, 1);
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let n = rng.random_range(1..=10usize);
        let mut sizes = Vec::new();
        let mut left = n;
        while left > 0 {
            let s = rng.random_range(1..=left);
            sizes.push(s);
            left -= s;
        }
        for m in &models {
            worst = worst.max(check_addition_rule(m, &sizes)?);
        }
    }
    Ok(check("eppf_addition_rule", worst, 1e-12, "500 compositions, n <= 10, 5 models".into()))
}

fn hypergeometric() -> Result<Check> {
    let value = gauss_2f1_11(3.0, 0.5, SeriesTolerance::default())?;
    let exact = 4.0 * (1.0 - std::f64::consts::LN_2);
    Ok(check("gauss_2f1_spot_value", (value - exact).abs(), 1e-10, "2F1(1,1;3;1/2) = 4(1 - ln 2)".into()))
}

fn round_trip(seed: u64) -> Result<Check> {
    let mut rng = stream_rng(seed, 2);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let v: Vec<f64> = (0..30).map(|_| rng.random_range(1e-6..1.0 - 1e-6)).collect();
        let back = sb_inverse(&sb_transform(&v))?;
        let mut left = 1.0;
        for (a, b) in v.iter().zip(&back) {
            worst = worst.max((a - b).abs() * left);
            left *= 1.0 - a;
        }
    }
    Ok(check(
        "stick_breaking_round_trip",
        worst,
        1e-15,
        "error in v_k scaled by the stick left before it, 1000 prefixes of length 30".into(),
    ))
}

fn ordering(seed: u64, reps: usize, fault: Option<Fault>) -> Result<Check> {
    let mut worst: f64 = 0.0;
    let mut identity: f64 = 0.0;
    for (i, (beta, theta)) in [(1.0, 1.0), (9.0, 1.0), (1.0, 3.0), (0.25, 2.0)].into_iter().enumerate() {
        let mut closed = ordering_probability_dsb(beta, theta)?;
        if fault == Some(Fault::OrderingSign) {
            closed = 2.0 - closed;
        }
        let spec = LengthProcessSpec::dsb(beta, theta)?;
        let mc = mc_ordering_probability(&spec, 1, reps, seed.wrapping_add(i as u64), Exec::Parallel)?;
        worst = worst.max(z(closed, mc.mean, mc.std_error));
        if theta == 1.0 {
            identity = identity.max((closed - (1.0 + beta * std::f64::consts::LN_2) / (1.0 + beta)).abs());
        }
    }
    // a broken theta = 1 identity fails the check outright
    let statistic = if identity < 1e-10 { worst } else { f64::INFINITY };
    Ok(check(
        "ordering_closed_form",
        statistic,
        3.0,
        format!("max |closed - mc| / se over 4 (beta, theta); theta = 1 identity error {identity:e}"),
    ))
}

fn allocation_paths() -> Result<Check> {
    let mut worst: f64 = 0.0;
    let model = EppfModel::dirichlet(1.5)?;
    for n in 1..=3u32 {
        for code in 0..3usize.pow(n) {
            let d: Vec<usize> = (0..n).map(|i| code / 3usize.pow(i) % 3 + 1).collect();
            let a = AllocationVector::new(d)?;
            let generic = allocation_probability(&a, &model, 1.0, 2.0)?;
            let closed = allocation_probability_dsb(&a, 1.5, 2.0)?;
            worst = worst.max((generic - closed).abs());
        }
    }
    Ok(check("allocation_closed_form_path", worst, 1e-10, "all d with n <= 3, entries <= 3".into()))
}

fn allocation_mc(seed: u64, reps: usize) -> Result<Check> {
    let spec = LengthProcessSpec::dsb(1.0, 1.0)?;
    let tally = allocation_tally(&spec, 2, reps, seed, Exec::Parallel)?;
    let mut worst: f64 = 0.0;
    for d1 in 1..=3 {
        for d2 in 1..=3 {
            let a = AllocationVector::new(vec![d1, d2])?;
            let p = allocation_probability(&a, &spec.eppf(), 1.0, 1.0)?;
            let f = *tally.get(&vec![d1, d2]).unwrap_or(&0) as f64 / reps as f64;
            worst = worst.max(z(p, f, (p * (1.0 - p) / reps as f64).sqrt()));
        }
    }
    Ok(check("allocation_exact_vs_mc", worst, 4.0, "n = 2, entries <= 3, DSB(1, 1)".into()))
}

fn ties(seed: u64, reps: usize) -> Result<Check> {
    let spec = LengthProcessSpec::dsb(2.0, 1.0)?;
    let mut rng = stream_rng(seed, 3);
    let mut m = Moments::default();
    for _ in 0..reps {
        let p = sample_lengths_prefix(&spec, 2, &mut rng);
        m.push(if p.num_distinct() == 1 { 1.0 } else { 0.0 });
    }
    let e = m.estimate();
    Ok(check(
        "tie_probability",
        z(e.mean, 1.0 / 3.0, e.std_error),
        4.0,
        format!("DSB(2, 1): frequency {} vs 1/3", e.mean),
    ))
}

fn conjugate(seed: u64) -> Result<Check> {
    let (mu0, lambda, a, b) = (1.0, 0.5, 2.0, 1.5);
    let kernel = MixtureKernel::UnivariateNormalGamma { mu0, lambda, a, b };
    let ys = [0.3, 1.9, -0.4, 2.2, 1.1];
    let mut stats = SuffStats::new(1);
    for y in ys {
        stats.push(&[y]);
    }
    let n = ys.len() as f64;
    let ybar = ys.iter().sum::<f64>() / n;
    let ss: f64 = ys.iter().map(|y| (y - ybar).powi(2)).sum();
    let ln = lambda + n;
    let mun = (lambda * mu0 + n * ybar) / ln;
    let an = a + n / 2.0;
    let bn = b + ss / 2.0 + lambda * n * (ybar - mu0).powi(2) / (2.0 * ln);

    let mut rng = stream_rng(seed, 4);
    let (mut mean, mut prec) = (Moments::default(), Moments::default());
    for _ in 0..50_000 {
        if let esbmix::mcmc::Atom::Normal { mean: m, precision } = kernel.sample_posterior(&stats, &mut rng)? {
            mean.push(m);
            prec.push(precision);
        }
    }
    let (em, ep) = (mean.estimate(), prec.estimate());
    let worst = z(em.mean, mun, em.std_error).max(z(ep.mean, an / bn, ep.std_error));
    Ok(check(
        "normal_gamma_posterior",
        worst,
        4.0,
        "posterior mean of the location and the precision, 50000 draws".into(),
    ))
}

fn prior_recovery(seed: u64, sweeps: usize) -> Result<Check> {
    let spec = LengthProcessSpec::dsb(1.0, 2.0)?;
    let data = Dataset::univariate(Vec::new())?;
    let mut config = FitConfig::new(
        FitPrior::Lengths(spec),
        MixtureKernel::UnivariateNormalGamma {
            mu0: 0.0,
            lambda: 0.01,
            a: 0.5,
            b: 0.5,
        },
    );
    config.iterations = sweeps + 100;
    config.burn_in = 100;
    config.thin = 1;
    config.seed = seed;
    let out = run_chain(&data, &config, |_| {})?;
    let distinct_in_ten = |l: &LengthPrefix| {
        let mut seen = l.atom_index()[..10].to_vec();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    };
    let mut chain = BTreeMap::new();
    for s in &out.samples {
        *chain.entry(distinct_in_ten(s.lengths())).or_insert(0) += 1;
    }
    let mut prior = BTreeMap::new();
    let mut rng = stream_rng(seed, 5);
    for _ in 0..100_000 {
        *prior
            .entry(distinct_in_ten(&sample_lengths_prefix(&spec, 10, &mut rng)))
            .or_insert(0) += 1;
    }
    let tv = total_variation(&KnSummary::from_counts(10, chain)?, &KnSummary::from_counts(10, prior)?);
    Ok(check(
        "prior_recovery",
        tv,
        0.03,
        format!("TV of distinct values among 10 lengths, {sweeps} zero-data sweeps"),
    ))
}

/// Runs the oracle suite and writes `verify_report.json`.
pub fn verify(ctx: &RunContext) -> Result<VerifyReport> {
    let started = Instant::now();
    let cfg: VerifyConfig = config::load(ctx.config.as_deref())?;
    let seed = ctx.seed_or(cfg.seed);
    positive("mc_replicates", cfg.mc_replicates)?;
    positive("prior_recovery_sweeps", cfg.prior_recovery_sweeps)?;
    let checks = vec![
        addition_rule(seed)?,
        hypergeometric()?,
        round_trip(seed)?,
        ordering(seed, cfg.mc_replicates, ctx.fault)?,
        allocation_paths()?,
        allocation_mc(seed, cfg.mc_replicates)?,
        ties(seed, cfg.mc_replicates)?,
        conjugate(seed)?,
        prior_recovery(seed, cfg.prior_recovery_sweeps)?,
    ];
    for c in &checks {
        log::info!("{} {}: {} (< {})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.statistic, c.threshold);
    }
    let report = VerifyReport {
        seed,
        fault: ctx.fault,
        passed: checks.iter().all(|c| c.passed),
        checks,
    };
    let mut out = OutDir::create(&ctx.out)?;
    out.write_json("verify_report.json", &report)?;
    write_manifest(&mut out, "verify", ctx, seed, &cfg, started, ())?;
    Ok(report)
}
