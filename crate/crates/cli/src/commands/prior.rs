use std::collections::BTreeSet;
use std::time::Instant;

use esbmix::analytics::{
    allocation_probability_capped, allocation_probability_mc, expected_kn_curve, mc_ordering_probability,
    ordering_probability_dsb, ordering_probability_general, sample_kn, AllocationVector,
};
use esbmix::parallel::stream_rng;
use esbmix::Exec;

use super::{write_manifest, RunContext};
use crate::config::{self, labels, positive, AllocProbConfig, BetaLimit, BetaValue, OrderProbConfig, PriorEknConfig, PriorKnConfig};
use crate::error::{CliError, Result};
use crate::io::{num, opt_num, OutDir, Table};

/// `K_n` pmf per prior, one frequency column each (`prior_kn.csv`).
pub fn prior_kn(ctx: &RunContext) -> Result<()> {
    let started = Instant::now();
    let cfg: PriorKnConfig = config::load(ctx.config.as_deref())?;
    let seed = ctx.seed_or(cfg.seed);
    positive("n", cfg.n)?;
    positive("replicates", cfg.replicates)?;
    if cfg.specs.is_empty() {
        return Err(CliError::Invalid("specs must not be empty".into()));
    }
    let specs = cfg.specs.iter().map(|p| p.spec()).collect::<Result<Vec<_>>>()?;

    let mut summaries = Vec::with_capacity(specs.len());
    for (i, spec) in specs.iter().enumerate() {
        log::info!("prior-kn: spec {}/{}", i + 1, specs.len());
        summaries.push(sample_kn(spec, cfg.n, cfg.replicates, seed, Exec::Parallel)?);
    }
    let support: BTreeSet<usize> = summaries.iter().flat_map(|s| s.pmf.keys().copied()).collect();

    let mut table = Table::new(std::iter::once("k".to_string()).chain(labels(&cfg.specs)))?;
    for k in support {
        table.row(std::iter::once(k.to_string()).chain(summaries.iter().map(|s| num(s.probability(k)))))?;
    }
    let mut out = OutDir::create(&ctx.out)?;
    out.write("prior_kn.csv", &table.into_bytes()?)?;
    write_manifest(&mut out, "prior-kn", ctx, seed, &cfg, started, ())
}

/// `E[K_n]` curves with standard errors (`prior_ekn.csv`).
pub fn prior_ekn(ctx: &RunContext) -> Result<()> {
    let started = Instant::now();
    let cfg: PriorEknConfig = config::load(ctx.config.as_deref())?;
    let seed = ctx.seed_or(cfg.seed);
    positive("n_max", cfg.n_max)?;
    positive("replicates", cfg.replicates)?;
    if cfg.specs.is_empty() {
        return Err(CliError::Invalid("specs must not be empty".into()));
    }
    let specs = cfg.specs.iter().map(|p| p.spec()).collect::<Result<Vec<_>>>()?;
    let curves = specs
        .iter()
        .map(|s| expected_kn_curve(s, cfg.n_max, cfg.replicates, seed, Exec::Parallel))
        .collect::<esbmix::Result<Vec<_>>>()?;

    let header = std::iter::once("n".to_string())
        .chain(labels(&cfg.specs).into_iter().flat_map(|l| [format!("{l}_mean"), format!("{l}_se")]));
    let mut table = Table::new(header)?;
    for n in 1..=cfg.n_max {
        let fields = curves.iter().flat_map(|c| {
            let e = c.at(n);
            [num(e.mean), num(e.std_error)]
        });
        table.row(std::iter::once(n.to_string()).chain(fields))?;
    }
    let mut out = OutDir::create(&ctx.out)?;
    out.write("prior_ekn.csv", &table.into_bytes()?)?;
    write_manifest(&mut out, "prior-ekn", ctx, seed, &cfg, started, ())
}

/// `P[w_1 >= w_2]` in closed form and by simulation (`order_prob.csv`).
pub fn order_prob(ctx: &RunContext) -> Result<()> {
    let started = Instant::now();
    let cfg: OrderProbConfig = config::load(ctx.config.as_deref())?;
    let seed = ctx.seed_or(cfg.seed);
    positive("mc_replicates", cfg.mc_replicates)?;

    let mut table = Table::new(["beta", "theta", "closed_form", "mc_estimate", "mc_stderr"])?;
    let mut row = 0u64;
    for &beta in &cfg.betas {
        for &theta in &cfg.thetas {
            let spec = beta.prior(theta).spec()?;
            let closed = match beta {
                BetaValue::Finite(b) => ordering_probability_dsb(b, theta)?,
                BetaValue::Limit(BetaLimit::Geometric) => 1.0,
                BetaValue::Limit(BetaLimit::Dirichlet) => {
                    ordering_probability_general(&spec.eppf(), 1.0, theta, 1, &mut stream_rng(seed, 0))?
                }
            };
            let mc = mc_ordering_probability(&spec, 1, cfg.mc_replicates, seed.wrapping_add(row), Exec::Parallel)?;
            table.row([beta.label(), num(theta), num(closed), num(mc.mean), num(mc.std_error)])?;
            row += 1;
        }
    }
    let mut out = OutDir::create(&ctx.out)?;
    out.write("order_prob.csv", &table.into_bytes()?)?;
    write_manifest(&mut out, "order-prob", ctx, seed, &cfg, started, ())
}

/// Exact and simulated allocation probabilities (`alloc_prob.csv`). Vectors
/// whose largest label exceeds the cap fail unless `mc_fallback` is set, in
/// which case the exact column is left empty.
pub fn alloc_prob(ctx: &RunContext) -> Result<()> {
    let started = Instant::now();
    let cfg: AllocProbConfig = config::load(ctx.config.as_deref())?;
    let seed = ctx.seed_or(cfg.seed);
    positive("mc_replicates", cfg.mc_replicates)?;
    let spec = cfg.prior.spec()?;
    let (a, b) = spec.base();
    let vectors = cfg
        .vectors
        .iter()
        .map(|d| AllocationVector::new(d.clone()))
        .collect::<esbmix::Result<Vec<_>>>()?;
    if !ctx.mc_fallback {
        if let Some(v) = vectors.iter().find(|v| v.k() > cfg.cap) {
            return Err(CliError::Invalid(format!(
                "allocation {:?} has k = {} above the cap {}; pass --mc-fallback to estimate it by simulation",
                v.d(),
                v.k(),
                cfg.cap
            )));
        }
    }

    let mut table = Table::new(["d", "exact_probability", "mc_estimate", "mc_stderr"])?;
    for (row, v) in vectors.iter().enumerate() {
        let exact = if v.k() <= cfg.cap {
            Some(allocation_probability_capped(v, &spec.eppf(), a, b, cfg.cap)?)
        } else {
            None
        };
        let mc = allocation_probability_mc(v, &spec, cfg.mc_replicates, seed.wrapping_add(row as u64), Exec::Parallel)?;
        let d = v.d().iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
        table.row([d, opt_num(exact), num(mc.mean), num(mc.std_error)])?;
    }
    let mut out = OutDir::create(&ctx.out)?;
    out.write("alloc_prob.csv", &table.into_bytes()?)?;
    write_manifest(&mut out, "alloc-prob", ctx, seed, &cfg, started, ())
}
