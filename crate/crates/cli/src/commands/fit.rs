use std::cell::RefCell;
use std::time::Instant;

use esbmix::mcmc::{
    cluster_assign, eap_density, map_select, posterior_kn, run_chain_with, sample_density, Dataset, FitConfig,
    FitPrior, MixtureKernel,
};
use esbmix::parallel::stream_rng;
use esbmix::Exec;
use serde::Serialize;

use super::{write_manifest, RunContext};
use crate::config::{self, positive, Axis, FitRunConfig, GridConfig};
use crate::error::{CliError, Result};
use crate::io::{num, opt_num, read_dataset, CsvFile, OutDir, Table};

/// Run statistics recorded in the manifest.
#[derive(Debug, Clone, Serialize)]
pub struct FitSummary {
    pub observations: usize,
    pub dim: usize,
    pub retained: usize,
    pub invariant_checks: usize,
    pub invariant_failures: usize,
    pub stuck_length_updates: u64,
    pub map_sample: usize,
    pub map_sweep: usize,
    pub map_log_score: f64,
    pub posterior_kn_mode: usize,
    pub posterior_mean_rho: Option<f64>,
    pub density_integral: f64,
}

fn default_grid(data: &Dataset) -> GridConfig {
    let axis = |c: usize, points: usize| {
        let (lo, hi) = data
            .rows()
            .map(|r| r[c])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
        let pad = (0.5 * (hi - lo)).max(1.0);
        Axis {
            lo: lo - pad,
            hi: hi + pad,
            points,
        }
    };
    if data.dim() == 1 {
        GridConfig {
            x: axis(0, 1001),
            y: None,
        }
    } else {
        GridConfig {
            x: axis(0, 101),
            y: Some(axis(1, 101)),
        }
    }
}

fn grid_points(grid: &GridConfig, dim: usize) -> Result<Dataset> {
    grid.x.validate()?;
    match (dim, &grid.y) {
        (1, None) => Ok(Dataset::univariate(grid.x.values().collect())?),
        (2, Some(y)) => {
            y.validate()?;
            let rows: Vec<[f64; 2]> = grid.x.values().flat_map(|a| y.values().map(move |b| [a, b])).collect();
            Ok(Dataset::bivariate(&rows)?)
        }
        (1, Some(_)) => Err(CliError::Invalid("univariate data takes a grid without y".into())),
        _ => Err(CliError::Invalid("bivariate data needs both grid axes".into())),
    }
}

/// Trapezoid rule over the grid.
fn integral(grid: &GridConfig, values: &[f64]) -> f64 {
    let weights = |axis: &Axis| -> Vec<f64> {
        (0..axis.points)
            .map(|i| if i == 0 || i + 1 == axis.points { 0.5 } else { 1.0 } * axis.step())
            .collect()
    };
    let wx = weights(&grid.x);
    match &grid.y {
        None => wx.iter().zip(values).map(|(w, v)| w * v).sum(),
        Some(y) => {
            let wy = weights(y);
            let mut total = 0.0;
            for (i, a) in wx.iter().enumerate() {
                for (j, b) in wy.iter().enumerate() {
                    total += a * b * values[i * wy.len() + j];
                }
            }
            total
        }
    }
}

/// Fits the mixture to `--data` and writes `density.csv`, `kn.csv`,
/// `clusters.csv`, `trace.csv`, `rho_histogram.csv` (random tie probability
/// only) and `manifest.json`. Everything is validated before the output
/// directory is touched.
pub fn fit(ctx: &RunContext) -> Result<FitSummary> {
    let started = Instant::now();
    let mut cfg: FitRunConfig = config::load(ctx.config.as_deref())?;
    let seed = ctx.seed_or(cfg.seed);
    cfg.seed = seed;
    positive("rho_bins", cfg.rho_bins)?;
    let path = ctx
        .data
        .as_deref()
        .ok_or_else(|| CliError::Invalid("fit needs --data <csv>".into()))?;
    let data = read_dataset(path, ctx.header)?;

    let prior = cfg.prior.fit_prior()?;
    let kernel = match cfg.kernel {
        Some(k) => k,
        None if data.dim() == 1 => MixtureKernel::default_univariate(&data),
        None => MixtureKernel::default_bivariate(&data),
    };
    if kernel.dim() != data.dim() {
        return Err(CliError::Invalid(format!(
            "{}-dimensional data for a {}-dimensional kernel",
            data.dim(),
            kernel.dim()
        )));
    }
    cfg.kernel = Some(kernel);
    let grid = cfg.grid.clone().unwrap_or_else(|| default_grid(&data));
    let points = grid_points(&grid, data.dim())?;
    cfg.grid = Some(grid.clone());
    let fit_config = FitConfig {
        prior,
        kernel,
        iterations: cfg.iterations,
        burn_in: cfg.burn_in,
        thin: cfg.thin,
        seed,
        min_truncation: cfg.min_truncation,
    };
    fit_config.validate()?;

    let mut out = OutDir::create(&ctx.out)?;
    let trace = RefCell::new(Some(CsvFile::create(out.path("trace.csv"), &["sweep", "kn", "rho", "log_score"])?));
    let trace_err = RefCell::new(None);
    let mut rng = stream_rng(seed, 0);
    let chain = run_chain_with(&data, &fit_config, &mut rng, |r| {
        if let Some(w) = trace.borrow_mut().as_mut() {
            if let Err(e) = w.row([r.sweep.to_string(), r.kn.to_string(), opt_num(r.rho), num(r.log_score)]) {
                trace_err.borrow_mut().get_or_insert(e);
            }
        }
    })?;
    if let Some(e) = trace_err.into_inner() {
        return Err(e);
    }
    trace.into_inner().expect("trace writer").finish()?;
    out.record("trace.csv");

    let samples = &chain.samples;
    let invariant_failures = samples.iter().filter(|s| s.check_invariants().is_err()).count();
    if invariant_failures > 0 {
        log::warn!("{invariant_failures} retained samples failed the state invariants");
    }
    let map = map_select(samples).ok_or_else(|| CliError::Invalid("no sweeps retained".into()))?;
    let eap = eap_density(samples, &points, Exec::Parallel)?;
    let map_density = sample_density(&samples[map], &points);

    let mut table = if data.dim() == 1 {
        Table::new(["point", "eap_density", "map_density"])?
    } else {
        Table::new(["x", "y", "eap_density", "map_density"])?
    };
    for ((p, e), m) in points.rows().zip(&eap).zip(&map_density) {
        table.row(p.iter().copied().chain([*e, *m]).map(num))?;
    }
    out.write("density.csv", &table.into_bytes()?)?;

    let kn = posterior_kn(samples)?;
    let mut table = Table::new(["k", "probability"])?;
    for (k, p) in &kn.pmf {
        table.row([k.to_string(), num(*p)])?;
    }
    out.write("kn.csv", &table.into_bytes()?)?;

    let labels = cluster_assign(&samples[map], &data)?;
    let mut table = Table::new(["row", "label"])?;
    for (i, l) in labels.iter().enumerate() {
        table.row([i.to_string(), l.to_string()])?;
    }
    out.write("clusters.csv", &table.into_bytes()?)?;

    let rhos: Vec<f64> = samples.iter().filter_map(|s| s.rho()).collect();
    if let FitPrior::RandomRho { lo, hi, .. } = prior {
        let width = (hi - lo) / cfg.rho_bins as f64;
        let mut counts = vec![0u64; cfg.rho_bins];
        for &r in &rhos {
            counts[(((r - lo) / width) as usize).min(cfg.rho_bins - 1)] += 1;
        }
        let mut table = Table::new(["bin_lo", "bin_hi", "frequency"])?;
        for (i, c) in counts.iter().enumerate() {
            let f = *c as f64 / rhos.len() as f64;
            table.row([num(lo + i as f64 * width), num(lo + (i + 1) as f64 * width), num(f)])?;
        }
        out.write("rho_histogram.csv", &table.into_bytes()?)?;
    }

    let summary = FitSummary {
        observations: data.len(),
        dim: data.dim(),
        retained: samples.len(),
        invariant_checks: samples.len(),
        invariant_failures,
        stuck_length_updates: chain.stats.stuck_lengths,
        map_sample: map,
        map_sweep: chain.trace[map].sweep,
        map_log_score: samples[map].log_score(),
        posterior_kn_mode: kn.mode(),
        posterior_mean_rho: (!rhos.is_empty()).then(|| rhos.iter().sum::<f64>() / rhos.len() as f64),
        density_integral: integral(&grid, &eap),
    };
    write_manifest(&mut out, "fit", ctx, seed, &cfg, started, &summary)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapezoid_weights() {
        let g = GridConfig {
            x: Axis {
                lo: 0.0,
                hi: 2.0,
                points: 3,
            },
            y: None,
        };
        assert_eq!(integral(&g, &[1.0, 1.0, 1.0]), 2.0);
        let g2 = GridConfig {
            x: g.x,
            y: Some(Axis {
                lo: 0.0,
                hi: 1.0,
                points: 2,
            }),
        };
        assert_eq!(integral(&g2, &[1.0; 6]), 2.0);
        assert_eq!(grid_points(&g2, 2).unwrap().row(1), &[0.0, 1.0]);
    }
}
