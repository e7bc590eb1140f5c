use rand::Rng;
use serde::Serialize;

use super::data::Dataset;
use super::estimators::complete_data_log_score;
use super::state::GibbsState;
use super::updates::{extend, gibbs_sweep, update_atoms, SweepContext, SweepStats};
use super::FitConfig;
use crate::numerics::open01;
use crate::parallel::{map_ordered, stream_rng, Exec};
use crate::sticks::sample_lengths_prefix;
use crate::{Error, Result};

/// Per retained sweep summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRecord {
    pub sweep: usize,
    pub kn: usize,
    pub rho: Option<f64>,
    pub log_score: f64,
}

#[derive(Debug, Clone)]
pub struct ChainOutput {
    pub samples: Vec<GibbsState>,
    pub trace: Vec<TraceRecord>,
    pub stats: SweepStats,
}

/// Starting point: every observation on the first stick, `min_truncation`
/// lengths from the prior, atoms from their conditionals.
pub fn initial_state<R: Rng + ?Sized>(data: &Dataset, config: &FitConfig, rng: &mut R) -> Result<GibbsState> {
    config.validate()?;
    if data.dim() != config.kernel.dim() {
        return Err(Error::InvalidParameter(format!(
            "{}-dimensional data for a {}-dimensional kernel",
            data.dim(),
            config.kernel.dim()
        )));
    }
    let rho = config.prior.initial_rho();
    let spec = config.prior.spec(rho)?;
    let lengths = sample_lengths_prefix(&spec, config.min_truncation.max(1), rng);
    let w0 = lengths.values()[0];
    let mut state = GibbsState {
        u: (0..data.len()).map(|_| w0 * open01(rng)).collect(),
        d: vec![0; data.len()],
        weights: Vec::new(),
        atoms: Vec::new(),
        lengths,
        rho,
        log_score: f64::NAN,
    };
    extend(&mut state, &spec, &config.kernel, config.min_truncation, rng)?;
    update_atoms(&mut state, data, &config.kernel, rng)?;
    state.log_score = complete_data_log_score(&state, data, &config.kernel, &spec)?;
    state.check_invariants()?;
    Ok(state)
}

/// Runs one chain for `config.iterations` sweeps, keeping every `thin`-th
/// sweep after burn-in; `on_retain` sees each retained trace record as it
/// is produced.
pub fn run_chain_with<R, F>(data: &Dataset, config: &FitConfig, rng: &mut R, mut on_retain: F) -> Result<ChainOutput>
where
    R: Rng + ?Sized,
    F: FnMut(&TraceRecord),
{
    let mut state = initial_state(data, config, rng)?;
    let ctx = SweepContext {
        prior: &config.prior,
        kernel: &config.kernel,
        min_truncation: config.min_truncation,
    };
    let mut out = ChainOutput {
        samples: Vec::with_capacity(config.retained()),
        trace: Vec::with_capacity(config.retained()),
        stats: SweepStats::default(),
    };
    for sweep in 1..=config.iterations {
        gibbs_sweep(&mut state, data, &ctx, &mut out.stats, rng)?;
        if sweep > config.burn_in && (sweep - config.burn_in).is_multiple_of(config.thin) {
            let record = TraceRecord {
                sweep,
                kn: state.occupied(),
                rho: state.rho,
                log_score: state.log_score,
            };
            on_retain(&record);
            out.trace.push(record);
            out.samples.push(state.clone());
        }
    }
    if out.stats.stuck_lengths > 0 {
        log::debug!("{} length updates kept their value after rounding", out.stats.stuck_lengths);
    }
    Ok(out)
}

/// Chain seeded from `config.seed` on random stream 0.
pub fn run_chain<F: FnMut(&TraceRecord)>(data: &Dataset, config: &FitConfig, on_retain: F) -> Result<ChainOutput> {
    let mut rng = stream_rng(config.seed, 0);
    run_chain_with(data, config, &mut rng, on_retain)
}

/// Independent chains on streams `0..chains`, run concurrently under
/// `Exec::Parallel`.
pub fn run_chains(data: &Dataset, config: &FitConfig, chains: usize, exec: Exec) -> Result<Vec<ChainOutput>> {
    map_ordered(chains, exec, |c| {
        let mut rng = stream_rng(config.seed, c as u64);
        run_chain_with(data, config, &mut rng, |_| {})
    })
    .into_iter()
    .collect()
}
