//! Command-line front end for `esbmix`: prior analytics tables, mixture
//! fitting and a self-verification suite. Every subcommand writes CSV
//! tables plus a `manifest.json` into the output directory.

pub mod commands;
pub mod config;
mod error;
pub mod io;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{Fault, FitSummary, RunContext, VerifyReport};
pub use error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "esbmix", version, about = "Exchangeable stick-breaking priors: analytics and mixture fitting")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON configuration for the subcommand (defaults are used when absent).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the seed in the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "esbmix-out")]
    pub out: PathBuf,
    /// Worker threads (defaults to one per core).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Prior pmf of the number of occupied components.
    PriorKn,
    /// Prior curves of E[K_n].
    PriorEkn,
    /// Probability that the first weight exceeds the second.
    OrderProb,
    /// Exact and simulated allocation probabilities.
    AllocProb {
        /// Estimate vectors above the partition cap by simulation only.
        #[arg(long)]
        mc_fallback: bool,
    },
    /// Fit a mixture to a CSV of 1 or 2 numeric columns.
    Fit {
        #[arg(long)]
        data: PathBuf,
        /// The first row of the data file is a header.
        #[arg(long)]
        header: bool,
    },
    /// Run the oracle suite; exits nonzero when a check fails.
    Verify {
        #[arg(long, value_enum)]
        inject_fault: Option<Fault>,
    },
}

/// Runs the parsed command and returns whether it succeeded (only `verify`
/// can report failure without an error).
pub fn run(cli: &Cli) -> Result<bool> {
    let threads = match cli.global.threads {
        Some(0) => return Err(CliError::Invalid("--threads must be positive".into())),
        Some(t) => t,
        None => default_threads(),
    };
    let mut ctx = RunContext {
        config: cli.global.config.clone(),
        out: cli.global.out.clone(),
        seed: cli.global.seed,
        threads,
        ..RunContext::default()
    };
    match &cli.command {
        Command::AllocProb { mc_fallback } => ctx.mc_fallback = *mc_fallback,
        Command::Fit { data, header } => {
            ctx.data = Some(data.clone());
            ctx.header = *header;
        }
        Command::Verify { inject_fault } => ctx.fault = *inject_fault,
        _ => {}
    }
    in_pool(threads, || dispatch(&cli.command, &ctx))?
}

fn dispatch(command: &Command, ctx: &RunContext) -> Result<bool> {
    match command {
        Command::PriorKn => commands::prior_kn(ctx).map(|_| true),
        Command::PriorEkn => commands::prior_ekn(ctx).map(|_| true),
        Command::OrderProb => commands::order_prob(ctx).map(|_| true),
        Command::AllocProb { .. } => commands::alloc_prob(ctx).map(|_| true),
        Command::Fit { .. } => commands::fit(ctx).map(|_| true),
        Command::Verify { .. } => commands::verify(ctx).map(|r| r.passed),
    }
}

#[cfg(feature = "parallel")]
fn default_threads() -> usize {
    rayon::current_num_threads()
}

#[cfg(not(feature = "parallel"))]
fn default_threads() -> usize {
    1
}

/// Runs `f` on a dedicated pool of `threads` workers.
#[cfg(feature = "parallel")]
pub fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Threads(e.to_string()))?;
    Ok(pool.install(f))
}

#[cfg(not(feature = "parallel"))]
pub fn in_pool<T: Send>(_threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    Ok(f())
}
