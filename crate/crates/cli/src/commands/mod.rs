mod fit;
mod prior;
mod verify;

use std::path::PathBuf;
use std::time::Instant;

use serde::Serialize;

use crate::error::Result;
use crate::io::OutDir;

pub use fit::{fit, FitSummary};
pub use prior::{alloc_prob, order_prob, prior_ekn, prior_kn};
pub use verify::{verify, Check, Fault, VerifyReport};

/// Settings shared by every subcommand, mostly from global flags.
#[derive(Debug, Clone, Default)]
pub struct RunContext {
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    /// Overrides the seed in the config file.
    pub seed: Option<u64>,
    /// Worker threads in force (recorded in manifests).
    pub threads: usize,
    pub mc_fallback: bool,
    pub header: bool,
    pub data: Option<PathBuf>,
    pub fault: Option<Fault>,
}

impl RunContext {
    pub(crate) fn seed_or(&self, config_seed: u64) -> u64 {
        self.seed.unwrap_or(config_seed)
    }
}

#[derive(Serialize)]
struct Manifest<'a, C: Serialize, D: Serialize> {
    command: &'a str,
    version: &'a str,
    seed: u64,
    threads: usize,
    runtime_seconds: f64,
    config: &'a C,
    outputs: &'a [String],
    details: D,
}

pub(crate) fn write_manifest<C: Serialize, D: Serialize>(
    out: &mut OutDir,
    command: &str,
    ctx: &RunContext,
    seed: u64,
    config: &C,
    started: Instant,
    details: D,
) -> Result<()> {
    let outputs = out.written().to_vec();
    let manifest = Manifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        seed,
        threads: ctx.threads,
        runtime_seconds: started.elapsed().as_secs_f64(),
        config,
        outputs: &outputs,
        details,
    };
    out.write_json("manifest.json", &manifest)
}
