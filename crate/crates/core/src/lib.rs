//! Stick-breaking species sampling processes whose length variables are
//! exchangeable rather than independent.
//!
//! The crate covers two workloads:
//!
//! * prior analytics: EPPF calculus, ordering probabilities of the weights,
//!   finite-dimensional laws of allocation variables and Monte Carlo
//!   summaries of the number of occupied components `K_n`;
//! * posterior inference for mixtures driven by such priors through a
//!   slice-within-Gibbs sampler (`mcmc`).
//!
//! Replicate loops run on rayon when the `parallel` feature is enabled
//! (default). Results depend only on the seed, never on the worker count.

pub mod analytics;
pub mod eppf;
mod error;
pub mod mcmc;
pub mod numerics;
pub mod parallel;
pub mod partitions;
pub mod sticks;

pub use error::{Error, Result};
pub use eppf::EppfModel;
pub use parallel::Exec;
pub use partitions::SetPartition;
pub use sticks::{LengthPrefix, LengthProcessSpec};
