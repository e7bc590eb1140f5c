//! Replicate driver shared by every Monte Carlo routine.
//!
//! Replicates are cut into fixed-size chunks and each chunk gets its own
//! ChaCha stream derived from `(seed, chunk index)`. Chunk results are merged
//! in chunk order, so output depends on the seed alone: the same seed gives
//! the same numbers sequentially, on one thread, or on sixty-four.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Replicates per chunk (and per random stream).
pub const CHUNK_SIZE: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    /// Rayon work stealing; identical to `Sequential` when the crate is built
    /// without the `parallel` feature.
    #[default]
    Parallel,
}

/// Random source for stream `stream` of a run seeded with `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Runs `replicates` independent replicates.
///
/// `run_chunk(rng, count)` simulates `count` replicates with the given random
/// source and returns a partial result; partials are combined with `merge`
/// in chunk order.
pub fn run_replicates<T, F, M>(
    seed: u64,
    replicates: usize,
    exec: Exec,
    run_chunk: F,
    merge: M,
) -> Option<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> T + Sync + Send,
    M: Fn(T, T) -> T + Sync + Send,
{
    let chunks = replicates.div_ceil(CHUNK_SIZE);
    let job = |c: usize| {
        let count = CHUNK_SIZE.min(replicates - c * CHUNK_SIZE);
        let mut rng = stream_rng(seed, c as u64);
        run_chunk(&mut rng, count)
    };
    map_ordered(chunks, exec, job).into_iter().reduce(merge)
}

/// `(0..n).map(f).collect()`, possibly in parallel, always in index order.
pub fn map_ordered<T, F>(n: usize, exec: Exec, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
        _ => (0..n).map(f).collect(),
    }
}

/// Mean and standard error of a Monte Carlo average.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub replicates: usize,
}

/// Streaming first and second moments; merges associatively.
#[derive(Debug, Clone, Copy, Default)]
pub struct Moments {
    pub n: usize,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(self, other: Self) -> Self {
        Self {
            n: self.n + other.n,
            sum: self.sum + other.sum,
            sum_sq: self.sum_sq + other.sum_sq,
        }
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.n as f64
    }

    pub fn variance(&self) -> f64 {
        let n = self.n as f64;
        if self.n < 2 {
            return 0.0;
        }
        ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0)
    }

    pub fn estimate(&self) -> McEstimate {
        McEstimate {
            mean: self.mean(),
            std_error: (self.variance() / self.n as f64).sqrt(),
            replicates: self.n,
        }
    }
}
