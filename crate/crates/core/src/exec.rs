//! Path-parallel Monte Carlo reduction.
//!
//! Paths are split into fixed chunks of [`CHUNK`]; each chunk is reduced
//! sequentially and chunk results are merged in index order. The result is
//! therefore bit-identical for any worker count, and for the sequential
//! executor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::value::Entropy;

pub const CHUNK: usize = 1024;

/// How per-path work is scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Execution {
    Sequential,
    /// Rayon thread pool when the `parallel` feature is enabled, otherwise sequential.
    #[default]
    Parallel,
}

/// Monte Carlo sample size, seed and scheduling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub paths: usize,
    pub seed: u64,
    #[serde(default)]
    pub execution: Execution,
}

impl McConfig {
    pub fn new(paths: usize, seed: u64) -> Self {
        Self { paths, seed, execution: Execution::default() }
    }

    pub fn sequential(mut self) -> Self {
        self.execution = Execution::Sequential;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_paths(mut self, paths: usize) -> Self {
        self.paths = paths;
        self
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

/// Streaming mean/variance accumulator (Welford, merged with Chan's rule).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub count: usize,
    pub mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let d = other.mean - self.mean;
        self.mean += d * other.count as f64 / n;
        self.m2 += other.m2 + d * d * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        }
    }

    pub fn estimate(&self) -> McEstimate {
        McEstimate {
            mean: self.mean,
            stderr: (self.variance() / self.count.max(1) as f64).sqrt(),
            count: self.count,
        }
    }
}

/// Runs `f` on every chunk `[start, end)` of `0..count` and returns the
/// results in chunk order.
pub fn map_chunks<T, F>(count: usize, execution: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(std::ops::Range<usize>) -> T + Sync + Send,
{
    let chunks: Vec<std::ops::Range<usize>> = (0..count)
        .step_by(CHUNK)
        .map(|s| s..(s + CHUNK).min(count))
        .collect();
    match execution {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            chunks.into_par_iter().map(f).collect()
        }
        _ => chunks.into_iter().map(f).collect(),
    }
}

/// Averages a per-path statistic `f(path_index)` with the chunked reduction.
pub fn mc_mean<F>(cfg: &McConfig, f: F) -> Result<McEstimate>
where
    F: Fn(usize) -> Result<f64> + Sync + Send,
{
    if cfg.paths < 2 {
        return Err(Error::InsufficientSamples { required: 2, got: cfg.paths });
    }
    let partials = map_chunks(cfg.paths, cfg.execution, |range| {
        let mut m = Moments::default();
        for i in range {
            m.push(f(i)?);
        }
        Ok::<_, Error>(m)
    });
    let mut total = Moments::default();
    for p in partials {
        total.merge(&p?);
    }
    if !total.mean.is_finite() {
        return Err(Error::NonFinite("Monte Carlo mean"));
    }
    Ok(total.estimate())
}

/// Monte Carlo estimate of an entropy; `+∞` on any path makes the whole estimate `+∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEntropy {
    pub value: Entropy,
    pub stderr: f64,
    pub paths: usize,
}

/// [`mc_mean`] for per-path entropies that may be infinite.
pub fn mc_entropy<F>(cfg: &McConfig, f: F) -> Result<McEntropy>
where
    F: Fn(usize) -> Result<Entropy> + Sync + Send,
{
    if cfg.paths < 2 {
        return Err(Error::InsufficientSamples { required: 2, got: cfg.paths });
    }
    let partials = map_chunks(cfg.paths, cfg.execution, |range| {
        let mut m = Moments::default();
        for i in range {
            match f(i)? {
                Entropy::Finite(v) => m.push(v),
                Entropy::Infinite => return Ok(None),
            }
        }
        Ok::<_, Error>(Some(m))
    });
    let mut total = Moments::default();
    for p in partials {
        match p? {
            Some(m) => total.merge(&m),
            None => {
                return Ok(McEntropy { value: Entropy::Infinite, stderr: 0.0, paths: cfg.paths })
            }
        }
    }
    let est = total.estimate();
    Ok(McEntropy { value: Entropy::Finite(est.mean), stderr: est.stderr, paths: cfg.paths })
}
