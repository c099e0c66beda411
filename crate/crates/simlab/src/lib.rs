//! Monte Carlo laboratory: logarithmic random sets, equal subset sums, and
//! the divisor statistic Delta for integers, permutations and polynomials.
//!
//! Every trial draws from its own ChaCha stream keyed by (seed, trial), so
//! results do not depend on the worker count.

pub mod delta;
pub mod logset;
pub mod poly;
pub mod subsetsum;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

pub use delta::{delta_integer, delta_perm, delta_perm_brute, sample_cycle_type, DeltaSample, DeltaStats};
pub use logset::{sample_log_set, LogRandomSet};
pub use poly::{delta_poly, irreducible_count, sample_poly_degrees, DegreeSampler, PolyModel};
pub use subsetsum::{amplify_demo, equal_sums_probability, max_subset_sum_multiplicity, Mode, MultiplicityResult};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("bad range ({lo}, {hi}]")]
    Range { lo: u64, hi: u64 },
    #[error("exact census needs |A| <= {max}, got {n}")]
    Capacity { n: usize, max: usize },
    #[error("{0}")]
    Param(String),
    #[error("guard: {0}")]
    Guard(String),
    #[error("{count} divisors exceeds guard {max}")]
    Divisors { count: usize, max: usize },
    #[error("worker pool: {0}")]
    Pool(String),
}

pub type SimRng = ChaCha12Rng;

/// splitmix64 finalizer applied to seed and trial index.
pub fn substream_seed(seed: u64, trial: u64) -> u64 {
    let mut z = seed ^ trial.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn trial_rng(seed: u64, trial: u64) -> SimRng {
    SimRng::seed_from_u64(substream_seed(seed, trial))
}

/// Runs f(trial, rng) for every trial on a pool of `workers` threads; output
/// is in trial order.
pub fn run_trials<T, F>(seed: u64, trials: u64, workers: usize, f: F) -> Result<Vec<T>, SimError>
where
    T: Send,
    F: Fn(u64, &mut SimRng) -> T + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| SimError::Pool(e.to_string()))?;
    Ok(pool.install(|| {
        (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = trial_rng(seed, t);
                f(t, &mut rng)
            })
            .collect()
    }))
}

/// A success count with a 95% Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proportion {
    pub successes: u64,
    pub trials: u64,
    pub estimate: f64,
    pub lo: f64,
    pub hi: f64,
}

const Z95: f64 = 1.959963984540054;

pub fn wilson(successes: u64, trials: u64) -> Proportion {
    assert!(trials > 0 && successes <= trials);
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n);
    Proportion { successes, trials, estimate: p, lo: (centre - half).max(0.0), hi: (centre + half).min(1.0) }
}

impl Proportion {
    pub fn overlaps(&self, other: &Proportion) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }
}
