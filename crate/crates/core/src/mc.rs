//! Seeded Monte Carlo driver. Trials are split into fixed-size chunks; chunk
//! `k` draws from `ChaCha8Rng::seed_from_u64(seed)` on stream `k`, so results
//! depend only on `(seed, trials)` and never on the thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub type McRng = ChaCha8Rng;

pub const CHUNK: u64 = 4096;

/// Deterministic generator for chunk `chunk` of a run seeded with `seed`.
pub fn chunk_rng(seed: u64, chunk: u64) -> McRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

/// Runs `trials` trials and folds their results. `step` updates a per-chunk
/// accumulator; chunk accumulators are merged in chunk order.
pub fn fold_trials<A, I, S, M>(seed: u64, trials: u64, init: I, step: S, merge: M) -> A
where
    A: Send,
    I: Fn() -> A + Sync,
    S: Fn(&mut A, &mut McRng) + Sync,
    M: Fn(A, A) -> A,
{
    let chunks = trials.div_ceil(CHUNK);
    let parts: Vec<A> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = chunk_rng(seed, k);
            let mut acc = init();
            let n = CHUNK.min(trials - k * CHUNK);
            for _ in 0..n {
                step(&mut acc, &mut rng);
            }
            acc
        })
        .collect();
    parts.into_iter().fold(init(), merge)
}

/// Number of trials for which `trial` returns true.
pub fn count_successes<F>(seed: u64, trials: u64, trial: F) -> u64
where
    F: Fn(&mut McRng) -> bool + Sync,
{
    fold_trials(seed, trials, || 0u64, |acc, rng| *acc += u64::from(trial(rng)), |a, b| a + b)
}

/// Binomial proportion estimate with a Wilson score 95% interval.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct BinomialEstimate {
    pub successes: u64,
    pub trials: u64,
    pub estimate: f64,
    pub ci95: (f64, f64),
}

impl BinomialEstimate {
    pub fn new(successes: u64, trials: u64) -> Self {
        let estimate = if trials == 0 { f64::NAN } else { successes as f64 / trials as f64 };
        BinomialEstimate { successes, trials, estimate, ci95: wilson_ci(successes, trials) }
    }

    /// Standard error of the estimate under the hypothesized rate `p`.
    pub fn sigma_at(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }

    /// Whether the estimate is within `k` standard errors of `p`.
    pub fn within_sigmas(&self, p: f64, k: f64) -> bool {
        (self.estimate - p).abs() <= k * self.sigma_at(p)
    }
}

const Z95: f64 = 1.959963984540054;

pub fn wilson_ci(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}
