//! Deterministic, worker-count independent Monte Carlo driver.
//!
//! A run of `n` draws is cut into fixed chunks of [`CHUNK`] draws. Chunk `c`
//! always uses ChaCha stream `c` of the root seed, so the sample sequence is
//! the same no matter how many rayon workers execute the chunks. Per-chunk
//! accumulators are merged sequentially in chunk order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

/// Generator type used throughout the crate.
pub type SimRng = ChaCha8Rng;

/// Draws per stream.
pub const CHUNK: usize = 1 << 13;

/// Seed used when the caller passes seed 0.
pub const DEFAULT_SEED: u64 = 0x5eed_2019_0c0f_fee5;

pub fn resolve_seed(seed: u64) -> u64 {
    if seed == 0 {
        DEFAULT_SEED
    } else {
        seed
    }
}

/// Generator for stream `stream` of the root `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(resolve_seed(seed));
    rng.set_stream(stream);
    rng
}

/// Uniform on (0, 1].
#[inline]
pub fn open_unit<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

fn chunk_ranges(n: usize) -> impl IndexedParallelIterator<Item = (u64, std::ops::Range<usize>)> {
    let chunks = n.div_ceil(CHUNK);
    (0..chunks).into_par_iter().map(move |c| {
        let start = c * CHUNK;
        (c as u64, start..(start + CHUNK).min(n))
    })
}

/// Collects `n` draws of `draw`.
pub fn collect<T, F>(n: usize, seed: u64, draw: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut SimRng) -> T + Sync,
{
    let parts: Vec<Vec<T>> = chunk_ranges(n)
        .map(|(c, range)| {
            let mut rng = stream_rng(seed, c);
            range.map(|_| draw(&mut rng)).collect()
        })
        .collect();
    parts.into_iter().flatten().collect()
}

/// Folds `n` draws into per-chunk accumulators and merges them in chunk order.
pub fn fold<A, I, S, M>(n: usize, seed: u64, init: I, step: S, merge: M) -> A
where
    A: Send,
    I: Fn() -> A + Sync,
    S: Fn(&mut A, &mut SimRng) + Sync,
    M: Fn(A, A) -> A,
{
    let parts: Vec<A> = chunk_ranges(n)
        .map(|(c, range)| {
            let mut rng = stream_rng(seed, c);
            let mut acc = init();
            for _ in range {
                step(&mut acc, &mut rng);
            }
            acc
        })
        .collect();
    parts.into_iter().fold(init(), merge)
}

/// Running mean and variance (Welford), mergeable.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Moments {
    pub n: u64,
    pub mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(self, other: Moments) -> Moments {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.n as f64 / n as f64;
        let m2 = self.m2 + other.m2 + delta * delta * (self.n as f64 * other.n as f64) / n as f64;
        Moments { n, mean, m2 }
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

impl FromIterator<f64> for Moments {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = Moments::default();
        for x in iter {
            m.push(x);
        }
        m
    }
}

/// Standard error of an empirical frequency with reference probability `p`.
pub fn binomial_sigma(p: f64, n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    (p * (1.0 - p) / n as f64).sqrt()
}

/// `(empirical - predicted) / sigma`, with 0/0 read as a perfect match.
pub fn sigma_units(empirical: f64, predicted: f64, sigma: f64) -> f64 {
    let diff = empirical - predicted;
    if sigma > 0.0 {
        diff / sigma
    } else if diff.abs() < 1e-12 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn collect_is_independent_of_worker_count() {
        let draw = |rng: &mut SimRng| rng.random::<f64>();
        let a = collect(3 * CHUNK + 17, 11, draw);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| collect(3 * CHUNK + 17, 11, draw));
        assert_eq!(a, b);
        assert_eq!(a.len(), 3 * CHUNK + 17);
    }

    #[test]
    fn different_streams_differ() {
        let a: f64 = stream_rng(1, 0).random();
        let b: f64 = stream_rng(1, 1).random();
        assert_ne!(a, b);
    }

    #[test]
    fn moments_merge_matches_sequential() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 / 7.0).collect();
        let all: Moments = xs.iter().copied().collect();
        let left: Moments = xs[..313].iter().copied().collect();
        let right: Moments = xs[313..].iter().copied().collect();
        let merged = left.merge(right);
        assert_eq!(merged.n, all.n);
        assert!((merged.mean - all.mean).abs() < 1e-12);
        assert!((merged.variance() - all.variance()).abs() < 1e-9);
    }

    #[test]
    fn fold_counts_every_draw() {
        let n = fold(2 * CHUNK + 5, 3, || 0u64, |acc, _| *acc += 1, |a, b| a + b);
        assert_eq!(n, (2 * CHUNK + 5) as u64);
    }
}
