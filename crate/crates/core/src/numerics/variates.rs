//! Poisson and binomial variates by sequential inversion.

use super::special::ln_factorial;
use crate::mc::open_unit;
use rand::Rng;

/// `P(N = k)` for `N ~ Poisson(lambda)`.
pub fn poisson_pmf(k: u64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    (k as f64 * lambda.ln() - lambda - ln_factorial(k)).exp()
}

const POISSON_CHUNK: f64 = 30.0;

fn poisson_small<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    let u = open_unit(rng);
    let mut k = 0u64;
    let mut p = (-lambda).exp();
    let mut cum = p;
    while cum < u {
        k += 1;
        p *= lambda / k as f64;
        cum += p;
        if p == 0.0 && k as f64 > lambda {
            break;
        }
    }
    k
}

/// Poisson draw; large means are split into independent pieces of at most 30.
pub fn poisson_inversion<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    assert!(lambda >= 0.0 && lambda.is_finite(), "Poisson mean must be finite and nonnegative");
    let mut rest = lambda;
    let mut total = 0;
    while rest > 0.0 {
        let piece = rest.min(POISSON_CHUNK);
        total += poisson_small(piece, rng);
        rest -= piece;
    }
    total
}

fn binomial_small<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    let u = open_unit(rng);
    let ratio = p / (1.0 - p);
    let mut k = 0u64;
    let mut pk = (n as f64 * (-p).ln_1p()).exp();
    let mut cum = pk;
    while cum < u && k < n {
        pk *= (n - k) as f64 / (k + 1) as f64 * ratio;
        k += 1;
        cum += pk;
    }
    k
}

/// Binomial(n, p) draw by inversion, chunking `n` so that `(1-p)^n` stays
/// representable.
pub fn binomial_inversion<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    assert!((0.0..=1.0).contains(&p), "binomial probability out of range");
    if p == 0.0 || n == 0 {
        return 0;
    }
    if p == 1.0 {
        return n;
    }
    if p > 0.5 {
        return n - binomial_inversion(n, 1.0 - p, rng);
    }
    let per = ((500.0 / -(-p).ln_1p()).floor() as u64).max(1);
    let mut rest = n;
    let mut total = 0;
    while rest > 0 {
        let m = rest.min(per);
        total += binomial_small(m, p, rng);
        rest -= m;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::{stream_rng, Moments};

    #[test]
    fn pmf_sums_to_one() {
        let s: f64 = (0..200).map(|k| poisson_pmf(k, 12.5)).sum();
        assert!((s - 1.0).abs() < 1e-12);
        assert_eq!(poisson_pmf(0, 0.0), 1.0);
    }

    #[test]
    fn poisson_moments() {
        let mut rng = stream_rng(7, 0);
        for &lambda in &[0.3, 4.0, 75.0] {
            let m: Moments = (0..100_000).map(|_| poisson_inversion(lambda, &mut rng) as f64).collect();
            assert!((m.mean - lambda).abs() < 5.0 * (lambda / 1e5).sqrt());
            assert!((m.variance() / lambda - 1.0).abs() < 0.05);
        }
    }

    #[test]
    fn binomial_moments() {
        let mut rng = stream_rng(9, 0);
        for &(n, p) in &[(10u64, 0.3), (5000, 0.7), (100_000, 0.01)] {
            let m: Moments = (0..50_000).map(|_| binomial_inversion(n, p, &mut rng) as f64).collect();
            let mean = n as f64 * p;
            let var = mean * (1.0 - p);
            assert!((m.mean - mean).abs() < 5.0 * (var / 5e4).sqrt(), "n={n} p={p} mean {}", m.mean);
            assert!((m.variance() / var - 1.0).abs() < 0.05);
        }
    }
}
