//! Chi-square and Kolmogorov-Smirnov statistics.

use super::special::reg_upper_gamma;
use super::variates::poisson_pmf;
use crate::error::{Error, Result};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GofResult {
    pub statistic: f64,
    pub p_value: f64,
    pub dof_or_n: u64,
}

fn chi_square_p(stat: f64, dof: u64) -> f64 {
    if dof == 0 {
        return 1.0;
    }
    if !stat.is_finite() {
        return 0.0;
    }
    reg_upper_gamma(dof as f64 / 2.0, stat / 2.0).unwrap_or(0.0)
}

/// Minimum expected count per bucket.
const MIN_EXPECTED: f64 = 5.0;

/// Pearson goodness of fit of `observed` counts against cell probabilities
/// `expected`, out of `n` draws in total.
///
/// Probability mass not covered by `expected` forms an implicit remainder
/// cell holding the unlisted draws. Cells are merged left to right until each
/// bucket expects at least five draws.
pub fn chi_square_gof(observed: &[u64], expected: &[f64], n: u64) -> Result<GofResult> {
    if observed.len() != expected.len() {
        return Err(Error::Domain(format!(
            "{} observed cells but {} expected",
            observed.len(),
            expected.len()
        )));
    }
    if expected.iter().any(|p| !(*p >= 0.0)) {
        return Err(Error::Domain("negative or NaN cell probability".into()));
    }
    let listed: u64 = observed.iter().sum();
    let mass: f64 = expected.iter().sum();
    if listed > n || mass > 1.0 + 1e-9 {
        return Err(Error::Domain(format!("cells exceed the total: {listed} of {n}, mass {mass}")));
    }
    let mut cells: Vec<(f64, f64)> = observed
        .iter()
        .zip(expected)
        .map(|(&o, &p)| (o as f64, p * n as f64))
        .collect();
    let rest = (1.0 - mass).max(0.0);
    if rest > 1e-12 || listed < n {
        cells.push(((n - listed) as f64, rest * n as f64));
    }
    if cells.iter().any(|&(o, e)| e == 0.0 && o > 0.0) {
        return Ok(GofResult { statistic: f64::INFINITY, p_value: 0.0, dof_or_n: cells.len() as u64 - 1 });
    }
    let mut buckets: Vec<(f64, f64)> = Vec::new();
    let mut pending = (0.0, 0.0);
    for (o, e) in cells {
        pending.0 += o;
        pending.1 += e;
        if pending.1 >= MIN_EXPECTED {
            buckets.push(pending);
            pending = (0.0, 0.0);
        }
    }
    if pending.1 > 0.0 || pending.0 > 0.0 {
        match buckets.last_mut() {
            Some(last) => {
                last.0 += pending.0;
                last.1 += pending.1;
            }
            None => buckets.push(pending),
        }
    }
    if buckets.len() < 2 {
        return Err(Error::InsufficientExpected(format!(
            "only {} bucket(s) with expected count >= {MIN_EXPECTED} out of {n} draws",
            buckets.len()
        )));
    }
    let statistic: f64 = buckets.iter().map(|&(o, e)| (o - e) * (o - e) / e).sum();
    let dof = buckets.len() as u64 - 1;
    Ok(GofResult { statistic, p_value: chi_square_p(statistic, dof), dof_or_n: dof })
}

/// Pearson test of independence for a contingency table.
///
/// The sparsest row or column is merged into its neighbour until every
/// expected count reaches five.
pub fn chi_square_independence(table: &[Vec<u64>]) -> Result<GofResult> {
    let cols = table.first().map_or(0, Vec::len);
    if table.iter().any(|r| r.len() != cols) {
        return Err(Error::Domain("ragged contingency table".into()));
    }
    let mut t: Vec<Vec<f64>> = table.iter().map(|r| r.iter().map(|&c| c as f64).collect()).collect();
    // drop empty margins
    t.retain(|r| r.iter().sum::<f64>() > 0.0);
    let keep: Vec<usize> = (0..cols).filter(|&j| t.iter().map(|r| r[j]).sum::<f64>() > 0.0).collect();
    t = t.into_iter().map(|r| keep.iter().map(|&j| r[j]).collect()).collect();

    loop {
        let rows = t.len();
        let cols = t.first().map_or(0, Vec::len);
        if rows < 2 || cols < 2 {
            return Err(Error::InsufficientExpected(format!(
                "contingency table collapsed to {rows}x{cols}"
            )));
        }
        let total: f64 = t.iter().flatten().sum();
        let row_sums: Vec<f64> = t.iter().map(|r| r.iter().sum()).collect();
        let col_sums: Vec<f64> = (0..cols).map(|j| t.iter().map(|r| r[j]).sum()).collect();
        let min_row = row_sums.iter().copied().fold(f64::INFINITY, f64::min);
        let min_col = col_sums.iter().copied().fold(f64::INFINITY, f64::min);
        if min_row * min_col / total >= MIN_EXPECTED {
            let mut stat = 0.0;
            for (i, r) in t.iter().enumerate() {
                for (j, &o) in r.iter().enumerate() {
                    let e = row_sums[i] * col_sums[j] / total;
                    stat += (o - e) * (o - e) / e;
                }
            }
            let dof = ((rows - 1) * (cols - 1)) as u64;
            return Ok(GofResult { statistic: stat, p_value: chi_square_p(stat, dof), dof_or_n: dof });
        }
        // merge the sparsest line into its smaller neighbour
        if min_row <= min_col {
            let i = row_sums.iter().position(|&s| s == min_row).unwrap();
            let j = neighbour(&row_sums, i);
            let src = t.remove(i);
            let j = if j > i { j - 1 } else { j };
            for (d, s) in t[j].iter_mut().zip(src) {
                *d += s;
            }
        } else {
            let i = col_sums.iter().position(|&s| s == min_col).unwrap();
            let j = neighbour(&col_sums, i);
            for r in t.iter_mut() {
                let v = r.remove(i);
                let j = if j > i { j - 1 } else { j };
                r[j] += v;
            }
        }
    }
}

fn neighbour(sums: &[f64], i: usize) -> usize {
    match (i.checked_sub(1), (i + 1 < sums.len()).then_some(i + 1)) {
        (Some(l), Some(r)) => {
            if sums[l] <= sums[r] {
                l
            } else {
                r
            }
        }
        (Some(l), None) => l,
        (None, Some(r)) => r,
        (None, None) => i,
    }
}

/// Kolmogorov distance between the empirical law of `samples` (sorted
/// ascending) and a continuous `cdf`; tied samples are grouped.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    ks_distance_mixed(samples, &cdf, &cdf)
}

/// Kolmogorov distance against a law with atoms: `cdf(x) = P(X ≤ x)` and
/// `cdf_left(x) = P(X < x)`.
pub fn ks_distance_mixed<F, G>(samples: &[f64], cdf: F, cdf_left: G) -> f64
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let n = samples.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < samples.len() {
        let x = samples[i];
        let mut j = i;
        while j < samples.len() && samples[j] == x {
            j += 1;
        }
        let below = i as f64 / n;
        let upto = j as f64 / n;
        d = d.max((below - cdf_left(x)).abs()).max((upto - cdf(x)).abs());
        i = j;
    }
    d
}

/// Two-sample Kolmogorov distance between sorted samples.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] == x {
            i += 1;
        }
        while j < b.len() && b[j] == x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// One-sided tail level of a 4σ normal deviation.
pub const FOUR_SIGMA_TAIL: f64 = 3.167e-5;

/// Whether an observed cell count is consistent with its expectation at the
/// 4σ level; small expectations use exact Poisson tails instead of the normal
/// approximation.
pub fn cell_within_sigma(observed: u64, expected: f64) -> bool {
    if expected >= MIN_EXPECTED {
        return ((observed as f64 - expected) / expected.sqrt()).abs() <= 4.0;
    }
    if expected <= 0.0 {
        return observed == 0;
    }
    let below: f64 = (0..observed).map(|k| poisson_pmf(k, expected)).sum();
    let upper = 1.0 - below;
    let lower = below + poisson_pmf(observed, expected);
    upper >= FOUR_SIGMA_TAIL && lower >= FOUR_SIGMA_TAIL
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn proportional_counts_give_zero_statistic() {
        let r = chi_square_gof(&[250, 250, 500], &[0.25, 0.25, 0.5], 1000).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.dof_or_n, 2);
    }

    #[test]
    fn uniform_against_point_mass_rejects() {
        let obs = [10u64; 10];
        let mut exp = [0.0; 10];
        exp[0] = 1.0;
        let r = chi_square_gof(&obs, &exp, 100).unwrap();
        assert!(r.p_value < 1e-6);
    }

    #[test]
    fn remainder_cell_and_merging() {
        // 3 listed cells; the tail mass 0.1 goes to the remainder
        let r = chi_square_gof(&[400, 300, 200], &[0.4, 0.3, 0.2], 1000).unwrap();
        assert_eq!(r.dof_or_n, 3);
        assert!(r.statistic < 1e-12);
        let r = chi_square_gof(&[0, 1], &[0.001, 0.001], 100);
        assert!(matches!(r, Err(Error::InsufficientExpected(_))));
    }

    #[test]
    fn chi_square_p_value_oracle() {
        // dof 2: p = exp(-x/2)
        assert!((chi_square_p(3.0, 2) - (-1.5f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn independence_detects_dependence() {
        let table = vec![vec![100, 10], vec![10, 100]];
        assert!(chi_square_independence(&table).unwrap().p_value < 1e-10);
        let table = vec![vec![100, 100], vec![100, 100]];
        assert!(chi_square_independence(&table).unwrap().p_value > 0.99);
    }

    #[test]
    fn independence_merges_sparse_lines() {
        let table = vec![vec![50, 50, 1], vec![50, 50, 0], vec![1, 0, 0]];
        let r = chi_square_independence(&table).unwrap();
        assert_eq!(r.dof_or_n, 1);
    }

    #[test]
    fn ks_midpoint_quantiles() {
        let n = 50;
        let xs: Vec<f64> = (1..=n).map(|i| (i as f64 - 0.5) / n as f64).collect();
        let d = ks_distance(&xs, |x| x.clamp(0.0, 1.0));
        assert!((d - 0.5 / n as f64).abs() < 1e-14);
    }

    #[test]
    fn ks_degenerate_law() {
        let xs = vec![2.0; 10];
        let d = ks_distance_mixed(&xs, |x| if x >= 2.0 { 1.0 } else { 0.0 }, |x| if x > 2.0 { 1.0 } else { 0.0 });
        assert_eq!(d, 0.0);
    }

    #[test]
    fn ks_two_sample_identical_and_shifted() {
        let a: Vec<f64> = (0..100).map(|i| i as f64).collect();
        assert_eq!(ks_two_sample(&a, &a), 0.0);
        let b: Vec<f64> = (0..100).map(|i| i as f64 + 50.0).collect();
        assert!((ks_two_sample(&a, &b) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn cells() {
        assert!(cell_within_sigma(100, 100.0));
        assert!(!cell_within_sigma(200, 100.0));
        assert!(cell_within_sigma(0, 0.5));
        assert!(cell_within_sigma(4, 0.5));
        assert!(!cell_within_sigma(12, 0.5));
    }
}
