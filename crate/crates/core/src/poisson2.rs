//! Type-II generalized Poisson process `N(t) = inf{n : S_{n+1} > t}` counted
//! from generalized random walks.

use crate::algebra::{Algebra, AlgebraId, KernelSampler};
use crate::error::{Error, Result};
use crate::formulas::{
    kendall_as, kendall_conditional_moment, kendall_fn, kendall_joint_pmf, kendall_markov_check, kendall_pmf,
    kendall_rate_limit, stable_generator, stable_joint_pmf,
};
use crate::mc::{self, binomial_sigma, Moments, SimRng};
use crate::measure::StepLaw;
use crate::numerics::{
    cell_within_sigma, chi_square_gof, chi_square_independence, poisson_pmf, reg_lower_gamma, Grid,
};
use crate::report::{CheckRow, SIGMA_BUDGET};
use crate::walk::WalkPath;
use rand::Rng;
use serde::Serialize;

/// Default cap on walk length per path.
pub const STEP_CAP: usize = 10_000;
/// Fewest conditioning events accepted by conditional estimates.
pub const MIN_HITS: u64 = 1_000;

/// Counting process parameters.
#[derive(Debug, Clone)]
pub struct Type2Spec {
    pub algebra: Algebra,
    pub step: StepLaw,
    pub times: Grid,
    /// The step law is the algebra's memoryless law.
    pub proper: bool,
    pub cap: usize,
    kernel: KernelSampler,
}

impl Type2Spec {
    pub fn new(algebra: Algebra, step: StepLaw, times: Grid) -> Result<Self> {
        let kernel = algebra.sampler()?;
        let proper = match (algebra.id, step) {
            (AlgebraId::Stable { alpha }, StepLaw::Weibull { alpha: a }) => alpha == a,
            (AlgebraId::Stable { alpha }, StepLaw::Exponential { rate }) => alpha == 1.0 && rate == 1.0,
            (AlgebraId::Classical, StepLaw::Exponential { .. }) => true,
            (AlgebraId::Classical, StepLaw::Weibull { alpha }) => alpha == 1.0,
            (AlgebraId::Kendall { alpha }, StepLaw::Kendall { alpha: a }) => alpha == a,
            _ => false,
        };
        Ok(Type2Spec { algebra, step, times, proper, cap: STEP_CAP, kernel })
    }

    /// The same process observed at other times.
    pub fn at_times(&self, times: Grid) -> Self {
        Type2Spec { times, ..self.clone() }
    }

    fn alpha(&self) -> Option<f64> {
        match self.algebra.id {
            AlgebraId::Stable { alpha } | AlgebraId::Kendall { alpha } => Some(alpha),
            AlgebraId::Classical => Some(1.0),
            _ => None,
        }
    }
}

/// Counts at the observation times.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CountRecord {
    pub counts: Vec<u64>,
    /// The path stopped before passing the last time.
    pub truncated: bool,
}

/// Resolves `inf{n : S_{n+1} > t}` for ascending times as positions arrive.
struct Counter<'a> {
    times: &'a [f64],
    counts: Vec<u64>,
    next: usize,
}

impl<'a> Counter<'a> {
    fn new(times: &'a [f64]) -> Self {
        Counter { times, counts: vec![0; times.len()], next: 0 }
    }

    /// Feeds `S_{n+1}`; returns whether every time is resolved.
    fn feed(&mut self, n: u64, position: f64) -> bool {
        while self.next < self.times.len() && position > self.times[self.next] {
            self.counts[self.next] = n;
            self.next += 1;
        }
        self.next == self.times.len()
    }

    fn finish(mut self, n: u64) -> CountRecord {
        let truncated = self.next < self.times.len();
        for c in &mut self.counts[self.next..] {
            *c = n;
        }
        CountRecord { counts: self.counts, truncated }
    }
}

/// Counts of a stored path.
pub fn count_path(path: &WalkPath, times: &Grid) -> CountRecord {
    let mut counter = Counter::new(times.points());
    for (n, &s) in path.values.iter().enumerate() {
        if counter.feed(n as u64, s) {
            return counter.finish(n as u64);
        }
    }
    counter.finish(path.values.len() as u64)
}

/// Simulates one path until it passes the last time or hits the cap.
pub fn simulate_counts<R: Rng + ?Sized>(spec: &Type2Spec, rng: &mut R) -> CountRecord {
    let mut counter = Counter::new(spec.times.points());
    let mut s = spec.step.sample(rng);
    for n in 0..spec.cap as u64 {
        if n > 0 {
            let x = spec.step.sample(rng);
            s = spec.kernel.sample(s, x, rng);
        }
        if counter.feed(n, s) {
            return counter.finish(n);
        }
    }
    counter.finish(spec.cap as u64)
}

/// Folds the counts of untruncated paths; also returns the truncated total.
pub fn tally<A, I, S, M>(spec: &Type2Spec, budget: usize, seed: u64, init: I, step: S, merge: M) -> (A, u64)
where
    A: Send,
    I: Fn() -> A + Sync,
    S: Fn(&mut A, &[u64]) + Sync,
    M: Fn(A, A) -> A,
{
    mc::fold(
        budget,
        seed,
        || (init(), 0u64),
        |acc, rng: &mut SimRng| {
            let rec = simulate_counts(spec, rng);
            if rec.truncated {
                acc.1 += 1;
            } else {
                step(&mut acc.0, &rec.counts);
            }
        },
        |a, b| (merge(a.0, b.0), a.1 + b.1),
    )
}

fn require_monotonic(spec: &Type2Spec) -> Result<()> {
    if spec.algebra.monotonic {
        Ok(())
    } else {
        Err(Error::Unsupported { algebra: spec.algebra.name(), capability: "type-II counting checks" })
    }
}

fn unsupported_oracle(spec: &Type2Spec) -> Error {
    Error::Unsupported { algebra: spec.algebra.name(), capability: "a closed-form type-II law for this step law" }
}

/// `P{N(t) = n}` for proper stable or Kendall steps.
pub fn type2_pmf(spec: &Type2Spec, n: u64, t: f64) -> Result<f64> {
    match (spec.proper, spec.algebra.id, spec.step) {
        (true, AlgebraId::Kendall { alpha }, _) => Ok(kendall_pmf(n, t, alpha)),
        (true, AlgebraId::Classical, StepLaw::Exponential { rate }) => Ok(poisson_pmf(n, rate * t)),
        (true, _, _) => Ok(poisson_pmf(n, t.powf(spec.alpha().unwrap_or(1.0)))),
        _ => Err(unsupported_oracle(spec)),
    }
}

/// `F_n(t) = P{S_n ≤ t}` for proper steps.
pub fn type2_step_power_cdf(spec: &Type2Spec, n: u64, t: f64) -> Result<f64> {
    if n == 0 {
        return Ok(1.0);
    }
    match (spec.proper, spec.algebra.id, spec.step) {
        (true, AlgebraId::Kendall { alpha }, _) => Ok(kendall_fn(n, t, alpha)),
        (true, AlgebraId::Classical, StepLaw::Exponential { rate }) => Ok(reg_lower_gamma(n as f64, rate * t)),
        (true, _, _) => Ok(reg_lower_gamma(n as f64, t.powf(spec.alpha().unwrap_or(1.0)))),
        _ => Err(unsupported_oracle(spec)),
    }
}

/// `P{N(t) = n + k, N(s) = k}` for proper steps.
pub fn type2_joint_pmf(spec: &Type2Spec, n: u64, k: u64, s: f64, t: f64) -> Result<f64> {
    match (spec.proper, spec.algebra.id, spec.step) {
        (true, AlgebraId::Kendall { alpha }, _) => kendall_joint_pmf(n, k, s, t, alpha),
        (true, AlgebraId::Classical, StepLaw::Exponential { rate }) => {
            Ok(poisson_pmf(n, rate * (t - s)) * poisson_pmf(k, rate * s))
        }
        (true, _, _) => stable_joint_pmf(n, k, s, t, spec.alpha().unwrap_or(1.0)),
        _ => Err(unsupported_oracle(spec)),
    }
}

fn single_time(spec: &Type2Spec, t: f64) -> Result<Type2Spec> {
    Ok(spec.at_times(Grid::new(vec![t])?))
}

fn truncation_row(spec: &Type2Spec, truncated: u64, budget: usize, params: &str) -> CheckRow {
    let frac = truncated as f64 / budget.max(1) as f64;
    CheckRow::verdict("type2_truncation", spec.algebra.name(), params, frac, 0.0, 1e-4, frac < 1e-4)
}

/// Empirical pmf of `N(t)` against the closed form, cell by cell and by a
/// chi-square summary.
pub fn pmf_report(spec: &Type2Spec, t: f64, n_max: u64, budget: usize, seed: u64) -> Result<Vec<CheckRow>> {
    require_monotonic(spec)?;
    let one = single_time(spec, t)?;
    let cells = n_max as usize + 1;
    let (counts, truncated) = tally(
        &one,
        budget,
        seed,
        || vec![0u64; cells],
        |acc, c| {
            if let Some(slot) = acc.get_mut(c[0] as usize) {
                *slot += 1;
            }
        },
        |a, b| a.into_iter().zip(b).map(|(x, y)| x + y).collect(),
    );
    let n = (budget as u64) - truncated;
    let expected: Vec<f64> = (0..=n_max).map(|k| type2_pmf(spec, k, t)).collect::<Result<_>>()?;
    let name = spec.algebra.name();
    let mut rows: Vec<CheckRow> = counts
        .iter()
        .zip(&expected)
        .enumerate()
        .map(|(k, (&o, &p))| {
            CheckRow::verdict(
                "type2_pmf_cell",
                &name,
                format!("t={t},n={k}"),
                o as f64 / n as f64,
                p,
                binomial_sigma(p, n),
                cell_within_sigma(o, p * n as f64),
            )
        })
        .collect();
    let gof = chi_square_gof(&counts, &expected, n)?;
    rows.push(CheckRow::verdict(
        "type2_pmf_chi_square",
        &name,
        format!("t={t},dof={}", gof.dof_or_n),
        gof.p_value,
        0.001,
        0.0,
        gof.p_value > 0.001,
    ));
    rows.push(truncation_row(spec, truncated, budget, &format!("t={t}")));
    Ok(rows)
}

/// First and second moments of `N(t)` against `Σ F_n(t)` and
/// `2Σ nF_n(t) - Σ F_n(t)`.
pub fn moments_report(spec: &Type2Spec, t: f64, budget: usize, seed: u64) -> Result<Vec<CheckRow>> {
    require_monotonic(spec)?;
    let (mut m1, mut m2) = (0.0, 0.0);
    for n in 1u64.. {
        let f = type2_step_power_cdf(spec, n, t)?;
        m1 += f;
        m2 += 2.0 * n as f64 * f - f;
        if (n as f64 * f < 1e-13 && n > 2) || n > 1_000_000 {
            break;
        }
    }
    let one = single_time(spec, t)?;
    let (acc, truncated) = tally(
        &one,
        budget,
        seed,
        || [Moments::default(); 2],
        |acc, c| {
            let x = c[0] as f64;
            acc[0].push(x);
            acc[1].push(x * x);
        },
        |a, b| [a[0].merge(b[0]), a[1].merge(b[1])],
    );
    let name = spec.algebra.name();
    let params = format!("t={t}");
    Ok(vec![
        CheckRow::within_sigma("type2_mean", &name, &params, acc[0].mean, m1, acc[0].stderr(), SIGMA_BUDGET),
        CheckRow::within_sigma("type2_second_moment", &name, &params, acc[1].mean, m2, acc[1].stderr(), SIGMA_BUDGET),
        truncation_row(spec, truncated, budget, &params),
    ])
}

/// Contingency table of `(N(t) - N(s), N(s))`, last row and column pooled.
pub fn joint_table(spec: &Type2Spec, s: f64, t: f64, n_max: u64, k_max: u64, budget: usize, seed: u64) -> Result<(Vec<Vec<u64>>, u64)> {
    let two = spec.at_times(Grid::new(vec![s, t])?);
    let (rows, cols) = (n_max as usize + 1, k_max as usize + 1);
    Ok(tally(
        &two,
        budget,
        seed,
        || vec![vec![0u64; cols]; rows],
        |acc, c| {
            let inc = ((c[1] - c[0]) as usize).min(rows - 1);
            let k = (c[0] as usize).min(cols - 1);
            acc[inc][k] += 1;
        },
        |a, b| a.into_iter().zip(b).map(|(r, q)| r.into_iter().zip(q).map(|(x, y)| x + y).collect()).collect(),
    ))
}

/// Joint pmf of `(N(t) - N(s), N(s))` cell by cell, plus the independence
/// test, whose expected verdict follows from the closed form.
#[allow(clippy::too_many_arguments)]
pub fn joint_report(
    spec: &Type2Spec,
    s: f64,
    t: f64,
    n_max: u64,
    k_max: u64,
    budget: usize,
    seed: u64,
) -> Result<Vec<CheckRow>> {
    require_monotonic(spec)?;
    if !(0.0 < s && s < t) {
        return Err(Error::Domain(format!("need 0 < s < t, got s = {s}, t = {t}")));
    }
    let (table, truncated) = joint_table(spec, s, t, n_max, k_max, budget, seed)?;
    let total = budget as u64 - truncated;
    let name = spec.algebra.name();
    let mut rows = vec![];
    let mut max_gap: f64 = 0.0;
    for n in 0..n_max {
        for k in 0..k_max {
            let p = type2_joint_pmf(spec, n, k, s, t)?;
            let o = table[n as usize][k as usize];
            rows.push(CheckRow::verdict(
                "type2_joint_cell",
                &name,
                format!("s={s},t={t},n={n},k={k}"),
                o as f64 / total as f64,
                p,
                binomial_sigma(p, total),
                cell_within_sigma(o, p * total as f64),
            ));
            let inc: f64 = (0..400).map(|kk| type2_joint_pmf(spec, n, kk, s, t)).sum::<Result<f64>>()?;
            let marg = type2_pmf(spec, k, s)?;
            max_gap = max_gap.max((p - inc * marg).abs());
        }
    }
    let independent = max_gap < 1e-12;
    let gof = chi_square_independence(&table)?;
    let pass = if independent { gof.p_value > 0.001 } else { gof.p_value < 1e-4 };
    rows.push(CheckRow::verdict(
        if independent { "type2_independence_accepted" } else { "type2_independence_rejected" },
        &name,
        format!("s={s},t={t},dof={}", gof.dof_or_n),
        gof.p_value,
        if independent { 0.001 } else { 1e-4 },
        0.0,
        pass,
    ));
    rows.push(truncation_row(spec, truncated, budget, &format!("s={s},t={t}")));
    Ok(rows)
}

/// Conditional frequencies `P{N(t)=k | N(s)=k, N(u)=k}` and
/// `P{N(t)=k | N(s)=k}` against their closed forms.
#[allow(clippy::too_many_arguments)]
pub fn markov_test(spec: &Type2Spec, u: f64, s: f64, t: f64, k: u64, budget: usize, seed: u64) -> Result<Vec<CheckRow>> {
    let alpha = match (spec.proper, spec.algebra.id) {
        (true, AlgebraId::Kendall { alpha }) => alpha,
        _ => return Err(Error::Unsupported { algebra: spec.algebra.name(), capability: "the Markov witness" }),
    };
    let (lhs, rhs) = kendall_markov_check(u, s, t, k, alpha)?;
    let three = spec.at_times(Grid::new(vec![u, s, t])?);
    let (acc, _) = tally(
        &three,
        budget,
        seed,
        || [0u64; 4],
        |acc, c| {
            if c[1] == k {
                acc[0] += 1;
                acc[1] += u64::from(c[2] == k);
                if c[0] == k {
                    acc[2] += 1;
                    acc[3] += u64::from(c[2] == k);
                }
            }
        },
        |a, b| std::array::from_fn(|i| a[i] + b[i]),
    );
    let [given_s, stay_s, given_us, stay_us] = acc;
    let hits = given_s.min(given_us);
    if hits < MIN_HITS {
        return Err(Error::Starvation { hits, needed: MIN_HITS });
    }
    let name = spec.algebra.name();
    let params = format!("u={u},s={s},t={t},k={k}");
    let differ = (lhs - rhs).abs() > 1e-12;
    Ok(vec![
        CheckRow::within_sigma(
            "type2_markov_given_u_s",
            &name,
            &params,
            stay_us as f64 / given_us as f64,
            lhs,
            binomial_sigma(lhs, given_us),
            SIGMA_BUDGET,
        ),
        CheckRow::within_sigma(
            "type2_markov_given_s",
            &name,
            &params,
            stay_s as f64 / given_s as f64,
            rhs,
            binomial_sigma(rhs, given_s),
            SIGMA_BUDGET,
        ),
        CheckRow::verdict("type2_markov_forms_differ", &name, &params, lhs, rhs, 0.0, differ == (k > 0)),
    ])
}

/// `ℓ([a, b)) = (b^α - a^α)^{1/α}`.
pub fn stable_interval_length(a: f64, b: f64, alpha: f64) -> f64 {
    (b.powf(alpha) - a.powf(alpha)).powf(1.0 / alpha)
}

/// Increments `N(t) - N(s)` against fresh counts `N(ℓ([s, t)))`.
pub fn stationarity_report(spec: &Type2Spec, s: f64, t: f64, budget: usize, seed: u64) -> Result<Vec<CheckRow>> {
    let alpha = match (spec.proper, spec.algebra.id) {
        (true, AlgebraId::Stable { alpha }) => alpha,
        (true, AlgebraId::Classical) => 1.0,
        _ => return Err(Error::Unsupported { algebra: spec.algebra.name(), capability: "stationarity in ℓ" }),
    };
    let ell = stable_interval_length(s, t, alpha);
    const CELLS: usize = 40;
    let merge = |a: Vec<u64>, b: Vec<u64>| a.into_iter().zip(b).map(|(x, y)| x + y).collect::<Vec<_>>();
    let (inc, _) = tally(
        &spec.at_times(Grid::new(vec![s, t])?),
        budget,
        seed,
        || vec![0u64; CELLS],
        |acc, c| acc[((c[1] - c[0]) as usize).min(CELLS - 1)] += 1,
        merge,
    );
    let (fresh, _) = tally(
        &single_time(spec, ell)?,
        budget,
        seed ^ 0xa5a5,
        || vec![0u64; CELLS],
        |acc, c| acc[(c[0] as usize).min(CELLS - 1)] += 1,
        merge,
    );
    // drop columns empty in both samples
    let keep: Vec<usize> = (0..CELLS).filter(|&i| inc[i] + fresh[i] > 0).collect();
    let table: Vec<Vec<u64>> = vec![keep.iter().map(|&i| inc[i]).collect(), keep.iter().map(|&i| fresh[i]).collect()];
    let gof = chi_square_independence(&table)?;
    let name = spec.algebra.name();
    let whole = stable_interval_length(0.0, t, alpha).powf(alpha);
    let parts = stable_interval_length(0.0, s, alpha).powf(alpha) + ell.powf(alpha);
    Ok(vec![
        CheckRow::verdict(
            "type2_stationarity",
            &name,
            format!("s={s},t={t},ell={ell}"),
            gof.p_value,
            0.001,
            0.0,
            gof.p_value > 0.001,
        ),
        CheckRow::within_sigma("interval_length_additivity", &name, format!("s={s},t={t}"), parts, whole, 1e-12, 1.0),
    ])
}

/// Finite-difference rate at one step size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateRow {
    pub dt: f64,
    /// `(E(N(s+dt)^j | N(s)=k) - k^j)/dt` from conditioned paths.
    pub estimate: f64,
    pub stderr: f64,
    pub hits: u64,
    /// The same quotient from the closed-form joint law.
    pub exact: f64,
}

/// Conditional-moment rates of `N` at `s` given `N(s) = k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub algebra: String,
    pub j: u32,
    pub k: u64,
    pub s: f64,
    /// Printed limit of the quotient as `dt → 0`.
    pub limit: f64,
    /// `A_s f(k)` for `f(x) = x^j`.
    pub generator: f64,
    pub rows: Vec<RateRow>,
}

impl RateReport {
    pub fn monotone_trend(&self, k: f64) -> bool {
        self.rows
            .windows(2)
            .all(|w| (w[1].estimate - self.limit).abs() <= (w[0].estimate - self.limit).abs() + k * w[1].stderr)
    }

    pub fn check_rows(&self) -> Vec<CheckRow> {
        let params = |dt: f64| format!("j={},k={},s={},dt={dt}", self.j, self.k, self.s);
        let mut out: Vec<CheckRow> = self
            .rows
            .iter()
            .map(|r| {
                CheckRow::within_sigma("type2_rate_fd", &self.algebra, params(r.dt), r.estimate, r.exact, r.stderr, SIGMA_BUDGET)
            })
            .collect();
        out.push(CheckRow::within_sigma(
            "type2_rate_generator",
            &self.algebra,
            params(0.0),
            self.generator,
            self.limit,
            1e-9 * self.limit.abs().max(1.0),
            1.0,
        ));
        if let Some(last) = self.rows.last() {
            out.push(CheckRow::verdict(
                "type2_rate_trend",
                &self.algebra,
                params(last.dt),
                last.estimate,
                self.limit,
                last.stderr,
                self.monotone_trend(SIGMA_BUDGET),
            ));
        }
        out
    }
}

/// `E((k + M)^j) - k^j`, `M ~ Poisson(λ)`.
fn poisson_shift_moment(j: u32, k: u64, lambda: f64) -> f64 {
    let kj = (k as f64).powi(j as i32);
    let mut total = 0.0;
    for m in 1u64.. {
        let p = poisson_pmf(m, lambda);
        total += p * (((k + m) as f64).powi(j as i32) - kj);
        if m as f64 > lambda + 10.0 && p < 1e-18 {
            break;
        }
    }
    total
}

/// Rates `(E(N(s+dt)^j | N(s)=k) - k^j)/dt` for each `dt`, with the printed
/// limit and the generator `A_s`.
#[allow(clippy::too_many_arguments)]
pub fn conditional_rate_report(
    spec: &Type2Spec,
    j: u32,
    k: u64,
    s: f64,
    dt_list: &[f64],
    budget: usize,
    seed: u64,
) -> Result<RateReport> {
    if !spec.proper {
        return Err(unsupported_oracle(spec));
    }
    let alpha = spec.alpha().unwrap_or(1.0);
    let kj = (k as f64).powi(j as i32);
    let (limit, generator) = match spec.algebra.id {
        AlgebraId::Kendall { .. } => (
            kendall_rate_limit(j, k, s, alpha)?,
            kendall_as(|n| (n as f64).powi(j as i32), k, s, alpha)?,
        ),
        _ => {
            let mut coeffs = vec![0.0; j as usize + 1];
            coeffs[j as usize] = 1.0;
            let v = stable_generator(&coeffs, k, s, alpha);
            (v, v)
        }
    };
    let mut times: Vec<f64> = std::iter::once(s).chain(dt_list.iter().map(|dt| s + dt)).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let grid = Grid::new(times.clone())?;
    let slots: Vec<usize> = dt_list.iter().map(|dt| times.iter().position(|&x| x == s + dt).unwrap()).collect();
    let (acc, _) = tally(
        &spec.at_times(grid),
        budget,
        seed,
        || vec![Moments::default(); dt_list.len()],
        |acc, c| {
            if c[0] == k {
                for ((m, &slot), dt) in acc.iter_mut().zip(&slots).zip(dt_list) {
                    m.push(((c[slot] as f64).powi(j as i32) - kj) / dt);
                }
            }
        },
        |a, b| a.into_iter().zip(b).map(|(x, y)| x.merge(y)).collect(),
    );
    let hits = acc.first().map_or(0, |m| m.n);
    if hits < MIN_HITS {
        return Err(Error::Starvation { hits, needed: MIN_HITS });
    }
    let rows = dt_list
        .iter()
        .zip(&acc)
        .map(|(&dt, m)| {
            let exact = match spec.algebra.id {
                AlgebraId::Kendall { .. } => kendall_conditional_moment(j, k, s, s + dt, alpha)? / dt,
                _ => poisson_shift_moment(j, k, (s + dt).powf(alpha) - s.powf(alpha)) / dt,
            };
            Ok(RateRow { dt, estimate: m.mean, stderr: m.stderr(), hits: m.n, exact })
        })
        .collect::<Result<_>>()?;
    Ok(RateReport { algebra: spec.algebra.name(), j, k, s, limit, generator, rows })
}
