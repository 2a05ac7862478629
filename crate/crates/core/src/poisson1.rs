//! Type-I generalized Poisson process: the Markov chain with transitions
//! `δ_x ⋄ Exp_⋄(c(t-s)δ_1)` on a time grid.

use crate::algebra::{Algebra, KernelSampler};
use crate::error::{Error, Result};
use crate::formulas::{type1_kendall_cdf, type1_kendall_cdf_closed, type1_operator};
use crate::mc::{self, open_unit, Moments, SimRng};
use crate::measure::{conv_power_sample, exp_sample, poisson_quantile};
use crate::numerics::{ks_distance_mixed, Grid};
use crate::report::{CheckRow, SIGMA_BUDGET};
use rand::Rng;
use serde::Serialize;

/// Process parameters: algebra, intensity `c` and observation times from 0.
#[derive(Debug, Clone)]
pub struct Type1Spec {
    pub algebra: Algebra,
    pub c: f64,
    pub grid: Grid,
    kernel: KernelSampler,
}

impl Type1Spec {
    pub fn new(algebra: Algebra, c: f64, grid: Grid) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::Domain(format!("intensity must be positive, got {c}")));
        }
        if grid.points().first() != Some(&0.0) {
            return Err(Error::InvalidGrid("a type-I time grid starts at 0".into()));
        }
        let kernel = algebra.sampler()?;
        Ok(Type1Spec { algebra, c, grid, kernel })
    }
}

/// Values of `N_I` at the grid times.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Type1Path {
    pub values: Vec<f64>,
}

/// One transition: a draw from `δ_x ⋄ Exp_⋄(zδ_1)`.
pub fn type1_step<R: Rng + ?Sized>(kernel: &KernelSampler, x: f64, z: f64, rng: &mut R) -> f64 {
    let y = exp_sample(kernel, z, |_| 1.0, rng);
    kernel.sample(x, y, rng)
}

pub fn simulate_type1<R: Rng + ?Sized>(spec: &Type1Spec, rng: &mut R) -> Type1Path {
    let pts = spec.grid.points();
    let mut values = Vec::with_capacity(pts.len());
    let mut x = 0.0;
    values.push(x);
    for w in pts.windows(2) {
        x = type1_step(&spec.kernel, x, spec.c * (w[1] - w[0]), rng);
        values.push(x);
    }
    Type1Path { values }
}

fn gcf_rows(
    check: &str,
    algebra: &Algebra,
    params: &str,
    theta: &Grid,
    empirical: &[Moments],
    predicted: impl Fn(f64) -> Result<(f64, f64)>,
) -> Result<Vec<CheckRow>> {
    theta
        .iter()
        .zip(empirical)
        .map(|(th, m)| {
            let (p, extra_var) = predicted(th)?;
            let sigma = (m.stderr().powi(2) + extra_var).sqrt();
            Ok(CheckRow::within_sigma(
                check,
                algebra.name(),
                format!("{params},theta={th}"),
                m.mean,
                p,
                sigma,
                SIGMA_BUDGET,
            ))
        })
        .collect()
}

fn gcf_moments<F>(algebra: &Algebra, theta: &Grid, budget: usize, seed: u64, draw: F) -> Vec<Moments>
where
    F: Fn(&mut SimRng) -> f64 + Sync,
{
    let pts = theta.points();
    mc::fold(
        budget,
        seed,
        || vec![Moments::default(); pts.len()],
        |acc, rng| {
            let x = draw(rng);
            for (m, &th) in acc.iter_mut().zip(pts) {
                m.push(algebra.h(th * x).unwrap_or(f64::NAN));
            }
        },
        |a, b| a.into_iter().zip(b).map(|(x, y)| x.merge(y)).collect(),
    )
}

fn require_regular(algebra: &Algebra) -> Result<()> {
    if algebra.regular {
        Ok(())
    } else {
        Err(Error::Unsupported { algebra: algebra.name(), capability: "generalized characteristic functions" })
    }
}

/// GCF of the simulated `N_I(t)` against `exp{-ct(1 - h(δ_θ))}` for each
/// nonzero grid time.
pub fn verify_type1_marginals(spec: &Type1Spec, theta: &Grid, budget: usize, seed: u64) -> Result<Vec<CheckRow>> {
    require_regular(&spec.algebra)?;
    let pts = spec.grid.points().to_vec();
    let th = theta.points();
    let acc: Vec<Vec<Moments>> = mc::fold(
        budget,
        seed,
        || vec![vec![Moments::default(); th.len()]; pts.len()],
        |acc, rng| {
            let path = simulate_type1(spec, rng);
            for (row, &x) in acc.iter_mut().zip(&path.values) {
                for (m, &t) in row.iter_mut().zip(th) {
                    m.push(spec.algebra.h(t * x).unwrap_or(f64::NAN));
                }
            }
        },
        |a, b| a.into_iter().zip(b).map(|(r, s)| r.into_iter().zip(s).map(|(x, y)| x.merge(y)).collect()).collect(),
    );
    let mut rows = vec![];
    for (i, &t) in pts.iter().enumerate().skip(1) {
        let params = format!("c={},t={t}", spec.c);
        rows.extend(gcf_rows("type1_marginal_gcf", &spec.algebra, &params, theta, &acc[i], |th| {
            Ok(((-spec.c * t * (1.0 - spec.algebra.h(th)?)).exp(), 0.0))
        })?);
    }
    Ok(rows)
}

/// GCF of the marginal at `t` against the product of independent Monte
/// Carlo GCFs at `s` and `t - s`.
pub fn verify_increment_semigroup(
    algebra: &Algebra,
    c: f64,
    s: f64,
    t: f64,
    theta: &Grid,
    budget: usize,
    seed: u64,
) -> Result<Vec<CheckRow>> {
    require_regular(algebra)?;
    if !(0.0 < s && s < t) {
        return Err(Error::Domain(format!("need 0 < s < t, got s = {s}, t = {t}")));
    }
    let spec = Type1Spec::new(*algebra, c, Grid::new(vec![0.0, s, t])?)?;
    let kernel = spec.kernel;
    let at_t = gcf_moments(algebra, theta, budget, seed, |rng| simulate_type1(&spec, rng).values[2]);
    let at_s = gcf_moments(algebra, theta, budget, seed ^ 0x5151, |rng| type1_step(&kernel, 0.0, c * s, rng));
    let at_d = gcf_moments(algebra, theta, budget, seed ^ 0xd1d1, |rng| type1_step(&kernel, 0.0, c * (t - s), rng));
    let params = format!("c={c},s={s},t={t}");
    let idx = |th: f64| theta.points().iter().position(|&x| x == th).unwrap();
    gcf_rows("type1_semigroup", algebra, &params, theta, &at_t, |th| {
        let (a, b) = (&at_s[idx(th)], &at_d[idx(th)]);
        let var = (b.mean * a.stderr()).powi(2) + (a.mean * b.stderr()).powi(2);
        Ok((a.mean * b.mean, var))
    })
}

/// Finite-difference generator estimate at one step size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeneratorRow {
    pub dt: f64,
    pub estimate: f64,
    pub stderr: f64,
    /// Bound on `|quotient - Af(x)|` from two or more jumps in `[0, dt]`.
    pub bias_bound: f64,
}

/// Generator estimates at one point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneratorReport {
    pub algebra: String,
    pub x: f64,
    pub c: f64,
    /// `c(E f(δ_x ⋄ δ_1) - f(x))` by Monte Carlo.
    pub direct: f64,
    pub direct_stderr: f64,
    pub closed_form: Option<f64>,
    pub rows: Vec<GeneratorRow>,
}

impl GeneratorReport {
    /// Errors against the closed form shrink along the list up to `k`
    /// standard errors.
    pub fn monotone_trend(&self, k: f64) -> bool {
        let Some(target) = self.closed_form else { return false };
        self.rows
            .windows(2)
            .all(|w| (w[1].estimate - target).abs() <= (w[0].estimate - target).abs() + k * w[1].stderr)
    }

    pub fn check_rows(&self) -> Vec<CheckRow> {
        let mut out = vec![];
        let target = self.closed_form.unwrap_or(self.direct);
        let params = |dt: f64| format!("x={},c={},dt={dt}", self.x, self.c);
        out.push(CheckRow::within_sigma(
            "type1_generator_direct",
            &self.algebra,
            params(0.0),
            self.direct,
            target,
            self.direct_stderr,
            SIGMA_BUDGET,
        ));
        for r in &self.rows {
            let diff = (r.estimate - target).abs();
            out.push(CheckRow::verdict(
                "type1_generator_fd",
                &self.algebra,
                params(r.dt),
                r.estimate,
                target,
                r.stderr,
                diff <= SIGMA_BUDGET * r.stderr + r.bias_bound,
            ));
        }
        // without a closed form there is no limit to trend towards
        if self.closed_form.is_none() {
            return out;
        }
        out.push(CheckRow::verdict(
            "type1_generator_trend",
            &self.algebra,
            params(self.rows.last().map_or(0.0, |r| r.dt)),
            self.rows.last().map_or(f64::NAN, |r| r.estimate),
            target,
            self.rows.last().map_or(0.0, |r| r.stderr),
            self.monotone_trend(SIGMA_BUDGET),
        ));
        out
    }
}

/// Estimates `Af(x)` by `(E f(N_I(dt)) - f(x))/dt` from `x` for each `dt`,
/// using common random numbers across step sizes; `bound ≥ sup|f|`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_generator<F>(
    algebra: &Algebra,
    c: f64,
    f: F,
    bound: f64,
    x: f64,
    dt_list: &[f64],
    budget: usize,
    seed: u64,
) -> Result<GeneratorReport>
where
    F: Fn(f64) -> f64 + Sync,
{
    let kernel = algebra.sampler()?;
    let fx = f(x);
    let nd = dt_list.len();
    let acc = mc::fold(
        budget,
        seed,
        || vec![Moments::default(); nd + 1],
        |acc, rng: &mut SimRng| {
            acc[nd].push(c * (f(kernel.sample(x, 1.0, rng)) - fx));
            let u = open_unit(rng);
            let base = rng.clone();
            for (m, &dt) in acc.iter_mut().zip(dt_list) {
                let k = poisson_quantile(c * dt, u);
                let mut r = base.clone();
                let y = conv_power_sample(&kernel, |_| 1.0, k, &mut r);
                let v = if k == 0 { fx } else { f(kernel.sample(x, y, &mut r)) };
                m.push((v - fx) / dt);
            }
            rng.random::<u64>();
        },
        |a, b| a.into_iter().zip(b).map(|(p, q)| p.merge(q)).collect(),
    );
    let rows = dt_list
        .iter()
        .zip(&acc)
        .map(|(&dt, m)| {
            let z = c * dt;
            let e = (-z).exp();
            let slack = (e - 1.0 + z) + z * (1.0 - e) + (1.0 - e * (1.0 + z));
            GeneratorRow { dt, estimate: m.mean, stderr: m.stderr(), bias_bound: bound * slack / dt }
        })
        .collect();
    Ok(GeneratorReport {
        algebra: algebra.name(),
        x,
        c,
        direct: acc[nd].mean,
        direct_stderr: acc[nd].stderr(),
        closed_form: type1_operator(algebra.id, &f, x, c).ok(),
        rows,
    })
}

/// Kolmogorov distance between transition draws from `x` and the closed-form
/// Kendall transition CDF.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransitionKs {
    pub distance: f64,
    pub n: usize,
}

pub fn verify_type1_kendall_transition(x: f64, z: f64, alpha: f64, budget: usize, seed: u64) -> Result<TransitionKs> {
    let kernel = Algebra::kendall(alpha)?.sampler()?;
    let mut draws = mc::collect(budget, seed, |rng| type1_step(&kernel, x, z, rng));
    draws.sort_by(f64::total_cmp);
    let distance = ks_distance_mixed(
        &draws,
        |u| type1_kendall_cdf_closed(x, z, alpha, u),
        |u| type1_kendall_cdf(x, z, alpha, u),
    );
    Ok(TransitionKs { distance, n: draws.len() })
}
