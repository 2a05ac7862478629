//! Closed forms: compound-Poisson laws, type-I operators and transitions,
//! and the type-II distributions for stable and proper Kendall steps.

use crate::algebra::{Algebra, AlgebraId};
use crate::error::{Error, Result};
use crate::mc::{self, Moments, SimRng};
use crate::measure::{exp_sample, AcPart, Measure};
use crate::numerics::{adaptive_simpson, bessel_i, gamma, ln_factorial, poisson_pmf, Grid};
use serde::Serialize;
use std::fmt;
use std::sync::Arc;

const TAIL: f64 = 1e-12;

/// A real function given piece by piece, with its breakpoints.
#[derive(Clone)]
pub struct PiecewiseScalar {
    evaluator: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub breakpoints: Vec<f64>,
    pub description: String,
}

impl PiecewiseScalar {
    pub fn new(
        evaluator: impl Fn(f64) -> f64 + Send + Sync + 'static,
        breakpoints: Vec<f64>,
        description: impl Into<String>,
    ) -> Self {
        debug_assert!(breakpoints.windows(2).all(|w| w[0] < w[1]));
        PiecewiseScalar { evaluator: Arc::new(evaluator), breakpoints, description: description.into() }
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.evaluator)(x)
    }
}

impl fmt::Debug for PiecewiseScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PiecewiseScalar")
            .field("breakpoints", &self.breakpoints)
            .field("description", &self.description)
            .finish()
    }
}

fn unsupported(id: AlgebraId, capability: &'static str) -> Error {
    Error::Unsupported { algebra: id.to_string(), capability }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be a positive real, got {v}")))
    }
}

/// Clamps round-off below zero; genuine negatives are errors.
fn clamp_probability(v: f64, what: &str) -> Result<f64> {
    if v < -1e-12 {
        return Err(Error::Domain(format!("{what} evaluated to {v} < 0")));
    }
    Ok(v.max(0.0))
}

// ---------------------------------------------------------------------------
// compound-Poisson laws

/// `Exp_⋄(aδ_1)` in closed form.
pub fn exp_closed_form(id: AlgebraId, a: f64) -> Result<Measure> {
    positive("a", a)?;
    match id {
        AlgebraId::Symmetric => symmetric_exp(a, 1.0),
        AlgebraId::Alpha1 { alpha } => symmetric_exp(a, alpha),
        AlgebraId::Stable { alpha } => {
            let mut atoms = vec![];
            let mut cum = 0.0;
            let mut k = 0u64;
            while 1.0 - cum > TAIL || (k as f64) < a {
                let p = poisson_pmf(k, a);
                if p > 0.0 {
                    atoms.push(((k as f64).powf(1.0 / alpha), p));
                }
                cum += p;
                k += 1;
            }
            Measure::atomic(atoms)
        }
        AlgebraId::Kendall { alpha } => kendall_exp(a, alpha),
        AlgebraId::Max => {
            let p0 = (-a).exp();
            Measure::atomic(vec![(0.0, p0), (1.0, -(-a).exp_m1())])
        }
        other => Err(unsupported(other, "a closed-form Exp law")),
    }
}

/// Atoms `e^{-a}I_0(a)` at 0 and `2e^{-a}I_k(a)` at `k^{1/α}`.
fn symmetric_exp(a: f64, alpha: f64) -> Result<Measure> {
    let mut atoms = vec![];
    let mut cum = 0.0;
    let mut k = 0u32;
    while 1.0 - cum > TAIL || (k as f64) < a {
        let w = if k == 0 { 1.0 } else { 2.0 };
        let p = w * (-a).exp() * bessel_i(k, a)?;
        if p > 0.0 {
            atoms.push(((k as f64).powf(1.0 / alpha), p));
        }
        cum += p;
        k += 1;
        if k > 100_000 {
            return Err(Error::Divergence(format!("Bessel series at a = {a}")));
        }
    }
    Measure::atomic(atoms)
}

fn kendall_exp(a: f64, alpha: f64) -> Result<Measure> {
    let e = (-a).exp();
    let weight = 1.0 - e * (1.0 + a);
    let density = move |u: f64| {
        if u <= 1.0 {
            0.0
        } else {
            a * a * alpha * u.powf(-2.0 * alpha - 1.0) * (-a * u.powf(-alpha)).exp() / weight
        }
    };
    let kernel = Algebra::kendall(alpha)?.sampler()?;
    let ac = AcPart { density: Arc::new(density), support: (1.0, f64::INFINITY), weight };
    Measure::new(vec![(0.0, e), (1.0, a * e)], Some(ac), move |rng: &mut SimRng| {
        exp_sample(&kernel, a, |_| 1.0, rng)
    })
}

/// CDF `P(X ≤ t)` of the Kendall Bernoulli power `(pδ_1 + (1-p)δ_0)^{△n}`.
pub fn kendall_bernoulli_cdf(n: u64, p: f64, alpha: f64, t: f64) -> f64 {
    if t < 0.0 {
        return 0.0;
    }
    if t < 1.0 {
        return (1.0 - p).powi(n as i32);
    }
    if n == 0 {
        return 1.0;
    }
    let x = p * t.powf(-alpha);
    (1.0 - x).powi(n as i32 - 1) * (1.0 + (n - 1) as f64 * x)
}

// ---------------------------------------------------------------------------
// Kingman ω₃

fn binom(n: u32, i: u32) -> f64 {
    (ln_factorial(n as u64) - ln_factorial(i as u64) - ln_factorial((n - i) as u64)).exp().round()
}

/// Sum over the active pieces of the `n`-fold uniform density, differentiated
/// `n - 1 - power` times.
fn uniform_sum_piece(n: u32, x: f64, power: u32) -> f64 {
    if x <= -(n as f64) {
        return 0.0;
    }
    let top = (((x + n as f64) / 2.0).floor() as i64).clamp(0, n as i64) as u32;
    let scale = (ln_factorial(power as u64) + n as f64 * std::f64::consts::LN_2).exp();
    (0..=top)
        .map(|i| {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            sign * binom(n, i) * (x + n as f64 - 2.0 * i as f64).powi(power as i32)
        })
        .sum::<f64>()
        / scale
}

/// Density of the sum of `n` independent uniforms on `[-1, 1]`.
pub fn uniform_sum_density(n: u32, x: f64) -> f64 {
    if x.abs() >= n as f64 {
        return 0.0;
    }
    uniform_sum_piece(n, x, n - 1)
}

/// CDF of the sum of `n` independent uniforms on `[-1, 1]`.
pub fn uniform_sum_cdf(n: u32, x: f64) -> f64 {
    if x <= -(n as f64) {
        0.0
    } else if x >= n as f64 {
        1.0
    } else {
        uniform_sum_piece(n, x, n).clamp(0.0, 1.0)
    }
}

fn check_power(n: u32, min: u32) -> Result<()> {
    if n < min {
        Err(Error::Domain(format!("power n must be at least {min}, got {n}")))
    } else {
        Ok(())
    }
}

/// Density of `δ_1^{⊗n}` at `u`: `-2u f_n'(u)`; zero outside `(0, n)`.
pub fn kingman_delta_power_density(n: u32, u: f64) -> Result<f64> {
    check_power(n, 2)?;
    if !(u >= 0.0) {
        return Err(Error::Domain(format!("u must be nonnegative, got {u}")));
    }
    if u == 0.0 || u >= n as f64 {
        return Ok(0.0);
    }
    Ok((-2.0 * u * uniform_sum_piece(n, u, n - 2)).max(0.0))
}

/// CDF of `δ_1^{⊗n}`: `2(F_sum(u) - ½) - 2u f_n(u)`.
pub fn kingman_delta_power_cdf(n: u32, u: f64) -> Result<f64> {
    check_power(n, 1)?;
    if n == 1 {
        return Ok(if u >= 1.0 { 1.0 } else { 0.0 });
    }
    if u <= 0.0 {
        return Ok(0.0);
    }
    if u >= n as f64 {
        return Ok(1.0);
    }
    Ok((2.0 * (uniform_sum_cdf(n, u) - 0.5) - 2.0 * u * uniform_sum_density(n, u)).clamp(0.0, 1.0))
}

/// Outcome of the compound-Poisson identity check for the Kingman kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KingmanIdentity {
    /// `max_ξ |E cos(ξX) - Re R(ξ)|`, the comparison on symmetrized laws.
    pub max_deviation: f64,
    /// Standard error of `E cos(ξX)` at the maximizing ξ.
    pub sigma: f64,
    pub at_xi: f64,
    /// `max_ξ |E cos(ξX) - R(ξ)|` with the full complex right-hand side.
    pub max_modulus_deviation: f64,
}

/// Right-hand side `exp{a(φ - 1)}(1 - aφ + a e^{iξ})`, `φ(ξ) = sin ξ / ξ`,
/// as `(re, im)`.
pub fn kingman_exp_cf(a: f64, xi: f64) -> (f64, f64) {
    let phi = crate::numerics::sinc(xi);
    let g = (a * (phi - 1.0)).exp();
    (g * (1.0 - a * phi + a * xi.cos()), g * a * xi.sin())
}

/// Compares the characteristic function of Monte Carlo draws of
/// `Exp_⊗(aδ_1)` with [`kingman_exp_cf`] on a ξ-grid.
pub fn kingman_exp_identity_check(a: f64, grid: &Grid, budget: usize, seed: u64) -> Result<KingmanIdentity> {
    positive("a", a)?;
    let kernel = Algebra::kingman3().sampler()?;
    let xs = grid.points();
    let acc = mc::fold(
        budget,
        seed,
        || vec![Moments::default(); xs.len()],
        |acc, rng| {
            let x = exp_sample(&kernel, a, |_| 1.0, rng);
            for (m, &xi) in acc.iter_mut().zip(xs) {
                m.push((xi * x).cos());
            }
        },
        |l, r| l.into_iter().zip(r).map(|(a, b)| a.merge(b)).collect(),
    );
    let mut out = KingmanIdentity { max_deviation: -1.0, sigma: 0.0, at_xi: 0.0, max_modulus_deviation: 0.0 };
    for (m, &xi) in acc.iter().zip(xs) {
        let (re, im) = kingman_exp_cf(a, xi);
        let dev = (m.mean - re).abs();
        if dev > out.max_deviation {
            out.max_deviation = dev;
            out.sigma = m.stderr();
            out.at_xi = xi;
        }
        out.max_modulus_deviation = out.max_modulus_deviation.max((m.mean - re).hypot(im));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// type-I processes

/// `P(X < u)` for `X ~ δ_x △_α Exp_△(zδ_1)`.
pub fn type1_kendall_cdf(x: f64, z: f64, alpha: f64, u: f64) -> f64 {
    type1_kendall_eval(x, z, alpha, u, false)
}

/// `P(X ≤ u)`, the right-continuous version of [`type1_kendall_cdf`].
pub fn type1_kendall_cdf_closed(x: f64, z: f64, alpha: f64, u: f64) -> f64 {
    type1_kendall_eval(x, z, alpha, u, true)
}

fn type1_kendall_eval(x: f64, z: f64, alpha: f64, u: f64, closed: bool) -> f64 {
    let above = |v: f64, edge: f64| if closed { v >= edge } else { v > edge };
    let tail_form = |u: f64| {
        let ua = u.powf(-alpha);
        let xa = x.powf(alpha);
        ((1.0 + z * ua - z * xa * ua * ua) * (-z * ua).exp()).clamp(0.0, 1.0)
    };
    if !above(u, x) {
        return 0.0;
    }
    if x >= 1.0 || above(u, 1.0) {
        tail_form(u)
    } else {
        (-z).exp()
    }
}

/// The type-I generator `Af(x) = c ∫ (f(r) - f(x)) δ_x ⋄ δ_1(dr)` in closed form.
pub fn type1_operator<F: Fn(f64) -> f64>(id: AlgebraId, f: F, x: f64, c: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("x must be nonnegative, got {x}")));
    }
    let fx = f(x);
    let v = match id {
        AlgebraId::Symmetric => c * (0.5 * f(1.0 + x) + 0.5 * f((1.0 - x).abs()) - fx),
        AlgebraId::Alpha1 { alpha } => {
            let xa = x.powf(alpha);
            let up = (xa + 1.0).powf(1.0 / alpha);
            let down = (xa - 1.0).abs().powf(1.0 / alpha);
            c * (0.5 * f(up) + 0.5 * f(down) - fx)
        }
        AlgebraId::Classical => c * (f(x + 1.0) - fx),
        AlgebraId::Stable { alpha } => c * (f((x.powf(alpha) + 1.0).powf(1.0 / alpha)) - fx),
        AlgebraId::Max => {
            if x <= 1.0 {
                c * (f(1.0) - fx)
            } else {
                0.0
            }
        }
        AlgebraId::Kendall { alpha } => {
            // ∫_y^∞ f(r) 2α y^{2α} r^{-2α-1} dr after r = y w^{-1/(2α)}
            let pareto_mean = |y: f64| {
                adaptive_simpson(|w: f64| f(y * w.powf(-0.5 / alpha)), 0.0, 1.0, 1e-12, 1e-10)
            };
            let xa = x.powf(alpha);
            if x >= 1.0 {
                c / xa * (pareto_mean(x)? - fx)
            } else {
                -c * fx + c * (1.0 - xa) * f(1.0) + c * xa * pareto_mean(1.0)?
            }
        }
        other => return Err(unsupported(other, "a closed-form type-I generator")),
    };
    Ok(v)
}

// ---------------------------------------------------------------------------
// type-II process, stable steps

/// Density of `S_n` for Weibull(α) steps under the α-stable kernel.
pub fn stable_fn_density(n: u32, alpha: f64, s: f64) -> f64 {
    if s <= 0.0 || n == 0 {
        return 0.0;
    }
    alpha / gamma(n as f64) * s.powf(alpha * n as f64 - 1.0) * (-s.powf(alpha)).exp()
}

/// `P{N(t) = n + k, N(s) = k}` for Weibull(α) steps.
pub fn stable_joint_pmf(n: u64, k: u64, s: f64, t: f64, alpha: f64) -> Result<f64> {
    if !(0.0 < s && s < t) {
        return Err(Error::Domain(format!("need 0 < s < t, got s = {s}, t = {t}")));
    }
    let (sa, ta) = (s.powf(alpha), t.powf(alpha));
    let inc = (ta - sa).powi(n as i32) / ln_factorial(n).exp();
    let base = sa.powi(k as i32) / ln_factorial(k).exp();
    Ok(inc * base * (-ta).exp())
}

/// `P{N(t) - N(s) = n}` for Weibull(α) steps: Poisson(`t^α - s^α`).
pub fn stable_increment_pmf(n: u64, s: f64, t: f64, alpha: f64) -> f64 {
    poisson_pmf(n, t.powf(alpha) - s.powf(alpha))
}

/// `P{N(s) = k}` for Weibull(α) steps: Poisson(`s^α`).
pub fn stable_marginal_pmf(k: u64, s: f64, alpha: f64) -> f64 {
    poisson_pmf(k, s.powf(alpha))
}

fn poly(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// `A_s W(k) = αs^{α-1}(W(k+1) - W(k))`; `coeffs[i]` multiplies `x^i`.
pub fn stable_generator(coeffs: &[f64], k: u64, s: f64, alpha: f64) -> f64 {
    let k = k as f64;
    alpha * s.powf(alpha - 1.0) * (poly(coeffs, k + 1.0) - poly(coeffs, k))
}

// ---------------------------------------------------------------------------
// type-II process, proper Kendall steps

/// `F(t) = ν([0, t))` of the proper Kendall step law.
pub fn kendall_step_cdf(t: f64, alpha: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t <= 1.0 {
        t.powf(alpha)
    } else {
        1.0
    }
}

/// `G(t) = Φ_ν(1/t)`.
pub fn kendall_g(t: f64, alpha: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t <= 1.0 {
        0.5 * t.powf(alpha)
    } else {
        1.0 - 0.5 * t.powf(-alpha)
    }
}

pub fn kendall_step_cdf_piecewise(alpha: f64) -> PiecewiseScalar {
    PiecewiseScalar::new(move |t| kendall_step_cdf(t, alpha), vec![0.0, 1.0], "t^α on [0,1], 1 beyond")
}

pub fn kendall_g_piecewise(alpha: f64) -> PiecewiseScalar {
    PiecewiseScalar::new(move |t| kendall_g(t, alpha), vec![0.0, 1.0], "t^α/2 on [0,1], 1 - 1/(2t^α) beyond")
}

/// `F_n(t) = G^{n-1}[n(F - G) + G]`, with `F_0 ≡ 1`.
pub fn kendall_fn(n: u64, t: f64, alpha: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let (f, g) = (kendall_step_cdf(t, alpha), kendall_g(t, alpha));
    g.powi(n as i32 - 1) * (n as f64 * (f - g) + g)
}

/// `F_n(t)` from the substituted piecewise display.
pub fn kendall_fn_proper(n: u64, t: f64, alpha: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let nf = n as f64;
    if t <= 0.0 {
        0.0
    } else if t <= 1.0 {
        (nf + 1.0) * (0.5 * t.powf(alpha)).powi(n as i32)
    } else {
        let w = 0.5 * t.powf(-alpha);
        (1.0 + (nf - 1.0) * w) * (1.0 - w).powi(n as i32 - 1)
    }
}

pub fn kendall_fn_piecewise(n: u64, alpha: f64) -> PiecewiseScalar {
    PiecewiseScalar::new(move |t| kendall_fn_proper(n, t, alpha), vec![0.0, 1.0], format!("F_{n}(t)"))
}

/// `∫_0^t x^α dF_n(x) = n t^α G^{n-1}(F - G)`.
pub fn kendall_moment_alpha(n: u64, t: f64, alpha: f64) -> f64 {
    if n == 0 || t <= 0.0 {
        return 0.0;
    }
    let (f, g) = (kendall_step_cdf(t, alpha), kendall_g(t, alpha));
    n as f64 * t.powf(alpha) * g.powi(n as i32 - 1) * (f - g)
}

/// Proper-case reduction: `2n p^{n+1}` for `t ≤ 1`, `(n/2)p^{n-1}` beyond.
pub fn kendall_moment_alpha_proper(n: u64, t: f64, alpha: f64) -> f64 {
    if n == 0 || t <= 0.0 {
        return 0.0;
    }
    let p = kendall_g(t, alpha);
    let nf = n as f64;
    if t <= 1.0 {
        2.0 * nf * p.powi(n as i32 + 1)
    } else {
        0.5 * nf * p.powi(n as i32 - 1)
    }
}

/// `P{N(t) = n}`: `1 - F` at `n = 0`, else `G^{n-1}[n(F-G)(1-G) + G(1-F)]`.
pub fn kendall_pmf(n: u64, t: f64, alpha: f64) -> f64 {
    let (f, g) = (kendall_step_cdf(t, alpha), kendall_g(t, alpha));
    if n == 0 {
        return 1.0 - f;
    }
    g.powi(n as i32 - 1) * (n as f64 * (f - g) * (1.0 - g) + g * (1.0 - f))
}

/// `P{N(t) = n}` from the substituted piecewise display.
pub fn kendall_pmf_proper(n: u64, t: f64, alpha: f64) -> f64 {
    let nf = n as f64;
    if t <= 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if t <= 1.0 {
        let p = 0.5 * t.powf(alpha);
        (nf + 1.0 - (nf + 2.0) * p) * p.powi(n as i32)
    } else if n == 0 {
        0.0
    } else {
        let ta = t.powf(alpha);
        nf / (4.0 * ta * ta) * (1.0 - 0.5 / ta).powi(n as i32 - 1)
    }
}

fn check_times(s: f64, t: f64) -> Result<()> {
    if 0.0 < s && s < t {
        Ok(())
    } else {
        Err(Error::Domain(format!("need 0 < s < t, got s = {s}, t = {t}")))
    }
}

/// `P{S_{n+k} < t, S_k < s} = F_n(t)F_k(s) - (s/t)^α (F_n(t) - G(t)^n)(F_k(s) - G(s)^k)`.
pub fn kendall_joint_cdf(n: u64, k: u64, s: f64, t: f64, alpha: f64) -> Result<f64> {
    check_times(s, t)?;
    let (fnt, fks) = (kendall_fn(n, t, alpha), kendall_fn(k, s, alpha));
    let (gt, gs) = (kendall_g(t, alpha), kendall_g(s, alpha));
    let v = fnt * fks
        - (s / t).powf(alpha) * (fnt - gt.powi(n as i32)) * (fks - gs.powi(k as i32));
    clamp_probability(v, "joint CDF")
}

/// Position of `(s, t)` relative to the breakpoint at 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum KendallRegime {
    /// `s < t ≤ 1`
    Below,
    /// `1 ≤ s < t`
    Above,
    /// `s < 1 < t`
    Straddle,
}

impl KendallRegime {
    pub fn of(s: f64, t: f64) -> Result<Self> {
        check_times(s, t)?;
        Ok(if t <= 1.0 {
            KendallRegime::Below
        } else if s >= 1.0 {
            KendallRegime::Above
        } else {
            KendallRegime::Straddle
        })
    }
}

/// `p = G(t)`, `q = G(s)`, `r = G(u)` for `u ≤ s < t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KendallParams {
    pub alpha: f64,
    pub p: f64,
    pub q: f64,
    pub r: f64,
}

impl KendallParams {
    pub fn new(alpha: f64, u: f64, s: f64, t: f64) -> Result<Self> {
        positive("alpha", alpha)?;
        check_times(s, t)?;
        if !(0.0 < u && u <= s) {
            return Err(Error::Domain(format!("need 0 < u <= s, got u = {u}, s = {s}")));
        }
        Ok(KendallParams { alpha, p: kendall_g(t, alpha), q: kendall_g(s, alpha), r: kendall_g(u, alpha) })
    }
}

/// [`kendall_joint_cdf`] from the per-regime displays in `(p, q)`.
pub fn kendall_joint_cdf_display(n: u64, k: u64, s: f64, t: f64, alpha: f64) -> Result<f64> {
    let regime = KendallRegime::of(s, t)?;
    let (p, q) = (kendall_g(t, alpha), kendall_g(s, alpha));
    let (nf, kf) = (n as f64, k as f64);
    let pn = p.powi(n as i32 - 1);
    let v = match regime {
        KendallRegime::Below => pn * q.powi(k as i32) * ((nf + 1.0) * (kf + 1.0) * p - nf * kf * q),
        KendallRegime::Above => {
            pn * q.powi(k as i32 - 1)
                * (nf * kf * (1.0 - p) * (p - q) + nf * (1.0 - p) * q + kf * (1.0 - q) * p + p * q)
        }
        KendallRegime::Straddle => {
            pn * q.powi(k as i32)
                * (nf * kf * (1.0 - p) * (1.0 - 4.0 * q * (1.0 - p)) + nf * (1.0 - p) + kf * p + p)
        }
    };
    clamp_probability(v, "joint CDF display")
}

/// `P{S_m ≤ t, S_j ≤ s}` for any `m, j`, with `S_0 ≡ 0`.
fn kendall_walk_joint(m: u64, j: u64, s: f64, t: f64, alpha: f64) -> Result<f64> {
    if j > m {
        // S_m ≤ S_j ≤ s < t
        return Ok(kendall_fn(j, s, alpha));
    }
    kendall_joint_cdf(m - j, j, s, t, alpha)
}

/// `P{N(t) = n + k, N(s) = k}` by the four-term composition of walk CDFs.
pub fn kendall_joint_pmf(n: u64, k: u64, s: f64, t: f64, alpha: f64) -> Result<f64> {
    let j = |m, i| kendall_walk_joint(m, i, s, t, alpha);
    let v = j(n + k, k)? - j(n + k, k + 1)? - j(n + k + 1, k)? + j(n + k + 1, k + 1)?;
    clamp_probability(v, "joint pmf")
}

/// [`kendall_joint_pmf`] from the per-regime displays in `(p, q)`.
pub fn kendall_joint_pmf_display(n: u64, k: u64, s: f64, t: f64, alpha: f64) -> Result<f64> {
    let regime = KendallRegime::of(s, t)?;
    let (p, q) = (kendall_g(t, alpha), kendall_g(s, alpha));
    let (nf, kf) = (n as f64, k as f64);
    let qk = q.powi(k as i32);
    let v = match (regime, n) {
        (KendallRegime::Below, 0) => qk * ((kf + 1.0) * (1.0 - 2.0 * p + q) - q),
        (KendallRegime::Below, _) => {
            p.powi(n as i32 - 2)
                * (p - q)
                * (nf * (p - q) * (1.0 - p) + p + q - 2.0 * p * p)
                * (kf + 1.0)
                * qk
        }
        (KendallRegime::Above, _) if k == 0 => 0.0,
        (KendallRegime::Above, 0) => (1.0 - p).powi(2) * kf * q.powi(k as i32 - 1),
        (KendallRegime::Above, _) => {
            p.powi(n as i32 - 2) * (p - q) * (1.0 - p).powi(2) * (nf * (p - q) + p + q) * kf * q.powi(k as i32 - 1)
        }
        (KendallRegime::Straddle, 0) => p.powi(-2) * qk * (1.0 - p).powi(2) * 4.0 * kf * p * p * q,
        (KendallRegime::Straddle, _) => {
            p.powi(n as i32 - 2)
                * qk
                * (1.0 - p).powi(2)
                * (nf * kf * (p - q) * (1.0 - 4.0 * q * (1.0 - p))
                    + nf * (1.0 - 2.0 * q) * (p - 2.0 * q * (1.0 - p))
                    + kf * q * (1.0 - 4.0 * q + 4.0 * p * p)
                    + 2.0 * q * (1.0 - 2.0 * q))
        }
    };
    clamp_probability(v, "joint pmf display")
}

/// `P{N(t) - N(s) = n}` by summing [`kendall_joint_pmf`] over `k`.
pub fn kendall_increment_pmf(n: u64, s: f64, t: f64, alpha: f64) -> Result<f64> {
    let q = kendall_g(s, alpha);
    let mut total = 0.0;
    for k in 0u64.. {
        total += kendall_joint_pmf(n, k, s, t, alpha)?;
        // joint(n, k) ≤ P{N(s) = k} ≤ (k+1) q^{k-1}
        let tail = (k as f64 + 2.0) * q.powi(k as i32) / (1.0 - q).powi(2);
        if tail < 1e-15 || k > 100_000 {
            break;
        }
    }
    Ok(total)
}

/// [`kendall_increment_pmf`] from the per-regime displays.
pub fn kendall_increment_pmf_display(n: u64, s: f64, t: f64, alpha: f64) -> Result<f64> {
    let regime = KendallRegime::of(s, t)?;
    let (p, q) = (kendall_g(t, alpha), kendall_g(s, alpha));
    let nf = n as f64;
    let w = (1.0 - q).powi(2);
    let v = match (regime, n) {
        (KendallRegime::Below, 0) => 1.0 - 2.0 * (p - q) / w,
        (KendallRegime::Below, _) => p.powi(n as i32 - 2) * (p - q) / w * (nf * (p - q) * (1.0 - p) + p + q - 2.0 * p * p),
        (KendallRegime::Above, 0) => (1.0 - p).powi(2) / w,
        (KendallRegime::Above, _) => p.powi(n as i32 - 2) * (p - q) * (1.0 - p).powi(2) / w * (nf * (p - q) + p + q),
        (KendallRegime::Straddle, _) => {
            let bracket = if n == 0 {
                4.0 * p * p * q * q
            } else {
                nf * (4.0 * q * q * (1.0 - p).powi(2) + w - (1.0 - p)) + q * (4.0 * q * p * p + 2.0 - 5.0 * q)
            };
            p.powi(n as i32 - 2) * (1.0 - p).powi(2) / w * bracket
        }
    };
    clamp_probability(v, "increment pmf display")
}

/// `P{N(s) = k} = (k(1-q) + 1 - 2q)q^k` for `s < 1`; [`kendall_pmf`] otherwise.
pub fn kendall_marginal(k: u64, s: f64, alpha: f64) -> f64 {
    if s < 1.0 {
        let q = kendall_g(s, alpha);
        (k as f64 * (1.0 - q) + 1.0 - 2.0 * q) * q.powi(k as i32)
    } else {
        kendall_pmf(k, s, alpha)
    }
}

/// The two conditionals `P{N(t)=k | N(s)=k, N(u)=k}` and `P{N(t)=k | N(s)=k}`.
pub fn kendall_markov_check(u: f64, s: f64, t: f64, k: u64, alpha: f64) -> Result<(f64, f64)> {
    if !(0.0 < u && u < s && s < t && t < 1.0) {
        return Err(Error::Domain(format!("need 0 < u < s < t < 1, got ({u}, {s}, {t})")));
    }
    let KendallParams { p, q, r, .. } = KendallParams::new(alpha, u, s, t)?;
    let (k1, kf) = (k as f64 + 1.0, k as f64);
    let lhs = (k1 * (1.0 - 2.0 * p) + kf * r) / (k1 * (1.0 - 2.0 * q) + kf * r);
    let rhs = (k1 * (1.0 - 2.0 * p) + kf * q) / (k1 * (1.0 - 2.0 * q) + kf * q);
    Ok((lhs, rhs))
}

/// The same two conditionals computed from walk CDFs.
pub fn kendall_markov_from_walk(u: f64, s: f64, t: f64, k: u64, alpha: f64) -> Result<(f64, f64)> {
    let fu = kendall_fn(k, u, alpha);
    let fs = kendall_fn(k, s, alpha);
    let lhs = (fu - kendall_joint_cdf(1, k, u, t, alpha)?) / (fu - kendall_joint_cdf(1, k, u, s, alpha)?);
    let rhs = (fs - kendall_joint_cdf(1, k, s, t, alpha)?) / (fs - kendall_fn(k + 1, s, alpha));
    Ok((lhs, rhs))
}

/// `Φ_j(k, p) = Σ_{n≥1} (n+k)^j p^{n+k}`.
pub fn phi_j(j: u32, k: u64, p: f64) -> f64 {
    let kf = k as f64;
    let w = 1.0 - p;
    let lead = p.powi(k as i32 + 1);
    match j {
        0 => lead / w,
        1 => (kf * w + 1.0) / (w * w) * lead,
        2 => (kf * kf * w * w + 2.0 * kf * w + 1.0 + p) / (w * w * w) * lead,
        _ => phi_series(j, k, p),
    }
}

fn phi_series(j: u32, k: u64, p: f64) -> f64 {
    let mut sum = 0.0;
    let mut m = k + 1;
    // terms decrease once m > j / (-ln p)
    let turn = j as f64 / -p.ln();
    loop {
        let mf = m as f64;
        let term = (j as f64 * mf.ln() + mf * p.ln()).exp();
        sum += term;
        let ratio = ((mf + 1.0) / mf).powi(j as i32) * p;
        if mf > turn && ratio < 1.0 && term * ratio / (1.0 - ratio) < 1e-16 * sum {
            return sum;
        }
        m += 1;
    }
}

/// `Σ_{n≥1} n(n+k)^j p^{n+k} = Φ_{j+1} - kΦ_j`.
pub fn phi_weighted(j: u32, k: u64, p: f64) -> f64 {
    phi_j(j + 1, k, p) - k as f64 * phi_j(j, k, p)
}

fn not_at_one(s: f64) -> Result<()> {
    positive("s", s)?;
    if s == 1.0 {
        Err(Error::Domain("the rate constant is two-valued at s = 1".into()))
    } else {
        Ok(())
    }
}

/// `C(k, s)`.
pub fn kendall_rate_c(k: u64, s: f64, alpha: f64) -> Result<f64> {
    not_at_one(s)?;
    let sa = s.powf(alpha);
    let k1 = k as f64 + 1.0;
    Ok(if s < 1.0 {
        2.0 * k1 * alpha * s.powf(alpha - 1.0) / (k1 * (2.0 - sa) - sa)
    } else {
        2.0 * alpha / s
    })
}

/// `A_s f(k) = C(k, s)(E f(Γ_s + k) - f(k))`, `Γ_s` geometric on `{1, 2, …}`
/// with ratio `q = G(s)`.
pub fn kendall_as<F: Fn(u64) -> f64>(f: F, k: u64, s: f64, alpha: f64) -> Result<f64> {
    let c = kendall_rate_c(k, s, alpha)?;
    let q = kendall_g(s, alpha);
    let mut mean = 0.0;
    let mut weight = 1.0 - q;
    let mut quiet = 0;
    for n in 1u64..=1_000_000 {
        let term = weight * f(n + k);
        if !term.is_finite() {
            return Err(Error::Divergence(format!("E f(Γ_s + k) at n = {n}")));
        }
        mean += term;
        weight *= q;
        // the remaining geometric mass must dominate the terms
        if term.abs() <= 1e-17 * mean.abs().max(1.0) && weight < 1e-17 {
            quiet += 1;
            if quiet >= 16 {
                return Ok(c * (mean - f(k)));
            }
        } else {
            quiet = 0;
        }
    }
    Err(Error::Divergence("E f(Γ_s + k) did not settle within 10^6 terms".into()))
}

/// `E(N(t)^j | N(s) = k) - k^j` from the per-regime displays.
pub fn kendall_conditional_moment_display(j: u32, k: u64, s: f64, t: f64, alpha: f64) -> Result<f64> {
    let regime = KendallRegime::of(s, t)?;
    let (p, q) = (kendall_g(t, alpha), kendall_g(s, alpha));
    let (kf, kj) = (k as f64, (k as f64).powi(j as i32));
    let phi = phi_j(j, k, p);
    let weighted = phi_weighted(j, k, p);
    let pk2 = p.powi(k as i32 + 2);
    let v = match regime {
        KendallRegime::Below => {
            (kf + 1.0) / (kf * (1.0 - q) + 1.0 - 2.0 * q) * (p - q) / pk2
                * ((1.0 - p) * (p - q) * weighted + (p + q - 2.0 * p * p) * phi - 2.0 * kj * pk2)
        }
        KendallRegime::Above => {
            if k == 0 {
                return Err(Error::Domain("N(s) = 0 has probability zero for s > 1".into()));
            }
            (1.0 - p).powi(2) / (1.0 - q).powi(2) * (p - q) / pk2
                * ((p - q) * weighted + (p + q) * phi - kj * pk2 / (1.0 - p).powi(2) * (2.0 - p - q))
        }
        KendallRegime::Straddle => {
            (1.0 - p).powi(2) / pk2 / (kf * (1.0 - q) + 1.0 - 2.0 * q)
                * ((kf * (1.0 - 4.0 * q + 4.0 * p * p) + 2.0 * (1.0 - 2.0 * q)) * q * phi
                    + ((1.0 - 2.0 * q) * (p - 2.0 * q * (1.0 - p))
                        + kf * (p - q) * (1.0 - 4.0 * q * (1.0 - p)))
                        * weighted
                    - kj * pk2 / (1.0 - p).powi(2)
                        * (1.0 - 2.0 * q + kf * (1.0 - q - 4.0 * q * (1.0 - p).powi(2))))
        }
    };
    Ok(v)
}

/// `E(N(t)^j | N(s) = k) - k^j` by summing [`kendall_joint_pmf`].
pub fn kendall_conditional_moment(j: u32, k: u64, s: f64, t: f64, alpha: f64) -> Result<f64> {
    let marginal = kendall_pmf(k, s, alpha);
    if marginal <= 0.0 {
        return Err(Error::Domain(format!("P{{N(s) = {k}}} = 0")));
    }
    let p = kendall_g(t, alpha);
    let kj = (k as f64).powi(j as i32);
    let mut total = 0.0;
    for n in 1u64.. {
        let m = (n + k) as f64;
        total += (m.powi(j as i32) - kj) * kendall_joint_pmf(n, k, s, t, alpha)?;
        let bound = (m + 2.0).powi(j as i32 + 2) * p.powi(n as i32 - 1);
        if bound < 1e-16 || n > 100_000 {
            break;
        }
    }
    Ok(total / marginal)
}

/// Printed rate `lim_{t↘s} (E(N(t)^j | N(s)=k) - k^j)/(t - s)` for `s ≠ 1`.
pub fn kendall_rate_limit(j: u32, k: u64, s: f64, alpha: f64) -> Result<f64> {
    not_at_one(s)?;
    let q = kendall_g(s, alpha);
    let kj = (k as f64).powi(j as i32);
    let k1 = k as f64 + 1.0;
    let qk1 = q.powi(k as i32 + 1);
    Ok(if s < 1.0 {
        k1 * alpha * s.powf(alpha - 1.0) / qk1 / (k1 * (1.0 - q) - q) * ((1.0 - q) * phi_j(j, k, q) - kj * qk1)
    } else {
        alpha * s.powf(alpha - 1.0) / (s.powf(2.0 * alpha) * qk1) * (phi_j(j, k, q) - kj * qk1 / (1.0 - q))
    })
}

/// Printed one-sided limits of [`kendall_rate_limit`] at `s = 1`, `(left, right)`.
pub fn kendall_rate_limits_at_one(j: u32, k: u64, alpha: f64) -> Result<(f64, f64)> {
    if k == 0 {
        return Err(Error::Domain("the left limit at s = 1 needs k >= 1".into()));
    }
    let kf = k as f64;
    let inner = phi_j(j, k, 0.5) - kf.powi(j as i32) * 0.5f64.powi(k as i32);
    let scale = alpha * 2f64.powi(k as i32 + 1);
    Ok(((kf + 1.0) / kf * scale * inner, scale * inner))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{integrate, integrate_semi_infinite, tanh_sinh};

    #[test]
    fn closed_form_measures_normalize() {
        let cases = [
            AlgebraId::Symmetric,
            AlgebraId::Alpha1 { alpha: 0.5 },
            AlgebraId::Stable { alpha: 2.0 },
            AlgebraId::Kendall { alpha: 1.0 },
            AlgebraId::Kendall { alpha: 0.7 },
            AlgebraId::Max,
        ];
        for id in cases {
            for a in [0.2, 1.0, 7.5] {
                let m = exp_closed_form(id, a).unwrap();
                let atoms: f64 = m.atoms().iter().map(|x| x.1).sum();
                let ac = m.ac_part().map_or(0.0, |p| p.weight);
                assert!((atoms + ac - 1.0).abs() < 1e-8, "{id} a={a}");
            }
        }
        let m = exp_closed_form(AlgebraId::Max, 2f64.ln()).unwrap();
        assert_eq!(m.atoms().len(), 2);
        assert!((m.atoms()[0].1 - 0.5).abs() < 1e-15);
        assert!(matches!(exp_closed_form(AlgebraId::Kingman3, 1.0), Err(Error::Unsupported { .. })));
    }

    #[test]
    fn kendall_exp_density_by_quadrature() {
        let v = integrate_semi_infinite(|u| u.powi(-3) * (-1.0 / u).exp(), 1.0, 1e-12).unwrap();
        let e = (-1.0f64).exp();
        assert!((v + 2.0 * e - 1.0).abs() < 1e-8);
    }

    #[test]
    fn kendall_bernoulli_limits() {
        assert_eq!(kendall_bernoulli_cdf(5, 0.2, 1.0, 0.5), 0.8f64.powi(5));
        // jump at 1 carries the one-success mass n p (1-p)^{n-1}
        let at1 = kendall_bernoulli_cdf(5, 0.2, 1.0, 1.0);
        assert!((at1 - 0.8f64.powi(5) - 5.0 * 0.2 * 0.8f64.powi(4)).abs() < 1e-14);
        assert!((kendall_bernoulli_cdf(5, 0.2, 1.0, 1e9) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn kingman_density_normalizes() {
        for n in [2u32, 3, 5] {
            // piecewise polynomial with knots at the integers; tanh-sinh skips the jumps
            let v: f64 = (0..n)
                .map(|i| tanh_sinh(|u| kingman_delta_power_density(n, u).unwrap(), i as f64, i as f64 + 1.0, 1e-12).unwrap())
                .sum();
            assert!((v - 1.0).abs() < 1e-8, "n = {n}: {v}");
            let c = kingman_delta_power_cdf(n, n as f64 * 0.999).unwrap();
            assert!(c > 0.99);
        }
        // δ_1 ⊗ δ_1 = law of sqrt(2 + 2θ): density u/2 on (0, 2)
        assert!((kingman_delta_power_density(2, 1.2).unwrap() - 0.6).abs() < 1e-14);
        assert!((kingman_delta_power_cdf(2, 1.2).unwrap() - 0.36).abs() < 1e-14);
        assert_eq!(kingman_delta_power_density(3, 3.5).unwrap(), 0.0);
    }

    #[test]
    fn kingman_cdf_matches_integrated_density() {
        for n in [3u32, 4] {
            for u in [0.3, 1.1, 2.5] {
                let by_quad = integrate(|v| kingman_delta_power_density(n, v).unwrap(), 0.0, u).unwrap();
                assert!((by_quad - kingman_delta_power_cdf(n, u).unwrap()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn type1_kendall_cdf_shape() {
        assert_eq!(type1_kendall_cdf(2.0, 1.0, 1.0, 2.0), 0.0);
        assert!(type1_kendall_cdf_closed(2.0, 1.0, 1.0, 2.0) > 0.0);
        assert!((type1_kendall_cdf(2.0, 1.0, 1.0, 1e9) - 1.0).abs() < 1e-8);
        // x < 1: atom e^{-z} at x, atom z(1 - x^α)e^{-z} at 1
        let z: f64 = 0.5;
        assert!((type1_kendall_cdf_closed(0.5, z, 1.0, 0.7) - (-z).exp()).abs() < 1e-15);
        let jump = type1_kendall_cdf_closed(0.5, z, 1.0, 1.0) - type1_kendall_cdf(0.5, z, 1.0, 1.0);
        assert!((jump - z * 0.5 * (-z).exp()).abs() < 1e-15);
    }

    #[test]
    fn type1_operators() {
        let e = std::f64::consts::E;
        let v = type1_operator(AlgebraId::Stable { alpha: 1.0 }, |x| (-x).exp(), 0.0, 1.0).unwrap();
        assert!((v - (1.0 / e - 1.0)).abs() < 1e-15);
        assert_eq!(type1_operator(AlgebraId::Max, |x| x, 2.0, 1.0).unwrap(), 0.0);
        assert!((type1_operator(AlgebraId::Max, |x| x, 0.4, 1.0).unwrap() - 0.6).abs() < 1e-15);
        for x in [0.3, 1.0, 2.5] {
            let v = type1_operator(AlgebraId::Kendall { alpha: 1.0 }, |_| 1.0, x, 1.0).unwrap();
            assert!(v.abs() < 1e-10);
            let v = type1_operator(AlgebraId::Symmetric, |_| 1.0, x, 2.0).unwrap();
            assert!(v.abs() < 1e-15);
        }
        let v = type1_operator(AlgebraId::Kendall { alpha: 1.0 }, |x| x.min(5.0), 2.0, 1.0).unwrap();
        // -f(2)/2 + 4 ∫_2^∞ (r ∧ 5) r^{-3} dr by a separate quadrature
        let tail = integrate(|r| r.powi(-2), 2.0, 5.0).unwrap()
            + integrate_semi_infinite(|r| 5.0 * r.powi(-3), 5.0, 1e-12).unwrap();
        assert!((v - (-1.0 + 4.0 * tail)).abs() < 1e-9);
        assert!((v - 0.6).abs() < 1e-9);
    }

    #[test]
    fn kendall_operator_below_one_matches_kernel_expectation() {
        // δ_x △ δ_1 for x < 1: atom at 1 w.p. 1 - x^α, Pareto(2α) tail w.p. x^α
        let (x, alpha) = (0.6f64, 1.5);
        let f = |r: f64| (-r).exp();
        let pareto = integrate_semi_infinite(|r| f(r) * 2.0 * alpha * r.powf(-2.0 * alpha - 1.0), 1.0, 1e-12).unwrap();
        let expect = (1.0 - x.powf(alpha)) * f(1.0) + x.powf(alpha) * pareto - f(x);
        let v = type1_operator(AlgebraId::Kendall { alpha }, f, x, 1.0).unwrap();
        assert!((v - expect).abs() < 1e-9);
    }

    #[test]
    fn stable_density_and_joint() {
        let s = 0.7f64;
        assert!((stable_fn_density(1, 1.0, s) - (-s).exp()).abs() < 1e-15);
        assert!((stable_fn_density(3, 1.0, 1.0) - 0.5 / std::f64::consts::E).abs() < 1e-15);
        for n in 1..=6 {
            for alpha in [0.5, 1.0, 2.0] {
                let v = integrate_semi_infinite(|x| stable_fn_density(n, alpha, x), 0.0, 1e-12).unwrap();
                assert!((v - 1.0).abs() < 1e-10, "n={n} α={alpha}: {v}");
            }
        }
        let v = stable_joint_pmf(0, 0, 1.0, 2.0, 1.0).unwrap();
        assert!((v - (-2.0f64).exp()).abs() < 1e-16);
        let total: f64 = (0..=60)
            .flat_map(|n| (0..=60).map(move |k| stable_joint_pmf(n, k, 1.0, 2.0, 1.0).unwrap()))
            .sum();
        assert!((total - 1.0).abs() < 1e-10);
        for n in 0..=5 {
            for k in 0..=5 {
                let joint = stable_joint_pmf(n, k, 0.8, 1.9, 1.5).unwrap();
                let prod = stable_increment_pmf(n, 0.8, 1.9, 1.5) * stable_marginal_pmf(k, 0.8, 1.5);
                assert!((joint - prod).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn stable_generator_values() {
        assert_eq!(stable_generator(&[3.0], 4, 0.5, 1.0), 0.0);
        assert_eq!(stable_generator(&[0.0, 1.0], 7, 0.3, 1.0), 1.0);
        assert_eq!(stable_generator(&[0.0, 0.0, 1.0], 3, 1.0, 2.0), 14.0);
    }

    #[test]
    fn kendall_step_values() {
        assert_eq!(kendall_step_cdf(0.5, 1.0), 0.5);
        assert_eq!(kendall_g(1.0, 1.3), 0.5);
        assert!((kendall_g(1.0 + 1e-12, 1.3) - 0.5).abs() < 1e-11);
        assert_eq!(kendall_g(2.0, 1.0), 0.75);
        let pw = kendall_g_piecewise(1.0);
        assert_eq!(pw.eval(2.0), 0.75);
        assert_eq!(pw.breakpoints, vec![0.0, 1.0]);
    }

    #[test]
    fn kendall_fn_forms_agree() {
        for alpha in [0.5, 1.0, 2.3] {
            for n in 1..=8 {
                for i in 1..=50 {
                    let t = 0.061 * i as f64;
                    let a = kendall_fn(n, t, alpha);
                    let b = kendall_fn_proper(n, t, alpha);
                    assert!((a - b).abs() < 1e-12, "n={n} t={t}: {a} vs {b}");
                }
            }
        }
        assert!((kendall_fn(2, 1.0, 1.0) - 0.75).abs() < 1e-15);
        assert!((kendall_fn_proper(2, 1.0, 1.0) - 0.75).abs() < 1e-15);
        assert!((kendall_fn(3, 0.5, 1.0) - 0.0625).abs() < 1e-15);
        assert_eq!(kendall_fn(1, 0.3, 1.0), kendall_step_cdf(0.3, 1.0));
    }

    #[test]
    fn kendall_moment_forms() {
        assert!((kendall_moment_alpha(1, 1.0, 1.0) - 0.5).abs() < 1e-15);
        // ∫_0^1 x · αx^{α-1} dx at α = 1
        let oracle = integrate(|x| x, 0.0, 1.0).unwrap();
        assert!((kendall_moment_alpha(1, 1.0, 1.0) - oracle).abs() < 1e-12);
        assert!((kendall_moment_alpha(2, 2.0, 1.0) - 0.75).abs() < 1e-15);
        for n in 1..=6 {
            for t in [0.2, 0.9, 1.4, 3.0] {
                let a = kendall_moment_alpha(n, t, 1.7);
                assert!((a - kendall_moment_alpha_proper(n, t, 1.7)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn kendall_moment_by_stieltjes_quadrature() {
        // F_n has a density away from t = 1 in the proper case
        let (n, t, alpha) = (3u64, 1.6f64, 1.0);
        let dens = |x: f64| {
            let h = 1e-6;
            (kendall_fn(n, x + h, alpha) - kendall_fn(n, x - h, alpha)) / (2.0 * h)
        };
        let v = tanh_sinh(|x| x.powf(alpha) * dens(x), 0.0, 1.0, 1e-10).unwrap()
            + tanh_sinh(|x| x.powf(alpha) * dens(x), 1.0, t, 1e-10).unwrap();
        assert!((v - kendall_moment_alpha(n, t, alpha)).abs() < 1e-6);
    }

    #[test]
    fn kendall_pmf_forms() {
        assert_eq!(kendall_pmf(0, 0.5, 1.0), 0.5);
        assert_eq!(kendall_pmf(0, 2.0, 1.0), 0.0);
        assert!((kendall_pmf(2, 2.0, 1.0) - 3.0 / 32.0).abs() < 1e-15);
        for alpha in [0.6, 1.0, 2.0] {
            for t in [0.1, 0.5, 0.99, 1.5, 4.0] {
                let mut total = 0.0;
                for n in 0..2000 {
                    let a = kendall_pmf(n, t, alpha);
                    assert!(a >= 0.0);
                    assert!((a - kendall_pmf_proper(n, t, alpha)).abs() < 1e-12);
                    // Property: F_n - F_{n+1}
                    let b = if n == 0 { 1.0 - kendall_fn(1, t, alpha) } else { kendall_fn(n, t, alpha) - kendall_fn(n + 1, t, alpha) };
                    assert!((a - b).abs() < 1e-12);
                    total += a;
                }
                assert!((total - 1.0).abs() < 1e-10, "t={t}: {total}");
            }
        }
    }

    #[test]
    fn kendall_joint_cdf_values() {
        let v = kendall_joint_cdf(1, 1, 0.5, 1.0, 1.0).unwrap();
        assert!((v - 0.4375).abs() < 1e-15);
        for (s, t) in [(0.3, 0.8), (1.2, 2.5), (0.4, 1.7)] {
            for n in 0..5 {
                for k in 0..5 {
                    let a = kendall_joint_cdf(n, k, s, t, 1.3).unwrap();
                    let b = kendall_joint_cdf_display(n, k, s, t, 1.3).unwrap();
                    assert!((a - b).abs() < 1e-13, "n={n} k={k} s={s} t={t}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn kendall_joint_pmf_forms_agree() {
        for (s, t) in [(0.6, 0.8), (0.2, 0.95), (1.3, 2.0), (0.5, 3.0), (0.9, 1.1)] {
            for n in 0..8 {
                for k in 0..8 {
                    let a = kendall_joint_pmf(n, k, s, t, 1.0).unwrap();
                    let b = kendall_joint_pmf_display(n, k, s, t, 1.0).unwrap();
                    assert!((a - b).abs() < 1e-13, "n={n} k={k} s={s} t={t}: {a} vs {b}");
                }
                let a = kendall_increment_pmf(n, s, t, 1.0).unwrap();
                let b = kendall_increment_pmf_display(n, s, t, 1.0).unwrap();
                assert!((a - b).abs() < 1e-12, "inc n={n} s={s} t={t}: {a} vs {b}");
            }
            for k in 0..8 {
                let row: f64 = (0..4000).map(|n| kendall_joint_pmf(n, k, s, t, 1.0).unwrap()).sum();
                assert!((row - kendall_pmf(k, s, 1.0)).abs() < 1e-10);
            }
        }
        let v = kendall_joint_pmf(1, 0, 0.6, 0.8, 1.0).unwrap();
        assert!((v - 0.11).abs() < 1e-14);
    }

    #[test]
    fn kendall_increments_are_dependent() {
        let (s, t) = (0.6, 0.8);
        let q = kendall_g(s, 1.0);
        for k in 0..6 {
            let m = kendall_marginal(k, s, 1.0);
            assert!((m - kendall_pmf(k, s, 1.0)).abs() < 1e-15);
            let joint = kendall_joint_pmf(1, k, s, t, 1.0).unwrap();
            let via = kendall_increment_pmf(1, s, t, 1.0).unwrap() * (k as f64 + 1.0) * (1.0 - q).powi(2) * q.powi(k as i32);
            assert!((joint - via).abs() < 1e-14);
        }
        let joint = kendall_joint_pmf(1, 1, s, t, 1.0).unwrap();
        let prod = kendall_increment_pmf(1, s, t, 1.0).unwrap() * kendall_marginal(1, s, 1.0);
        assert!((joint - prod).abs() > 1e-3);
    }

    #[test]
    fn markov_conditionals() {
        let (l, r) = kendall_markov_check(0.4, 0.6, 0.8, 1, 1.0).unwrap();
        assert!((l - 0.6).abs() < 1e-14);
        assert!((r - 7.0 / 11.0).abs() < 1e-14);
        let (l, r) = kendall_markov_check(0.4, 0.6, 0.8, 0, 1.0).unwrap();
        assert_eq!(l, r);
        for k in 0..5 {
            let a = kendall_markov_check(0.25, 0.5, 0.9, k, 1.4).unwrap();
            let b = kendall_markov_from_walk(0.25, 0.5, 0.9, k, 1.4).unwrap();
            assert!((a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12, "k={k}: {a:?} {b:?}");
        }
        assert!(kendall_markov_check(0.6, 0.4, 0.8, 1, 1.0).is_err());
    }

    fn phi_oracle(j: u32, k: u64, p: f64) -> f64 {
        (1..5000u64).map(|n| ((n + k) as f64).powi(j as i32) * p.powi((n + k) as i32)).sum()
    }

    #[test]
    fn phi_closed_forms() {
        assert!((phi_j(0, 0, 0.5) - 1.0).abs() < 1e-15);
        assert!((phi_j(1, 0, 0.5) - 2.0).abs() < 1e-15);
        for j in 0..6 {
            for k in [0u64, 1, 3, 7] {
                for p in [0.1, 0.3, 0.5, 0.85] {
                    let (a, b) = (phi_j(j, k, p), phi_oracle(j, k, p));
                    assert!((a - b).abs() <= 1e-10 * b, "j={j} k={k} p={p}: {a} vs {b}");
                }
            }
        }
        for j in 0..2 {
            let (k, p, h) = (2u64, 0.4, 1e-6);
            let d = p * (phi_j(j, k, p + h) - phi_j(j, k, p - h)) / (2.0 * h);
            assert!((d / phi_j(j + 1, k, p) - 1.0).abs() < 1e-5);
        }
        let w: f64 = (1..5000u64).map(|n| n as f64 * ((n + 2) as f64).powi(2) * 0.3f64.powi(n as i32 + 2)).sum();
        assert!((phi_weighted(2, 2, 0.3) - w).abs() < 1e-12);
    }

    #[test]
    fn rate_constant() {
        assert!((kendall_rate_c(1, 0.5, 1.0).unwrap() - 1.6).abs() < 1e-15);
        assert!((kendall_rate_c(4, 2.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(kendall_rate_c(1, 1.0, 1.0).is_err());
        let left = kendall_rate_c(1, 1.0 - 1e-9, 1.0).unwrap();
        let right = kendall_rate_c(1, 1.0 + 1e-9, 1.0).unwrap();
        assert!((left - 4.0).abs() < 1e-6 && (right - 2.0).abs() < 1e-6);
    }

    #[test]
    fn kendall_as_values() {
        assert!(kendall_as(|_| 3.0, 2, 0.5, 1.0).unwrap().abs() < 1e-12);
        // k = 2, s = 0.5: q = 1/4, C = 6/4, E Γ = 4/3
        let v = kendall_as(|n| n as f64, 2, 0.5, 1.0).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
        let q = kendall_g(3.0, 1.0);
        let v = kendall_as(|n| n as f64, 1, 3.0, 1.0).unwrap();
        assert!((v - kendall_rate_c(1, 3.0, 1.0).unwrap() / (1.0 - q)).abs() < 1e-12);
        assert!(matches!(kendall_as(|n| 2f64.powf(n as f64 * 40.0), 0, 0.5, 1.0), Err(Error::Divergence(_))));
    }

    #[test]
    fn rate_limits_agree_with_generator() {
        for j in 1..=3u32 {
            for k in 0..4u64 {
                for s in [0.3, 0.5, 0.8, 1.5, 2.5] {
                    if s > 1.0 && k == 0 {
                        continue;
                    }
                    let lim = kendall_rate_limit(j, k, s, 1.2).unwrap();
                    let gen = kendall_as(|n| (n as f64).powi(j as i32), k, s, 1.2).unwrap();
                    assert!((lim - gen).abs() < 1e-9 * gen.abs().max(1.0), "j={j} k={k} s={s}: {lim} vs {gen}");
                }
            }
        }
        let (l, r) = kendall_rate_limits_at_one(1, 2, 1.0).unwrap();
        let ln = kendall_rate_limit(1, 2, 1.0 - 1e-9, 1.0).unwrap();
        let rn = kendall_rate_limit(1, 2, 1.0 + 1e-9, 1.0).unwrap();
        assert!((l - ln).abs() < 1e-5 && (r - rn).abs() < 1e-5);
        assert!((l - r).abs() > 0.1);
    }

    #[test]
    fn conditional_moment_displays() {
        for (s, t) in [(0.4, 0.7), (1.2, 1.9), (0.6, 1.4)] {
            for j in 1..=3u32 {
                for k in 1..5u64 {
                    let a = kendall_conditional_moment_display(j, k, s, t, 1.0).unwrap();
                    let b = kendall_conditional_moment(j, k, s, t, 1.0).unwrap();
                    assert!((a - b).abs() < 1e-9 * b.abs().max(1.0), "j={j} k={k} s={s} t={t}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn conditional_moment_quotient_tends_to_rate() {
        let (j, k, s) = (2u32, 1u64, 0.5);
        let rate = kendall_rate_limit(j, k, s, 1.0).unwrap();
        let dt = 1e-6;
        let fd = kendall_conditional_moment(j, k, s, s + dt, 1.0).unwrap() / dt;
        assert!((fd - rate).abs() < 1e-4 * rate);
    }
}
