//! Mixed probability measures on the half-line, dilation, generalized
//! characteristic functions and the ⋄-compound-Poisson and Bernoulli laws.

use crate::algebra::{Algebra, KernelSampler};
use crate::error::{Error, Result};
use crate::mc::{self, open_unit, Moments, SimRng};
use crate::numerics::{
    binomial_inversion, integrate_semi_infinite, poisson_inversion, poisson_pmf, tanh_sinh, Grid,
};
use rand::Rng;
use serde::Serialize;
use std::fmt;
use std::sync::Arc;

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type Sampler = Arc<dyn Fn(&mut SimRng) -> f64 + Send + Sync>;

/// Absolutely continuous component: `weight · density` on `support`.
#[derive(Clone)]
pub struct AcPart {
    pub density: RealFn,
    pub support: (f64, f64),
    pub weight: f64,
}

/// Atoms plus an optional absolutely continuous part, with a sampler.
#[derive(Clone)]
pub struct Measure {
    atoms: Vec<(f64, f64)>,
    ac: Option<AcPart>,
    sampler: Sampler,
}

impl fmt::Debug for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Measure")
            .field("atoms", &self.atoms)
            .field("ac_support", &self.ac.as_ref().map(|a| a.support))
            .field("ac_weight", &self.ac.as_ref().map(|a| a.weight))
            .finish()
    }
}

fn integrate_over<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> Result<f64> {
    if hi.is_infinite() {
        integrate_semi_infinite(f, lo, 1e-11)
    } else {
        tanh_sinh(f, lo, hi, 1e-11)
    }
}

impl Measure {
    /// Builds a measure and checks its mass invariant.
    pub fn new(
        atoms: Vec<(f64, f64)>,
        ac: Option<AcPart>,
        sampler: impl Fn(&mut SimRng) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let m = Measure { atoms, ac, sampler: Arc::new(sampler) };
        m.check_mass()?;
        Ok(m)
    }

    pub fn delta(x: f64) -> Self {
        Measure { atoms: vec![(x, 1.0)], ac: None, sampler: Arc::new(move |_| x) }
    }

    /// Finite mixture of point masses.
    pub fn atomic(atoms: Vec<(f64, f64)>) -> Result<Self> {
        let table = atoms.clone();
        Measure::new(atoms, None, move |rng| {
            let mut u = rng.random::<f64>();
            for &(x, p) in &table {
                if u < p {
                    return x;
                }
                u -= p;
            }
            table.last().map_or(0.0, |a| a.0)
        })
    }

    /// Absolutely continuous law with the given density, support and sampler.
    pub fn continuous(
        density: impl Fn(f64) -> f64 + Send + Sync + 'static,
        support: (f64, f64),
        sampler: impl Fn(&mut SimRng) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let ac = AcPart { density: Arc::new(density), support, weight: 1.0 };
        Measure::new(vec![], Some(ac), sampler)
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn ac_part(&self) -> Option<&AcPart> {
        self.ac.as_ref()
    }

    pub fn sample(&self, rng: &mut SimRng) -> f64 {
        (self.sampler)(rng)
    }

    /// Total mass is one and the density integrates to one.
    pub fn check_mass(&self) -> Result<()> {
        if self.atoms.iter().any(|&(x, p)| !(x >= 0.0) || !(p > 0.0 && p <= 1.0 + 1e-12)) {
            return Err(Error::InvalidLaw("atoms need location >= 0 and mass in (0, 1]".into()));
        }
        let mut mass: f64 = self.atoms.iter().map(|a| a.1).sum();
        if let Some(ac) = &self.ac {
            let (lo, hi) = ac.support;
            let integral = integrate_over(|x| (ac.density)(x), lo, hi)?;
            if (integral - 1.0).abs() > 1e-6 {
                return Err(Error::InvalidLaw(format!("density integrates to {integral}")));
            }
            mass += ac.weight;
        }
        if (mass - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidLaw(format!("total mass {mass}")));
        }
        Ok(())
    }

    /// `P(X ≤ x)`.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        let mut p: f64 = self.atoms.iter().filter(|a| a.0 <= x).map(|a| a.1).sum();
        if let Some(ac) = &self.ac {
            let (lo, hi) = ac.support;
            if x > lo {
                p += ac.weight * tanh_sinh(|s| (ac.density)(s), lo, x.min(hi), 1e-11)?;
            }
        }
        Ok(p.min(1.0))
    }

    /// `∫ f dλ`, exact over atoms and by quadrature over the density.
    /// `breaks` lists interior points where `f` is not smooth.
    pub fn expect<F: Fn(f64) -> f64>(&self, f: F, breaks: &[f64]) -> Result<f64> {
        let mut total: f64 = self.atoms.iter().map(|&(x, p)| p * f(x)).sum();
        if let Some(ac) = &self.ac {
            let (lo, hi) = ac.support;
            let mut cuts = vec![lo];
            cuts.extend(breaks.iter().copied().filter(|&b| b > lo && b < hi));
            cuts.sort_by(f64::total_cmp);
            cuts.push(hi);
            let g = |x: f64| f(x) * (ac.density)(x);
            let mut part = 0.0;
            for w in cuts.windows(2) {
                part += integrate_over(g, w[0], w[1])?;
            }
            total += ac.weight * part;
        }
        Ok(total)
    }
}

/// `T_a λ`; `T_0 λ = δ_0`.
pub fn dilate(m: &Measure, a: f64) -> Measure {
    if a == 0.0 {
        return Measure::delta(0.0);
    }
    let atoms = m.atoms.iter().map(|&(x, p)| (a * x, p)).collect();
    let ac = m.ac.as_ref().map(|ac| {
        let d = ac.density.clone();
        AcPart {
            density: Arc::new(move |x| d(x / a) / a),
            support: (a * ac.support.0, a * ac.support.1),
            weight: ac.weight,
        }
    });
    let s = m.sampler.clone();
    Measure { atoms, ac, sampler: Arc::new(move |rng| a * s(rng)) }
}

/// Step laws with closed-form tails used by walks and memoryless checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum StepLaw {
    Delta(f64),
    /// `P(X > x) = e^{-x^α}`.
    Weibull { alpha: f64 },
    /// `P(X > x) = (1 - x^α)_+`.
    Kendall { alpha: f64 },
    Uniform { lo: f64, hi: f64 },
    Exponential { rate: f64 },
}

impl StepLaw {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            StepLaw::Delta(x) => x,
            StepLaw::Weibull { alpha } => {
                let e = -open_unit(rng).ln();
                if alpha == 1.0 {
                    e
                } else {
                    e.powf(1.0 / alpha)
                }
            }
            StepLaw::Kendall { alpha } => {
                let u = open_unit(rng);
                if alpha == 1.0 {
                    u
                } else {
                    u.powf(1.0 / alpha)
                }
            }
            StepLaw::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            StepLaw::Exponential { rate } => -open_unit(rng).ln() / rate,
        }
    }

    /// `P(X ≤ x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        match *self {
            StepLaw::Delta(d) => {
                if x >= d {
                    1.0
                } else {
                    0.0
                }
            }
            StepLaw::Weibull { alpha } => -(-x.powf(alpha)).exp_m1(),
            StepLaw::Kendall { alpha } => x.powf(alpha).min(1.0),
            StepLaw::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            StepLaw::Exponential { rate } => -(-rate * x).exp_m1(),
        }
    }

    pub fn tail(&self, x: f64) -> f64 {
        1.0 - self.cdf(x)
    }

    pub fn to_measure(&self) -> Measure {
        let law = *self;
        let sampler = move |rng: &mut SimRng| law.sample(rng);
        let built = match law {
            StepLaw::Delta(x) => return Measure::delta(x),
            StepLaw::Weibull { alpha } => Measure::continuous(
                move |x| if x > 0.0 { alpha * x.powf(alpha - 1.0) * (-x.powf(alpha)).exp() } else { 0.0 },
                (0.0, f64::INFINITY),
                sampler,
            ),
            StepLaw::Kendall { alpha } => {
                Measure::continuous(move |x| alpha * x.powf(alpha - 1.0), (0.0, 1.0), sampler)
            }
            StepLaw::Uniform { lo, hi } => Measure::continuous(move |_| 1.0 / (hi - lo), (lo, hi), sampler),
            StepLaw::Exponential { rate } => {
                Measure::continuous(move |x| rate * (-rate * x).exp(), (0.0, f64::INFINITY), sampler)
            }
        };
        built.expect("step laws are normalized")
    }
}

impl std::str::FromStr for StepLaw {
    type Err = Error;

    /// `delta:x`, `weibull:alpha`, `kendall:alpha`, `uniform:lo,hi` or
    /// `exponential:rate`.
    fn from_str(s: &str) -> Result<Self> {
        let err = |reason: &str| Error::Parse { input: s.into(), reason: reason.into() };
        let (tag, rest) = s.trim().split_once(':').unwrap_or((s.trim(), ""));
        let nums: Vec<f64> = rest
            .split(',')
            .filter(|p| !p.trim().is_empty())
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| err("parameters must be numbers"))?;
        let positive = |v: f64| v.is_finite() && v > 0.0;
        let law = match (tag, nums.as_slice()) {
            ("delta", &[x]) if x.is_finite() && x >= 0.0 => StepLaw::Delta(x),
            ("weibull", &[alpha]) if positive(alpha) => StepLaw::Weibull { alpha },
            ("kendall", &[alpha]) if positive(alpha) => StepLaw::Kendall { alpha },
            ("uniform", &[lo, hi]) if lo >= 0.0 && hi > lo && hi.is_finite() => StepLaw::Uniform { lo, hi },
            ("exponential", &[rate]) if positive(rate) => StepLaw::Exponential { rate },
            _ => {
                return Err(err(
                    "expected delta:x, weibull:alpha, kendall:alpha, uniform:lo,hi or exponential:rate with valid values",
                ))
            }
        };
        Ok(law)
    }
}

/// Values of `Φ_λ(t) = ∫ h(δ_{tx}) λ(dx)` on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GcfTable {
    pub algebra: String,
    pub grid: Grid,
    pub values: Vec<f64>,
    /// Zero for closed-form entries.
    pub stderr: Vec<f64>,
}

impl GcfTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,value,stderr\n");
        for ((t, v), s) in self.grid.iter().zip(&self.values).zip(&self.stderr) {
            out.push_str(&format!("{t:.16e},{v:.16e},{s:.16e}\n"));
        }
        out
    }
}

fn require_regular(algebra: &Algebra) -> Result<()> {
    if algebra.regular {
        Ok(())
    } else {
        Err(Error::Unsupported { algebra: algebra.name(), capability: "generalized characteristic functions" })
    }
}

/// Points in `x` where `h(δ_{tx})` is not smooth.
fn h_breaks(algebra: &Algebra, t: f64) -> Vec<f64> {
    use crate::algebra::AlgebraId::*;
    match algebra.id {
        Kendall { .. } | Max | Nabla { .. } if t > 0.0 => vec![1.0 / t],
        _ => vec![],
    }
}

/// GCF of `m`: exact over atoms plus quadrature over the density; falls back
/// to a Monte Carlo mean over `budget` draws when quadrature fails.
pub fn gcf(algebra: &Algebra, m: &Measure, grid: &Grid, budget: usize, seed: u64) -> Result<GcfTable> {
    require_regular(algebra)?;
    let exact: Result<Vec<f64>> = grid
        .iter()
        .map(|t| {
            let h = |x: f64| algebra.h(t * x).unwrap_or(f64::NAN);
            m.expect(h, &h_breaks(algebra, t))
        })
        .collect();
    match exact {
        Ok(values) if values.iter().all(|v| v.is_finite()) => Ok(GcfTable {
            algebra: algebra.name(),
            grid: grid.clone(),
            stderr: vec![0.0; values.len()],
            values,
        }),
        _ => gcf_mc(algebra, grid, budget, seed, |rng| m.sample(rng)),
    }
}

/// Monte Carlo GCF: the mean of `h(δ_{tX})` over `budget` draws of `draw`.
pub fn gcf_mc<F>(algebra: &Algebra, grid: &Grid, budget: usize, seed: u64, draw: F) -> Result<GcfTable>
where
    F: Fn(&mut SimRng) -> f64 + Sync,
{
    require_regular(algebra)?;
    let pts = grid.points();
    let acc = mc::fold(
        budget,
        seed,
        || vec![Moments::default(); pts.len()],
        |acc, rng| {
            let x = draw(rng);
            for (m, &t) in acc.iter_mut().zip(pts) {
                m.push(algebra.h(t * x).unwrap_or(f64::NAN));
            }
        },
        |a, b| a.into_iter().zip(b).map(|(x, y)| x.merge(y)).collect(),
    );
    Ok(table_from_moments(algebra, grid, &acc))
}

/// Empirical GCF of a fixed sample.
pub fn gcf_of_samples(algebra: &Algebra, grid: &Grid, samples: &[f64]) -> Result<GcfTable> {
    require_regular(algebra)?;
    let acc: Vec<Moments> = grid
        .iter()
        .map(|t| samples.iter().map(|&x| algebra.h(t * x).unwrap_or(f64::NAN)).collect())
        .collect();
    Ok(table_from_moments(algebra, grid, &acc))
}

fn table_from_moments(algebra: &Algebra, grid: &Grid, acc: &[Moments]) -> GcfTable {
    GcfTable {
        algebra: algebra.name(),
        grid: grid.clone(),
        values: acc.iter().map(|m| m.mean).collect(),
        stderr: acc.iter().map(Moments::stderr).collect(),
    }
}

/// Pointwise `exp{-a(1 - Φ_ν(t))}` with first-order error propagation.
pub fn exp_gcf(a: f64, phi_nu: &GcfTable) -> GcfTable {
    let values: Vec<f64> = phi_nu.values.iter().map(|&p| (-a * (1.0 - p)).exp()).collect();
    let stderr = values.iter().zip(&phi_nu.stderr).map(|(v, s)| a * s * v.abs()).collect();
    GcfTable { algebra: phi_nu.algebra.clone(), grid: phi_nu.grid.clone(), values, stderr }
}

/// One draw from `ν^{⋄n}` by folding `s ← s ⋄ X_i`; `n = 0` gives 0.
pub fn conv_power_sample<R, S>(kernel: &KernelSampler, mut step: S, n: u64, rng: &mut R) -> f64
where
    R: Rng + ?Sized,
    S: FnMut(&mut R) -> f64,
{
    if n == 0 {
        return 0.0;
    }
    let mut s = step(rng);
    for _ in 1..n {
        let x = step(rng);
        s = kernel.sample(s, x, rng);
    }
    s
}

/// One draw from `Exp_⋄(aν)`: a Poisson(a) number of ν-steps, folded.
pub fn exp_sample<R, S>(kernel: &KernelSampler, a: f64, step: S, rng: &mut R) -> f64
where
    R: Rng + ?Sized,
    S: FnMut(&mut R) -> f64,
{
    let k = poisson_inversion(a, rng);
    conv_power_sample(kernel, step, k, rng)
}

/// One draw from `(pδ_1 + (1-p)δ_0)^{⋄n}`: `δ_1^{⋄K}` with `K ~ Binomial(n, p)`.
pub fn bernoulli_sample<R: Rng + ?Sized>(kernel: &KernelSampler, n: u64, p: f64, rng: &mut R) -> f64 {
    let k = binomial_inversion(n, p, rng);
    conv_power_sample(kernel, |_| 1.0, k, rng)
}

/// Poisson quantile `min{k : P(N ≤ k) ≥ u}`.
pub(crate) fn poisson_quantile(lambda: f64, u: f64) -> u64 {
    let mut k = 0;
    let mut cum = poisson_pmf(0, lambda);
    while cum < u && k < 100_000 {
        k += 1;
        cum += poisson_pmf(k, lambda);
        if poisson_pmf(k, lambda) == 0.0 && k as f64 > lambda {
            break;
        }
    }
    k
}

/// Binomial quantile by sequential summation of the pmf.
fn binomial_quantile(n: u64, p: f64, u: f64) -> u64 {
    let ln_q = (-p).ln_1p();
    let ratio = p / (1.0 - p);
    let mut pk = (n as f64 * ln_q).exp();
    let mut cum = pk;
    let mut k = 0;
    while cum < u && k < n {
        pk *= (n - k) as f64 / (k + 1) as f64 * ratio;
        k += 1;
        cum += pk;
    }
    k
}

/// Sup-grid distance between the GCF of the generalized Bernoulli law with
/// `p = a/n` and its compound-Poisson limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BernoulliDistance {
    pub n: u64,
    /// Monte Carlo estimate of `sup_t |Φ_{ν_n}(t) - exp{-a(1-h(δ_t))}|`.
    pub distance: f64,
    /// Standard error at the maximizing grid point.
    pub sigma: f64,
    /// The same distance from `(1 - p + p h(δ_t))^n`.
    pub closed_form: f64,
}

/// Estimates [`BernoulliDistance`] with the Exp law as a control variate:
/// both counts are inverted from one uniform and read off one fold chain
/// `δ_1^{⋄k}`, so the paired difference of `h(δ_{tX})` is nonzero only when
/// the counts differ.
pub fn bernoulli_exp_distance(
    algebra: &Algebra,
    n: u64,
    a: f64,
    grid: &Grid,
    budget: usize,
    seed: u64,
) -> Result<BernoulliDistance> {
    require_regular(algebra)?;
    let kernel = algebra.sampler()?;
    let p = a / n as f64;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("a/n = {p} is not a probability")));
    }
    let pts = grid.points();
    let acc = mc::fold(
        budget,
        seed,
        || vec![Moments::default(); pts.len()],
        |acc, rng| {
            let u = open_unit(rng);
            let kb = binomial_quantile(n, p, u);
            let ke = poisson_quantile(a, u);
            let (lo, hi) = (kb.min(ke), kb.max(ke));
            let mut s = 0.0;
            let mut at_lo = 0.0;
            for k in 1..=hi {
                s = if k == 1 { 1.0 } else { kernel.sample(s, 1.0, rng) };
                if k == lo {
                    at_lo = s;
                }
            }
            let (xb, xe) = if kb <= ke { (at_lo, s) } else { (s, at_lo) };
            for (m, &t) in acc.iter_mut().zip(pts) {
                let d = if kb == ke { 0.0 } else { algebra.h(t * xb).unwrap() - algebra.h(t * xe).unwrap() };
                m.push(d);
            }
        },
        |x, y| x.into_iter().zip(y).map(|(a, b)| a.merge(b)).collect(),
    );
    let best = acc
        .iter()
        .max_by(|a, b| a.mean.abs().total_cmp(&b.mean.abs()))
        .expect("grid is nonempty");
    let closed_form = pts
        .iter()
        .map(|&t| {
            let h = algebra.h(t).unwrap();
            ((1.0 - p + p * h).powf(n as f64) - (-a * (1.0 - h)).exp()).abs()
        })
        .fold(0.0, f64::max);
    Ok(BernoulliDistance { n, distance: best.mean.abs(), sigma: best.stderr(), closed_form })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::stream_rng;
    use crate::numerics::ks_distance_mixed;

    #[test]
    fn dilation() {
        let d = dilate(&Measure::delta(1.0), 3.0);
        assert_eq!(d.atoms(), &[(3.0, 1.0)]);
        let w = StepLaw::Weibull { alpha: 1.0 }.to_measure();
        assert_eq!(dilate(&w, 0.0).atoms(), &[(0.0, 1.0)]);
        let twice = dilate(&dilate(&w, 2.0), 1.5);
        let once = dilate(&w, 3.0);
        let alg = Algebra::stable(1.0).unwrap();
        let grid = Grid::linspace(0.0, 3.0, 7).unwrap();
        let a = gcf(&alg, &twice, &grid, 0, 1).unwrap();
        let b = gcf(&alg, &once, &grid, 0, 1).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-9);
        }
        twice.check_mass().unwrap();
    }

    #[test]
    fn gcf_examples() {
        let grid = Grid::linspace(0.0, 4.0, 9).unwrap();
        let t = gcf(&Algebra::kendall(1.0).unwrap(), &Measure::delta(0.0), &grid, 0, 1).unwrap();
        assert!(t.values.iter().all(|&v| v == 1.0));
        let g = Grid::new(vec![0.5]).unwrap();
        let t = gcf(&Algebra::kendall(1.0).unwrap(), &Measure::delta(1.0), &g, 0, 1).unwrap();
        assert_eq!(t.values[0], 0.5);
        for &alpha in &[0.5, 1.0, 2.0] {
            let alg = Algebra::stable(alpha).unwrap();
            let w = StepLaw::Weibull { alpha }.to_measure();
            let t = gcf(&alg, &w, &grid, 0, 1).unwrap();
            for (x, v) in grid.iter().zip(&t.values) {
                assert!((v - 1.0 / (x.powf(alpha) + 1.0)).abs() < 1e-8, "alpha={alpha} t={x}");
            }
        }
        assert!(gcf(&Algebra::max(), &Measure::delta(1.0), &grid, 0, 1).is_err());
    }

    #[test]
    fn gcf_kendall_step_law_quadrature_handles_kink() {
        // Φ(t) = ∫_0^1 (1 - t x)_+ dx = 1 - t/2 for t ≤ 1, 1/(2t) beyond
        let alg = Algebra::kendall(1.0).unwrap();
        let grid = Grid::new(vec![0.5, 1.0, 2.0, 5.0]).unwrap();
        let t = gcf(&alg, &StepLaw::Kendall { alpha: 1.0 }.to_measure(), &grid, 0, 1).unwrap();
        let want = [0.75, 0.5, 0.25, 0.1];
        for (v, w) in t.values.iter().zip(want) {
            assert!((v - w).abs() < 1e-9, "{v} vs {w}");
        }
    }

    #[test]
    fn csv_layout() {
        let grid = Grid::new(vec![0.0, 1.0]).unwrap();
        let t = GcfTable { algebra: "x".into(), grid, values: vec![1.0, 0.5], stderr: vec![0.0, 0.0] };
        let csv = t.to_csv();
        assert!(csv.starts_with("t,value,stderr\n0.0000000000000000e0,1.0000000000000000e0,"));
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn exp_gcf_examples() {
        let grid = Grid::new(vec![0.0, 1.0]).unwrap();
        let phi = GcfTable { algebra: "x".into(), grid, values: vec![1.0, 0.0], stderr: vec![0.0, 0.0] };
        let e = exp_gcf(1.0, &phi);
        assert_eq!(e.values[0], 1.0);
        assert!((e.values[1] - (-1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn powers_and_bernoulli_edge_cases() {
        let mut rng = stream_rng(3, 0);
        let k = Algebra::stable(1.0).unwrap().sampler().unwrap();
        assert_eq!(conv_power_sample(&k, |_| 1.0, 0, &mut rng), 0.0);
        assert_eq!(conv_power_sample(&k, |_| 1.0, 4, &mut rng), 4.0);
        assert_eq!(bernoulli_sample(&k, 10, 0.0, &mut rng), 0.0);
        let k2 = Algebra::stable(2.0).unwrap().sampler().unwrap();
        assert!((bernoulli_sample(&k2, 9, 1.0, &mut rng) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn max_exp_masses() {
        let k = Algebra::max().sampler().unwrap();
        let xs = mc::collect(100_000, 5, |rng| exp_sample(&k, 2f64.ln(), |_| 1.0, rng));
        let zeros = xs.iter().filter(|&&x| x == 0.0).count() as f64 / 1e5;
        assert!(xs.iter().all(|&x| x == 0.0 || x == 1.0));
        assert!((zeros - 0.5).abs() < 4.0 * mc::binomial_sigma(0.5, 100_000));
    }

    #[test]
    fn kendall_square_of_delta_one() {
        // δ_1 △ δ_1 = π_2: P(X ≤ t) = 1 - t^{-2} on [1, ∞)
        let k = Algebra::kendall(1.0).unwrap().sampler().unwrap();
        let mut xs = mc::collect(100_000, 6, |rng| conv_power_sample(&k, |_| 1.0, 2, rng));
        xs.sort_by(f64::total_cmp);
        let cdf = |t: f64| if t >= 1.0 { 1.0 - t.powi(-2) } else { 0.0 };
        assert!(ks_distance_mixed(&xs, cdf, cdf) < 0.01);
    }

    #[test]
    fn quantiles_agree_with_pmfs() {
        assert_eq!(poisson_quantile(1.0, 1e-9), 0);
        assert_eq!(poisson_quantile(1.0, (-1f64).exp() + 1e-12), 1);
        assert_eq!(binomial_quantile(10, 0.5, 1e-9), 0);
        assert_eq!(binomial_quantile(10, 0.5, 1.0), 10);
    }

    #[test]
    fn bernoulli_distance_tracks_closed_form() {
        let alg = Algebra::stable(1.0).unwrap();
        let grid = Grid::linspace(0.0, 4.0, 20).unwrap();
        let d = bernoulli_exp_distance(&alg, 100, 1.0, &grid, 200_000, 4).unwrap();
        assert!((d.distance - d.closed_form).abs() < 5.0 * d.sigma + 1e-3, "{d:?}");
    }

    #[test]
    fn step_law_grammar() {
        assert_eq!("weibull:1.5".parse::<StepLaw>().unwrap(), StepLaw::Weibull { alpha: 1.5 });
        assert_eq!("uniform:0,2".parse::<StepLaw>().unwrap(), StepLaw::Uniform { lo: 0.0, hi: 2.0 });
        assert_eq!("delta:1".parse::<StepLaw>().unwrap(), StepLaw::Delta(1.0));
        for bad in ["weibull", "weibull:-1", "uniform:2,1", "pareto:2", "kendall:x"] {
            assert!(bad.parse::<StepLaw>().is_err(), "{bad}");
        }
    }
}
