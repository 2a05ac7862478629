//! Lack-of-memory laws `F(t) = 1 - h(δ_{t/c})` and the factorization
//! `P{X > x ⋄ y} = P{X > x} P{X > y}`.

use crate::algebra::{Algebra, AlgebraId};
use crate::error::{Error, Result};
use crate::mc::{self, binomial_sigma, open_unit, Moments, SimRng};
use crate::measure::StepLaw;
use crate::numerics::Grid;
use crate::report::{CheckRow, SIGMA_BUDGET};
use rand_distr::{Distribution, Gamma};

/// Candidate memoryless law of an algebra at scale `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LomLaw {
    pub algebra: Algebra,
    pub scale: f64,
    pub valid: bool,
    /// First grid point where `1 - h` fails to be a distribution function.
    pub witness: Option<f64>,
}

impl LomLaw {
    /// `F(t) = 1 - h(δ_{t/c})`.
    pub fn cdf(&self, t: f64) -> Result<f64> {
        if t <= 0.0 {
            return Ok(0.0);
        }
        Ok(1.0 - self.algebra.h(t / self.scale)?)
    }

    pub fn tail(&self, t: f64) -> Result<f64> {
        Ok(1.0 - self.cdf(t)?)
    }
}

const GRID_LO: f64 = 1e-3;
const GRID_HI: f64 = 1e3;
const GRID_POINTS: usize = 400;

/// Scans `h(δ_t)` on the validation grid; `Err(t)` names the first failure.
fn scan_tail(algebra: &Algebra) -> Result<std::result::Result<(), f64>> {
    if (algebra.h(0.0)? - 1.0).abs() > 1e-12 {
        return Ok(Err(0.0));
    }
    let grid = Grid::geometric(GRID_LO, GRID_HI, GRID_POINTS)?;
    let mut prev = 1.0;
    for t in grid.iter() {
        let h = algebra.h(t)?;
        if h < -1e-12 || h > prev + 1e-12 {
            return Ok(Err(t));
        }
        prev = h;
    }
    // heavy tails decay slowly: follow h out to 1e300 before declaring a defect
    let mut t = GRID_HI;
    while t < 1e300 {
        t *= 1e6;
        let h = algebra.h(t)?;
        if h < -1e-12 || h > prev + 1e-12 {
            return Ok(Err(t));
        }
        prev = h;
    }
    if prev > 1e-3 {
        return Ok(Err(t));
    }
    Ok(Ok(()))
}

/// Inspects `1 - h(δ_{t/c})` without failing on an invalid tail.
pub fn probe_lom_law(algebra: &Algebra, c: f64) -> Result<LomLaw> {
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::Domain(format!("scale must be positive, got {c}")));
    }
    if !algebra.regular {
        return Err(Error::Unsupported { algebra: algebra.name(), capability: "a lack-of-memory law" });
    }
    let scan = scan_tail(algebra)?;
    Ok(LomLaw { algebra: *algebra, scale: c, valid: scan.is_ok(), witness: scan.err().map(|t| t * c) })
}

/// The memoryless law at scale `c`; fails with the first bad grid point.
pub fn lom_law(algebra: &Algebra, c: f64) -> Result<LomLaw> {
    let law = probe_lom_law(algebra, c)?;
    match law.witness {
        Some(t) => Err(Error::NotATail { t }),
        None => Ok(law),
    }
}

/// One draw from a valid memoryless law.
pub fn lom_sample(law: &LomLaw, rng: &mut SimRng) -> Result<f64> {
    if !law.valid {
        return Err(Error::InvalidLaw(format!("{} has no memoryless law", law.algebra.name())));
    }
    let c = law.scale;
    let unit = match law.algebra.id {
        AlgebraId::Classical => -open_unit(rng).ln(),
        AlgebraId::Stable { alpha } => (-open_unit(rng).ln()).powf(1.0 / alpha),
        AlgebraId::Kendall { alpha } => open_unit(rng).powf(1.0 / alpha),
        AlgebraId::Kucharczak { alpha } => {
            Gamma::new(alpha, 1.0).map_err(|e| Error::Domain(e.to_string()))?.sample(rng)
        }
        _ => return invert_cdf(law, open_unit(rng)),
    };
    Ok(c * unit)
}

/// Solves `F(t) = u` by bracketing and bisection.
fn invert_cdf(law: &LomLaw, u: f64) -> Result<f64> {
    let mut hi = law.scale;
    while law.cdf(hi)? < u {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::NonConvergence(format!("no quantile for u = {u}")));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if law.cdf(mid)? < u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// A law on the half-line with a tail function and a sampler.
pub trait TailLaw: Sync {
    fn tail(&self, x: f64) -> f64;
    fn draw(&self, rng: &mut SimRng) -> f64;
    fn label(&self) -> String;
}

impl TailLaw for LomLaw {
    fn tail(&self, x: f64) -> f64 {
        LomLaw::tail(self, x).unwrap_or(f64::NAN)
    }

    fn draw(&self, rng: &mut SimRng) -> f64 {
        lom_sample(self, rng).unwrap_or(f64::NAN)
    }

    fn label(&self) -> String {
        format!("lom(c={})", self.scale)
    }
}

impl TailLaw for StepLaw {
    fn tail(&self, x: f64) -> f64 {
        StepLaw::tail(self, x)
    }

    fn draw(&self, rng: &mut SimRng) -> f64 {
        self.sample(rng)
    }

    fn label(&self) -> String {
        format!("{self:?}")
    }
}

/// Checks `P{X > Z} = P{X > x}P{X > y}` for `Z ~ δ_x ⋄ δ_y` and the
/// conjunction identity `P{X > Z, X > x} = P{X > Z}`.
pub fn lom_factorization_test(
    algebra: &Algebra,
    law: &dyn TailLaw,
    x: f64,
    y: f64,
    budget: usize,
    seed: u64,
) -> Result<Vec<CheckRow>> {
    if !algebra.monotonic {
        return Err(Error::Unsupported { algebra: algebra.name(), capability: "the factorization test" });
    }
    let kernel = algebra.sampler()?;
    let acc = mc::fold(
        budget,
        seed,
        || [Moments::default(); 2],
        |acc, rng| {
            let xv = law.draw(rng);
            let z = kernel.sample(x, y, rng);
            let above = xv > z;
            acc[0].push(if above { 1.0 } else { 0.0 });
            acc[1].push(if above != (above && xv > x) { 1.0 } else { 0.0 });
        },
        |l, r| [l[0].merge(r[0]), l[1].merge(r[1])],
    );
    let predicted = law.tail(x) * law.tail(y);
    let params = format!("law={},x={x},y={y}", law.label());
    Ok(vec![
        CheckRow::within_sigma(
            "lom_factorization",
            algebra.name(),
            &params,
            acc[0].mean,
            predicted,
            binomial_sigma(predicted, acc[0].n),
            SIGMA_BUDGET,
        ),
        CheckRow::within_sigma(
            "lom_conjunction",
            algebra.name(),
            &params,
            acc[0].mean - acc[1].mean,
            acc[0].mean,
            acc[1].stderr(),
            SIGMA_BUDGET,
        ),
    ])
}
