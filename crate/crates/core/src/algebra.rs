//! Registered generalized-convolution algebras: homomorphisms and the
//! probability kernel `δ_x ⋄ δ_y`.

use crate::error::{Error, Result};
use crate::mc::open_unit;
use crate::numerics::{beta_fn, gamma, macdonald_k, reg_upper_gamma, sinc};
use rand::Rng;
use rand_distr::{Beta, Distribution};
use std::fmt;
use std::str::FromStr;

/// Algebra tag with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlgebraId {
    Classical,
    Symmetric,
    Alpha1 { alpha: f64 },
    Stable { alpha: f64 },
    Kendall { alpha: f64 },
    Kingman3,
    Max,
    AlphaBeta { alpha: f64, beta: f64 },
    Kucharczak { alpha: f64 },
    Volkovich { beta: f64 },
    Nabla { alpha: f64 },
}

impl AlgebraId {
    pub fn tag(&self) -> &'static str {
        match self {
            AlgebraId::Classical => "classical",
            AlgebraId::Symmetric => "symmetric",
            AlgebraId::Alpha1 { .. } => "alpha1",
            AlgebraId::Stable { .. } => "stable",
            AlgebraId::Kendall { .. } => "kendall",
            AlgebraId::Kingman3 => "kingman3",
            AlgebraId::Max => "max",
            AlgebraId::AlphaBeta { .. } => "alphabeta",
            AlgebraId::Kucharczak { .. } => "kucharczak",
            AlgebraId::Volkovich { .. } => "volkovich",
            AlgebraId::Nabla { .. } => "nabla",
        }
    }

    /// Every tag accepted by the parser.
    pub const TAGS: [&'static str; 11] = [
        "classical",
        "symmetric",
        "alpha1",
        "stable",
        "kendall",
        "kingman3",
        "max",
        "alphabeta",
        "kucharczak",
        "volkovich",
        "nabla",
    ];

    fn params(&self) -> Vec<(&'static str, f64)> {
        match *self {
            AlgebraId::Alpha1 { alpha }
            | AlgebraId::Stable { alpha }
            | AlgebraId::Kendall { alpha }
            | AlgebraId::Kucharczak { alpha }
            | AlgebraId::Nabla { alpha } => vec![("alpha", alpha)],
            AlgebraId::AlphaBeta { alpha, beta } => vec![("alpha", alpha), ("beta", beta)],
            AlgebraId::Volkovich { beta } => vec![("beta", beta)],
            _ => vec![],
        }
    }

    fn validate(self) -> Result<Self> {
        let bad = |what: String| Err(Error::Domain(format!("{}: {what}", self.tag())));
        for (name, v) in self.params() {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be a positive real, got {v}"));
            }
        }
        match self {
            AlgebraId::Kucharczak { alpha } | AlgebraId::Nabla { alpha } if alpha >= 1.0 => {
                bad(format!("alpha must lie in (0, 1), got {alpha}"))
            }
            AlgebraId::Volkovich { beta } if beta >= 0.5 => {
                bad(format!("beta must lie in (0, 1/2), got {beta}"))
            }
            // the θ density (1 - x²)^{(β-3)/2} is integrable only for β ≥ 1
            AlgebraId::AlphaBeta { beta, .. } if beta < 1.0 => {
                bad(format!("beta must be at least 1, got {beta}"))
            }
            _ => Ok(self),
        }
    }
}

impl fmt::Display for AlgebraId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())?;
        for (i, (k, v)) in self.params().into_iter().enumerate() {
            write!(f, "{}{k}={v}", if i == 0 { ':' } else { ',' })?;
        }
        Ok(())
    }
}

impl FromStr for AlgebraId {
    type Err = Error;

    /// `tag[:key=value,...]`; omitted parameters take their defaults
    /// (`alpha = 1`, or `1/2` where the range is `(0, 1)`; `beta = 3` for
    /// alphabeta, `1/4` for volkovich).
    fn from_str(s: &str) -> Result<Self> {
        let parse_err = |reason: String| Error::Parse { input: s.to_string(), reason };
        let (tag, rest) = match s.trim().split_once(':') {
            Some((t, r)) => (t.trim(), Some(r)),
            None => (s.trim(), None),
        };
        let mut alpha = None;
        let mut beta = None;
        if let Some(rest) = rest {
            for pair in rest.split(',').filter(|p| !p.trim().is_empty()) {
                let (k, v) = pair
                    .split_once('=')
                    .ok_or_else(|| parse_err(format!("`{pair}` is not key=value")))?;
                let v: f64 = v
                    .trim()
                    .parse()
                    .map_err(|_| parse_err(format!("`{}` is not a number", v.trim())))?;
                match k.trim() {
                    "alpha" => alpha = Some(v),
                    "beta" => beta = Some(v),
                    other => return Err(parse_err(format!("unknown parameter `{other}`"))),
                }
            }
        }
        let a = |default: f64| alpha.unwrap_or(default);
        let b = |default: f64| beta.unwrap_or(default);
        let id = match tag {
            "classical" => AlgebraId::Classical,
            "symmetric" => AlgebraId::Symmetric,
            "alpha1" => AlgebraId::Alpha1 { alpha: a(1.0) },
            "stable" => AlgebraId::Stable { alpha: a(1.0) },
            "kendall" => AlgebraId::Kendall { alpha: a(1.0) },
            "kingman3" => AlgebraId::Kingman3,
            "max" => AlgebraId::Max,
            "alphabeta" => AlgebraId::AlphaBeta { alpha: a(1.0), beta: b(3.0) },
            "kucharczak" => AlgebraId::Kucharczak { alpha: a(0.5) },
            "volkovich" => AlgebraId::Volkovich { beta: b(0.25) },
            "nabla" => AlgebraId::Nabla { alpha: a(0.5) },
            other => return Err(parse_err(format!("unknown algebra `{other}`"))),
        };
        let accepted: Vec<&str> = id.params().iter().map(|(k, _)| *k).collect();
        for (name, given) in [("alpha", alpha), ("beta", beta)] {
            if given.is_some() && !accepted.contains(&name) {
                return Err(parse_err(format!("`{tag}` takes no parameter `{name}`")));
            }
        }
        id.validate().map_err(|e| parse_err(e.to_string()))
    }
}

/// A registered algebra with its capability flags.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Algebra {
    pub id: AlgebraId,
    pub regular: bool,
    pub monotonic: bool,
    pub can_sample_kernel: bool,
    pub can_eval_kernel_cdf: bool,
    pub can_eval_kernel_density: bool,
}

impl Algebra {
    pub fn new(id: AlgebraId) -> Result<Self> {
        let id = id.validate()?;
        use AlgebraId::*;
        // Alpha1 keeps the atom |a^α - b^α|^{1/α} < max(a, b), so it is not monotonic.
        let monotonic = matches!(id, Classical | Stable { .. } | Kendall { .. } | Max);
        let can_sample_kernel = !matches!(id, Kucharczak { .. } | Volkovich { .. } | Nabla { .. });
        let can_eval_kernel_cdf =
            matches!(id, Classical | Symmetric | Alpha1 { .. } | Stable { .. } | Kendall { .. } | Max);
        Ok(Algebra {
            id,
            regular: !matches!(id, Max),
            monotonic,
            can_sample_kernel,
            can_eval_kernel_cdf,
            can_eval_kernel_density: matches!(id, Kucharczak { .. } | Volkovich { .. }),
        })
    }

    pub fn classical() -> Self {
        Self::new(AlgebraId::Classical).unwrap()
    }

    pub fn symmetric() -> Self {
        Self::new(AlgebraId::Symmetric).unwrap()
    }

    pub fn stable(alpha: f64) -> Result<Self> {
        Self::new(AlgebraId::Stable { alpha })
    }

    pub fn kendall(alpha: f64) -> Result<Self> {
        Self::new(AlgebraId::Kendall { alpha })
    }

    pub fn kingman3() -> Self {
        Self::new(AlgebraId::Kingman3).unwrap()
    }

    pub fn max() -> Self {
        Self::new(AlgebraId::Max).unwrap()
    }

    /// Every registered algebra at default parameters.
    pub fn registry() -> Vec<Algebra> {
        AlgebraId::TAGS.iter().map(|t| t.parse::<Algebra>().unwrap()).collect()
    }

    pub fn name(&self) -> String {
        self.id.to_string()
    }

    fn unsupported(&self, capability: &'static str) -> Error {
        Error::Unsupported { algebra: self.name(), capability }
    }

    /// `h(δ_t)`.
    pub fn h(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("h(δ_t) needs t >= 0, got {t}")));
        }
        use AlgebraId::*;
        Ok(match self.id {
            Classical => (-t).exp(),
            // e^{-t} is not multiplicative for this kernel; cos t is
            Symmetric => t.cos(),
            Alpha1 { alpha } => t.powf(alpha).cos(),
            Stable { alpha } => (-t.powf(alpha)).exp(),
            Kendall { alpha } => (1.0 - t.powf(alpha)).max(0.0),
            Kingman3 => sinc(t),
            Max => {
                if t <= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            AlphaBeta { alpha, beta } => {
                crate::numerics::normalized_bessel_j(beta / 2.0 - 1.0, t.powf(alpha))
            }
            Kucharczak { alpha } => reg_upper_gamma(alpha, t)?,
            Volkovich { beta } => {
                if t == 0.0 {
                    1.0
                } else {
                    2f64.powf(1.0 - beta) * t.powf(beta) / gamma(beta) * macdonald_k(beta, t)?
                }
            }
            Nabla { alpha } => {
                if t == 0.0 {
                    1.0
                } else if t > 1.0 {
                    0.0
                } else {
                    let k = t.log2().floor();
                    1.0 - 2f64.powf((1.0 + alpha) * k)
                        - (2.0 - 2f64.powf(-alpha)) * (1.0 - 2f64.powf(k)) * t.powf(alpha)
                }
            }
        })
    }

    /// Kernel sampler, available when `can_sample_kernel`.
    pub fn sampler(&self) -> Result<KernelSampler> {
        use AlgebraId::*;
        let kind = match self.id {
            Classical => Kind::Classical,
            Symmetric => Kind::Alpha1 { alpha: 1.0 },
            Alpha1 { alpha } => Kind::Alpha1 { alpha },
            Stable { alpha } => Kind::Stable { alpha },
            Kendall { alpha } => Kind::Kendall { alpha },
            Kingman3 => Kind::Kingman3,
            Max => Kind::Max,
            AlphaBeta { alpha, beta } => {
                let theta = if beta == 1.0 {
                    Theta::Rademacher
                } else {
                    let shape = (beta - 1.0) / 2.0;
                    Theta::Beta(Beta::new(shape, shape).map_err(|e| Error::Domain(e.to_string()))?)
                };
                Kind::AlphaBeta { alpha, theta }
            }
            Kucharczak { .. } | Volkovich { .. } | Nabla { .. } => {
                return Err(self.unsupported("kernel sampling"))
            }
        };
        Ok(KernelSampler { kind })
    }

    /// `ρ_{x,y}([0, t))`.
    pub fn kernel_cdf(&self, x: f64, y: f64, t: f64) -> Result<f64> {
        if !(x >= 0.0 && y >= 0.0 && t >= 0.0) {
            return Err(Error::Domain(format!("kernel_cdf needs nonnegative arguments, got ({x}, {y}, {t})")));
        }
        let below = |p: f64| if p < t { 1.0 } else { 0.0 };
        let pair = |alpha: f64| {
            let (lo, hi) = (x.min(y).powf(alpha), x.max(y).powf(alpha));
            0.5 * below((hi - lo).powf(1.0 / alpha)) + 0.5 * below((hi + lo).powf(1.0 / alpha))
        };
        use AlgebraId::*;
        Ok(match self.id {
            Classical => below(x + y),
            Symmetric => 0.5 * below((x - y).abs()) + 0.5 * below(x + y),
            Alpha1 { alpha } => pair(alpha),
            Stable { alpha } => below(lp_norm(x, y, alpha)),
            Max => below(x.max(y)),
            Kendall { alpha } => {
                if t <= x.max(y) {
                    0.0
                } else {
                    1.0 - (x * y).powf(alpha) / t.powf(2.0 * alpha)
                }
            }
            _ => return Err(self.unsupported("kernel CDF evaluation")),
        })
    }

    /// Density of `δ_x ⋄ δ_y` at `u` for the absolutely continuous kernels.
    pub fn kernel_density(&self, x: f64, y: f64, u: f64) -> Result<f64> {
        if !(x > 0.0 && y > 0.0 && u > 0.0) {
            return Err(Error::Domain(format!("kernel_density needs positive arguments, got ({x}, {y}, {u})")));
        }
        match self.id {
            AlgebraId::Kucharczak { alpha } => {
                if u < lp_norm(x, y, alpha) {
                    return Ok(0.0);
                }
                let num = (x * y).powf(alpha) * (std::f64::consts::PI * alpha).sin() * (2.0 * u - x - y);
                let den = std::f64::consts::PI * ((u - x - y) * (u - x) * (u - y)).powf(alpha);
                Ok(num / den)
            }
            AlgebraId::Volkovich { beta } => {
                let a = u * u - (x - y) * (x - y);
                let b = (x + y) * (x + y) - u * u;
                if a <= 0.0 || b <= 0.0 {
                    return Ok(0.0);
                }
                Ok(2.0 * (x * y).powf(2.0 * beta) / beta_fn(beta, 0.5 - beta) * (a * b).powf(-beta - 0.5))
            }
            _ => Err(self.unsupported("kernel density evaluation")),
        }
    }
}

impl FromStr for Algebra {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algebra::new(s.parse()?)
    }
}

impl fmt::Display for Algebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.id.fmt(f)
    }
}

/// `h(δ_t)` for `algebra`.
pub fn h_delta(algebra: &Algebra, t: f64) -> Result<f64> {
    algebra.h(t)
}

fn lp_norm(x: f64, y: f64, alpha: f64) -> f64 {
    if alpha == 1.0 {
        x + y
    } else if alpha == 2.0 {
        x.hypot(y)
    } else {
        (x.powf(alpha) + y.powf(alpha)).powf(1.0 / alpha)
    }
}

/// `(v, z) = (x ∨ y, (x ∧ y)/(x ∨ y))`, with `z = 0` when `v = 0`.
pub fn canonicalize(x: f64, y: f64) -> (f64, f64) {
    let v = x.max(y);
    if v == 0.0 {
        (0.0, 0.0)
    } else {
        (v, x.min(y) / v)
    }
}

#[derive(Debug, Clone, Copy)]
enum Theta {
    Rademacher,
    Beta(Beta<f64>),
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    Classical,
    Alpha1 { alpha: f64 },
    Stable { alpha: f64 },
    Kendall { alpha: f64 },
    Kingman3,
    Max,
    AlphaBeta { alpha: f64, theta: Theta },
}

/// Draws from `δ_x ⋄ δ_y` through the rescaling `ρ_{x,y} = T_v ρ_{z,1}`.
#[derive(Debug, Clone, Copy)]
pub struct KernelSampler {
    kind: Kind,
}

impl KernelSampler {
    pub fn sample<R: Rng + ?Sized>(&self, x: f64, y: f64, rng: &mut R) -> f64 {
        let (v, z) = canonicalize(x, y);
        if v == 0.0 {
            return 0.0;
        }
        v * self.unit(z, rng)
    }

    /// One draw from `ρ_{z,1}`, `z ∈ [0, 1]`.
    fn unit<R: Rng + ?Sized>(&self, z: f64, rng: &mut R) -> f64 {
        match self.kind {
            Kind::Classical => 1.0 + z,
            Kind::Alpha1 { alpha } => {
                let upper = rng.random::<bool>();
                if alpha == 1.0 {
                    if upper {
                        1.0 + z
                    } else {
                        1.0 - z
                    }
                } else {
                    let za = z.powf(alpha);
                    let base = if upper { 1.0 + za } else { 1.0 - za };
                    base.powf(1.0 / alpha)
                }
            }
            Kind::Stable { alpha } => lp_norm(1.0, z, alpha),
            Kind::Kendall { alpha } => {
                let za = z.powf(alpha);
                let u = open_unit(rng);
                if u < za {
                    // conditionally on the branch, u / z^α is uniform on (0, 1)
                    (u / za).powf(-0.5 / alpha)
                } else {
                    1.0
                }
            }
            Kind::Kingman3 => {
                let theta = 2.0 * rng.random::<f64>() - 1.0;
                (1.0 + z * z + 2.0 * z * theta).max(0.0).sqrt()
            }
            Kind::Max => 1.0,
            Kind::AlphaBeta { alpha, theta } => {
                let theta = match theta {
                    Theta::Rademacher => {
                        if rng.random::<bool>() {
                            1.0
                        } else {
                            -1.0
                        }
                    }
                    Theta::Beta(b) => 2.0 * b.sample(rng) - 1.0,
                };
                let za = z.powf(alpha);
                (1.0 + za * za + 2.0 * za * theta).max(0.0).powf(0.5 / alpha)
            }
        }
    }
}

/// The measure `δ_x ⋄ δ_y` of a given algebra.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelLaw {
    pub x: f64,
    pub y: f64,
    pub algebra: Algebra,
}

/// One draw from `law`.
pub fn kernel_sample<R: Rng + ?Sized>(law: &KernelLaw, rng: &mut R) -> Result<f64> {
    Ok(law.algebra.sampler()?.sample(law.x, law.y, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::stream_rng;
    use crate::numerics::{integrate, tanh_sinh};

    fn alg(s: &str) -> Algebra {
        s.parse().unwrap()
    }

    #[test]
    fn homomorphism_values() {
        assert!((alg("classical").h(1.0).unwrap() - (-1f64).exp()).abs() < 1e-15);
        assert_eq!(alg("stable:alpha=0.7").h(0.0).unwrap(), 1.0);
        assert!((alg("kendall:alpha=1").h(0.5).unwrap() - 0.5).abs() < 1e-15);
        assert!(alg("kingman3").h(std::f64::consts::PI).unwrap().abs() < 1e-15);
        assert_eq!(alg("max").h(1.0).unwrap(), 1.0);
        assert_eq!(alg("max").h(1.0001).unwrap(), 0.0);
        for a in Algebra::registry() {
            if a.regular {
                assert!((a.h(0.0).unwrap() - 1.0).abs() < 1e-12, "{a}");
            }
        }
    }

    #[test]
    fn alphabeta_matches_kingman_at_beta_three() {
        let ab = alg("alphabeta:alpha=1,beta=3");
        let k = alg("kingman3");
        for i in 0..50 {
            let t = i as f64 * 0.7;
            assert!((ab.h(t).unwrap() - k.h(t).unwrap()).abs() < 1e-10, "t={t}");
        }
    }

    #[test]
    fn alphabeta_h_is_mean_of_cos() {
        // E cos(x θ) with θ density ∝ (1-θ²)^{(β-3)/2}
        let beta: f64 = 6.0;
        let x = 3.7;
        let w = |u: f64| (1.0 - u * u).powf((beta - 3.0) / 2.0);
        let norm = integrate(w, -1.0, 1.0).unwrap();
        let m = integrate(|u| w(u) * (x * u).cos(), -1.0, 1.0).unwrap() / norm;
        let h = alg("alphabeta:alpha=1,beta=6").h(x).unwrap();
        assert!((h - m).abs() < 1e-8);
    }

    #[test]
    fn nabla_endpoints() {
        let a = alg("nabla:alpha=0.5");
        assert_eq!(a.h(0.0).unwrap(), 1.0);
        assert!(a.h(1.0).unwrap().abs() < 1e-15);
        assert_eq!(a.h(2.0).unwrap(), 0.0);
    }

    #[test]
    fn volkovich_h_starts_at_one() {
        let a = alg("volkovich:beta=0.25");
        assert!((a.h(1e-6).unwrap() - 1.0).abs() < 1e-2);
        assert!(a.h(1.0).unwrap() < 1.0);
    }

    #[test]
    fn parse_display_and_errors() {
        assert_eq!(alg("kendall:alpha=0.75").id, AlgebraId::Kendall { alpha: 0.75 });
        assert_eq!(alg("kendall").id, AlgebraId::Kendall { alpha: 1.0 });
        assert_eq!(alg("stable:alpha=2").to_string(), "stable:alpha=2");
        assert_eq!(alg("alphabeta:alpha=2,beta=5").to_string(), "alphabeta:alpha=2,beta=5");
        for bad in ["foo", "kendall:alpha=-1", "kendall:gamma=1", "kendall:alpha", "max:alpha=2", "volkovich:beta=0.7", "kucharczak:alpha=1"] {
            assert!(bad.parse::<Algebra>().is_err(), "{bad}");
        }
    }

    #[test]
    fn flags() {
        assert!(!alg("max").regular);
        assert!(alg("nabla").regular);
        assert!(alg("kendall").monotonic && !alg("kingman3").monotonic && !alg("alpha1").monotonic);
        assert!(alg("volkovich").sampler().is_err());
        assert!(matches!(alg("nabla").sampler(), Err(Error::Unsupported { .. })));
    }

    #[test]
    fn canonical_form() {
        assert_eq!(canonicalize(2.0, 6.0), (6.0, 1.0 / 3.0));
        assert_eq!(canonicalize(0.0, 0.0), (0.0, 0.0));
        assert_eq!(canonicalize(5.0, 5.0), (5.0, 1.0));
    }

    #[test]
    fn deterministic_kernels() {
        let mut rng = stream_rng(1, 0);
        let s = alg("stable:alpha=1").sampler().unwrap();
        let m = alg("max").sampler().unwrap();
        for _ in 0..100 {
            assert_eq!(s.sample(2.0, 3.0, &mut rng), 5.0);
            assert_eq!(m.sample(2.0, 3.0, &mut rng), 3.0);
        }
    }

    #[test]
    fn zero_is_the_identity() {
        let mut rng = stream_rng(2, 0);
        for a in Algebra::registry().into_iter().filter(|a| a.can_sample_kernel) {
            let s = a.sampler().unwrap();
            let dev: f64 = (0..10_000).map(|_| (s.sample(0.0, 1.7, &mut rng) - 1.7).abs()).sum();
            assert!(dev < 1e-9, "{a}: {dev}");
        }
    }

    #[test]
    fn kernel_cdf_examples() {
        assert!((alg("kendall:alpha=1").kernel_cdf(1.0, 1.0, 2.0).unwrap() - 0.75).abs() < 1e-15);
        assert_eq!(alg("stable:alpha=2").kernel_cdf(3.0, 4.0, 5.0).unwrap(), 0.0);
        assert_eq!(alg("symmetric").kernel_cdf(1.0, 1.0, 1.5).unwrap(), 0.5);
        assert!(alg("kingman3").kernel_cdf(1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn kernel_density_support() {
        let v = alg("volkovich:beta=0.25");
        assert_eq!(v.kernel_density(1.0, 2.0, 0.5).unwrap(), 0.0);
        assert_eq!(v.kernel_density(1.0, 2.0, 3.5).unwrap(), 0.0);
        let k = alg("kucharczak:alpha=0.5");
        assert_eq!(k.kernel_density(1.0, 1.0, 3.9).unwrap(), 0.0);
        assert!(k.kernel_density(1.0, 1.0, 4.5).unwrap() > 0.0);
        assert!(v.kernel_density(1.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn volkovich_printed_density_is_not_normalizable_at_equal_arguments() {
        // At x = y the factor (u²)^{-β-½} makes the mass near u = 0 infinite,
        // and the printed density does not integrate to one.
        let v = alg("volkovich:beta=0.25");
        let f = |u: f64| v.kernel_density(1.0, 1.0, u).unwrap();
        let near_zero = tanh_sinh(f, 1e-12, 1e-3, 1e-8).unwrap();
        assert!(near_zero > 10.0, "{near_zero}");
    }
}
