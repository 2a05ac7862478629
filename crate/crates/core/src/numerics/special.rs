use super::quad::adaptive_simpson;
use crate::error::{Error, Result};
use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln |Γ(x)|` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        return (PI / (PI * x).sin().abs()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

pub fn gamma(x: f64) -> f64 {
    if x == x.floor() && x > 0.0 && x < 171.0 {
        return (1..x as u64).fold(1.0, |acc, k| acc * k as f64);
    }
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    ln_gamma(x).exp()
}

pub fn ln_factorial(n: u64) -> f64 {
    if n < 2 {
        0.0
    } else if n < 171 {
        gamma(n as f64 + 1.0).ln()
    } else {
        ln_gamma(n as f64 + 1.0)
    }
}

/// Euler beta function `B(a, b)`.
pub fn beta_fn(a: f64, b: f64) -> f64 {
    (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)).exp()
}

/// `sin(x)/x`, equal to 1 at the origin.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// Largest argument accepted by [`bessel_i`].
const BESSEL_I_MAX_ARG: f64 = 700.0;

/// Modified Bessel function of the first kind `I_k(a)` by its power series.
pub fn bessel_i(k: u32, a: f64) -> Result<f64> {
    if !(a >= 0.0) {
        return Err(Error::Domain(format!("bessel_i needs a >= 0, got {a}")));
    }
    if a > BESSEL_I_MAX_ARG {
        return Err(Error::Overflow(format!("bessel_i argument {a} exceeds {BESSEL_I_MAX_ARG}")));
    }
    if a == 0.0 {
        return Ok(if k == 0 { 1.0 } else { 0.0 });
    }
    let half = a / 2.0;
    let kf = k as f64;
    let mut term = (kf * half.ln() - ln_factorial(k as u64)).exp();
    let mut sum = term;
    let q = half * half;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= q / (n * (n + kf));
        sum += term;
        if term <= 1e-16 * sum && n > half {
            break;
        }
    }
    if !sum.is_finite() {
        return Err(Error::Overflow(format!("I_{k}({a}) is not representable")));
    }
    Ok(sum)
}

fn gamma_prefactor(a: f64, x: f64) -> f64 {
    (-x + a * x.ln() - ln_gamma(a)).exp()
}

fn lower_gamma_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut del = 1.0 / a;
    let mut sum = del;
    for _ in 0..10_000 {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * 1e-16 {
            break;
        }
    }
    sum * gamma_prefactor(a, x)
}

fn upper_gamma_fraction(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    gamma_prefactor(a, x) * h
}

/// Regularized lower incomplete gamma `P(a, t)`.
pub fn reg_lower_gamma(a: f64, t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t < a + 1.0 {
        lower_gamma_series(a, t).clamp(0.0, 1.0)
    } else {
        (1.0 - upper_gamma_fraction(a, t)).clamp(0.0, 1.0)
    }
}

/// Regularized upper incomplete gamma `Q(a, t) = Γ(a, t)/Γ(a)`.
pub fn reg_upper_gamma(a: f64, t: f64) -> Result<f64> {
    if !(a > 0.0) || !(t >= 0.0) {
        return Err(Error::Domain(format!("reg_upper_gamma needs a > 0, t >= 0; got a={a}, t={t}")));
    }
    if t == 0.0 {
        return Ok(1.0);
    }
    if t == f64::INFINITY {
        return Ok(0.0);
    }
    let q = if t < a + 1.0 {
        1.0 - lower_gamma_series(a, t)
    } else {
        upper_gamma_fraction(a, t)
    };
    Ok(q.clamp(0.0, 1.0))
}

/// MacDonald function `K_β(t)` from its integral representation
/// `√π/Γ(β+½) (t/2)^β ∫₀^∞ e^{-t cosh s} sinh^{2β}(s) ds`, for `0 < β < ½`.
pub fn macdonald_k(beta: f64, t: f64) -> Result<f64> {
    if !(beta > 0.0 && beta < 0.5) {
        return Err(Error::Domain(format!("macdonald_k needs 0 < beta < 1/2, got {beta}")));
    }
    if !(t > 0.0) {
        return Err(Error::Domain(format!("macdonald_k needs t > 0, got {t}")));
    }
    // e^{-t(cosh s - 1)} < e^{-80} beyond the cutoff; s = w² removes the cusp at 0
    let upper = ((1.0 + 80.0 / t).acosh() + 1.0).sqrt();
    let integrand = |w: f64| {
        let s = w * w;
        2.0 * w * (-t * (s.cosh() - 1.0)).exp() * s.sinh().powf(2.0 * beta)
    };
    let integral = adaptive_simpson(integrand, 0.0, upper, 0.0, 1e-11)?;
    let prefactor = PI.sqrt() / gamma(beta + 0.5) * (t / 2.0).powf(beta);
    Ok(prefactor * integral * (-t).exp())
}

/// Confluent limit function `₀F₁(; b; z)` by its power series.
pub fn hyp0f1(b: f64, z: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut m = 0.0;
    loop {
        term *= z / ((b + m) * (m + 1.0));
        sum += term;
        m += 1.0;
        if term.abs() <= 1e-17 * sum.abs().max(1e-300) && m > z.abs().sqrt() {
            break;
        }
        if m > 10_000.0 {
            break;
        }
    }
    sum
}

/// `Γ(ν+1) (2/x)^ν J_ν(x)`, the characteristic function of the symmetric law
/// with density proportional to `(1 - u²)^{ν - ½}` on `[-1, 1]`.
pub fn normalized_bessel_j(nu: f64, x: f64) -> f64 {
    let x = x.abs();
    if x < 12.0 {
        return hyp0f1(nu + 1.0, -x * x / 4.0);
    }
    // Hankel asymptotic expansion
    let mu = 4.0 * nu * nu;
    let mut p = 0.0;
    let mut q = 0.0;
    let mut coef = 1.0;
    let mut prev = f64::INFINITY;
    for k in 0..40 {
        let term = coef / x.powi(k);
        if term.abs() > prev {
            break;
        }
        prev = term.abs();
        let signed = if (k / 2) % 2 == 0 { term } else { -term };
        if k % 2 == 0 {
            p += signed;
        } else {
            q += signed;
        }
        if term.abs() < 1e-17 {
            break;
        }
        let odd = (2 * k + 1) as f64;
        coef *= (mu - odd * odd) / ((k + 1) as f64 * 8.0);
    }
    let omega = x - nu * PI / 2.0 - PI / 4.0;
    let j = (2.0 / (PI * x)).sqrt() * (p * omega.cos() - q * omega.sin());
    gamma(nu + 1.0) * (2.0 / x).powf(nu) * j
}
