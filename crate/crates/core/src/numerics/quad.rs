//! Adaptive Simpson for smooth integrands and tanh-sinh for endpoint
//! singularities and half-lines.

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 60;
const MAX_EVALS: usize = 5_000_000;

struct Simpson<'a, F: Fn(f64) -> f64> {
    f: &'a F,
    evals: usize,
}

impl<F: Fn(f64) -> f64> Simpson<'_, F> {
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        &mut self,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = (self.f)(lm);
        let frm = (self.f)(rm);
        self.evals += 2;
        let h = b - a;
        let left = h / 12.0 * (fa + 4.0 * flm + fm);
        let right = h / 12.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol {
            return Ok(left + right + delta / 15.0);
        }
        if depth >= MAX_DEPTH || self.evals > MAX_EVALS || !delta.is_finite() {
            return Err(Error::NonConvergence(format!(
                "adaptive Simpson on [{a}, {b}] stalled with local error {delta:e}"
            )));
        }
        let l = self.recurse(a, m, fa, flm, fm, left, tol / 2.0, depth + 1)?;
        let r = self.recurse(m, b, fm, frm, fb, right, tol / 2.0, depth + 1)?;
        Ok(l + r)
    }
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` to `max(abs_tol, rel_tol·|I|)`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    // a coarse pass fixes the scale for the relative tolerance
    let coarse = {
        let n = 64;
        let h = (b - a) / n as f64;
        let mut s = fa + fb;
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    };
    let tol = abs_tol.max(rel_tol * coarse.abs());
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut state = Simpson { f: &f, evals: 3 };
    state.recurse(a, b, fa, fm, fb, whole, tol, 0)
}

/// Adaptive Simpson with the default tolerance pair `(1e-10, 1e-8)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> Result<f64> {
    adaptive_simpson(f, a, b, 1e-10, 1e-8)
}

/// Tanh-sinh quadrature on `[a, b]`; never evaluates the endpoints.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let half = 0.5 * (b - a);
    let eval = |t: f64| -> f64 {
        let s = std::f64::consts::FRAC_PI_2 * t.sinh();
        let u = s.tanh();
        let w = std::f64::consts::FRAC_PI_2 * t.cosh() / (s.cosh() * s.cosh());
        // distance to the nearer endpoint, computed without cancellation
        let gap = half / (s.abs().exp() * s.abs().cosh());
        let x = if u < 0.0 { a + gap } else { b - gap };
        if gap <= 0.0 || x <= a || x >= b {
            return 0.0;
        }
        let v = f(x) * w;
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    let t_max = 6.0;
    let mut h = 0.5;
    let mut sum = eval(0.0);
    let mut k = 1;
    while k as f64 * h <= t_max {
        let t = k as f64 * h;
        sum += eval(t) + eval(-t);
        k += 1;
    }
    let mut estimate = sum * h * half;
    for _ in 0..12 {
        h /= 2.0;
        let mut extra = 0.0;
        let mut k = 1;
        while k as f64 * h <= t_max {
            let t = k as f64 * h;
            extra += eval(t) + eval(-t);
            k += 2;
        }
        sum += extra;
        let next = sum * h * half;
        if (next - estimate).abs() <= rel_tol * next.abs() || next == 0.0 && estimate == 0.0 {
            return Ok(next);
        }
        estimate = next;
    }
    Err(Error::NonConvergence(format!("tanh-sinh on [{a}, {b}] did not reach {rel_tol:e}")))
}

/// `∫_a^∞ f`, mapping the half-line onto `[0, 1)` by `x = a + u/(1-u)`.
pub fn integrate_semi_infinite<F: Fn(f64) -> f64>(f: F, a: f64, rel_tol: f64) -> Result<f64> {
    let g = |u: f64| {
        let one_minus = 1.0 - u;
        f(a + u / one_minus) / (one_minus * one_minus)
    };
    tanh_sinh(g, 0.0, 1.0, rel_tol)
}
