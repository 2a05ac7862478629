//! Generalized random walks `S_{m+1} = S_m ⋄ T_{m+1}` and the joint-tail
//! identities of monotonic walks.

use crate::algebra::{Algebra, KernelSampler};
use crate::error::{Error, Result};
use crate::mc::{self, binomial_sigma, Moments, SimRng};
use crate::measure::StepLaw;
use crate::report::{CheckRow, SIGMA_BUDGET};
use rand::Rng;
use serde::Serialize;

/// A walk with i.i.d. steps from `step`.
#[derive(Debug, Clone, Copy)]
pub struct WalkSpec {
    pub algebra: Algebra,
    pub step: StepLaw,
    pub n_steps: usize,
    kernel: KernelSampler,
}

impl WalkSpec {
    pub fn new(algebra: Algebra, step: StepLaw, n_steps: usize) -> Result<Self> {
        if n_steps == 0 {
            return Err(Error::Domain("a walk needs at least one step".into()));
        }
        let kernel = algebra.sampler()?;
        Ok(WalkSpec { algebra, step, n_steps, kernel })
    }

    pub fn kernel(&self) -> &KernelSampler {
        &self.kernel
    }
}

/// `S_1, …, S_n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WalkPath {
    pub values: Vec<f64>,
}

impl WalkPath {
    pub fn is_nondecreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[0] <= w[1])
    }

    /// `S_m`, with `S_0 ≡ 0`.
    pub fn at(&self, m: usize) -> f64 {
        if m == 0 {
            0.0
        } else {
            self.values[m - 1]
        }
    }
}

/// Draws one path of `spec.n_steps` positions.
pub fn simulate_walk<R: Rng + ?Sized>(spec: &WalkSpec, rng: &mut R) -> WalkPath {
    let mut values = Vec::with_capacity(spec.n_steps);
    let mut s = spec.step.sample(rng);
    values.push(s);
    for _ in 1..spec.n_steps {
        let x = spec.step.sample(rng);
        s = spec.kernel.sample(s, x, rng);
        values.push(s);
    }
    WalkPath { values }
}

/// Draws positions until one exceeds `level` or `cap` steps were taken.
pub fn simulate_walk_past<R: Rng + ?Sized>(spec: &WalkSpec, level: f64, cap: usize, rng: &mut R) -> WalkPath {
    let mut values = Vec::new();
    let mut s = spec.step.sample(rng);
    values.push(s);
    while s <= level && values.len() < cap {
        let x = spec.step.sample(rng);
        s = spec.kernel.sample(s, x, rng);
        values.push(s);
    }
    WalkPath { values }
}

fn require_monotonic(algebra: &Algebra) -> Result<()> {
    if algebra.monotonic {
        Ok(())
    } else {
        Err(Error::Unsupported { algebra: algebra.name(), capability: "monotone walk identities" })
    }
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Checks `P{S_{k3} > x, S_{k2} > x, S_{k1} > x} = 1 - F_{k1}(x)` and
/// `P{S_{k3} > x, S_{k2} ≤ x, S_{k1} ≤ x} = F_{k2}(x) - F_{k3}(x)`, both with
/// marginals from the same paths; `oracle(k, x) = F_k(x)` adds rows against
/// known marginals.
pub fn check_lemma_joint_tail(
    spec: &WalkSpec,
    x: f64,
    ks: [usize; 3],
    budget: usize,
    seed: u64,
    oracle: Option<&dyn Fn(usize, f64) -> f64>,
) -> Result<Vec<CheckRow>> {
    require_monotonic(&spec.algebra)?;
    let [k1, k2, k3] = ks;
    if !(1 <= k1 && k1 < k2 && k2 < k3) {
        return Err(Error::Domain(format!("indices must satisfy 1 <= k1 < k2 < k3, got {ks:?}")));
    }
    let spec = WalkSpec { n_steps: k3, ..*spec };
    // tallies: [all above, first-exit event, paired diff 1, paired diff 2, marginal k1, k2, k3]
    let acc = mc::fold(
        budget,
        seed,
        || [Moments::default(); 7],
        |acc, rng: &mut SimRng| {
            let p = simulate_walk(&spec, rng);
            let (a1, a2, a3) = (p.at(k1) > x, p.at(k2) > x, p.at(k3) > x);
            let tail = indicator(a1 && a2 && a3);
            let step = indicator(a3 && !a2 && !a1);
            let (f1, f2, f3) = (indicator(!a1), indicator(!a2), indicator(!a3));
            for (m, v) in acc.iter_mut().zip([tail, step, tail - (1.0 - f1), step - (f2 - f3), f1, f2, f3]) {
                m.push(v);
            }
        },
        |l, r| std::array::from_fn(|i| l[i].merge(r[i])),
    );
    let name = spec.algebra.name();
    let params = format!("x={x},k={k1}/{k2}/{k3}");
    let mut rows = vec![
        CheckRow::within_sigma(
            "walk_lemma_tail",
            &name,
            &params,
            acc[0].mean,
            1.0 - acc[4].mean,
            acc[2].stderr(),
            SIGMA_BUDGET,
        ),
        CheckRow::within_sigma(
            "walk_lemma_step",
            &name,
            &params,
            acc[1].mean,
            acc[5].mean - acc[6].mean,
            acc[3].stderr(),
            SIGMA_BUDGET,
        ),
    ];
    if let Some(f) = oracle {
        let n = acc[0].n;
        let p_tail = 1.0 - f(k1, x);
        let p_step = f(k2, x) - f(k3, x);
        rows.push(CheckRow::within_sigma(
            "walk_lemma_tail_oracle",
            &name,
            &params,
            acc[0].mean,
            p_tail,
            binomial_sigma(p_tail, n),
            SIGMA_BUDGET,
        ));
        rows.push(CheckRow::within_sigma(
            "walk_lemma_step_oracle",
            &name,
            &params,
            acc[1].mean,
            p_step,
            binomial_sigma(p_step, n),
            SIGMA_BUDGET,
        ));
    }
    Ok(rows)
}

/// Checks that `P{S_{n+k+1} > t, S_{n+k} ≤ t, S_{k+1} > s, S_k ≤ s}` equals
/// the four-term combination of joint CDFs, both from the same paths;
/// `closed_form` adds a row against a known value.
pub fn check_lemma_four_term(
    spec: &WalkSpec,
    s: f64,
    t: f64,
    n: usize,
    k: usize,
    budget: usize,
    seed: u64,
    closed_form: Option<f64>,
) -> Result<Vec<CheckRow>> {
    require_monotonic(&spec.algebra)?;
    if !(0.0 < s && s < t) {
        return Err(Error::Domain(format!("need 0 < s < t, got s = {s}, t = {t}")));
    }
    let spec = WalkSpec { n_steps: n + k + 1, ..*spec };
    let acc = mc::fold(
        budget,
        seed,
        || [Moments::default(); 3],
        |acc, rng: &mut SimRng| {
            let p = simulate_walk(&spec, rng);
            let (a, a1) = (p.at(n + k), p.at(n + k + 1));
            let (b, b1) = (p.at(k), p.at(k + 1));
            let joint = |u: f64, v: f64| indicator(u <= t && v <= s);
            let event = indicator(a1 > t && a <= t && b1 > s && b <= s);
            let four = joint(a, b) - joint(a, b1) - joint(a1, b) + joint(a1, b1);
            acc[0].push(event);
            acc[1].push(four);
            acc[2].push(event - four);
        },
        |l, r| std::array::from_fn(|i| l[i].merge(r[i])),
    );
    let name = spec.algebra.name();
    let params = format!("s={s},t={t},n={n},k={k}");
    let mut rows = vec![CheckRow::within_sigma(
        "walk_four_term",
        &name,
        &params,
        acc[0].mean,
        acc[1].mean,
        acc[2].stderr(),
        SIGMA_BUDGET,
    )];
    if let Some(p) = closed_form {
        rows.push(CheckRow::within_sigma(
            "walk_four_term_closed_form",
            &name,
            &params,
            acc[0].mean,
            p,
            binomial_sigma(p, acc[0].n),
            SIGMA_BUDGET,
        ));
    }
    Ok(rows)
}
