use gconv::algebra::Algebra;
use gconv::formulas::{kendall_fn, stable_fn_density};
use gconv::mc;
use gconv::measure::{conv_power_sample, StepLaw};
use gconv::memory::{lom_factorization_test, lom_law, probe_lom_law};
use gconv::numerics::{ks_distance, ks_two_sample, reg_lower_gamma, tanh_sinh};
use gconv::walk::{check_lemma_four_term, check_lemma_joint_tail, simulate_walk, WalkSpec};

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

#[test]
fn walk_marginal_is_the_convolution_power() {
    for alg in [Algebra::kendall(0.7).unwrap(), Algebra::kingman3(), Algebra::symmetric()] {
        let step = StepLaw::Exponential { rate: 1.0 };
        let spec = WalkSpec::new(alg, step, 4).unwrap();
        let walk = sorted(mc::collect(100_000, 1, |rng| simulate_walk(&spec, rng).at(4)));
        let k = alg.sampler().unwrap();
        let power = sorted(mc::collect(100_000, 2, |rng| conv_power_sample(&k, |r| step.sample(r), 4, rng)));
        assert!(ks_two_sample(&walk, &power) <= 0.01, "{}", alg.name());
    }
}

#[test]
fn stable_walk_density() {
    for alpha in [0.5, 1.0, 2.0] {
        let spec = WalkSpec::new(Algebra::stable(alpha).unwrap(), StepLaw::Weibull { alpha }, 6).unwrap();
        let paths = mc::collect(100_000, 3, |rng| simulate_walk(&spec, rng));
        for n in 1..=6u32 {
            let s = sorted(paths.iter().map(|p| p.at(n as usize)).collect());
            let d = ks_distance(&s, |x| reg_lower_gamma(n as f64, x.powf(alpha)));
            assert!(d <= 0.01, "alpha = {alpha}, n = {n}: {d}");
            // the printed density integrates to the same CDF
            let by_quad = tanh_sinh(|x| stable_fn_density(n, alpha, x), 0.0, 1.3, 1e-12).unwrap();
            assert!((by_quad - reg_lower_gamma(n as f64, 1.3f64.powf(alpha))).abs() < 1e-9);
        }
    }
}

#[test]
fn kendall_walk_joint_tails() {
    let alpha = 1.0;
    let spec = WalkSpec::new(Algebra::kendall(alpha).unwrap(), StepLaw::Kendall { alpha }, 1).unwrap();
    let f = |k: usize, x: f64| kendall_fn(k as u64, x, alpha);
    for x in [0.5, 1.5] {
        let rows = check_lemma_joint_tail(&spec, x, [1, 2, 4], 200_000, 4, Some(&f)).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.pass), "{rows:?}");
    }
    for (s, t) in [(0.5, 0.8), (1.5, 2.5), (0.6, 1.7)] {
        let rows = check_lemma_four_term(&spec, s, t, 1, 1, 200_000, 5, None).unwrap();
        assert!(rows.iter().all(|r| r.pass), "{rows:?}");
    }
}

#[test]
fn memoryless_laws_factorize_on_the_grid() {
    let pts = [0.3, 0.7, 1.0, 1.5];
    let mut seed = 10;
    for alg in [Algebra::stable(1.0).unwrap(), Algebra::stable(2.0).unwrap(), Algebra::kendall(1.0).unwrap(), Algebra::kendall(2.0).unwrap()] {
        let law = lom_law(&alg, 1.0).unwrap();
        for &x in &pts {
            for &y in &pts {
                seed += 1;
                let rows = lom_factorization_test(&alg, &law, x, y, 100_000, seed).unwrap();
                assert!(rows.iter().all(|r| r.pass), "{rows:?}");
            }
        }
    }
}

#[test]
fn uniform_law_is_not_memoryless() {
    let rows = lom_factorization_test(
        &Algebra::classical(),
        &StepLaw::Uniform { lo: 0.0, hi: 1.0 },
        0.3,
        0.3,
        1_000_000,
        20,
    )
    .unwrap();
    assert!(rows[0].z().abs() > 6.0);
}

#[test]
fn memoryless_validity_by_algebra() {
    for (tag, valid) in [
        ("classical", true),
        ("stable:alpha=0.1", true),
        ("kendall:alpha=3", true),
        ("kucharczak:alpha=0.5", true),
        ("symmetric", false),
        ("kingman3", false),
        ("alpha1:alpha=2", false),
    ] {
        let law = probe_lom_law(&tag.parse().unwrap(), 1.0).unwrap();
        assert_eq!(law.valid, valid, "{tag}");
    }
}
