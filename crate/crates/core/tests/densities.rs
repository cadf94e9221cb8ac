use proptest::prelude::*;
use unimix_lt::theory::*;

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n)
        .map(|k| {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            w * f(a + k as f64 * h)
        })
        .sum();
    (f(a) + f(b) + inner) * h / 3.0
}

fn spec(c: usize, rho: f64, tau: f64) -> LtSpec {
    LtSpec::new(c, rho).unwrap().with_tau(tau).unwrap()
}

#[test]
fn original_density_integrates_to_one() {
    for (c, rho) in [(10, 100.0), (100, 200.0), (100, 10.0), (5, 1.0)] {
        let s = spec(c, rho, -1.0);
        let total = simpson(
            |y| mixup_class_density(y, &s).unwrap(),
            1.0,
            c as f64,
            20_000,
        );
        assert!((total - 1.0).abs() < 1e-9, "C={c} rho={rho}: {total}");
    }
}

#[test]
fn factor_only_density_carries_half_the_mass() {
    // ∫ λ(e^{−λt} − e^{−2λt}) dt over [0, C−1] = (1 − u)²/(2λ) with u = 1/ρ,
    // and the prefactor is λ/(1 − u)², so the integral is exactly 1/2.
    for (c, rho) in [(10, 100.0), (100, 200.0), (100, 10.0), (7, 1.0)] {
        let s = spec(c, rho, -1.0);
        let total = simpson(
            |y| factor_only_class_density(y, &s).unwrap(),
            1.0,
            c as f64,
            20_000,
        );
        assert!((total - 0.5).abs() < 1e-9, "C={c} rho={rho}: {total}");
    }
}

#[test]
fn full_pipeline_mass_at_tau_minus_one() {
    // At τ = −1 the density is λ(1 − e^{−λ(y−1)})/(ρ + 1/ρ − 2), whose integral
    // over [1, C] is (ln ρ − 1 + 1/ρ)/(ρ + 1/ρ − 2).
    for (c, rho) in [(100, 200.0), (10, 100.0), (50, 10.0)] {
        let s = spec(c, rho, -1.0);
        let expected = (rho.ln() - 1.0 + 1.0 / rho) / (rho + 1.0 / rho - 2.0);
        let total = simpson(
            |y| full_pipeline_class_density(y, &s).unwrap(),
            1.0,
            c as f64,
            20_000,
        );
        assert!(
            (total - expected).abs() < 1e-9 * expected.max(1.0),
            "C={c} rho={rho}: {total} vs {expected}"
        );
    }
}

#[test]
fn full_pipeline_with_random_partner_equals_factor_only() {
    let s1 = spec(100, 200.0, 1.0);
    for k in 0..=99 {
        let y = 1.0 + k as f64;
        let a = full_pipeline_class_density(y, &s1).unwrap();
        let b = factor_only_class_density(y, &s1).unwrap();
        assert!(
            (a - b).abs() <= 1e-12 * b.abs().max(1e-3),
            "y={y}: {a} vs {b}"
        );
    }
}

#[test]
fn full_pipeline_monotone_at_tau_minus_one() {
    let s = spec(100, 200.0, -1.0);
    let curve = DensityCurve::sample(CurveKind::UnimixFull, &s, 1000).unwrap();
    assert!(curve.points.windows(2).all(|w| w[1].1 >= w[0].1));
    assert_eq!(curve.points[0].1, 0.0);
}

#[test]
fn factor_only_peak_is_interior() {
    let s = spec(100, 200.0, -1.0);
    let peak = 2f64.ln() / s.lambda() + 1.0;
    assert!(peak > 1.0 && peak < 100.0);
    let f = |y: f64| factor_only_class_density(y, &s).unwrap();
    assert!(f(peak) > f(peak - 0.5) && f(peak) > f(peak + 0.5));
    assert!(f(peak) > f(1.0) && f(peak) > f(100.0));
}

#[test]
fn singular_tau_is_rejected() {
    let s = spec(10, 10.0, 0.0);
    assert!(full_pipeline_class_density(2.0, &s).is_err());
    assert!(factor_only_class_density(0.5, &s).is_err());
    assert!(factor_only_class_density(10.5, &s).is_err());
}

#[test]
fn curve_set_shape() {
    let s = spec(100, 200.0, -1.0);
    let curves = emit_density_curves(&s, 100).unwrap();
    assert_eq!(curves.len(), 4);
    assert_eq!(curves.iter().map(|c| c.points.len()).sum::<usize>(), 400);
    for c in &curves {
        assert_eq!(c.points.first().unwrap().0, 1.0);
        assert_eq!(c.points.last().unwrap().0, 100.0);
    }
}

#[test]
fn discrete_prior_matches_continuous_ratios() {
    let s = spec(10, 100.0, -1.0);
    let p = discrete_lt_prior(&s);
    for i in 0..9 {
        let r = p.get(i) / p.get(i + 1);
        let d = continuous_lt_density(i as f64 + 1.0, &s).unwrap()
            / continuous_lt_density(i as f64 + 2.0, &s).unwrap();
        assert!((r - d).abs() < 1e-12);
    }
    assert!((p.get(0) / p.get(9) - 100.0).abs() < 1e-9);
}

proptest! {
    #[test]
    fn discrete_prior_is_a_distribution(c in 2usize..200, rho in 1.0f64..1000.0) {
        let s = LtSpec::new(c, rho).unwrap();
        let p = discrete_lt_prior(&s);
        let sum: f64 = p.probs().iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
        prop_assert!(p.probs().windows(2).all(|w| w[0] >= w[1]));
        prop_assert!((p.get(0) / p.get(c - 1) - rho).abs() < 1e-8 * rho);
    }

    #[test]
    fn densities_are_nonnegative(c in 2usize..200, rho in 1.0f64..500.0, tau in prop_oneof![-3.0f64..-0.1, 0.1f64..3.0], u in 0.0f64..1.0) {
        let s = LtSpec::new(c, rho).unwrap().with_tau(tau).unwrap();
        let y = 1.0 + u * (c - 1) as f64;
        for kind in CurveKind::ALL {
            let d = kind.density(y, &s).unwrap();
            prop_assert!(d >= 0.0 && d.is_finite(), "{:?} at {y}: {d}", kind);
        }
    }
}
