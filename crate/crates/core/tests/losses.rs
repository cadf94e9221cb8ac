use proptest::prelude::*;
use unimix_lt::losses::*;
use unimix_lt::theory::ClassPrior;

const COUNTS: [usize; 4] = [500, 120, 30, 5];

fn zoo() -> Vec<LossSpec> {
    let prior = ClassPrior::from_counts(&COUNTS).unwrap();
    let test = ClassPrior::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
    vec![
        LossSpec::Ce,
        LossSpec::bayias(&prior, &TargetPrior::Balanced).unwrap(),
        LossSpec::bayias(&prior, &TargetPrior::Prior(test)).unwrap(),
        LossSpec::focal(0.0).unwrap(),
        LossSpec::focal(0.5).unwrap(),
        LossSpec::focal(2.0).unwrap(),
        LossSpec::cb(0.999, &COUNTS).unwrap(),
        LossSpec::cdt(0.3, &COUNTS).unwrap(),
        LossSpec::ldam(0.5, &COUNTS).unwrap(),
        LossSpec::la(1.0, &prior).unwrap(),
    ]
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn fd_grad(f: impl Fn(&[f64]) -> f64, z: &[f64], h: f64) -> Vec<f64> {
    (0..z.len())
        .map(|k| {
            let mut up = z.to_vec();
            let mut down = z.to_vec();
            up[k] += h;
            down[k] -= h;
            (f(&up) - f(&down)) / (2.0 * h)
        })
        .collect()
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&diff) / norm(a).max(norm(b)).max(1e-8)
}

#[test]
fn every_loss_gradient_matches_central_differences() {
    let logits = [
        vec![0.3, -1.2, 2.0, 0.1],
        vec![-0.5, 0.5, 0.0, 1.5],
        vec![4.0, -3.0, 1.0, -2.0],
    ];
    for spec in zoo() {
        for z in &logits {
            for y in 0..4 {
                let g = spec.grad(z, y);
                let fd = fd_grad(|v| spec.value(v, y), z, 1e-5);
                let e = rel_err(&g, &fd);
                assert!(e <= 1e-5, "{:?} y={y} z={z:?}: rel err {e}", spec.kind());
            }
        }
    }
}

#[test]
fn mixed_loss_gradient_matches_central_differences() {
    let z = [0.7, -0.2, 1.1, -1.0];
    for spec in zoo() {
        for xi in [0.0, 0.3, 0.9] {
            let g = mixed_vrm_grad(&spec, &z, 0, 3, xi);
            let fd = fd_grad(|v| mixed_vrm_loss(&spec, v, 0, 3, xi), &z, 1e-5);
            assert!(rel_err(&g, &fd) <= 1e-5, "{:?} xi={xi}", spec.kind());
        }
    }
}

#[test]
fn reductions_to_cross_entropy() {
    let prior = ClassPrior::from_counts(&COUNTS).unwrap();
    let zero_margin = BayiasMargin::zeros(4);
    let focal0 = LossSpec::focal(0.0).unwrap();
    let la0 = LossSpec::la(0.0, &prior).unwrap();
    let cdt0 = LossSpec::cdt(0.0, &COUNTS).unwrap();
    let ldam0 = LossSpec::ldam(0.0, &COUNTS).unwrap();
    let z = [0.3, -1.2, 2.0, 0.1];
    for y in 0..4 {
        let ce = cross_entropy(&z, y);
        assert!((bayias_ce(&z, y, &zero_margin) - ce).abs() <= 1e-12);
        assert!((focal0.value(&z, y) - ce).abs() <= 1e-12);
        assert!((la0.value(&z, y) - ce).abs() <= 1e-12);
        assert!((cdt0.value(&z, y) - ce).abs() <= 1e-12);
        assert!((ldam0.value(&z, y) - ce).abs() <= 1e-12);
    }
    // a balanced train set has zero margin against a balanced target
    let m = bayias_margin(&ClassPrior::uniform(4), &TargetPrior::Balanced).unwrap();
    assert!(m.values().iter().all(|v| v.abs() < 1e-15));
}

#[test]
fn matching_train_and_target_priors_give_zero_margin() {
    let prior = ClassPrior::from_counts(&COUNTS).unwrap();
    let m = bayias_margin(&prior, &TargetPrior::Prior(prior.clone())).unwrap();
    assert!(m.values().iter().all(|&v| v == 0.0));
}

#[test]
fn compensated_loss_equals_logit_adjustment_plus_constant_shift() {
    // ln π_y + ln C differs from the τ = 1 logit adjustment by a constant,
    // which softmax ignores.
    let prior = ClassPrior::from_counts(&COUNTS).unwrap();
    let bay = LossSpec::bayias(&prior, &TargetPrior::Balanced).unwrap();
    let la = LossSpec::la(1.0, &prior).unwrap();
    let z = [0.3, -1.2, 2.0, 0.1];
    for y in 0..4 {
        assert!((bay.value(&z, y) - la.value(&z, y)).abs() < 1e-12);
    }
}

#[test]
fn class_balanced_weights_follow_effective_number() {
    let cb = LossSpec::cb(0.9, &[1, 2]).unwrap();
    let LossSpec::Cb { weights, .. } = &cb else {
        unreachable!()
    };
    // (1 − 0.9)/(1 − 0.9) = 1 and 0.1/(1 − 0.81) = 0.1/0.19
    assert!((weights[0] - 1.0).abs() < 1e-15);
    assert!((weights[1] - 0.1 / 0.19).abs() < 1e-12);
}

#[test]
fn invalid_parameters() {
    assert!(LossSpec::focal(-1.0).is_err());
    assert!(LossSpec::cb(1.0, &COUNTS).is_err());
    assert!(LossSpec::cdt(0.2, &[3, 0]).is_err());
    assert!(LossSpec::ldam(f64::NAN, &COUNTS).is_err());
    let prior = ClassPrior::new(vec![0.5, 0.5]).unwrap();
    let other = ClassPrior::new(vec![0.2, 0.3, 0.5]).unwrap();
    assert!(bayias_margin(&prior, &TargetPrior::Prior(other)).is_err());
}

fn logits(c: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-20.0f64..20.0, c)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn compensated_forms_agree(
        z in logits(6),
        raw in prop::collection::vec(0.001f64..1.0, 6),
        y in 0usize..6,
    ) {
        let prior = ClassPrior::from_weights(&raw).unwrap();
        let m = bayias_margin(&prior, &TargetPrior::Balanced).unwrap();
        let a = bayias_ce(&z, y, &m);
        let b = bayias_ce_pairwise(&z, y, &m);
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{a} vs {b}");
    }
}

proptest! {
    #[test]
    fn softmax_family_is_shift_invariant(z in logits(4), shift in -50.0f64..50.0, y in 0usize..4) {
        let moved: Vec<f64> = z.iter().map(|v| v + shift).collect();
        for spec in zoo().into_iter().filter(LossSpec::is_shift_invariant) {
            let (a, b) = (spec.value(&z, y), spec.value(&moved, y));
            prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0), "{:?}: {a} vs {b}", spec.kind());
        }
    }

    #[test]
    fn shift_invariant_gradients_sum_to_zero(z in logits(4), y in 0usize..4) {
        for spec in zoo().into_iter().filter(LossSpec::is_shift_invariant) {
            let s: f64 = spec.grad(&z, y).iter().sum();
            prop_assert!(s.abs() < 1e-12, "{:?}: {s}", spec.kind());
        }
    }

    #[test]
    fn losses_are_nonnegative_and_finite(z in logits(4), y in 0usize..4) {
        for spec in zoo() {
            let v = spec.value(&z, y);
            prop_assert!(v.is_finite() && v >= -1e-12, "{:?}: {v}", spec.kind());
        }
    }

    #[test]
    fn softmax_is_a_distribution(z in logits(8)) {
        let p = softmax(&z);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }
}
