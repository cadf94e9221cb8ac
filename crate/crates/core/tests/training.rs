use unimix_lt::calibration::accuracy;
use unimix_lt::dataset::{empirical_prior, gen_gaussians, gen_lt_gaussians, Dataset, GaussianSpec};
use unimix_lt::losses::{cross_entropy, softmax, LossKind, LossParams, TargetPrior};
use unimix_lt::mixing::{mix_pair, sample_beta, MixConfig, MixMode};
use unimix_lt::model::{backward, init_params, sgd_step, Mlp, SgdState};
use unimix_lt::rng;
use unimix_lt::sampling::draw_batch;
use unimix_lt::train::{predict_dataset, train_two_phase, LrSchedule, Phase, TrainConfig};

fn ce_loss(params: &Mlp, x: &[f64], y: usize) -> f64 {
    cross_entropy(&params.forward(x).unwrap(), y)
}

#[test]
fn network_gradient_matches_central_differences() {
    let params = init_params(&[2, 16, 3], 9).unwrap();
    let h = 1e-6;
    for (x, y) in [([0.4, -1.3], 0), ([1.7, 0.2], 2), ([-0.8, -0.9], 1)] {
        let z = params.forward(&x).unwrap();
        let mut dz = softmax(&z);
        dz[y] -= 1.0;
        let analytic: Vec<f64> = backward(&params, &x, &dz)
            .unwrap()
            .params()
            .copied()
            .collect();
        let mut numeric = Vec::with_capacity(analytic.len());
        for k in 0..params.num_params() {
            let mut up = params.clone();
            let mut down = params.clone();
            *up.params_mut().nth(k).unwrap() += h;
            *down.params_mut().nth(k).unwrap() -= h;
            numeric.push((ce_loss(&up, &x, y) - ce_loss(&down, &x, y)) / (2.0 * h));
        }
        let diff: f64 = analytic
            .iter()
            .zip(&numeric)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let scale = analytic.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!(diff / scale <= 1e-4, "x={x:?}: rel err {}", diff / scale);
    }
}

#[test]
fn predictions_are_distributions_and_paths_agree() {
    let params = init_params(&[3, 8, 4], 2).unwrap();
    let xs: Vec<Vec<f64>> = (0..20)
        .map(|i| vec![i as f64 * 0.1, -(i as f64) * 0.05, 1.0])
        .collect();
    let batch = params
        .predict_proba_batch(xs.iter().map(Vec::as_slice))
        .unwrap();
    for (x, p) in xs.iter().zip(&batch) {
        assert_eq!(p, &params.predict_proba(x).unwrap());
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let z = params.forward(x).unwrap();
        let arg = |v: &[f64]| {
            v.iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0
        };
        assert_eq!(arg(p), arg(&z));
    }
    assert!(params.forward(&[1.0]).is_err());
}

fn balanced_ds() -> Dataset {
    gen_gaussians(&[40, 40, 40], 4, 0.4, 17).unwrap()
}

// Plain mixup with cross-entropy, written against the public building blocks.
fn reference_mixup_losses(ds: &Dataset, cfg: &TrainConfig) -> Vec<f64> {
    let prior = empirical_prior(ds).unwrap();
    let mut params = init_params(&cfg.layer_dims(ds.dims(), ds.num_classes()), cfg.seed).unwrap();
    let mut state = SgdState::new(&params);
    let mut first_rng = rng::stream(cfg.seed, rng::SAMPLER, 0);
    let mut second_rng = rng::stream(cfg.seed, rng::SAMPLER, 1);
    let mut mix_rng = rng::stream(cfg.seed, rng::MIX, 0);
    let mut losses = Vec::new();
    for step in 0..cfg.t2_steps {
        let a = draw_batch(ds, &prior, cfg.batch_size, &mut first_rng).unwrap();
        let b = draw_batch(ds, &prior, cfg.batch_size, &mut second_rng).unwrap();
        let mut grads = params.zeros_like();
        let mut total = 0.0;
        for (&i, &j) in a.iter().zip(&b) {
            let xi = sample_beta(cfg.mix.alpha, &mut mix_rng).unwrap();
            let s = mix_pair((ds.row(i), ds.label(i)), (ds.row(j), ds.label(j)), xi).unwrap();
            let z = params.forward(&s.x_mixed).unwrap();
            total += xi * cross_entropy(&z, s.y_i) + (1.0 - xi) * cross_entropy(&z, s.y_j);
            let p = softmax(&z);
            let dz: Vec<f64> = p
                .iter()
                .enumerate()
                .map(|(k, &pk)| {
                    let hit = |c: usize| if c == k { 1.0 } else { 0.0 };
                    xi * (pk - hit(s.y_i)) + (1.0 - xi) * (pk - hit(s.y_j))
                })
                .collect();
            let g = backward(&params, &s.x_mixed, &dz).unwrap();
            for (acc, v) in grads.params_mut().zip(g.params()) {
                *acc += v;
            }
        }
        grads.scale(1.0 / cfg.batch_size as f64);
        losses.push(total / cfg.batch_size as f64);
        sgd_step(
            &mut params,
            &grads,
            &mut state,
            cfg.lr.at(step),
            cfg.momentum,
            cfg.weight_decay,
        );
    }
    losses
}

#[test]
fn degenerate_config_is_plain_mixup() {
    let ds = balanced_ds();
    let mut mix = MixConfig::new(MixMode::VanillaMixup);
    mix.tau = 1.0;
    let mut cfg = TrainConfig::new(30, mix, 4);
    cfg.t1_steps = 30;
    cfg.batch_size = 8;
    cfg.hidden = vec![6];
    cfg.loss = LossKind::Ce;
    let out = train_two_phase(&ds, &cfg).unwrap();
    let reference = reference_mixup_losses(&ds, &cfg);
    assert_eq!(out.log.len(), reference.len());
    for (e, r) in out.log.iter().zip(&reference) {
        assert!(
            (e.loss - r).abs() <= 1e-12 * r.abs().max(1.0),
            "step {}: {} vs {r}",
            e.step,
            e.loss
        );
    }
}

#[test]
fn phase_split_and_schedule_in_log() {
    let ds = balanced_ds();
    let mut cfg = TrainConfig::new(50, MixConfig::new(MixMode::UnimixFull), 1);
    cfg.batch_size = 4;
    cfg.hidden = vec![5];
    let out = train_two_phase(&ds, &cfg).unwrap();
    assert_eq!(out.log.iter().filter(|e| e.phase == Phase::Mix).count(), 45);
    let sched = LrSchedule::scaled(0.1, 50);
    assert!(out.log.iter().all(|e| e.lr == sched.at(e.step)));
}

#[test]
fn every_loss_and_mode_trains_with_finite_losses() {
    let ds = gen_lt_gaussians(&GaussianSpec {
        num_classes: 5,
        rho: 20.0,
        n_max: 80,
        dims: 4,
        cluster_spread: 0.3,
        seed: 2,
    })
    .unwrap();
    let kinds = [
        LossKind::Ce,
        LossKind::BayiasCe,
        LossKind::Focal,
        LossKind::Cb,
        LossKind::Cdt,
        LossKind::Ldam,
        LossKind::La,
    ];
    for kind in kinds {
        for mode in MixMode::ALL {
            let mut cfg = TrainConfig::new(60, MixConfig::new(mode), 3);
            cfg.batch_size = 16;
            cfg.hidden = vec![16];
            cfg.loss = kind;
            cfg.loss_params = LossParams::default();
            let out = train_two_phase(&ds, &cfg).unwrap();
            assert!(
                out.log.iter().all(|e| e.loss.is_finite()),
                "{kind:?} {mode:?}"
            );
            assert_eq!(out.loss.kind(), kind);
        }
    }
}

#[test]
fn training_rejects_empty_class() {
    let ds = gen_gaussians(&[10, 0, 10], 2, 0.3, 0).unwrap();
    let cfg = TrainConfig::new(5, MixConfig::new(MixMode::UnimixFull), 0);
    assert!(train_two_phase(&ds, &cfg).is_err());
}

#[test]
fn compensated_loss_beats_plain_ce_on_balanced_test() {
    let spec = GaussianSpec {
        num_classes: 10,
        rho: 100.0,
        n_max: 500,
        dims: 16,
        cluster_spread: 0.25,
        seed: 0,
    };
    let train = gen_lt_gaussians(&spec).unwrap();
    let test = gen_gaussians(&[200; 10], 16, 0.25, 1000).unwrap();
    let run = |loss| {
        let mut cfg = TrainConfig::new(2000, MixConfig::new(MixMode::UnimixFull), 0);
        cfg.t1_steps = 0;
        cfg.loss = loss;
        cfg.target = TargetPrior::Balanced;
        let out = train_two_phase(&train, &cfg).unwrap();
        accuracy(&predict_dataset(&out.params, &test).unwrap(), test.labels()).unwrap()
    };
    assert!(run(LossKind::BayiasCe) > run(LossKind::Ce));
}
