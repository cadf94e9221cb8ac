//! Two-phase training: mixed pairs with the mixed-label loss for the first
//! `t1_steps`, then plain batches for the remaining `t2_steps − t1_steps`.
//! The loss (usually the prior-compensated cross-entropy) is resolved once
//! from the training class counts before the first step.

use serde::{Deserialize, Serialize};

use crate::dataset::{empirical_prior, Dataset};
use crate::error::{Error, Result};
use crate::losses::{mixed_vrm_grad, mixed_vrm_loss, LossKind, LossParams, LossSpec, TargetPrior};
use crate::mixing::{mix_into, FactorSampler, MixConfig};
use crate::model::{init_params, Mlp, SgdState, Trace};
use crate::rng;
use crate::sampling::ClassSampler;

/// Step learning-rate schedule with linear warmup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrSchedule {
    pub base: f64,
    pub warmup_steps: usize,
    pub decay_points: Vec<usize>,
    pub decay_factor: f64,
}

impl LrSchedule {
    /// Warmup over the first 2.5% of steps, ×0.01 after 80% and again after
    /// 90% of `total_steps`.
    pub fn scaled(base: f64, total_steps: usize) -> Self {
        let frac = |f: f64| (f * total_steps as f64).floor() as usize;
        Self {
            base,
            warmup_steps: ((0.025 * total_steps as f64).ceil() as usize).max(1),
            decay_points: vec![frac(0.8), frac(0.9)],
            decay_factor: 0.01,
        }
    }

    pub fn constant(base: f64) -> Self {
        Self {
            base,
            warmup_steps: 0,
            decay_points: Vec::new(),
            decay_factor: 1.0,
        }
    }

    pub fn at(&self, step: usize) -> f64 {
        let warm = if step < self.warmup_steps {
            (step + 1) as f64 / self.warmup_steps as f64
        } else {
            1.0
        };
        let decays = self.decay_points.iter().filter(|&&p| step >= p).count();
        self.base * warm * self.decay_factor.powi(decays as i32)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Last step (exclusive) of the mixing phase.
    pub t1_steps: usize,
    /// Total number of steps.
    pub t2_steps: usize,
    pub batch_size: usize,
    pub lr: LrSchedule,
    pub momentum: f64,
    pub weight_decay: f64,
    pub mix: MixConfig,
    pub loss: LossKind,
    pub loss_params: LossParams,
    pub target: TargetPrior,
    /// Hidden layer widths; empty for a linear classifier.
    pub hidden: Vec<usize>,
    pub seed: u64,
}

impl TrainConfig {
    /// Mixing for the first 90% of `steps`, prior-compensated loss with a
    /// balanced target, `input→64→64→C`, momentum 0.9, weight decay 2e−4.
    pub fn new(steps: usize, mix: MixConfig, seed: u64) -> Self {
        Self {
            t1_steps: (0.9 * steps as f64).floor() as usize,
            t2_steps: steps,
            batch_size: 128,
            lr: LrSchedule::scaled(0.1, steps),
            momentum: 0.9,
            weight_decay: 2e-4,
            mix,
            loss: LossKind::BayiasCe,
            loss_params: LossParams::default(),
            target: TargetPrior::Balanced,
            hidden: vec![64, 64],
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.t1_steps > self.t2_steps {
            return Err(Error::config(format!(
                "t1_steps ({}) exceeds t2_steps ({})",
                self.t1_steps, self.t2_steps
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size must be positive"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::config(format!(
                "momentum must lie in [0, 1), got {}",
                self.momentum
            )));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(Error::config("weight_decay must be >= 0"));
        }
        if !(self.lr.base >= 0.0) || !self.lr.base.is_finite() {
            return Err(Error::config("learning rate must be finite and >= 0"));
        }
        if self.hidden.contains(&0) {
            return Err(Error::config("hidden layers must have positive width"));
        }
        self.mix.validate()
    }

    pub fn layer_dims(&self, input: usize, classes: usize) -> Vec<usize> {
        let mut dims = vec![input];
        dims.extend(&self.hidden);
        dims.push(classes);
        dims
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Mix,
    Plain,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Mix => "mix",
            Phase::Plain => "plain",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub step: usize,
    pub phase: Phase,
    /// Mean batch loss before the update.
    pub loss: f64,
    pub lr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutput {
    pub params: Mlp,
    pub log: Vec<LogEntry>,
    pub loss: LossSpec,
}

/// Run the two-phase procedure on `ds`.
pub fn train_two_phase(ds: &Dataset, cfg: &TrainConfig) -> Result<TrainOutput> {
    cfg.validate()?;
    if ds.is_empty() {
        return Err(Error::config("training set is empty"));
    }
    let prior = empirical_prior(ds)?;
    let loss = cfg
        .loss_params
        .build(cfg.loss, ds.class_counts(), &cfg.target)?;
    let mut params = init_params(&cfg.layer_dims(ds.dims(), ds.num_classes()), cfg.seed)?;
    let mut log = Vec::with_capacity(cfg.t2_steps);
    if cfg.t2_steps == 0 {
        return Ok(TrainOutput { params, log, loss });
    }

    let mut random = ClassSampler::seeded(ds, &prior, cfg.seed, 0)?;
    let mut partner = ClassSampler::seeded(ds, &cfg.mix.partner_prior(&prior)?, cfg.seed, 1)?;
    let factor = FactorSampler::new(cfg.mix.alpha, cfg.mix.mode)?;
    let mut mix_rng = rng::stream(cfg.seed, rng::MIX, 0);
    let pi = prior.probs();

    let mut state = SgdState::new(&params);
    let mut grads = params.zeros_like();
    let mut trace = Trace::default();
    let mut mixed = vec![0.0; ds.dims()];
    let scale = 1.0 / cfg.batch_size as f64;

    for step in 0..cfg.t2_steps {
        let phase = if step < cfg.t1_steps {
            Phase::Mix
        } else {
            Phase::Plain
        };
        for g in grads.params_mut() {
            *g = 0.0;
        }
        let mut total = 0.0;
        match phase {
            Phase::Mix => {
                let first = random.draw_batch(ds, cfg.batch_size);
                let second = partner.draw_batch(ds, cfg.batch_size);
                for (&i, &j) in first.iter().zip(&second) {
                    let (y_i, y_j) = (ds.label(i), ds.label(j));
                    let xi = factor.sample(pi[y_i], pi[y_j], &mut mix_rng);
                    mix_into(ds.row(i), ds.row(j), xi, &mut mixed);
                    params.forward_traced(&mixed, &mut trace)?;
                    total += mixed_vrm_loss(&loss, trace.logits(), y_i, y_j, xi);
                    let dz = mixed_vrm_grad(&loss, trace.logits(), y_i, y_j, xi);
                    params.backward(&trace, &dz, &mut grads);
                }
            }
            Phase::Plain => {
                for i in random.draw_batch(ds, cfg.batch_size) {
                    let y = ds.label(i);
                    params.forward_traced(ds.row(i), &mut trace)?;
                    total += loss.value(trace.logits(), y);
                    let dz = loss.grad(trace.logits(), y);
                    params.backward(&trace, &dz, &mut grads);
                }
            }
        }
        let mean_loss = total * scale;
        if !mean_loss.is_finite() {
            return Err(Error::Invariant(format!(
                "non-finite loss {mean_loss} at step {step}"
            )));
        }
        grads.scale(scale);
        let lr = cfg.lr.at(step);
        crate::model::sgd_step(
            &mut params,
            &grads,
            &mut state,
            lr,
            cfg.momentum,
            cfg.weight_decay,
        );
        log.push(LogEntry {
            step,
            phase,
            loss: mean_loss,
            lr,
        });
    }
    if !params.all_finite() {
        return Err(Error::Invariant(
            "non-finite parameters after training".into(),
        ));
    }
    Ok(TrainOutput { params, log, loss })
}

/// Class probabilities for every row of `ds`.
pub fn predict_dataset(params: &Mlp, ds: &Dataset) -> Result<Vec<Vec<f64>>> {
    params.predict_proba_batch(ds.rows())
}
