use std::path::Path;

use anyhow::{bail, Result};
use serde::{Deserialize, Serialize};
use unimix_lt::dataset::{gen_lt_gaussians, GaussianSpec};
use unimix_lt::losses::{LossKind, LossParams, TargetPrior};
use unimix_lt::mixing::{MixConfig, MixMode};
use unimix_lt::model::{Layer, Mlp};
use unimix_lt::theory::ClassPrior;
use unimix_lt::train::{train_two_phase, LrSchedule, TrainConfig};

use crate::output::{num, write_json, Table};

/// Contents of a `train --config` file. Omitted keys take the defaults below;
/// `config.resolved.json` lists every key with the value actually used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub classes: usize,
    pub rho: f64,
    pub n_max: usize,
    pub dims: usize,
    pub cluster_spread: f64,
    pub mix: MixMode,
    /// Beta parameter; defaults to the mode's value.
    pub alpha: Option<f64>,
    pub tau: f64,
    pub loss: LossKind,
    pub loss_params: LossParams,
    /// Class prior the loss compensates towards; `null` means balanced.
    pub target_prior: Option<Vec<f64>>,
    /// Defaults to 90% of `t2_steps`.
    pub t1_steps: Option<usize>,
    pub t2_steps: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub hidden: Vec<usize>,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            classes: 10,
            rho: 100.0,
            n_max: 500,
            dims: 16,
            cluster_spread: 0.25,
            mix: MixMode::UnimixFull,
            alpha: None,
            tau: -1.0,
            loss: LossKind::BayiasCe,
            loss_params: LossParams::default(),
            target_prior: None,
            t1_steps: None,
            t2_steps: 2000,
            batch_size: 128,
            lr: 0.1,
            momentum: 0.9,
            weight_decay: 2e-4,
            hidden: vec![64, 64],
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn resolved(&self) -> Self {
        let mut cfg = self.clone();
        cfg.alpha.get_or_insert(self.mix.default_alpha());
        cfg.t1_steps
            .get_or_insert((0.9 * self.t2_steps as f64).floor() as usize);
        cfg.loss_params = self.loss_params.resolved(self.loss);
        cfg
    }

    pub fn data_spec(&self) -> GaussianSpec {
        GaussianSpec {
            num_classes: self.classes,
            rho: self.rho,
            n_max: self.n_max,
            dims: self.dims,
            cluster_spread: self.cluster_spread,
            seed: self.seed,
        }
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        let r = self.resolved();
        let mut cfg = TrainConfig::new(r.t2_steps, MixConfig::new(r.mix), r.seed);
        cfg.mix.alpha = r.alpha.unwrap_or_default();
        cfg.mix.tau = r.tau;
        cfg.t1_steps = r.t1_steps.unwrap_or_default();
        cfg.batch_size = r.batch_size;
        cfg.lr = LrSchedule::scaled(r.lr, r.t2_steps);
        cfg.momentum = r.momentum;
        cfg.weight_decay = r.weight_decay;
        cfg.loss = r.loss;
        cfg.loss_params = r.loss_params;
        cfg.hidden = r.hidden.clone();
        cfg.target = match &r.target_prior {
            None => TargetPrior::Balanced,
            Some(w) => {
                if w.len() != r.classes {
                    bail!(
                        "target_prior has {} entries, expected {}",
                        w.len(),
                        r.classes
                    );
                }
                TargetPrior::Prior(ClassPrior::from_weights(w)?)
            }
        };
        Ok(cfg)
    }
}

/// `model.json`: layer widths and all parameters, each layer's row-major
/// weights followed by its biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub layer_dims: Vec<usize>,
    pub activation: String,
    pub params: Vec<f64>,
}

impl ModelFile {
    pub fn from_mlp(m: &Mlp) -> Self {
        let mut layer_dims = vec![m.input_dim()];
        let mut params = Vec::with_capacity(m.num_params());
        for l in &m.layers {
            layer_dims.push(l.outputs);
            params.extend(&l.weights);
            params.extend(&l.bias);
        }
        Self {
            layer_dims,
            activation: "relu".into(),
            params,
        }
    }

    pub fn to_mlp(&self) -> Result<Mlp> {
        if self.layer_dims.len() < 2 || self.layer_dims.contains(&0) {
            bail!("model needs at least two positive layer widths");
        }
        if self.activation != "relu" {
            bail!("unsupported activation `{}`", self.activation);
        }
        let expected: usize = self.layer_dims.windows(2).map(|w| (w[0] + 1) * w[1]).sum();
        if expected != self.params.len() {
            bail!(
                "model has {} parameters, layer widths need {expected}",
                self.params.len()
            );
        }
        let mut rest = self.params.as_slice();
        let layers = self
            .layer_dims
            .windows(2)
            .map(|w| {
                let (weights, tail) = rest.split_at(w[0] * w[1]);
                let (bias, tail) = tail.split_at(w[1]);
                rest = tail;
                Layer {
                    inputs: w[0],
                    outputs: w[1],
                    weights: weights.to_vec(),
                    bias: bias.to_vec(),
                }
            })
            .collect();
        Ok(Mlp { layers })
    }
}

pub fn run(cfg: &RunConfig, out: &Path) -> Result<()> {
    let resolved = cfg.resolved();
    let train_cfg = resolved.train_config()?;
    let ds = gen_lt_gaussians(&resolved.data_spec())?;
    let result = train_two_phase(&ds, &train_cfg)?;

    let mut log = Table::new(&["step", "phase", "loss", "lr"])?;
    for e in &result.log {
        log.row([
            e.step.to_string(),
            e.phase.as_str().to_string(),
            num(e.loss),
            num(e.lr),
        ])?;
    }
    log.save(&out.join("train_log.csv"))?;
    write_json(
        &out.join("model.json"),
        &ModelFile::from_mlp(&result.params),
    )?;
    write_json(&out.join("config.resolved.json"), &resolved)
}
