use std::path::Path;

use anyhow::{Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use unimix_lt::mixing::{mc_xi_aug_counts, MixConfig, MixMode};
use unimix_lt::theory::{discrete_lt_prior, emit_density_curves, ClassPrior, CurveKind, LtSpec};
use unimix_lt::Exec;

use crate::output::{num, write_json, Table};

/// Flags of `verify-dist`; also the layout of its `config.resolved.json`.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistConfig {
    #[arg(long, default_value_t = 100)]
    pub classes: usize,
    #[arg(long, default_value_t = 200.0)]
    pub rho: f64,
    /// Inverse-sampler exponent for the full pipeline.
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    pub tau: f64,
    #[arg(long, default_value_t = 1_000_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// mixup, factor or full.
    #[arg(long, default_value = "full")]
    pub mode: MixMode,
    /// Beta parameter; defaults to 1 for mixup and 0.5 otherwise.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Grid points per curve; defaults to the class count.
    #[arg(long)]
    pub resolution: Option<usize>,
}

#[derive(Serialize)]
struct Summary {
    l1_to_train_prior: f64,
    l1_to_uniform: f64,
    l1_to_closed_form: f64,
    argmax_class: usize,
    head_third_mass: f64,
    tail_third_mass: f64,
}

fn curve_kind(mode: MixMode) -> CurveKind {
    match mode {
        MixMode::VanillaMixup => CurveKind::Mixup,
        MixMode::UnimixFactorOnly => CurveKind::UnimixFactor,
        MixMode::UnimixFull => CurveKind::UnimixFull,
    }
}

pub fn run(mut cfg: DistConfig, out: &Path) -> Result<()> {
    cfg.alpha.get_or_insert(cfg.mode.default_alpha());
    cfg.resolution.get_or_insert(cfg.classes);
    let spec = LtSpec::new(cfg.classes, cfg.rho)?.with_tau(cfg.tau)?;
    let mix = MixConfig {
        alpha: cfg.alpha.unwrap_or_default(),
        mode: cfg.mode,
        tau: cfg.tau,
    };
    mix.validate()?;

    let curves = emit_density_curves(&spec, cfg.resolution.unwrap_or_default())?;
    let prior = discrete_lt_prior(&spec);
    let counts = mc_xi_aug_counts(&prior, &mix, cfg.trials, cfg.seed, Exec::default())?;
    let closed: Vec<f64> = (1..=cfg.classes)
        .map(|y| curve_kind(cfg.mode).density(y as f64, &spec))
        .collect::<unimix_lt::Result<_>>()?;
    let closed = ClassPrior::from_weights(&closed).context("closed-form class weights")?;
    let weights: Vec<f64> = counts.iter().map(|&n| n as f64).collect();
    let hist = ClassPrior::from_weights(&weights)?;

    let mut table = Table::new(&["kind", "y", "density"])?;
    for c in &curves {
        for &(y, d) in &c.points {
            table.row([c.kind.as_str().to_string(), num(y), num(d)])?;
        }
    }
    table.save(&out.join("curves.csv"))?;

    let mut table = Table::new(&["class", "empirical_prob", "closed_form_prob"])?;
    for (k, (e, c)) in hist.probs().iter().zip(closed.probs()).enumerate() {
        table.row([(k + 1).to_string(), num(*e), num(*c)])?;
    }
    table.save(&out.join("histogram.csv"))?;

    let third = cfg.classes / 3;
    let p = hist.probs();
    let argmax = p
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
        .map_or(0, |(k, _)| k + 1);
    let summary = Summary {
        l1_to_train_prior: hist.l1_distance(&prior),
        l1_to_uniform: hist.l1_distance(&ClassPrior::uniform(cfg.classes)),
        l1_to_closed_form: hist.l1_distance(&closed),
        argmax_class: argmax,
        head_third_mass: p[..third].iter().sum(),
        tail_third_mass: p[cfg.classes - third..].iter().sum(),
    };
    write_json(&out.join("summary.json"), &summary)?;
    write_json(&out.join("config.resolved.json"), &cfg)
}
