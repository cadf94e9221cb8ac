use std::path::Path;

use anyhow::Result;
use clap::Args;
use serde::{Deserialize, Serialize};
use unimix_lt::circles::{run_circles, CirclesTrain, Scenario};
use unimix_lt::dataset::TwoCircleSpec;
use unimix_lt::Exec;

use crate::output::{num, write_json, Table};

/// Flags of `circles-demo`; also the layout of its `config.resolved.json`.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CirclesConfig {
    /// Centre of the positive disk; the negative one sits at the mirror point.
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    pub x0: f64,
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    pub y0: f64,
    #[arg(long, default_value_t = 1.5)]
    pub radius: f64,
    /// Points in the positive (head) disk.
    #[arg(long, default_value_t = 500)]
    pub n_pos: usize,
    /// Points in the negative (tail) disk of the imbalanced set.
    #[arg(long, default_value_t = 10)]
    pub n_neg: usize,
    #[arg(long, default_value_t = 1500)]
    pub steps: usize,
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0.05)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.9)]
    pub momentum: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub fn run(cfg: &CirclesConfig, out: &Path) -> Result<()> {
    let spec = TwoCircleSpec {
        center: (cfg.x0, cfg.y0),
        radius: cfg.radius,
        n_pos: cfg.n_pos,
        n_neg: cfg.n_neg,
        seed: cfg.seed,
    };
    spec.validate()?;
    let train = CirclesTrain {
        steps: cfg.steps,
        batch_size: cfg.batch_size,
        lr: cfg.lr,
        momentum: cfg.momentum,
    };
    let runs = Exec::default()
        .map(Scenario::ALL.len(), |k| {
            run_circles(&spec, Scenario::ALL[k], &train)
        })
        .into_iter()
        .collect::<unimix_lt::Result<Vec<_>>>()?;

    let mut boundary = Table::new(&[
        "scenario",
        "w0",
        "w1",
        "b",
        "angle_error_deg",
        "offset",
        "deviation",
    ])?;
    let mut points = Table::new(&["scenario", "x", "y", "label", "is_virtual"])?;
    for r in &runs {
        let b = &r.boundary;
        let name = b.scenario.as_str();
        boundary.row([
            name.to_string(),
            num(b.weight[0]),
            num(b.weight[1]),
            num(b.bias),
            num(b.angle_error_deg),
            num(b.offset),
            num(b.deviation()),
        ])?;
        for p in &r.points {
            points.row([
                name.to_string(),
                num(p.x),
                num(p.y),
                p.label.to_string(),
                p.is_virtual.to_string(),
            ])?;
        }
    }
    boundary.save(&out.join("boundary.csv"))?;
    points.save(&out.join("points.csv"))?;
    write_json(&out.join("config.resolved.json"), cfg)
}
