use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::Args;
use serde::Serialize;
use unimix_lt::dataset::{gen_gaussians, lt_class_counts, test_class_counts};

use crate::output::{write_atomic, write_json};

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenArgs {
    #[arg(long, default_value_t = 10)]
    pub classes: usize,
    /// Imbalance factor of the training split.
    #[arg(long, default_value_t = 100.0)]
    pub rho: f64,
    /// Largest class size.
    #[arg(long, default_value_t = 500)]
    pub n_max: usize,
    #[arg(long, default_value_t = 16)]
    pub dims: usize,
    #[arg(long, default_value_t = 0.25)]
    pub cluster_spread: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Emit a test split with imbalance `test_rho` instead (1 = balanced,
    /// below 1 = reversed order).
    #[arg(long)]
    pub test_rho: Option<f64>,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    #[serde(flatten)]
    args: &'a GenArgs,
    class_counts: Vec<usize>,
    num_samples: usize,
}

/// `foo.csv` → `foo.meta.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("meta.json")
}

pub fn run(args: &GenArgs, out: &Path) -> Result<()> {
    let counts = match args.test_rho {
        Some(r) => test_class_counts(args.classes, r, args.n_max)?,
        None => lt_class_counts(args.classes, args.rho, args.n_max)?,
    };
    let ds = gen_gaussians(&counts, args.dims, args.cluster_spread, args.seed)?;
    let mut bytes = Vec::new();
    ds.write_csv(&mut bytes)?;
    write_atomic(out, &bytes)?;
    write_json(
        &sidecar_path(out),
        &Sidecar {
            args,
            num_samples: ds.len(),
            class_counts: counts,
        },
    )
}
