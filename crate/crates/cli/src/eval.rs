use std::path::Path;

use anyhow::{bail, Result};
use clap::Args;
use serde::Serialize;
use unimix_lt::calibration::{CalibrationReport, MetricOptions};
use unimix_lt::dataset::load_csv;
use unimix_lt::train::predict_dataset;

use crate::output::{num, read_json, write_json, Table};
use crate::train::ModelFile;

#[derive(Debug, Clone, Args)]
pub struct MetricArgs {
    /// Equal-width confidence bins.
    #[arg(long, default_value_t = 15)]
    pub bins: usize,
    /// Equal-mass ranges for the adaptive metrics.
    #[arg(long, default_value_t = 15)]
    pub ranges: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub tace_threshold: f64,
    /// Samples per chunk in `density.csv`.
    #[arg(long, default_value_t = 100)]
    pub density_batch: usize,
}

#[derive(Serialize)]
struct ReportFile {
    num_samples: usize,
    accuracy: f64,
    ece: f64,
    mce: f64,
    ace: f64,
    tace: f64,
    sce: f64,
    brier: f64,
    per_class_recall: Vec<Option<f64>>,
    options: MetricOptions,
}

pub fn run(model: &Path, data: &Path, metrics: &MetricArgs, out: &Path) -> Result<()> {
    let model: ModelFile = read_json(model)?;
    let mlp = model.to_mlp()?;
    let ds = load_csv(data)?;
    if ds.dims() != mlp.input_dim() {
        bail!(
            "dataset has {} features, model expects {}",
            ds.dims(),
            mlp.input_dim()
        );
    }
    let ds = ds.with_num_classes(mlp.num_classes())?;
    let opts = MetricOptions {
        bins: metrics.bins,
        ranges: metrics.ranges,
        tace_threshold: metrics.tace_threshold,
        density_batch: metrics.density_batch,
    };
    let preds = predict_dataset(&mlp, &ds)?;
    let r = CalibrationReport::compute(&preds, ds.labels(), &opts)?;

    let mut t = Table::new(&["bin_lo", "bin_hi", "count", "acc", "conf"])?;
    for b in &r.reliability_bins {
        t.row([
            num(b.lo),
            num(b.hi),
            b.count.to_string(),
            num(b.acc),
            num(b.conf),
        ])?;
    }
    t.save(&out.join("reliability.csv"))?;

    let c = mlp.num_classes();
    let mut header = vec!["true_class".to_string()];
    header.extend((0..c).map(|k| format!("pred_{k}")));
    let mut t = Table::new(&header)?;
    for (k, row) in r.confusion.counts.iter().enumerate() {
        t.row(std::iter::once(k.to_string()).chain(row.iter().map(u64::to_string)))?;
    }
    t.save(&out.join("confusion.csv"))?;

    let mut t = Table::new(&["batch", "conf", "acc"])?;
    for (k, s) in r.batch_density.iter().enumerate() {
        t.row([k.to_string(), num(s.confidence), num(s.accuracy)])?;
    }
    t.save(&out.join("density.csv"))?;

    write_json(
        &out.join("report.json"),
        &ReportFile {
            num_samples: r.num_samples,
            accuracy: r.accuracy,
            ece: r.ece,
            mce: r.mce,
            ace: r.ace,
            tace: r.tace,
            sce: r.sce,
            brier: r.brier,
            per_class_recall: r.confusion.per_class_recall(),
            options: opts,
        },
    )
}
