use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use crate::output::{num, read_json, write_json, Table};
use crate::train::RunConfig;

const METRICS: [&str; 8] = [
    "accuracy",
    "ece",
    "mce",
    "ace",
    "tace",
    "sce",
    "brier",
    "num_samples",
];

#[derive(Deserialize)]
struct Metrics {
    num_samples: usize,
    accuracy: f64,
    ece: f64,
    mce: f64,
    ace: f64,
    tace: f64,
    sce: f64,
    brier: f64,
}

#[derive(Serialize)]
struct Row {
    run: String,
    loss: String,
    mix: String,
    accuracy: f64,
    ece: f64,
    mce: f64,
    ace: f64,
    tace: f64,
    sce: f64,
    brier: f64,
    num_samples: usize,
}

fn load_row(dir: &Path, name: String) -> Result<Row> {
    let cfg: RunConfig = read_json(&dir.join("config.resolved.json"))?;
    let m: Metrics = read_json(&dir.join("report.json"))?;
    // a run that never mixes reports `none`
    let mixes = cfg.resolved().t1_steps.unwrap_or_default() > 0;
    Ok(Row {
        run: name,
        loss: cfg.loss.as_str().into(),
        mix: if mixes {
            cfg.mix.as_str().into()
        } else {
            "none".into()
        },
        accuracy: m.accuracy,
        ece: m.ece,
        mce: m.mce,
        ace: m.ace,
        tace: m.tace,
        sce: m.sce,
        brier: m.brier,
        num_samples: m.num_samples,
    })
}

/// Summarise every run directory below `run_dir` into `summary.csv` and
/// `summary.json` in `out`. Runs with missing or unreadable artifacts are
/// skipped with a warning.
pub fn run(run_dir: &Path, out: &Path) -> Result<()> {
    let mut dirs: Vec<_> = std::fs::read_dir(run_dir)
        .with_context(|| format!("reading {}", run_dir.display()))?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_dir())
        .map(|e| (e.file_name().to_string_lossy().into_owned(), e.path()))
        .collect();
    dirs.sort();

    let mut rows = Vec::new();
    for (name, dir) in dirs {
        match load_row(&dir, name.clone()) {
            Ok(r) => rows.push(r),
            Err(e) => eprintln!("warning: skipping run `{name}`: {e:#}"),
        }
    }
    if rows.is_empty() {
        bail!("no completed runs under {}", run_dir.display());
    }

    let mut header = vec!["run", "loss", "mix"];
    header.extend(METRICS);
    let mut t = Table::new(&header)?;
    for r in &rows {
        t.row([
            r.run.clone(),
            r.loss.clone(),
            r.mix.clone(),
            num(r.accuracy),
            num(r.ece),
            num(r.mce),
            num(r.ace),
            num(r.tace),
            num(r.sce),
            num(r.brier),
            r.num_samples.to_string(),
        ])?;
    }
    t.save(&out.join("summary.csv"))?;
    write_json(&out.join("summary.json"), &rows)
}
