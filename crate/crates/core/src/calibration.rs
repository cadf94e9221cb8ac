//! Calibration metrics over predicted probability vectors: ECE, MCE, adaptive
//! (ACE / thresholded TACE), static (SCE), Brier score, plus accuracy,
//! confusion matrices, reliability bins and per-chunk confidence/accuracy
//! pairs.
//!
//! Confidence bins are equal-width and half-open `[lo, hi)`, with the last bin
//! closed at 1. Empty bins contribute nothing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of confidence bins.
pub const DEFAULT_BINS: usize = 15;
/// Default probability floor for the thresholded adaptive error.
pub const TACE_THRESHOLD: f64 = 1e-3;
/// Default chunk size for [`batch_density`].
pub const DEFAULT_DENSITY_BATCH: usize = 100;

fn check_inputs(preds: &[Vec<f64>], labels: &[usize]) -> Result<()> {
    if preds.is_empty() {
        return Err(Error::domain("no predictions"));
    }
    if preds.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: preds.len(),
            got: labels.len(),
        });
    }
    let c = preds[0].len();
    if let Some(p) = preds.iter().find(|p| p.len() != c) {
        return Err(Error::DimensionMismatch {
            expected: c,
            got: p.len(),
        });
    }
    if let Some(&y) = labels.iter().find(|&&y| y >= c) {
        return Err(Error::domain(format!(
            "label {y} out of range for {c} classes"
        )));
    }
    Ok(())
}

/// Index and value of the largest entry; ties go to the lowest index.
pub fn winner(p: &[f64]) -> (usize, f64) {
    p.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| {
            if v > best.1 {
                (i, v)
            } else {
                best
            }
        })
}

fn bin_of(conf: f64, bins: usize) -> usize {
    ((conf * bins as f64).floor() as usize).min(bins - 1)
}

/// One equal-width confidence bin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// Zero for empty bins.
    pub acc: f64,
    pub conf: f64,
}

/// Top-label reliability bins.
pub fn reliability_bins(
    preds: &[Vec<f64>],
    labels: &[usize],
    bins: usize,
) -> Result<Vec<ReliabilityBin>> {
    check_inputs(preds, labels)?;
    if bins == 0 {
        return Err(Error::domain("need at least one bin"));
    }
    let mut count = vec![0usize; bins];
    let mut correct = vec![0.0; bins];
    let mut conf = vec![0.0; bins];
    for (p, &y) in preds.iter().zip(labels) {
        let (pred, c) = winner(p);
        let b = bin_of(c, bins);
        count[b] += 1;
        conf[b] += c;
        if pred == y {
            correct[b] += 1.0;
        }
    }
    Ok((0..bins)
        .map(|b| {
            let n = count[b];
            let (acc, cf) = if n == 0 {
                (0.0, 0.0)
            } else {
                (correct[b] / n as f64, conf[b] / n as f64)
            };
            ReliabilityBin {
                lo: b as f64 / bins as f64,
                hi: (b + 1) as f64 / bins as f64,
                count: n,
                acc,
                conf: cf,
            }
        })
        .collect())
}

/// `Σ_m |B_m|/N · |acc(B_m) − conf(B_m)|` over top-label confidence bins.
pub fn ece(preds: &[Vec<f64>], labels: &[usize], bins: usize) -> Result<f64> {
    let n = preds.len() as f64;
    Ok(reliability_bins(preds, labels, bins)?
        .iter()
        .map(|b| b.count as f64 / n * (b.acc - b.conf).abs())
        .sum())
}

/// Largest `|acc − conf|` over nonempty bins.
pub fn mce(preds: &[Vec<f64>], labels: &[usize], bins: usize) -> Result<f64> {
    Ok(reliability_bins(preds, labels, bins)?
        .iter()
        .filter(|b| b.count > 0)
        .map(|b| (b.acc - b.conf).abs())
        .fold(0.0, f64::max))
}

/// Adaptive calibration error with probability floor `threshold` (`0` gives
/// ACE). For each class, probabilities `≥ threshold` are sorted ascending
/// (ties by sample index) and cut into `ranges` equal-count ranges; the
/// `n mod R` leftover samples go one each to the first ranges. The result is
/// `1/(C·R) Σ_c Σ_r |acc(r, c) − conf(r, c)|` with empty ranges counting 0.
pub fn adaptive_calibration_error(
    preds: &[Vec<f64>],
    labels: &[usize],
    ranges: usize,
    threshold: f64,
) -> Result<f64> {
    check_inputs(preds, labels)?;
    if ranges == 0 {
        return Err(Error::domain("need at least one range"));
    }
    let c = preds[0].len();
    let mut total = 0.0;
    let mut survivors = 0usize;
    for class in 0..c {
        let mut kept: Vec<(f64, usize)> = preds
            .iter()
            .enumerate()
            .filter(|(_, p)| p[class] >= threshold)
            .map(|(i, p)| (p[class], i))
            .collect();
        survivors += kept.len();
        kept.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let n = kept.len();
        let (base, extra) = (n / ranges, n % ranges);
        let mut start = 0;
        for r in 0..ranges {
            let len = base + usize::from(r < extra);
            if len == 0 {
                continue;
            }
            let chunk = &kept[start..start + len];
            start += len;
            let hits = chunk.iter().filter(|(_, i)| labels[*i] == class).count();
            let conf = chunk.iter().map(|(p, _)| p).sum::<f64>() / len as f64;
            total += (hits as f64 / len as f64 - conf).abs();
        }
    }
    if survivors == 0 {
        return Err(Error::domain(format!(
            "every probability is below the threshold {threshold}"
        )));
    }
    Ok(total / (c * ranges) as f64)
}

pub fn ace(preds: &[Vec<f64>], labels: &[usize], ranges: usize) -> Result<f64> {
    adaptive_calibration_error(preds, labels, ranges, 0.0)
}

pub fn tace(preds: &[Vec<f64>], labels: &[usize], ranges: usize) -> Result<f64> {
    adaptive_calibration_error(preds, labels, ranges, TACE_THRESHOLD)
}

/// Static calibration error: every class probability binned separately,
/// `1/C Σ_c Σ_b n_bc/N · |acc(b, c) − conf(b, c)|`.
pub fn sce(preds: &[Vec<f64>], labels: &[usize], bins: usize) -> Result<f64> {
    check_inputs(preds, labels)?;
    if bins == 0 {
        return Err(Error::domain("need at least one bin"));
    }
    let c = preds[0].len();
    let n = preds.len() as f64;
    let mut total = 0.0;
    for class in 0..c {
        let mut count = vec![0usize; bins];
        let mut hits = vec![0usize; bins];
        let mut conf = vec![0.0; bins];
        for (p, &y) in preds.iter().zip(labels) {
            let b = bin_of(p[class], bins);
            count[b] += 1;
            conf[b] += p[class];
            hits[b] += usize::from(y == class);
        }
        for b in 0..bins {
            if count[b] > 0 {
                let m = count[b] as f64;
                total += m / n * (hits[b] as f64 / m - conf[b] / m).abs();
            }
        }
    }
    Ok(total / c as f64)
}

/// `1/(N·C) Σ_i Σ_c (1[y_i = c] − p_ic)²`.
pub fn brier(preds: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    check_inputs(preds, labels)?;
    let c = preds[0].len();
    let sum: f64 = preds
        .iter()
        .zip(labels)
        .map(|(p, &y)| {
            p.iter()
                .enumerate()
                .map(|(k, &v)| {
                    let t = if k == y { 1.0 } else { 0.0 };
                    (t - v) * (t - v)
                })
                .sum::<f64>()
        })
        .sum();
    Ok(sum / (preds.len() * c) as f64)
}

pub fn accuracy(preds: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    check_inputs(preds, labels)?;
    let hits = preds
        .iter()
        .zip(labels)
        .filter(|(p, &y)| winner(p).0 == y)
        .count();
    Ok(hits as f64 / preds.len() as f64)
}

/// `counts[true][pred]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    /// `ln(1 + count)` for plotting.
    pub fn log_scaled(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .map(|row| row.iter().map(|&n| (n as f64).ln_1p()).collect())
            .collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Diagonal over row sums; `None` for classes absent from the labels.
    pub fn per_class_recall(&self) -> Vec<Option<f64>> {
        self.counts
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let n: u64 = row.iter().sum();
                (n > 0).then(|| row[i] as f64 / n as f64)
            })
            .collect()
    }
}

pub fn confusion_matrix(preds: &[Vec<f64>], labels: &[usize]) -> Result<ConfusionMatrix> {
    check_inputs(preds, labels)?;
    let c = preds[0].len();
    let mut counts = vec![vec![0u64; c]; c];
    for (p, &y) in preds.iter().zip(labels) {
        counts[y][winner(p).0] += 1;
    }
    Ok(ConfusionMatrix { counts })
}

/// Accuracy and mean winning probability of one evaluation chunk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalBatchStats {
    pub accuracy: f64,
    pub confidence: f64,
}

/// Consecutive chunks of `batch` samples (the last may be shorter).
pub fn batch_density(
    preds: &[Vec<f64>],
    labels: &[usize],
    batch: usize,
) -> Result<Vec<EvalBatchStats>> {
    check_inputs(preds, labels)?;
    if batch == 0 {
        return Err(Error::domain("chunk size must be positive"));
    }
    Ok(preds
        .chunks(batch)
        .zip(labels.chunks(batch))
        .map(|(ps, ys)| {
            let m = ps.len() as f64;
            let mut hits = 0.0;
            let mut conf = 0.0;
            for (p, &y) in ps.iter().zip(ys) {
                let (pred, c) = winner(p);
                conf += c;
                if pred == y {
                    hits += 1.0;
                }
            }
            EvalBatchStats {
                accuracy: hits / m,
                confidence: conf / m,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricOptions {
    pub bins: usize,
    pub ranges: usize,
    pub tace_threshold: f64,
    pub density_batch: usize,
}

impl Default for MetricOptions {
    fn default() -> Self {
        Self {
            bins: DEFAULT_BINS,
            ranges: DEFAULT_BINS,
            tace_threshold: TACE_THRESHOLD,
            density_batch: DEFAULT_DENSITY_BATCH,
        }
    }
}

/// Every metric for one prediction set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub num_samples: usize,
    pub accuracy: f64,
    pub ece: f64,
    pub mce: f64,
    pub ace: f64,
    pub tace: f64,
    pub sce: f64,
    pub brier: f64,
    pub reliability_bins: Vec<ReliabilityBin>,
    pub confusion: ConfusionMatrix,
    pub batch_density: Vec<EvalBatchStats>,
}

impl CalibrationReport {
    pub fn compute(preds: &[Vec<f64>], labels: &[usize], opts: &MetricOptions) -> Result<Self> {
        let reliability_bins = reliability_bins(preds, labels, opts.bins)?;
        let n = preds.len() as f64;
        let ece = reliability_bins
            .iter()
            .map(|b| b.count as f64 / n * (b.acc - b.conf).abs())
            .sum();
        let mce = reliability_bins
            .iter()
            .filter(|b| b.count > 0)
            .map(|b| (b.acc - b.conf).abs())
            .fold(0.0, f64::max);
        Ok(Self {
            num_samples: preds.len(),
            accuracy: accuracy(preds, labels)?,
            ece,
            mce,
            ace: ace(preds, labels, opts.ranges)?,
            tace: adaptive_calibration_error(preds, labels, opts.ranges, opts.tace_threshold)?,
            sce: sce(preds, labels, opts.bins)?,
            brier: brier(preds, labels)?,
            reliability_bins,
            confusion: confusion_matrix(preds, labels)?,
            batch_density: batch_density(preds, labels, opts.density_batch)?,
        })
    }
}
