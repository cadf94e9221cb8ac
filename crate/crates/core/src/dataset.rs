//! Labeled feature data: long-tailed Gaussian clusters, the two-circle set, and
//! CSV ingestion.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::theory::ClassPrior;

/// `N` samples of dimension `d`, row-major, with integer labels in `[0, C)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    dims: usize,
    labels: Vec<usize>,
    class_counts: Vec<usize>,
    members: Vec<Vec<usize>>,
}

impl Dataset {
    pub fn new(
        features: Vec<f64>,
        dims: usize,
        labels: Vec<usize>,
        num_classes: usize,
    ) -> Result<Self> {
        if dims == 0 {
            return Err(Error::domain("feature dimension must be positive"));
        }
        if features.len() != labels.len() * dims {
            return Err(Error::DimensionMismatch {
                expected: labels.len() * dims,
                got: features.len(),
            });
        }
        let mut members = vec![Vec::new(); num_classes];
        for (i, &y) in labels.iter().enumerate() {
            if y >= num_classes {
                return Err(Error::domain(format!(
                    "label {y} at row {i} is not below {num_classes}"
                )));
            }
            members[y].push(i);
        }
        let class_counts = members.iter().map(Vec::len).collect();
        Ok(Self {
            features,
            dims,
            labels,
            class_counts,
            members,
        })
    }

    /// The same rows with `num_classes` classes; every label must stay below it.
    pub fn with_num_classes(self, num_classes: usize) -> Result<Self> {
        Self::new(self.features, self.dims, self.labels, num_classes)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn num_classes(&self) -> usize {
        self.class_counts.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dims..(i + 1) * self.dims]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.features.chunks_exact(self.dims)
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_counts(&self) -> &[usize] {
        &self.class_counts
    }

    /// Row indices of class `c`, ascending.
    pub fn members(&self, c: usize) -> &[usize] {
        &self.members[c]
    }

    /// Write `f0,…,f{d−1},label` with a header row.
    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        self.write_csv(&mut out)?;
        out.flush()?;
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (0..self.dims).map(|k| format!("f{k}")).collect();
        header.push("label".into());
        w.write_record(&header).map_err(csv_io)?;
        for (row, label) in self.rows().zip(&self.labels) {
            let mut rec: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            rec.push(label.to_string());
            w.write_record(&rec).map_err(csv_io)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Read a dataset with header `f0,…,f{d−1},label`. `C` is the largest label
/// plus one.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let name = path.display().to_string();
    let parse_err = |line: u64, msg: String| Error::Parse {
        path: name.clone(),
        line,
        msg,
    };
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| parse_err(0, e.to_string()))?;
    let header = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    let label_col = header
        .iter()
        .position(|h| h == "label")
        .ok_or_else(|| parse_err(1, "missing column `label`".into()))?;
    let dims = header.len() - 1;
    if dims == 0 {
        return Err(parse_err(1, "no feature columns".into()));
    }
    for (k, h) in header.iter().filter(|h| *h != "label").enumerate() {
        if h != format!("f{k}") {
            return Err(parse_err(1, format!("expected column `f{k}`, found `{h}`")));
        }
    }

    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i as u64 + 2;
        let rec = rec.map_err(|e| parse_err(line, e.to_string()))?;
        if rec.len() != header.len() {
            return Err(parse_err(
                line,
                format!("expected {} fields, found {}", header.len(), rec.len()),
            ));
        }
        for (k, field) in rec.iter().enumerate() {
            if k == label_col {
                let y: i64 = field
                    .trim()
                    .parse()
                    .map_err(|_| parse_err(line, format!("bad label `{field}`")))?;
                if y < 0 {
                    return Err(parse_err(line, format!("negative label {y}")));
                }
                labels.push(y as usize);
            } else {
                let v: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| parse_err(line, format!("bad feature value `{field}`")))?;
                features.push(v);
            }
        }
    }
    let num_classes = labels.iter().max().map_or(0, |m| m + 1);
    Dataset::new(features, dims, labels, num_classes)
}

/// `n_i = max(1, round(n_max · ρ^{−(i−1)/(C−1)}))` for `i = 1..C`.
pub fn lt_class_counts(num_classes: usize, rho: f64, n_max: usize) -> Result<Vec<usize>> {
    crate::theory::lambda_from_rho(rho, num_classes)?;
    if n_max < num_classes {
        return Err(Error::domain(format!(
            "n_max = {n_max} cannot populate {num_classes} classes"
        )));
    }
    let last = (num_classes - 1) as f64;
    Ok((0..num_classes)
        .map(|i| {
            let n = (n_max as f64 * rho.powf(-(i as f64) / last)).round() as usize;
            n.max(1)
        })
        .collect())
}

/// Class counts for an evaluation split with imbalance `rho_prime`: `ρ' > 1` is
/// long-tailed like training, `ρ' = 1` balanced, `ρ' < 1` reversed (tail
/// classes become the most frequent).
pub fn test_class_counts(num_classes: usize, rho_prime: f64, n_max: usize) -> Result<Vec<usize>> {
    if !(rho_prime > 0.0) || !rho_prime.is_finite() {
        return Err(Error::domain(format!(
            "test imbalance must be positive, got {rho_prime}"
        )));
    }
    if rho_prime >= 1.0 {
        lt_class_counts(num_classes, rho_prime, n_max)
    } else {
        let mut counts = lt_class_counts(num_classes, 1.0 / rho_prime, n_max)?;
        counts.reverse();
        Ok(counts)
    }
}

/// Long-tailed Gaussian cluster data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpec {
    pub num_classes: usize,
    pub rho: f64,
    pub n_max: usize,
    pub dims: usize,
    pub cluster_spread: f64,
    pub seed: u64,
}

/// Deterministic class means with minimum pairwise distance 1.
///
/// Class `c` sits on axis `(c/2) mod d` with sign `±` by parity, on ring
/// `c / (2d)` at radius `1 + ring`. Two classes on one axis and sign differ by
/// at least one ring; on different axes or signs they are at least `√2` apart.
pub fn class_means(num_classes: usize, dims: usize) -> Vec<Vec<f64>> {
    (0..num_classes)
        .map(|c| {
            let axis = (c / 2) % dims;
            let ring = c / (2 * dims);
            let sign = if c % 2 == 0 { 1.0 } else { -1.0 };
            let mut m = vec![0.0; dims];
            m[axis] = sign * (1.0 + ring as f64);
            m
        })
        .collect()
}

/// Isotropic Gaussian clusters around [`class_means`] with per-class `counts`.
/// Rows are grouped by class in ascending class order.
pub fn gen_gaussians(
    counts: &[usize],
    dims: usize,
    cluster_spread: f64,
    seed: u64,
) -> Result<Dataset> {
    if dims < 2 {
        return Err(Error::domain("Gaussian data needs at least 2 dimensions"));
    }
    if !(cluster_spread > 0.0) || !cluster_spread.is_finite() {
        return Err(Error::domain("cluster spread must be positive"));
    }
    let means = class_means(counts.len(), dims);
    let total: usize = counts.iter().sum();
    let mut rng = rng::stream(seed, rng::DATA, 0);
    let mut features = Vec::with_capacity(total * dims);
    let mut labels = Vec::with_capacity(total);
    for (c, (&n, mean)) in counts.iter().zip(&means).enumerate() {
        for _ in 0..n {
            features.extend(mean.iter().map(|&m| {
                let z: f64 = StandardNormal.sample(&mut rng);
                m + cluster_spread * z
            }));
            labels.push(c);
        }
    }
    Dataset::new(features, dims, labels, counts.len())
}

pub fn gen_lt_gaussians(spec: &GaussianSpec) -> Result<Dataset> {
    let counts = lt_class_counts(spec.num_classes, spec.rho, spec.n_max)?;
    gen_gaussians(&counts, spec.dims, spec.cluster_spread, spec.seed)
}

/// Two disjoint disks of radius `r` centred at `±(x0, y0)`: `n_pos` points in
/// the positive disk (label 0) and `n_neg` in the negative one (label 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoCircleSpec {
    pub center: (f64, f64),
    pub radius: f64,
    pub n_pos: usize,
    pub n_neg: usize,
    pub seed: u64,
}

impl Default for TwoCircleSpec {
    fn default() -> Self {
        Self {
            center: (2.0, 2.0),
            radius: 1.5,
            n_pos: 500,
            n_neg: 10,
            seed: 0,
        }
    }
}

impl TwoCircleSpec {
    pub fn validate(&self) -> Result<()> {
        let (x0, y0) = self.center;
        if !(self.radius > 0.0) {
            return Err(Error::domain("radius must be positive"));
        }
        if x0 * x0 + y0 * y0 <= self.radius * self.radius {
            return Err(Error::domain(format!(
                "disks at ±({x0}, {y0}) with radius {} overlap",
                self.radius
            )));
        }
        Ok(())
    }

    pub fn contains(&self, label: usize, p: &[f64]) -> bool {
        let s = if label == 0 { 1.0 } else { -1.0 };
        let dx = p[0] - s * self.center.0;
        let dy = p[1] - s * self.center.1;
        dx * dx + dy * dy <= self.radius * self.radius
    }
}

fn uniform_in_disk<R: Rng>(rng: &mut R, cx: f64, cy: f64, r: f64) -> [f64; 2] {
    let rad = r * rng.random::<f64>().sqrt();
    let theta = 2.0 * PI * rng.random::<f64>();
    [cx + rad * theta.cos(), cy + rad * theta.sin()]
}

pub fn gen_two_circles(spec: &TwoCircleSpec) -> Result<Dataset> {
    spec.validate()?;
    let (x0, y0) = spec.center;
    let mut rng = rng::stream(spec.seed, rng::DATA, 1);
    let mut features = Vec::with_capacity(2 * (spec.n_pos + spec.n_neg));
    let mut labels = Vec::with_capacity(spec.n_pos + spec.n_neg);
    for (label, n, s) in [(0, spec.n_pos, 1.0), (1, spec.n_neg, -1.0)] {
        for _ in 0..n {
            features.extend(uniform_in_disk(&mut rng, s * x0, s * y0, spec.radius));
            labels.push(label);
        }
    }
    Dataset::new(features, 2, labels, 2)
}

/// Class proportions of `ds`. Every class must be populated.
pub fn empirical_prior(ds: &Dataset) -> Result<ClassPrior> {
    if let Some(c) = ds.class_counts().iter().position(|&n| n == 0) {
        return Err(Error::EmptyClass(c));
    }
    ClassPrior::from_counts(ds.class_counts())
}
