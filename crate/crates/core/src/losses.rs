//! Softmax cross-entropy, the prior-compensated ("Bayias") cross-entropy, the
//! mixed-label loss, and the long-tail loss zoo (focal, class-balanced, CDT,
//! LDAM, logit adjustment), each with its analytic gradient over the logits.
//!
//! All logs are natural logs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::theory::ClassPrior;

pub fn log_sum_exp(z: &[f64]) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + z.iter().map(|&v| (v - max).exp()).sum::<f64>().ln()
}

/// Max-subtracted softmax.
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = z.iter().map(|&v| (v - max).exp()).collect();
    let s: f64 = p.iter().sum();
    for v in &mut p {
        *v /= s;
    }
    p
}

/// `−log softmax(z)_y`.
pub fn cross_entropy(z: &[f64], y: usize) -> f64 {
    log_sum_exp(z) - z[y]
}

/// Which prior the compensated loss targets at test time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetPrior {
    /// Uniform `1/C`.
    Balanced,
    Prior(ClassPrior),
}

/// Per-class logit offsets `ℬ_y = ln π_y − ln π'_y`, added during training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayiasMargin(pub Vec<f64>);

impl BayiasMargin {
    pub fn zeros(num_classes: usize) -> Self {
        Self(vec![0.0; num_classes])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// Balanced target: `ℬ_y = ln π_y + ln C`. General target `π'`:
/// `ℬ_y = ln π_y − ln π'_y`.
pub fn bayias_margin(train_prior: &ClassPrior, target: &TargetPrior) -> Result<BayiasMargin> {
    let c = train_prior.num_classes();
    check_positive(train_prior, "train")?;
    let margins = match target {
        TargetPrior::Balanced => {
            let log_c = (c as f64).ln();
            train_prior.probs().iter().map(|p| p.ln() + log_c).collect()
        }
        TargetPrior::Prior(test) => {
            if test.num_classes() != c {
                return Err(Error::DimensionMismatch {
                    expected: c,
                    got: test.num_classes(),
                });
            }
            check_positive(test, "target")?;
            train_prior
                .probs()
                .iter()
                .zip(test.probs())
                .map(|(p, q)| p.ln() - q.ln())
                .collect()
        }
    };
    Ok(BayiasMargin(margins))
}

fn check_positive(prior: &ClassPrior, which: &str) -> Result<()> {
    match prior.probs().iter().position(|&p| p <= 0.0) {
        Some(k) => Err(Error::domain(format!("{which} prior of class {k} is zero"))),
        None => Ok(()),
    }
}

fn shifted(z: &[f64], offsets: &[f64]) -> Vec<f64> {
    z.iter().zip(offsets).map(|(a, b)| a + b).collect()
}

/// `−log softmax(z + ℬ)_y`.
pub fn bayias_ce(z: &[f64], y: usize, m: &BayiasMargin) -> f64 {
    cross_entropy(&shifted(z, &m.0), y)
}

/// Pairwise form `log[1 + Σ_{k≠y} e^{ℬ_k − ℬ_y} e^{z_k − z_y}]`; equal to
/// [`bayias_ce`] up to rounding.
pub fn bayias_ce_pairwise(z: &[f64], y: usize, m: &BayiasMargin) -> f64 {
    let b = &m.0;
    let gaps: Vec<f64> = (0..z.len())
        .filter(|&k| k != y)
        .map(|k| (b[k] - b[y]) + (z[k] - z[y]))
        .collect();
    let top = gaps.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        gaps.iter().map(|g| g.exp()).sum::<f64>().ln_1p()
    } else {
        top + ((-top).exp() + gaps.iter().map(|g| (g - top).exp()).sum::<f64>()).ln()
    }
}

/// A fully resolved loss: kind, scalar parameters and any per-class vectors.
#[derive(Debug, Clone, PartialEq)]
pub enum LossSpec {
    Ce,
    BayiasCe {
        margin: BayiasMargin,
    },
    /// `−(1 − p_y)^γ log p_y`.
    Focal {
        gamma: f64,
    },
    /// CE scaled by `(1 − β)/(1 − β^{n_y})`.
    Cb {
        beta: f64,
        weights: Vec<f64>,
    },
    /// CE on logits divided by `(n_max/n_y)^γ`.
    Cdt {
        gamma: f64,
        temps: Vec<f64>,
    },
    /// CE with `c / n_y^{1/4}` subtracted from the true-class logit only.
    Ldam {
        c: f64,
        margins: Vec<f64>,
    },
    /// CE on logits shifted by `τ log π_y` (every logit).
    La {
        tau: f64,
        offsets: Vec<f64>,
    },
}

fn check_counts(counts: &[usize]) -> Result<()> {
    match counts.iter().position(|&n| n == 0) {
        Some(c) => Err(Error::EmptyClass(c)),
        None => Ok(()),
    }
}

impl LossSpec {
    pub fn bayias(train_prior: &ClassPrior, target: &TargetPrior) -> Result<Self> {
        Ok(LossSpec::BayiasCe {
            margin: bayias_margin(train_prior, target)?,
        })
    }

    pub fn focal(gamma: f64) -> Result<Self> {
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(Error::config(format!(
                "focal gamma must be >= 0, got {gamma}"
            )));
        }
        Ok(LossSpec::Focal { gamma })
    }

    pub fn cb(beta: f64, counts: &[usize]) -> Result<Self> {
        if !(0.0..1.0).contains(&beta) {
            return Err(Error::config(format!(
                "cb beta must lie in [0, 1), got {beta}"
            )));
        }
        check_counts(counts)?;
        let weights = counts
            .iter()
            .map(|&n| (1.0 - beta) / (1.0 - beta.powf(n as f64)))
            .collect();
        Ok(LossSpec::Cb { beta, weights })
    }

    pub fn cdt(gamma: f64, counts: &[usize]) -> Result<Self> {
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(Error::config(format!(
                "cdt gamma must be >= 0, got {gamma}"
            )));
        }
        check_counts(counts)?;
        let n_max = *counts.iter().max().unwrap_or(&1) as f64;
        let temps = counts
            .iter()
            .map(|&n| (n_max / n as f64).powf(gamma))
            .collect();
        Ok(LossSpec::Cdt { gamma, temps })
    }

    pub fn ldam(c: f64, counts: &[usize]) -> Result<Self> {
        if !(c >= 0.0) || !c.is_finite() {
            return Err(Error::config(format!(
                "ldam constant must be >= 0, got {c}"
            )));
        }
        check_counts(counts)?;
        let margins = counts.iter().map(|&n| c / (n as f64).powf(0.25)).collect();
        Ok(LossSpec::Ldam { c, margins })
    }

    pub fn la(tau: f64, prior: &ClassPrior) -> Result<Self> {
        if !tau.is_finite() {
            return Err(Error::config("la tau must be finite"));
        }
        check_positive(prior, "train")?;
        let offsets = prior.probs().iter().map(|p| tau * p.ln()).collect();
        Ok(LossSpec::La { tau, offsets })
    }

    pub fn kind(&self) -> LossKind {
        match self {
            LossSpec::Ce => LossKind::Ce,
            LossSpec::BayiasCe { .. } => LossKind::BayiasCe,
            LossSpec::Focal { .. } => LossKind::Focal,
            LossSpec::Cb { .. } => LossKind::Cb,
            LossSpec::Cdt { .. } => LossKind::Cdt,
            LossSpec::Ldam { .. } => LossKind::Ldam,
            LossSpec::La { .. } => LossKind::La,
        }
    }

    /// Whether the loss depends on logits only through their differences.
    /// CDT rescales each logit separately and is not.
    pub fn is_shift_invariant(&self) -> bool {
        !matches!(self, LossSpec::Cdt { .. })
    }

    pub fn value(&self, z: &[f64], y: usize) -> f64 {
        match self {
            LossSpec::Ce => cross_entropy(z, y),
            LossSpec::BayiasCe { margin } => bayias_ce(z, y, margin),
            LossSpec::Focal { gamma } => {
                let (log_p, rest) = log_p_and_rest(z, y);
                -rest.powf(*gamma) * log_p
            }
            LossSpec::Cb { weights, .. } => weights[y] * cross_entropy(z, y),
            LossSpec::Cdt { temps, .. } => {
                let scaled: Vec<f64> = z.iter().zip(temps).map(|(v, a)| v / a).collect();
                cross_entropy(&scaled, y)
            }
            LossSpec::Ldam { margins, .. } => cross_entropy(&ldam_logits(z, y, margins), y),
            LossSpec::La { offsets, .. } => cross_entropy(&shifted(z, offsets), y),
        }
    }

    /// Gradient of [`LossSpec::value`] with respect to the logits.
    pub fn grad(&self, z: &[f64], y: usize) -> Vec<f64> {
        match self {
            LossSpec::Ce => softmax_minus_onehot(z, y),
            LossSpec::BayiasCe { margin } => softmax_minus_onehot(&shifted(z, &margin.0), y),
            LossSpec::Focal { gamma } => {
                let p = softmax(z);
                let (log_p, rest) = log_p_and_rest(z, y);
                let q = p[y];
                // dL/dq · q, with (1−q)^{γ−1} log q → 0 as q → 1
                let curvature = if *gamma == 0.0 || rest == 0.0 {
                    0.0
                } else {
                    gamma * rest.powf(gamma - 1.0) * q * log_p
                };
                let d = curvature - rest.powf(*gamma);
                p.iter()
                    .enumerate()
                    .map(|(k, &pk)| d * (f64::from(u8::from(k == y)) - pk))
                    .collect()
            }
            LossSpec::Cb { weights, .. } => {
                let w = weights[y];
                softmax_minus_onehot(z, y)
                    .into_iter()
                    .map(|g| w * g)
                    .collect()
            }
            LossSpec::Cdt { temps, .. } => {
                let scaled: Vec<f64> = z.iter().zip(temps).map(|(v, a)| v / a).collect();
                softmax_minus_onehot(&scaled, y)
                    .into_iter()
                    .zip(temps)
                    .map(|(g, a)| g / a)
                    .collect()
            }
            LossSpec::Ldam { margins, .. } => softmax_minus_onehot(&ldam_logits(z, y, margins), y),
            LossSpec::La { offsets, .. } => softmax_minus_onehot(&shifted(z, offsets), y),
        }
    }
}

fn ldam_logits(z: &[f64], y: usize, margins: &[f64]) -> Vec<f64> {
    let mut out = z.to_vec();
    out[y] -= margins[y];
    out
}

fn softmax_minus_onehot(z: &[f64], y: usize) -> Vec<f64> {
    let mut g = softmax(z);
    g[y] -= 1.0;
    g
}

// (log p_y, 1 − p_y) with 1 − p_y summed from the other classes so it keeps
// precision when p_y is close to 1.
fn log_p_and_rest(z: &[f64], y: usize) -> (f64, f64) {
    let lse = log_sum_exp(z);
    let rest = z
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != y)
        .map(|(_, &v)| (v - lse).exp())
        .sum();
    (z[y] - lse, rest)
}

/// `ξ·L(z, y_i) + (1 − ξ)·L(z, y_j)`.
pub fn mixed_vrm_loss(spec: &LossSpec, z: &[f64], y_i: usize, y_j: usize, xi: f64) -> f64 {
    xi * spec.value(z, y_i) + (1.0 - xi) * spec.value(z, y_j)
}

pub fn mixed_vrm_grad(spec: &LossSpec, z: &[f64], y_i: usize, y_j: usize, xi: f64) -> Vec<f64> {
    spec.grad(z, y_i)
        .into_iter()
        .zip(spec.grad(z, y_j))
        .map(|(a, b)| xi * a + (1.0 - xi) * b)
        .collect()
}

/// Value of one of the comparison losses.
pub fn zoo_loss(spec: &LossSpec, z: &[f64], y: usize) -> f64 {
    spec.value(z, y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Ce,
    BayiasCe,
    Focal,
    Cb,
    Cdt,
    Ldam,
    La,
}

impl LossKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LossKind::Ce => "ce",
            LossKind::BayiasCe => "bayias_ce",
            LossKind::Focal => "focal",
            LossKind::Cb => "cb",
            LossKind::Cdt => "cdt",
            LossKind::Ldam => "ldam",
            LossKind::La => "la",
        }
    }
}

/// Optional per-kind scalars as they appear in configuration files.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ldam_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub la_tau: Option<f64>,
}

impl LossParams {
    /// Fill every key the kind reads with its default.
    pub fn resolved(&self, kind: LossKind) -> Self {
        let mut p = *self;
        match kind {
            LossKind::Focal => {
                p.gamma.get_or_insert(1.0);
            }
            LossKind::Cdt => {
                p.gamma.get_or_insert(0.2);
            }
            LossKind::Cb => {
                p.beta.get_or_insert(0.9999);
            }
            LossKind::Ldam => {
                p.ldam_c.get_or_insert(0.5);
            }
            LossKind::La => {
                p.la_tau.get_or_insert(1.0);
            }
            LossKind::Ce | LossKind::BayiasCe => {}
        }
        p
    }

    /// Build the loss for a training set with these class counts.
    pub fn build(
        &self,
        kind: LossKind,
        class_counts: &[usize],
        target: &TargetPrior,
    ) -> Result<LossSpec> {
        let p = self.resolved(kind);
        match kind {
            LossKind::Ce => Ok(LossSpec::Ce),
            LossKind::BayiasCe => {
                check_counts(class_counts)?;
                LossSpec::bayias(&ClassPrior::from_counts(class_counts)?, target)
            }
            LossKind::Focal => LossSpec::focal(p.gamma.unwrap_or_default()),
            LossKind::Cb => LossSpec::cb(p.beta.unwrap_or_default(), class_counts),
            LossKind::Cdt => LossSpec::cdt(p.gamma.unwrap_or_default(), class_counts),
            LossKind::Ldam => LossSpec::ldam(p.ldam_c.unwrap_or_default(), class_counts),
            LossKind::La => {
                check_counts(class_counts)?;
                LossSpec::la(
                    p.la_tau.unwrap_or_default(),
                    &ClassPrior::from_counts(class_counts)?,
                )
            }
        }
    }
}
