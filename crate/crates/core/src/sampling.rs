//! Class-then-instance sampling: the random sampler (class prior equal to the
//! empirical prior) and the inverse sampler with class probabilities
//! `π_y^τ / Σ π^τ`.

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::{self, StreamRng};
use crate::theory::ClassPrior;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerSpec {
    pub tau: f64,
    pub seed: u64,
}

impl Default for SamplerSpec {
    fn default() -> Self {
        Self { tau: -1.0, seed: 0 }
    }
}

/// Reweight a prior to `π_i^τ / Σ_j π_j^τ`.
///
/// `τ = 1` returns the prior unchanged and `τ = 0` the uniform prior. Zero
/// entries stay zero for `τ > 0` and are an error for `τ < 0`.
pub fn inverse_prior(prior: &ClassPrior, tau: f64) -> Result<ClassPrior> {
    if !tau.is_finite() {
        return Err(Error::domain("tau must be finite"));
    }
    if tau == 1.0 {
        return Ok(prior.clone());
    }
    if tau == 0.0 {
        return Ok(ClassPrior::uniform(prior.num_classes()));
    }
    if tau < 0.0 {
        if let Some(c) = prior.probs().iter().position(|&p| p == 0.0) {
            return Err(Error::domain(format!(
                "class {c} has zero prior; cannot raise to negative power {tau}"
            )));
        }
    }
    // log domain keeps π^τ finite for small π and large |τ|
    let logs: Vec<f64> = prior
        .probs()
        .iter()
        .map(|&p| {
            if p == 0.0 {
                f64::NEG_INFINITY
            } else {
                tau * p.ln()
            }
        })
        .collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logs.iter().map(|&l| (l - max).exp()).collect();
    ClassPrior::from_weights(&weights)
}

/// Draw a class index with probability given by `prior`.
pub fn draw_class<R: Rng + ?Sized>(prior: &ClassPrior, rng: &mut R) -> usize {
    WeightedIndex::new(prior.probs())
        .expect("a valid prior has positive mass")
        .sample(rng)
}

/// A class-then-instance sampler over one dataset with its own random stream.
#[derive(Debug, Clone)]
pub struct ClassSampler {
    classes: WeightedIndex<f64>,
    rng: StreamRng,
}

impl ClassSampler {
    /// Fails if `prior` puts mass on a class with no samples.
    pub fn new(ds: &Dataset, prior: &ClassPrior, rng: StreamRng) -> Result<Self> {
        let classes = checked_weights(ds, prior)?;
        Ok(Self { classes, rng })
    }

    /// Random sampler with stream `index` of the `"sampler"` label.
    pub fn seeded(ds: &Dataset, prior: &ClassPrior, seed: u64, index: u64) -> Result<Self> {
        Self::new(ds, prior, rng::stream(seed, rng::SAMPLER, index))
    }

    pub fn draw(&mut self, ds: &Dataset) -> usize {
        draw_instance(&self.classes, ds, &mut self.rng)
    }

    /// `batch_size` row indices, with replacement.
    pub fn draw_batch(&mut self, ds: &Dataset, batch_size: usize) -> Vec<usize> {
        (0..batch_size).map(|_| self.draw(ds)).collect()
    }
}

/// One batch of row indices drawn class-first per `prior`, instance uniformly
/// within the class.
pub fn draw_batch<R: Rng + ?Sized>(
    ds: &Dataset,
    prior: &ClassPrior,
    batch_size: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let classes = checked_weights(ds, prior)?;
    Ok((0..batch_size)
        .map(|_| draw_instance(&classes, ds, rng))
        .collect())
}

fn draw_instance<R: Rng + ?Sized>(
    classes: &WeightedIndex<f64>,
    ds: &Dataset,
    rng: &mut R,
) -> usize {
    let members = ds.members(classes.sample(rng));
    members[rng.random_range(0..members.len())]
}

fn checked_weights(ds: &Dataset, prior: &ClassPrior) -> Result<WeightedIndex<f64>> {
    if prior.num_classes() != ds.num_classes() {
        return Err(Error::DimensionMismatch {
            expected: ds.num_classes(),
            got: prior.num_classes(),
        });
    }
    for (c, (&p, &n)) in prior.probs().iter().zip(ds.class_counts()).enumerate() {
        if p > 0.0 && n == 0 {
            return Err(Error::EmptyClass(c));
        }
    }
    WeightedIndex::new(prior.probs())
        .map_err(|e| Error::domain(format!("unusable class prior: {e}")))
}
