//! Pair mixing with a symmetric Beta factor or the prior-aware factor, the
//! ξ-Aug class rule, and the Monte Carlo class histogram of mixed samples.

use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{split_even, Exec};
use crate::rng;
use crate::sampling::inverse_prior;
use crate::theory::ClassPrior;

/// Default Beta parameter for the prior-aware modes.
pub const UNIMIX_ALPHA: f64 = 0.5;
/// Default Beta parameter for vanilla mixup.
pub const MIXUP_ALPHA: f64 = 1.0;

/// Number of independent random streams a Monte Carlo histogram is split into.
/// Fixed so results do not depend on the thread count.
pub const MC_STREAMS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixMode {
    /// `ξ ~ Beta(α, α)`, both partners from the random sampler.
    VanillaMixup,
    /// Prior-aware factor, both partners from the random sampler.
    UnimixFactorOnly,
    /// Prior-aware factor, second partner from the inverse sampler.
    UnimixFull,
}

impl MixMode {
    pub const ALL: [MixMode; 3] = [
        MixMode::VanillaMixup,
        MixMode::UnimixFactorOnly,
        MixMode::UnimixFull,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MixMode::VanillaMixup => "vanilla_mixup",
            MixMode::UnimixFactorOnly => "unimix_factor_only",
            MixMode::UnimixFull => "unimix_full",
        }
    }

    pub fn default_alpha(self) -> f64 {
        match self {
            MixMode::VanillaMixup => MIXUP_ALPHA,
            _ => UNIMIX_ALPHA,
        }
    }
}

impl std::str::FromStr for MixMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vanilla_mixup" | "mixup" | "vanilla" => Ok(MixMode::VanillaMixup),
            "unimix_factor_only" | "factor" => Ok(MixMode::UnimixFactorOnly),
            "unimix_full" | "full" | "unimix" => Ok(MixMode::UnimixFull),
            other => Err(Error::config(format!("unknown mix mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixConfig {
    pub alpha: f64,
    pub mode: MixMode,
    /// Inverse-sampler exponent; only read in `UnimixFull`.
    pub tau: f64,
}

impl MixConfig {
    pub fn new(mode: MixMode) -> Self {
        Self {
            alpha: mode.default_alpha(),
            mode,
            tau: -1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if !self.tau.is_finite() {
            return Err(Error::config("tau must be finite"));
        }
        Ok(())
    }

    /// Class prior of the second partner.
    pub fn partner_prior(&self, prior: &ClassPrior) -> Result<ClassPrior> {
        match self.mode {
            MixMode::UnimixFull => inverse_prior(prior, self.tau),
            _ => Ok(prior.clone()),
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "Beta parameter must lie in (0, 1], got {alpha}"
        )))
    }
}

/// Draws mixing factors for one configuration.
#[derive(Debug, Clone, Copy)]
pub struct FactorSampler {
    beta: Beta<f64>,
    prior_aware: bool,
}

impl FactorSampler {
    pub fn new(alpha: f64, mode: MixMode) -> Result<Self> {
        check_alpha(alpha)?;
        let beta = Beta::new(alpha, alpha).map_err(|e| Error::domain(e.to_string()))?;
        Ok(Self {
            beta,
            prior_aware: mode != MixMode::VanillaMixup,
        })
    }

    /// Factor for a pair with class priors `pi_i`, `pi_j`. Vanilla mode ignores
    /// the priors.
    pub fn sample<R: Rng + ?Sized>(&self, pi_i: f64, pi_j: f64, rng: &mut R) -> f64 {
        let xi = self.beta.sample(rng);
        if self.prior_aware {
            shift_factor(xi, pi_j / (pi_i + pi_j))
        } else {
            xi
        }
    }
}

/// Cyclic shift of `xi` by `center` on the unit interval: the Beta(α,α)
/// density moved so that its mass near 0 and 1 gathers around `center`.
pub fn shift_factor(xi: f64, center: f64) -> f64 {
    let s = xi + center;
    if s > 1.0 {
        s - 1.0
    } else {
        s
    }
}

pub fn sample_beta<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> Result<f64> {
    Ok(FactorSampler::new(alpha, MixMode::VanillaMixup)?.sample(0.5, 0.5, rng))
}

/// Prior-aware mixing factor: `frac(ξ + π_j/(π_i + π_j))` with
/// `ξ ~ Beta(α, α)`. Its most likely values sit near `π_j/(π_i + π_j)`, so a
/// head/tail pair is usually weighted toward the tail partner.
pub fn unimix_factor<R: Rng + ?Sized>(
    pi_i: f64,
    pi_j: f64,
    alpha: f64,
    rng: &mut R,
) -> Result<f64> {
    if !(pi_i > 0.0 && pi_j > 0.0) {
        return Err(Error::domain(format!(
            "class priors must be positive, got {pi_i} and {pi_j}"
        )));
    }
    Ok(FactorSampler::new(alpha, MixMode::UnimixFull)?.sample(pi_i, pi_j, rng))
}

/// A virtual sample `ξ·x_i + (1−ξ)·x_j` with soft label weights `(ξ, 1−ξ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedSample {
    pub x_mixed: Vec<f64>,
    pub y_i: usize,
    pub y_j: usize,
    pub xi: f64,
}

impl MixedSample {
    /// The class this sample counts toward: `y_i` iff `ξ ≥ 0.5`.
    pub fn xi_aug_class(&self) -> usize {
        xi_aug_class(self.y_i, self.y_j, self.xi)
    }
}

pub fn xi_aug_class(y_i: usize, y_j: usize, xi: f64) -> usize {
    if xi >= 0.5 {
        y_i
    } else {
        y_j
    }
}

/// Write `xi·a + (1−xi)·b` into `out`.
pub fn mix_into(a: &[f64], b: &[f64], xi: f64, out: &mut [f64]) {
    for ((o, &u), &v) in out.iter_mut().zip(a).zip(b) {
        *o = xi * u + (1.0 - xi) * v;
    }
}

pub fn mix_pair(first: (&[f64], usize), second: (&[f64], usize), xi: f64) -> Result<MixedSample> {
    let (x_i, y_i) = first;
    let (x_j, y_j) = second;
    if x_i.len() != x_j.len() {
        return Err(Error::DimensionMismatch {
            expected: x_i.len(),
            got: x_j.len(),
        });
    }
    if !(0.0..=1.0).contains(&xi) {
        return Err(Error::domain(format!("mixing factor {xi} outside [0, 1]")));
    }
    let mut x_mixed = vec![0.0; x_i.len()];
    mix_into(x_i, x_j, xi, &mut x_mixed);
    Ok(MixedSample {
        x_mixed,
        y_i,
        y_j,
        xi,
    })
}

/// Empirical class distribution of ξ-Aug samples over `trials` mixed pairs.
///
/// The first partner's class is drawn from `prior`; the second from `prior`
/// (vanilla and factor-only) or from the inverse prior (full pipeline).
pub fn mc_xi_aug_histogram(
    prior: &ClassPrior,
    config: &MixConfig,
    trials: u64,
    seed: u64,
) -> Result<ClassPrior> {
    mc_xi_aug_histogram_with(prior, config, trials, seed, Exec::default())
}

pub fn mc_xi_aug_histogram_with(
    prior: &ClassPrior,
    config: &MixConfig,
    trials: u64,
    seed: u64,
    exec: Exec,
) -> Result<ClassPrior> {
    let counts = mc_xi_aug_counts(prior, config, trials, seed, exec)?;
    let w: Vec<f64> = counts.iter().map(|&n| n as f64).collect();
    ClassPrior::from_weights(&w)
}

/// Raw ξ-Aug class counts, merged over [`MC_STREAMS`] streams.
pub fn mc_xi_aug_counts(
    prior: &ClassPrior,
    config: &MixConfig,
    trials: u64,
    seed: u64,
    exec: Exec,
) -> Result<Vec<u64>> {
    if trials == 0 {
        return Err(Error::domain("need at least one trial"));
    }
    config.validate()?;
    let partner = config.partner_prior(prior)?;
    let first = rand::distr::weighted::WeightedIndex::new(prior.probs())
        .map_err(|e| Error::domain(e.to_string()))?;
    let second = rand::distr::weighted::WeightedIndex::new(partner.probs())
        .map_err(|e| Error::domain(e.to_string()))?;
    let factor = FactorSampler::new(config.alpha, config.mode)?;
    let probs = prior.probs();
    let c = prior.num_classes();
    let chunks = split_even(trials, MC_STREAMS);

    let partials = exec.map(MC_STREAMS, |s| {
        let mut rng = rng::stream(seed, rng::MIX, s as u64);
        let mut hist = vec![0u64; c];
        for _ in 0..chunks[s] {
            let y_i = first.sample(&mut rng);
            let y_j = second.sample(&mut rng);
            let xi = factor.sample(probs[y_i], probs[y_j], &mut rng);
            hist[xi_aug_class(y_i, y_j, xi)] += 1;
        }
        hist
    });
    let mut total = vec![0u64; c];
    for h in partials {
        for (t, n) in total.iter_mut().zip(h) {
            *t += n;
        }
    }
    Ok(total)
}
