//! Exponential long-tailed label model and the closed-form class densities of
//! mixed ("ξ-Aug") samples under vanilla mixup, the prior-aware mixing factor,
//! and the full pipeline with the inverse sampler.
//!
//! Classes are indexed `1..=C` here (head first). The continuous densities are
//! defined on `y ∈ [1, C]`; the discrete prior lives on the integer points.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on the sum of a probability vector.
pub const PRIOR_SUM_TOL: f64 = 1e-12;

/// `λ = ln ρ / (C − 1)`.
pub fn lambda_from_rho(rho: f64, num_classes: usize) -> Result<f64> {
    if !(rho >= 1.0) || !rho.is_finite() {
        return Err(Error::domain(format!(
            "imbalance factor must be >= 1, got {rho}"
        )));
    }
    if num_classes < 2 {
        return Err(Error::domain(format!(
            "need at least 2 classes, got {num_classes}"
        )));
    }
    Ok(rho.ln() / (num_classes - 1) as f64)
}

/// The exponential long-tailed model: `C` classes, imbalance factor `ρ`, and
/// the sampler exponent `τ` used by the inverse sampler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LtSpec {
    num_classes: usize,
    rho: f64,
    lambda: f64,
    tau: f64,
}

impl LtSpec {
    pub fn new(num_classes: usize, rho: f64) -> Result<Self> {
        let lambda = lambda_from_rho(rho, num_classes)?;
        Ok(Self {
            num_classes,
            rho,
            lambda,
            tau: -1.0,
        })
    }

    pub fn with_tau(mut self, tau: f64) -> Result<Self> {
        if !tau.is_finite() {
            return Err(Error::domain("tau must be finite"));
        }
        self.tau = tau;
        Ok(self)
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    fn check_y(&self, y: f64) -> Result<()> {
        let c = self.num_classes as f64;
        if (1.0..=c).contains(&y) {
            Ok(())
        } else {
            Err(Error::domain(format!("y = {y} outside [1, {c}]")))
        }
    }
}

/// A normalized per-class probability vector (index 0 is the head class).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ClassPrior(Vec<f64>);

impl ClassPrior {
    /// Validates nonnegativity and unit sum.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::domain("empty prior"));
        }
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::domain(format!(
                "prior entry {p} is not a probability"
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PRIOR_SUM_TOL {
            return Err(Error::domain(format!("prior sums to {sum}, not 1")));
        }
        Ok(Self(probs))
    }

    /// Normalizes nonnegative weights.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::domain("weights must have a positive finite sum"));
        }
        Self::new(weights.iter().map(|w| w / total).collect())
    }

    pub fn from_counts(counts: &[usize]) -> Result<Self> {
        let w: Vec<f64> = counts.iter().map(|&n| n as f64).collect();
        Self::from_weights(&w)
    }

    pub fn uniform(num_classes: usize) -> Self {
        let p = 1.0 / num_classes as f64;
        Self(vec![p; num_classes])
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn num_classes(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, class: usize) -> f64 {
        self.0[class]
    }

    /// L1 distance to another prior of the same length.
    pub fn l1_distance(&self, other: &ClassPrior) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }
}

impl TryFrom<Vec<f64>> for ClassPrior {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        ClassPrior::new(v)
    }
}

impl From<ClassPrior> for Vec<f64> {
    fn from(p: ClassPrior) -> Self {
        p.0
    }
}

/// `π_i ∝ e^{−λ i}`, `i = 1..C`.
pub fn discrete_lt_prior(spec: &LtSpec) -> ClassPrior {
    let lambda = spec.lambda();
    if lambda == 0.0 {
        return ClassPrior::uniform(spec.num_classes());
    }
    // shifted by one index so the head weight is exactly 1
    let weights: Vec<f64> = (0..spec.num_classes())
        .map(|i| (-lambda * i as f64).exp())
        .collect();
    ClassPrior::from_weights(&weights).expect("exponential weights are positive")
}

// 1 - e^{-λ(C-1)} = 1 - 1/ρ, computed without cancellation.
fn tail_mass(spec: &LtSpec) -> f64 {
    -(-spec.lambda() * (spec.num_classes() - 1) as f64).exp_m1()
}

/// Continuous long-tailed density `λ/(e^{−λ} − e^{−λC}) · e^{−λy}` on `[1, C]`.
/// At `ρ = 1` this is the uniform density `1/(C − 1)`.
pub fn continuous_lt_density(y: f64, spec: &LtSpec) -> Result<f64> {
    spec.check_y(y)?;
    let lambda = spec.lambda();
    if lambda == 0.0 {
        return Ok(1.0 / (spec.num_classes() - 1) as f64);
    }
    Ok(lambda * (-lambda * (y - 1.0)).exp() / tail_mass(spec))
}

/// Class density of mixed samples under vanilla mixup with a symmetric Beta
/// factor. It coincides with the original long-tailed density.
pub fn mixup_class_density(y: f64, spec: &LtSpec) -> Result<f64> {
    continuous_lt_density(y, spec)
}

/// Class density of mixed samples under the prior-aware mixing factor with both
/// partners drawn at random:
/// `λ/(e^{−λ} − e^{−λC})² · (e^{−λ(y+1)} − e^{−2λy})`.
///
/// This is a middle-majority shape, zero at `y = 1` with a single interior peak
/// at `y = ln 2/λ + 1`. It integrates to 1/2 over `[1, C]`, not 1.
pub fn factor_only_class_density(y: f64, spec: &LtSpec) -> Result<f64> {
    spec.check_y(y)?;
    let lambda = spec.lambda();
    let c = spec.num_classes() as f64;
    if lambda == 0.0 {
        return Ok((y - 1.0) / ((c - 1.0) * (c - 1.0)));
    }
    // divide numerator and denominator by e^{-2λ}
    let t = y - 1.0;
    let d = tail_mass(spec);
    Ok(lambda * ((-lambda * t).exp() - (-2.0 * lambda * t).exp()) / (d * d))
}

/// Class density of mixed samples under the full pipeline: prior-aware factor,
/// first partner random, second partner from the inverse sampler with exponent
/// `τ = spec.tau()`:
/// `λ/((e^{−λ} − e^{−λC})(e^{−λτC} − e^{−λτ})) · (e^{−λy(τ+1)} − e^{−λ(τ+y)})`.
///
/// Undefined at `τ = 0`.
pub fn full_pipeline_class_density(y: f64, spec: &LtSpec) -> Result<f64> {
    spec.check_y(y)?;
    let tau = spec.tau();
    if tau == 0.0 {
        return Err(Error::domain("closed form is singular at tau = 0"));
    }
    let lambda = spec.lambda();
    let c = spec.num_classes() as f64;
    if lambda == 0.0 {
        return Ok((y - 1.0) / ((c - 1.0) * (c - 1.0)));
    }
    let head = (-lambda).exp() - (-lambda * c).exp();
    let inv = (-lambda * tau * c).exp() - (-lambda * tau).exp();
    let shape = (-lambda * y * (tau + 1.0)).exp() - (-lambda * (tau + y)).exp();
    Ok(lambda / (head * inv) * shape)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    Original,
    Mixup,
    UnimixFactor,
    UnimixFull,
}

impl CurveKind {
    pub const ALL: [CurveKind; 4] = [
        CurveKind::Original,
        CurveKind::Mixup,
        CurveKind::UnimixFactor,
        CurveKind::UnimixFull,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CurveKind::Original => "original",
            CurveKind::Mixup => "mixup",
            CurveKind::UnimixFactor => "unimix_factor",
            CurveKind::UnimixFull => "unimix_full",
        }
    }

    pub fn density(self, y: f64, spec: &LtSpec) -> Result<f64> {
        match self {
            CurveKind::Original => continuous_lt_density(y, spec),
            CurveKind::Mixup => mixup_class_density(y, spec),
            CurveKind::UnimixFactor => factor_only_class_density(y, spec),
            CurveKind::UnimixFull => full_pipeline_class_density(y, spec),
        }
    }
}

/// A density sampled on a uniform grid over `[1, C]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityCurve {
    pub kind: CurveKind,
    pub points: Vec<(f64, f64)>,
}

impl DensityCurve {
    pub fn sample(kind: CurveKind, spec: &LtSpec, resolution: usize) -> Result<Self> {
        if resolution < 2 {
            return Err(Error::domain("curve resolution must be at least 2"));
        }
        let points = grid(spec.num_classes(), resolution)
            .map(|y| kind.density(y, spec).map(|d| (y, d)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { kind, points })
    }

    pub fn trapezoid_integral(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
            .sum()
    }
}

/// `resolution` evenly spaced points from 1 to C inclusive.
pub fn grid(num_classes: usize, resolution: usize) -> impl Iterator<Item = f64> {
    let span = (num_classes - 1) as f64;
    let last = (resolution - 1).max(1) as f64;
    (0..resolution).map(move |k| {
        if k + 1 == resolution {
            num_classes as f64
        } else {
            1.0 + span * k as f64 / last
        }
    })
}

/// Original, mixup, factor-only and full-pipeline curves on one grid.
pub fn emit_density_curves(spec: &LtSpec, resolution: usize) -> Result<Vec<DensityCurve>> {
    CurveKind::ALL
        .iter()
        .map(|&kind| DensityCurve::sample(kind, spec, resolution))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(c: usize, rho: f64) -> LtSpec {
        LtSpec::new(c, rho).unwrap()
    }

    #[test]
    #[allow(clippy::excessive_precision)]
    fn lambda_examples() {
        // ln(100)/99 and ln(10)/9, evaluated with mpmath at 30 digits
        assert!((lambda_from_rho(100.0, 100).unwrap() - 0.046_516_870_565_536_276).abs() < 1e-15);
        assert!((lambda_from_rho(10.0, 10).unwrap() - 0.255_842_788_110_449_52).abs() < 1e-15);
        assert_eq!(lambda_from_rho(1.0, 10).unwrap(), 0.0);
    }

    #[test]
    fn lambda_domain_errors() {
        assert!(lambda_from_rho(0.5, 10).is_err());
        assert!(lambda_from_rho(10.0, 1).is_err());
        assert!(lambda_from_rho(f64::NAN, 10).is_err());
    }

    #[test]
    fn lambda_monotone() {
        let a = lambda_from_rho(10.0, 10).unwrap();
        assert!(lambda_from_rho(20.0, 10).unwrap() > a);
        assert!(lambda_from_rho(10.0, 11).unwrap() < a);
    }

    #[test]
    fn two_class_prior() {
        let p = discrete_lt_prior(&spec(2, 4.0));
        assert!((p.get(0) - 0.8).abs() < 1e-15);
        assert!((p.get(1) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn balanced_prior_is_uniform() {
        let p = discrete_lt_prior(&spec(10, 1.0));
        assert!(p.probs().iter().all(|&x| x == 0.1));
    }

    #[test]
    fn prior_ratio_is_rho() {
        for (c, rho) in [(10, 100.0), (100, 200.0), (3, 1.5)] {
            let p = discrete_lt_prior(&spec(c, rho));
            let ratio = p.get(0) / p.get(c - 1);
            assert!((ratio - rho).abs() / rho < 1e-9, "{c} {rho}: {ratio}");
            let sum: f64 = p.probs().iter().sum();
            assert!((sum - 1.0).abs() < PRIOR_SUM_TOL);
        }
    }

    #[test]
    fn class_prior_rejects_bad_input() {
        assert!(ClassPrior::new(vec![0.5, 0.6]).is_err());
        assert!(ClassPrior::new(vec![1.5, -0.5]).is_err());
        assert!(ClassPrior::new(vec![]).is_err());
        assert!(ClassPrior::from_counts(&[0, 0]).is_err());
    }

    #[test]
    fn density_endpoint_ratio() {
        let s = spec(100, 200.0);
        let r = continuous_lt_density(1.0, &s).unwrap() / continuous_lt_density(100.0, &s).unwrap();
        assert!((r - 200.0).abs() / 200.0 < 1e-9);
    }

    #[test]
    fn density_head_value_matches_direct_form() {
        let s = spec(100, 200.0);
        let l = s.lambda();
        let direct = l * (-l).exp() / ((-l).exp() - (-l * 100.0).exp());
        let got = continuous_lt_density(1.0, &s).unwrap();
        assert!((got - direct).abs() / direct < 1e-13);
    }

    #[test]
    fn density_domain() {
        let s = spec(10, 10.0);
        assert!(continuous_lt_density(0.99, &s).is_err());
        assert!(continuous_lt_density(10.01, &s).is_err());
        let flat = spec(10, 1.0);
        assert_eq!(continuous_lt_density(3.3, &flat).unwrap(), 1.0 / 9.0);
    }

    #[test]
    fn mixup_density_decreasing() {
        let s = spec(100, 200.0);
        let c = DensityCurve::sample(CurveKind::Mixup, &s, 1000).unwrap();
        assert!(c.points.windows(2).all(|w| w[1].1 < w[0].1));
    }

    #[test]
    fn factor_only_density_zero_at_head_and_peak_location() {
        let s = spec(100, 200.0);
        assert_eq!(factor_only_class_density(1.0, &s).unwrap(), 0.0);
        let peak = 2f64.ln() / s.lambda() + 1.0;
        let curve = DensityCurve::sample(CurveKind::UnimixFactor, &s, 100_000).unwrap();
        let (argmax, _) =
            curve.points.iter().copied().fold(
                (0.0, f64::MIN),
                |best, p| if p.1 > best.1 { p } else { best },
            );
        assert!(argmax > 1.0 && argmax < 100.0);
        assert!((argmax - peak).abs() < 1e-2, "{argmax} vs {peak}");
    }

    #[test]
    fn full_pipeline_density_tau_zero_is_error() {
        let s = spec(10, 10.0).with_tau(0.0).unwrap();
        assert!(full_pipeline_class_density(2.0, &s).is_err());
    }

    #[test]
    fn full_pipeline_density_two_routes() {
        // for τ = −1 the normalizer collapses to ρ + 1/ρ − 2
        let s = spec(100, 200.0).with_tau(-1.0).unwrap();
        let l = s.lambda();
        for y in [1.0, 1.5, 17.0, 63.25, 100.0] {
            let alt = l * (1.0 - (-l * (y - 1.0)).exp()) / (200.0 + 1.0 / 200.0 - 2.0);
            let got = full_pipeline_class_density(y, &s).unwrap();
            assert!((got - alt).abs() < 1e-12, "{y}: {got} vs {alt}");
        }
    }

    #[test]
    fn curves_shape_contract() {
        let s = spec(100, 200.0).with_tau(-1.0).unwrap();
        let curves = emit_density_curves(&s, 1000).unwrap();
        assert_eq!(curves.len(), 4);
        assert!(curves.iter().all(|c| c.points.len() == 1000));
        assert_eq!(curves[0].points, curves[1].points);
        assert!(curves.iter().flat_map(|c| &c.points).all(|p| p.1 >= 0.0));
        assert_eq!(curves[0].points[0].0, 1.0);
        assert_eq!(curves[0].points[999].0, 100.0);
        assert!(emit_density_curves(&s, 1).is_err());
    }
}
