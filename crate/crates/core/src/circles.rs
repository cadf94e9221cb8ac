//! Decision-boundary study on two disks centred at `±(x0, y0)`. A linear
//! softmax classifier is trained on balanced, imbalanced and mixed versions of
//! the data; the ideal boundary is the line through the origin orthogonal to
//! `(1, 1)`.

use serde::{Deserialize, Serialize};

use crate::dataset::{empirical_prior, gen_two_circles, Dataset, TwoCircleSpec};
use crate::error::Result;
use crate::losses::{LossKind, TargetPrior};
use crate::mixing::{mix_into, xi_aug_class, FactorSampler, MixConfig, MixMode};
use crate::rng;
use crate::sampling::ClassSampler;
use crate::train::{train_two_phase, LrSchedule, TrainConfig};

/// Weight of the origin offset in [`BoundaryResult::deviation`].
pub const OFFSET_WEIGHT: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Both disks get `n_pos` points.
    Balanced,
    Imbalanced,
    /// Imbalanced data, vanilla mixup.
    Mixup,
    /// Imbalanced data, prior-aware factor with the inverse partner sampler.
    Unimix,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [
        Scenario::Balanced,
        Scenario::Imbalanced,
        Scenario::Mixup,
        Scenario::Unimix,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Balanced => "balanced",
            Scenario::Imbalanced => "imbalanced",
            Scenario::Mixup => "mixup",
            Scenario::Unimix => "unimix",
        }
    }

    fn mix(self) -> Option<MixConfig> {
        match self {
            Scenario::Mixup => Some(MixConfig::new(MixMode::VanillaMixup)),
            Scenario::Unimix => Some(MixConfig::new(MixMode::UnimixFull)),
            _ => None,
        }
    }
}

/// Optimiser settings shared by every scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CirclesTrain {
    pub steps: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub momentum: f64,
}

impl Default for CirclesTrain {
    fn default() -> Self {
        Self {
            steps: 1500,
            batch_size: 64,
            lr: 0.05,
            momentum: 0.9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryResult {
    pub scenario: Scenario,
    /// Normal of the boundary `w·p + b = 0` (class-0 minus class-1 weights).
    pub weight: [f64; 2],
    pub bias: f64,
    /// Angle between `weight` and `(1, 1)` up to sign, in degrees, in `[0, 90]`.
    pub angle_error_deg: f64,
    /// Signed distance `b/‖w‖` of the origin from the boundary.
    pub offset: f64,
}

impl BoundaryResult {
    fn from_linear(scenario: Scenario, weight: [f64; 2], bias: f64) -> Self {
        let norm = weight[0].hypot(weight[1]);
        Self {
            scenario,
            weight,
            bias,
            angle_error_deg: (weight[0] - weight[1])
                .abs()
                .atan2((weight[0] + weight[1]).abs())
                .to_degrees(),
            offset: bias / norm,
        }
    }

    /// `angle_error_deg + 10·|offset|`.
    pub fn deviation(&self) -> f64 {
        self.angle_error_deg + OFFSET_WEIGHT * self.offset.abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CloudPoint {
    pub x: f64,
    pub y: f64,
    /// For virtual points, the class with mixing weight `≥ 0.5`.
    pub label: usize,
    pub is_virtual: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CirclesRun {
    pub boundary: BoundaryResult,
    pub points: Vec<CloudPoint>,
}

pub fn scenario_data(spec: &TwoCircleSpec, scenario: Scenario) -> Result<Dataset> {
    let spec = match scenario {
        Scenario::Balanced => TwoCircleSpec {
            n_neg: spec.n_pos,
            ..*spec
        },
        _ => *spec,
    };
    gen_two_circles(&spec)
}

/// Train the linear classifier for one scenario and collect the point cloud
/// (real points plus, for mixing scenarios, as many virtual points as real
/// ones).
pub fn run_circles(
    spec: &TwoCircleSpec,
    scenario: Scenario,
    train: &CirclesTrain,
) -> Result<CirclesRun> {
    let ds = scenario_data(spec, scenario)?;
    let mix = scenario.mix();
    let mut cfg = TrainConfig::new(
        train.steps,
        mix.unwrap_or(MixConfig::new(MixMode::VanillaMixup)),
        spec.seed,
    );
    if mix.is_none() {
        cfg.t1_steps = 0;
    }
    cfg.batch_size = train.batch_size;
    cfg.lr = LrSchedule::scaled(train.lr, train.steps);
    cfg.momentum = train.momentum;
    cfg.weight_decay = 0.0;
    cfg.loss = LossKind::Ce;
    cfg.target = TargetPrior::Balanced;
    cfg.hidden = Vec::new();
    let out = train_two_phase(&ds, &cfg)?;

    let layer = &out.params.layers[0];
    let w = &layer.weights;
    let weight = [w[0] - w[2], w[1] - w[3]];
    let boundary = BoundaryResult::from_linear(scenario, weight, layer.bias[0] - layer.bias[1]);

    let mut points: Vec<CloudPoint> = (0..ds.len())
        .map(|i| CloudPoint {
            x: ds.row(i)[0],
            y: ds.row(i)[1],
            label: ds.label(i),
            is_virtual: false,
        })
        .collect();
    if let Some(mix) = mix {
        points.extend(virtual_points(&ds, &mix, ds.len(), spec.seed)?);
    }
    Ok(CirclesRun { boundary, points })
}

/// Mixed points drawn the same way as during training, on separate streams.
pub fn virtual_points(
    ds: &Dataset,
    mix: &MixConfig,
    count: usize,
    seed: u64,
) -> Result<Vec<CloudPoint>> {
    let prior = empirical_prior(ds)?;
    let mut first = ClassSampler::seeded(ds, &prior, seed, 2)?;
    let mut second = ClassSampler::seeded(ds, &mix.partner_prior(&prior)?, seed, 3)?;
    let factor = FactorSampler::new(mix.alpha, mix.mode)?;
    let mut rng = rng::stream(seed, rng::MIX, 1);
    let pi = prior.probs();
    let mut buf = vec![0.0; ds.dims()];
    Ok((0..count)
        .map(|_| {
            let (i, j) = (first.draw(ds), second.draw(ds));
            let (y_i, y_j) = (ds.label(i), ds.label(j));
            let xi = factor.sample(pi[y_i], pi[y_j], &mut rng);
            mix_into(ds.row(i), ds.row(j), xi, &mut buf);
            CloudPoint {
                x: buf[0],
                y: buf[1],
                label: xi_aug_class(y_i, y_j, xi),
                is_virtual: true,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ideal_boundary_has_zero_deviation() {
        let b = BoundaryResult::from_linear(Scenario::Balanced, [2.0, 2.0], 0.0);
        assert!(b.angle_error_deg.abs() < 1e-6);
        assert_eq!(b.deviation(), b.angle_error_deg);
        let flipped = BoundaryResult::from_linear(Scenario::Balanced, [-1.0, -1.0], 0.0);
        assert!(flipped.angle_error_deg < 1e-6);
    }

    #[test]
    fn orthogonal_and_offset() {
        let b = BoundaryResult::from_linear(Scenario::Imbalanced, [1.0, -1.0], 2.0);
        assert!((b.angle_error_deg - 90.0).abs() < 1e-9);
        assert!((b.offset - 2.0 / 2f64.sqrt()).abs() < 1e-12);
        let axis = BoundaryResult::from_linear(Scenario::Imbalanced, [1.0, 0.0], 0.0);
        assert!((axis.angle_error_deg - 45.0).abs() < 1e-9);
    }

    #[test]
    fn balanced_scenario_doubles_negatives() {
        let spec = TwoCircleSpec::default();
        let ds = scenario_data(&spec, Scenario::Balanced).unwrap();
        assert_eq!(ds.class_counts(), &[500, 500]);
        assert_eq!(
            scenario_data(&spec, Scenario::Unimix)
                .unwrap()
                .class_counts(),
            &[500, 10]
        );
    }

    #[test]
    fn point_cloud_shape() {
        let spec = TwoCircleSpec {
            n_pos: 50,
            n_neg: 5,
            ..TwoCircleSpec::default()
        };
        let train = CirclesTrain {
            steps: 20,
            ..CirclesTrain::default()
        };
        let plain = run_circles(&spec, Scenario::Imbalanced, &train).unwrap();
        assert_eq!(plain.points.len(), 55);
        let mixed = run_circles(&spec, Scenario::Mixup, &train).unwrap();
        assert_eq!(mixed.points.iter().filter(|p| p.is_virtual).count(), 55);
        assert!((0.0..=90.0).contains(&mixed.boundary.angle_error_deg));
    }
}
