//! Long-tailed classification toolkit: exponential class priors and the
//! closed-form class densities of mixed samples, a prior-aware mixing factor
//! with an inverse class sampler, prior-compensated and comparison losses, a
//! small MLP with a two-phase trainer, calibration metrics, and a
//! two-disk decision-boundary study.

// `!(x > 0.0)` style checks are deliberate: NaN must fail them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod circles;
pub mod dataset;
pub mod error;
pub mod exec;
pub mod losses;
pub mod mixing;
pub mod model;
pub mod rng;
pub mod sampling;
pub mod theory;
pub mod train;

pub use calibration::{CalibrationReport, EvalBatchStats, MetricOptions};
pub use dataset::{Dataset, GaussianSpec, TwoCircleSpec};
pub use error::{Error, Result};
pub use exec::Exec;
pub use losses::{LossKind, LossParams, LossSpec, TargetPrior};
pub use mixing::{MixConfig, MixMode};
pub use model::Mlp;
pub use theory::{ClassPrior, LtSpec};
pub use train::{train_two_phase, TrainConfig, TrainOutput};
