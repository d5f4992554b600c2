//! Estimation of a finite-population proportion (a binary attribute) from a
//! simple random sample drawn without replacement, using a correlated
//! auxiliary variable whose population mean is known.
//!
//! The crate provides the classical competitors (sample proportion, ratio,
//! regression-type and two-weight exponential estimators), a generalized
//! two-weight class with its named members, first-order bias/MSE with optimal
//! weights, and two independent checks of that theory: exact enumeration of
//! all samples and seeded Monte Carlo replication.
//!
//! The numeric modules are generic over [`Real`] (`f32` or `f64`); the
//! aliases below fix `f64`.

// `!(x > 0)` is used on purpose so NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimators;
pub mod moments;
pub mod montecarlo;
pub mod report;
pub mod scalar;
pub mod synth;
pub mod theory;

pub use error::{Error, Result};
pub use estimators::{
    eval_adaptive, eval_estimate, Family, Known, NShape, NsShape, Preset, Weights,
};
pub use moments::{compute_moments, point_biserial, sampling_factor};
pub use montecarlo::{draw_srswor, enumerate_exact, simulate, DEFAULT_ENUMERATION_CAP};
pub use scalar::Real;
pub use synth::synthesize;

pub type Population = moments::Population<f64>;
pub type Sample = moments::Sample<f64>;
pub type Design = moments::Design<f64>;
pub type Moments = moments::PopulationMoments<f64>;
pub type EstimatorSpec = estimators::EstimatorSpec<f64>;
pub type TheoryResult = theory::TheoryResult<f64>;
pub type QuadraticMseForm = theory::QuadraticMseForm<f64>;
pub type ExactResult = montecarlo::ExactResult<f64>;
pub type McResult = montecarlo::McResult<f64>;
pub type MomentTargets = synth::MomentTargets<f64>;
