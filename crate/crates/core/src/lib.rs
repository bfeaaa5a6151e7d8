//! Contamination dynamics of a growing knowledge space.
//!
//! A knowledge space holds `c` concepts, `c_p` of which are parasitic. New
//! concepts are derived from `B` randomly chosen base concepts and turn
//! parasitic either through an error in their own derivation or by including a
//! parasitic base. Two cleanup mechanisms remove parasites: pragmatic reduction
//! (sampling against experience) and competing reduction (resolving
//! contradictions between parasitic and accurate concepts).
//!
//! * [`model`] evaluates the closed-form probability and rate laws.
//! * [`dynamics`] evolves a state deterministically, in the concept domain or in time.
//! * [`stability`] locates the stationary contamination reached from a clean or a
//!   saturated start, and sweeps it over the cleanup plane.
//! * [`montecarlo`] simulates the underlying stochastic process with reproducible seeding.
//!
//! The deterministic modules are generic over the floating point type; the
//! aliases below fix it to `f64` (or `f32`).

pub mod dynamics;
pub mod error;
pub mod model;
pub mod montecarlo;
pub mod scalar;
pub mod stability;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type ModelParams = model::ModelParams<f64>;
pub type KnowledgeState = model::KnowledgeState<f64>;
pub type PointwiseRates = model::PointwiseRates<f64>;
pub type Trajectory = dynamics::Trajectory<f64>;
pub type Sample = dynamics::Sample<f64>;
pub type StepControl = dynamics::StepControl<f64>;
pub type FixedPointResult = stability::FixedPointResult<f64>;
pub type Hysteresis = stability::Hysteresis<f64>;
pub type ScanControl = stability::ScanControl<f64>;
pub type SweepGrid = stability::SweepGrid<f64>;

pub type ModelParamsF32 = model::ModelParams<f32>;
pub type KnowledgeStateF32 = model::KnowledgeState<f32>;
pub type TrajectoryF32 = dynamics::Trajectory<f32>;
pub type FixedPointResultF32 = stability::FixedPointResult<f32>;
