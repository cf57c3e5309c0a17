//! Seed-reproducible agent-based model of migrant intake, Schelling-style
//! spatial sorting, tolerance-mediated interaction and the acculturation
//! orientations that emerge from it, with a parallel parameter-sweep harness
//! and a regression pipeline for effect sizes.
//!
//! The model is generic over the real scalar used for conservatism and
//! statistics (`f32` or `f64`); the aliases below fix it to `f64`.

pub mod config;
pub mod dynamics;
pub mod error;
pub mod io;
pub mod metrics;
pub mod params;
pub mod rng;
pub mod scalar;
pub mod stats;
pub mod sweep;
pub mod world;

pub use dynamics::{InteractionEvent as GenericInteractionEvent, Outcome};
pub use error::{Error, Result};
pub use metrics::{Substratum, TickObservables as GenericTickObservables};
pub use params::{IntakePolicy, SimParams};
pub use scalar::Scalar;
pub use sweep::{SweepResult as GenericSweepResult, SweepSpec};
pub use world::{Attitude, Ethnicity};

pub type Agent = world::Agent<f64>;
pub type World = world::World<f64>;
pub type Simulation = dynamics::Simulation<f64>;
pub type InteractionEvent = dynamics::InteractionEvent<f64>;
pub type TickObservables = metrics::TickObservables<f64>;
pub type SweepResult = sweep::SweepResult<f64>;
pub type RegressionFit = stats::RegressionFit<f64>;
pub type DesignMatrix = stats::DesignMatrix<f64>;

pub type World32 = world::World<f32>;
pub type Simulation32 = dynamics::Simulation<f32>;
