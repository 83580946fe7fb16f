//! Over-the-air federated learning across multiple interfering cells.
//!
//! The crate is organised bottom-up:
//!
//! * [`netchan`]: BS/device geometry and per-round Rician channel draws.
//! * [`airphy`]: normalization, downlink dissemination, uplink AirComp
//!   aggregation and the global model update.
//! * [`gapmodel`]: closed-form expected transmission errors, error-induced
//!   gaps, profiling vectors, Pareto sweeps and the convergence-bound check.
//! * [`conicfeas`]: second-order cone feasibility (barrier phase-I) and the
//!   bisection driver.
//! * [`coopt`]: cooperative downlink/uplink power control, the optimal
//!   receive normalizer and baseline schemes.
//! * [`fedlearn`]: softmax regression, dataset sharding and round
//!   orchestration.
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the scalar for the common double-precision use.

pub mod airphy;
pub mod conicfeas;
pub mod coopt;
pub mod error;
pub mod fedlearn;
pub mod gapmodel;
pub mod netchan;
pub mod rng;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Point64 = netchan::Point<f64>;
pub type Topology64 = netchan::Topology<f64>;
pub type ChannelParams64 = netchan::ChannelParams<f64>;
pub type ChannelSet64 = netchan::ChannelSet<f64>;
pub type ChannelSet32 = netchan::ChannelSet<f32>;
pub type NormalizedVector64 = airphy::NormalizedVector<f64>;
pub type GapProfile64 = gapmodel::GapProfile<f64>;
pub type GapTerms64 = gapmodel::GapTerms<f64>;
pub type SocFeasibilityProblem64 = conicfeas::SocFeasibilityProblem<f64>;
pub type SocFeasibilityProblem32 = conicfeas::SocFeasibilityProblem<f32>;
pub type PowerPlan64 = coopt::PowerPlan<f64>;
pub type LrModel64 = fedlearn::LrModel<f64>;
pub type Dataset64 = fedlearn::Dataset<f64>;
pub type FlState64 = fedlearn::FlState<f64>;
pub type LrModel32 = fedlearn::LrModel<f32>;
