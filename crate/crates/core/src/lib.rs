//! Finite-sample valid prediction intervals for nonnegative responses.
//!
//! Regression data `(X_i, Y_i)` is mapped to an exchangeable sample through
//! a user-chosen transformation, `W_i = Y_i - h(X_i)`; order-statistic
//! intervals for `W` then shift back to intervals for `Y` whose coverage
//! holds for every sample size and every data distribution.
//!
//! - [`order_stats`]: rank formulas and order-statistic intervals
//! - [`transform`]: the expression language for `h`
//! - [`intervals`]: regression intervals, including the `[0, u]` form for claims
//! - [`conformal`]: pointwise conformal plausibility
//! - [`simulation`]: Monte Carlo coverage experiments
//! - [`data`]: CSV ingestion and the claims-data experiment

pub mod conformal;
pub mod data;
pub mod distributions;
pub mod interval;
pub mod intervals;
pub mod order_stats;
pub mod rng;
pub mod simulation;
pub mod transform;

pub use interval::PredictionInterval;
pub use intervals::{
    constrained_interval, general_interval, point_predict, residualize, unsupervised_claim_interval,
    ConstrainedInterval, RegressionSample,
};
pub use rng::SeededRng;
pub use transform::TransformExpr;
