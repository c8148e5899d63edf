//! Allocation of a weekly budget of pooled tests across population
//! categories.
//!
//! The crate evaluates testing strategies with closed-form objectives
//! ([`model`]), computes exact and bucketed Pareto frontiers ([`frontier`]),
//! estimates scenario parameters from interaction and test records
//! ([`estimation`]), checks strategies against a network SIRQ simulation
//! ([`sim`]) and serves all of it over HTTP ([`service`]).

pub mod error;
pub mod estimation;
pub mod frontier;
pub mod model;
pub mod plot;
pub mod presets;
pub mod service;
pub mod sim;

pub use error::{FrontierError, ModelError};
pub use frontier::{
    bucketed_frontier, bucketize, dominates, enumerate_strategies, filter_by_thresholds,
    pareto_frontier, target_count_buckets, BucketSpec, EvaluatedStrategy, FrontierResult,
    TargetParams,
};
pub use model::{evaluate, is_feasible, Category, ExposureMatrix, ObjectiveVector, Scenario, Strategy};
