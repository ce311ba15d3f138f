//! Closed queueing networks with one multi-class single-server station and
//! a set of infinite-server nodes.
//!
//! The product-form equilibrium is computed by direct enumeration of the
//! state space. Brute-force generators for random-order and first-come
//! service at the single-server station provide an independent check, and
//! the Erlang-stage expansion checks insensitivity to the node service law.

mod equilibrium;
mod erlang;
mod generator;
mod network;
mod traffic;
mod verify;

pub use equilibrium::{
    aggregate_open_closed, composition_count, equilibrium_pmf, equilibrium_pmf_capped, limit_blocking,
    open_closed_closed_form, ordered_product_form, OrderedState, OrderedStateDist, StateDist,
    DEFAULT_STATE_CAP,
};
pub use erlang::{erlang_expand, insensitivity_check, InsensitivityReport, StageDeviation};
pub use generator::{
    build_generator_fcfs, build_generator_ros, ordered_support, stationary_from_generator, Generator,
    Stationary, Transition, TransitionFamily, DENSE_SOLVE_CAP,
};
pub use network::{baseline_network, extension_network, NetworkSpec, Station};
pub use traffic::{solve_traffic, Normalization, ThroughputSolution};
pub use verify::{
    cross_check, generator_suite, insensitivity_suite, stage_check, OracleCheck, OracleReport, STAGE_COUNTS,
};

use thiserror::Error;

use crate::analytic::AnalyticError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProductFormError {
    #[error("invalid network: {0}")]
    Invalid(String),
    #[error("routing is not a single chain: {0}")]
    Reducible(String),
    #[error("state space of {estimate} states exceeds the cap of {cap}")]
    TooLarge { estimate: f64, cap: usize },
    #[error("linear system is singular or ill-conditioned (residual {residual:e})")]
    Singular { residual: f64 },
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
}
