//! Causal DAGs and the interaction-time calculus.
//!
//! Graphs carry a per-edge [`TimeLaw`] (an interval around a mean causal
//! time lag). Chains compose by summation, forks by maximum, and
//! [`CausalGraph::build_labeling_plan`] disentangles an arbitrary DAG into
//! those pieces to wire up the interaction-time models of a self-labeling
//! deployment.

mod graph;
mod plan;
mod time;

pub use graph::{CausalEdge, CausalGraph, CausalNode, StateKind, Structure};
pub use plan::{ItmBinding, PathNote, SelfLabelingPlan, TimeExpression};
pub use time::{chain_time, fork_time, TimeLaw};

/// Errors from graph validation and plan construction.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CausalError {
    #[error("duplicate node id {0:?}")]
    DuplicateNode(String),
    #[error("edge references unknown node {0:?}")]
    UnknownNode(String),
    #[error("graph contains a directed cycle")]
    Cyclic,
    #[error("time law must satisfy 0 <= low <= mean <= high (got low {low}, mean {mean}, high {high})")]
    InvalidTimeLaw { low: f64, mean: f64, high: f64 },
    #[error("fork combination requires at least one time law")]
    EmptyFork,
    #[error("node {0:?} is not in the graph")]
    NodeNotFound(String),
    #[error("the three nodes do not induce a connected subgraph")]
    Disconnected,
    #[error("effect {0:?} is not reachable from cause {1:?}")]
    Unreachable(String, String),
    #[error("effect node {0:?} is not observable")]
    UnobservableEffect(String),
    #[error("node {0:?} must be observed to disambiguate causal paths but is not observable")]
    ObserverNotObservable(String),
}
