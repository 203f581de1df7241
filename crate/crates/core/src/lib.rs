//! Core library for the interactive-causality self-labeling laboratory.
//!
//! The crate is organized around the main moving parts of a self-labeling
//! (SLB) system:
//!
//! * [`ds`] — the coupled dynamical system used to analyze SLB in closed
//!   form: potentials, flow integration, interaction-time inference, the
//!   learned-mapping variants (SLB/TRAD/FS) and their error-factor analysis.
//! * [`causal`] — causal DAGs, the four basic three-node structures, and the
//!   interaction-time calculus that compiles a graph into a self-labeling
//!   plan.
//! * [`learners`] — from-scratch task and interaction-time models: an MLP
//!   classifier trained with decoupled weight decay, gradient boosted
//!   regression trees, and a k-NN fallback.
//! * [`sim`] — a deterministic two-ball drop simulation producing cause and
//!   effect streams with ground-truth interaction times.
//! * [`pipeline`] — the self-labeling engine: effect event detection,
//!   cause-window sampling, noisy self-labeled dataset assembly, incremental
//!   retraining, and nested k-fold evaluation.
//! * [`cost`] — the post-deployment cost index and the SLB-vs-FS
//!   cost-efficiency condition.

pub mod causal;
pub mod cost;
pub mod ds;
pub mod learners;
pub mod pipeline;
pub mod seed;
pub mod sim;

pub use causal::{CausalGraph, SelfLabelingPlan, TimeLaw};
pub use ds::{CoupledSystem, ErrorFactors, SamplingBounds, ScalarField};
pub use learners::{Classifier, MlpConfig, Regressor};
pub use sim::{EpisodeRecord, SimConfig};
