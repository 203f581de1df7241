//! Coupled dynamical system analysis for self-labeling quantification.

mod field;
mod quad;
mod root;
mod system;

pub use field::{FieldKind, ParseFieldError, ScalarField, DEFAULT_DOMAIN};
pub use quad::{adaptive_simpson, QuadError};
pub use root::{bisect, bracket_monotone, RootError};
pub use system::{
    closed_form_example, CoupledSystem, DsError, ErrorFactors, FlowPoint, Inverter, Method,
    Potential, SamplingBounds, SweepRow,
};
