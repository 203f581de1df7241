//! Named scalar fields over an open interval.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Default working domain; the lower edge stays away from the 1/x
/// singularity of the identity field's reciprocal.
pub const DEFAULT_DOMAIN: (f64, f64) = (1e-6, 1e6);

/// Built-in field shapes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldKind {
    Identity,
    Zero,
    Constant(f64),
    /// `a * x + b`
    Linear { a: f64, b: f64 },
}

/// A scalar map `Real -> Real` restricted to an open interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ScalarField {
    pub kind: FieldKind,
    /// Open interval `(lo, hi)` on which the field is defined.
    pub domain: (f64, f64),
}

impl ScalarField {
    pub fn new(kind: FieldKind, domain: (f64, f64)) -> Self {
        Self { kind, domain }
    }

    pub fn identity() -> Self {
        Self::new(FieldKind::Identity, DEFAULT_DOMAIN)
    }

    pub fn zero() -> Self {
        Self::new(FieldKind::Zero, DEFAULT_DOMAIN)
    }

    pub fn constant(c: f64) -> Self {
        Self::new(FieldKind::Constant(c), DEFAULT_DOMAIN)
    }

    pub fn linear(a: f64, b: f64) -> Self {
        Self::new(FieldKind::Linear { a, b }, DEFAULT_DOMAIN)
    }

    pub fn with_domain(mut self, lo: f64, hi: f64) -> Self {
        self.domain = (lo, hi);
        self
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self.kind {
            FieldKind::Identity => x,
            FieldKind::Zero => 0.0,
            FieldKind::Constant(c) => c,
            FieldKind::Linear { a, b } => a * x + b,
        }
    }

    /// Open-interval membership.
    pub fn contains(&self, x: f64) -> bool {
        x > self.domain.0 && x < self.domain.1
    }
}

impl fmt::Display for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            FieldKind::Identity => write!(f, "identity"),
            FieldKind::Zero => write!(f, "zero"),
            FieldKind::Constant(c) => write!(f, "constant:{c}"),
            FieldKind::Linear { a, b } => write!(f, "linear:{a},{b}"),
        }
    }
}

#[derive(Debug, Clone, thiserror::Error)]
#[error("unknown field spec {0:?}; expected identity | zero | constant:c | linear:a,b")]
pub struct ParseFieldError(String);

impl FromStr for ScalarField {
    type Err = ParseFieldError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ParseFieldError(s.to_string());
        match s.trim() {
            "identity" => Ok(Self::identity()),
            "zero" => Ok(Self::zero()),
            other => {
                if let Some(c) = other.strip_prefix("constant:") {
                    let c: f64 = c.trim().parse().map_err(|_| bad())?;
                    Ok(Self::constant(c))
                } else if let Some(ab) = other.strip_prefix("linear:") {
                    let (a, b) = ab.split_once(',').ok_or_else(bad)?;
                    let a: f64 = a.trim().parse().map_err(|_| bad())?;
                    let b: f64 = b.trim().parse().map_err(|_| bad())?;
                    Ok(Self::linear(a, b))
                } else {
                    Err(bad())
                }
            }
        }
    }
}

impl TryFrom<String> for ScalarField {
    type Error = ParseFieldError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<ScalarField> for String {
    fn from(f: ScalarField) -> String {
        f.to_string()
    }
}
