//! The coupled dynamical system and its learned-mapping analysis.
//!
//! The system couples two scalar states through
//!
//! ```text
//! x' = f(x) + d(x)        (d is the perturbation)
//! y' = y + h(x)           (h is the coupling)
//! ```
//!
//! Two potentials drive everything else: `A(x)`, the antiderivative of
//! `1/f` taken from `x_ref`, describes the unperturbed flow, and `B(x)`,
//! the antiderivative of `1/(f+d)`, the perturbed one. Learned mappings for
//! self-labeling (SLB), the traditional semi-supervised route (TRAD), and
//! full supervision (FS) are evaluated by quadrature over these potentials
//! and their inverses.

use std::cell::RefCell;

use serde::{Deserialize, Serialize};

use super::field::ScalarField;
use super::quad::{adaptive_simpson, QuadError};
use super::root::{bisect, bracket_monotone, RootError};

/// Maximum adaptive-quadrature bisection depth.
const MAX_QUAD_DEPTH: u32 = 60;
/// Maximum bisection iterations for all root searches.
const MAX_ROOT_ITER: u32 = 200;
/// Maximum bracket-expansion steps.
const MAX_EXPANSIONS: u32 = 200;

/// Errors from dynamical-system operations.
#[derive(Debug, thiserror::Error)]
pub enum DsError {
    #[error("x = {x} outside working domain ({lo}, {hi})")]
    Domain { x: f64, lo: f64, hi: f64 },
    #[error("{name} must be strictly positive on the domain; got {value} at x = {x}")]
    NonPositiveField { name: &'static str, x: f64, value: f64 },
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error("root search failed: {0}")]
    Root(#[from] RootError),
    #[error("value {v} is outside the attainable range of the potential")]
    OutOfRange { v: f64 },
    #[error("no interaction time in [0, {t_max}] produces y2 = {y2}")]
    NoInteractionTime { y2: f64, t_max: f64 },
    #[error("trajectory exited the working domain at t = {t} (x = {x})")]
    FlowExitedDomain { t: f64, x: f64 },
    #[error("error factors must be strictly positive (got xi_t = {xi_t}, xi_e = {xi_e})")]
    NonPositiveErrorFactor { xi_t: f64, xi_e: f64 },
    #[error("method {method:?} does not admit error factors; pass (1, 1)")]
    ErrorFactorsNotIdentity { method: Method },
    #[error("bound inversion failed for {bound}: {source}")]
    BoundInversion {
        bound: &'static str,
        #[source]
        source: Box<DsError>,
    },
    #[error("sweep grid must be nonempty")]
    EmptyGrid,
    #[error("inputs must be strictly positive (got {value})")]
    NonPositiveInput { value: f64 },
}

/// Multiplicative error factors for the two auxiliary models: `xi_t` scales
/// the inferred interaction time, `xi_e` the detected effect magnitude.
/// `(1, 1)` is the error-free identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorFactors {
    pub xi_t: f64,
    pub xi_e: f64,
}

impl ErrorFactors {
    pub const IDENTITY: Self = Self { xi_t: 1.0, xi_e: 1.0 };

    pub fn new(xi_t: f64, xi_e: f64) -> Self {
        Self { xi_t, xi_e }
    }

    pub fn is_identity(&self) -> bool {
        self.xi_t == 1.0 && self.xi_e == 1.0
    }

    fn validate(&self) -> Result<(), DsError> {
        if self.xi_t > 0.0 && self.xi_e > 0.0 {
            Ok(())
        } else {
            Err(DsError::NonPositiveErrorFactor { xi_t: self.xi_t, xi_e: self.xi_e })
        }
    }
}

impl Default for ErrorFactors {
    fn default() -> Self {
        Self::IDENTITY
    }
}

/// Which potential to use: `A` integrates `1/f`, `B` integrates `1/(f+d)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Potential {
    A,
    B,
}

/// Which learned mapping to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Slb,
    Trad,
    Fs,
}

/// One point of an integrated trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowPoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

/// Sampling-window analysis of the interaction-time model at error margin
/// `epsilon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingBounds {
    pub epsilon: f64,
    pub y2_fs: f64,
    pub y2_low: f64,
    pub y2_high: f64,
    pub t_if_low: f64,
    pub t_if_high: f64,
    pub t_if_nominal: f64,
    pub y2_slb_nominal: f64,
    pub within_bounds: bool,
}

/// One row of an error-factor sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub x_slb: f64,
    pub xi_t: f64,
    pub xi_e: f64,
    pub y2: f64,
}

fn default_quad_tol() -> f64 {
    1e-9
}
fn default_root_tol() -> f64 {
    1e-10
}
fn default_t_max() -> f64 {
    50.0
}

/// The `(f, d, h)` triple with its reference point and solver tolerances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledSystem {
    pub f: ScalarField,
    pub d: ScalarField,
    pub h: ScalarField,
    pub x_ref: f64,
    #[serde(default = "default_quad_tol")]
    pub quad_tol: f64,
    #[serde(default = "default_root_tol")]
    pub root_tol: f64,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
}

impl CoupledSystem {
    pub fn new(f: ScalarField, d: ScalarField, h: ScalarField, x_ref: f64) -> Result<Self, DsError> {
        let sys = Self {
            f,
            d,
            h,
            x_ref,
            quad_tol: default_quad_tol(),
            root_tol: default_root_tol(),
            t_max: default_t_max(),
        };
        sys.check_in_domain(x_ref)?;
        sys.check_positive(x_ref)?;
        Ok(sys)
    }

    /// The worked example system: `f = d = h = identity`, `x_ref = 1`.
    pub fn identity_example() -> Self {
        Self::new(
            ScalarField::identity(),
            ScalarField::identity(),
            ScalarField::identity(),
            1.0,
        )
        .expect("identity preset is valid")
    }

    /// Intersection of `f`'s and `d`'s domains.
    pub fn working_domain(&self) -> (f64, f64) {
        let lo = self.f.domain.0.max(self.d.domain.0);
        let hi = self.f.domain.1.min(self.d.domain.1);
        (lo, hi)
    }

    fn check_in_domain(&self, x: f64) -> Result<(), DsError> {
        let (lo, hi) = self.working_domain();
        if x > lo && x < hi {
            Ok(())
        } else {
            Err(DsError::Domain { x, lo, hi })
        }
    }

    fn check_positive(&self, x: f64) -> Result<(), DsError> {
        let fx = self.f.eval(x);
        if fx <= 0.0 {
            return Err(DsError::NonPositiveField { name: "f", x, value: fx });
        }
        let fdx = fx + self.d.eval(x);
        if fdx <= 0.0 {
            return Err(DsError::NonPositiveField { name: "f + d", x, value: fdx });
        }
        Ok(())
    }

    /// Reciprocal integrand of the selected potential.
    fn integrand(&self, which: Potential) -> impl Fn(f64) -> f64 + '_ {
        move |x| match which {
            Potential::A => 1.0 / self.f.eval(x),
            Potential::B => 1.0 / (self.f.eval(x) + self.d.eval(x)),
        }
    }

    /// `A(x)` or `B(x)`: the definite integral of the reciprocal field from
    /// `x_ref` to `x`. Strictly increasing in `x`.
    pub fn potential(&self, which: Potential, x: f64) -> Result<f64, DsError> {
        self.check_in_domain(x)?;
        self.check_positive(x)?;
        self.check_positive(0.5 * (x + self.x_ref))?;
        let g = self.integrand(which);
        Ok(adaptive_simpson(&g, self.x_ref, x, self.quad_tol, MAX_QUAD_DEPTH)?)
    }

    /// Invert the selected potential: find `x` with
    /// `|potential(x) - v| <= root_tol` (bracketing bisection after
    /// geometric bracket expansion from `x_ref`).
    pub fn invert_potential(&self, which: Potential, v: f64) -> Result<f64, DsError> {
        self.inverter(which).invert(v)
    }

    /// A stateful inverter that reuses its last solution as the next
    /// bracket anchor; much cheaper when successive targets are close.
    pub fn inverter(&self, which: Potential) -> Inverter<'_> {
        Inverter { sys: self, which, anchor_x: self.x_ref, anchor_v: 0.0 }
    }

    /// Integrate the coupled flow with classical RK4 from `(x1, y1)` over
    /// `[0, t_end]` at step `dt` (final step shortened to land on `t_end`).
    pub fn simulate_flow(
        &self,
        x1: f64,
        y1: f64,
        t_end: f64,
        dt: f64,
    ) -> Result<Vec<FlowPoint>, DsError> {
        assert!(dt > 0.0, "dt must be positive");
        self.check_in_domain(x1)?;
        let xdot = |x: f64, t: f64| -> Result<f64, DsError> {
            self.check_in_domain(x).map_err(|_| DsError::FlowExitedDomain { t, x })?;
            Ok(self.f.eval(x) + self.d.eval(x))
        };
        let ydot = |x: f64, y: f64| y + self.h.eval(x);

        let mut out = vec![FlowPoint { t: 0.0, x: x1, y: y1 }];
        let mut t = 0.0;
        let mut x = x1;
        let mut y = y1;
        while t < t_end - 1e-15 * t_end.max(1.0) {
            let step = dt.min(t_end - t);
            let k1x = xdot(x, t)?;
            let k1y = ydot(x, y);
            let k2x = xdot(x + 0.5 * step * k1x, t)?;
            let k2y = ydot(x + 0.5 * step * k1x, y + 0.5 * step * k1y);
            let k3x = xdot(x + 0.5 * step * k2x, t)?;
            let k3y = ydot(x + 0.5 * step * k2x, y + 0.5 * step * k2y);
            let k4x = xdot(x + step * k3x, t)?;
            let k4y = ydot(x + step * k3x, y + step * k3y);
            x += step / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
            y += step / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
            t += step;
            xdot(x, t)?;
            out.push(FlowPoint { t, x, y });
        }
        Ok(out)
    }

    /// `∫_0^t e^{-τ} h(P⁻¹(τ + offset)) dτ` for the selected potential `P`.
    fn weighted_coupling_integral(
        &self,
        which: Potential,
        t: f64,
        offset: f64,
    ) -> Result<f64, DsError> {
        if t == 0.0 {
            return Ok(0.0);
        }
        let inv = RefCell::new(self.inverter(which));
        let err: RefCell<Option<DsError>> = RefCell::new(None);
        let integrand = |tau: f64| -> f64 {
            match inv.borrow_mut().invert(tau + offset) {
                Ok(x) => (-tau).exp() * self.h.eval(x),
                Err(e) => {
                    err.borrow_mut().get_or_insert(e);
                    f64::NAN
                }
            }
        };
        let result = adaptive_simpson(&integrand, 0.0, t, self.quad_tol, MAX_QUAD_DEPTH);
        if let Some(e) = err.into_inner() {
            return Err(e);
        }
        Ok(result?)
    }

    /// Effect value after interaction time `t` under the unperturbed
    /// dynamics, starting the effect at `y1` with the cause ending at `x2`.
    pub fn effect_from_time(&self, t: f64, x2: f64, y1: f64) -> Result<f64, DsError> {
        let a_x2 = self.potential(Potential::A, x2)?;
        let integral = self.weighted_coupling_integral(Potential::A, t, a_x2 - t)?;
        Ok(t.exp() * (integral + y1))
    }

    /// Infer the interaction time `t_if >= 0` that maps `y1` to `y2` under
    /// the unperturbed dynamics ending at `x2`. Zero iff `y2 == y1`.
    pub fn infer_interaction_time(&self, x2: f64, y1: f64, y2: f64) -> Result<f64, DsError> {
        if (y2 - y1).abs() <= self.root_tol {
            return Ok(0.0);
        }
        let err: RefCell<Option<DsError>> = RefCell::new(None);
        let g = |t: f64| -> f64 {
            match self.effect_from_time(t, x2, y1) {
                Ok(v) => v - y2,
                Err(e) => {
                    err.borrow_mut().get_or_insert(e);
                    f64::NAN
                }
            }
        };
        let g0 = y1 - y2;
        // Expand the upper end geometrically until the objective changes sign.
        let mut hi = 1e-3;
        let mut lo = 0.0;
        let mut bracketed = false;
        while hi <= self.t_max {
            let ghi = g(hi);
            if let Some(e) = err.borrow_mut().take() {
                return Err(e);
            }
            if ghi == 0.0 {
                return Ok(hi);
            }
            if ghi.signum() != g0.signum() {
                bracketed = true;
                break;
            }
            lo = hi;
            hi *= 2.0;
        }
        if !bracketed {
            let ghi = g(self.t_max);
            if let Some(e) = err.borrow_mut().take() {
                return Err(e);
            }
            if ghi.signum() != g0.signum() {
                lo = lo.min(self.t_max);
                hi = self.t_max;
            } else {
                return Err(DsError::NoInteractionTime { y2, t_max: self.t_max });
            }
        }
        let root = bisect(&g, lo, hi.min(self.t_max), self.root_tol, MAX_ROOT_ITER);
        if let Some(e) = err.into_inner() {
            return Err(e);
        }
        Ok(root?)
    }

    /// Evaluate a learned mapping by quadrature and potential inversion.
    ///
    /// * `Slb`: `x_in` is the self-labeled cause `x_slb`; error factors
    ///   scale the inferred time (`xi_t`) and the detected effect (`xi_e`).
    /// * `Trad` / `Fs`: `x_in` is the true initial cause `x1`; error
    ///   factors must be `(1, 1)`.
    pub fn y2_learned(
        &self,
        method: Method,
        x_in: f64,
        x2: f64,
        y1: f64,
        errors: ErrorFactors,
    ) -> Result<f64, DsError> {
        errors.validate()?;
        if method != Method::Slb && !errors.is_identity() {
            return Err(DsError::ErrorFactorsNotIdentity { method });
        }
        match method {
            Method::Slb => {
                let t = (self.potential(Potential::B, x2)? - self.potential(Potential::B, x_in)?)
                    / errors.xi_t;
                let a_x2 = self.potential(Potential::A, x2)?;
                let integral = self.weighted_coupling_integral(Potential::A, t, a_x2 - t)?;
                Ok(t.exp() * (integral + y1) / errors.xi_e)
            }
            Method::Trad => {
                let a_x1 = self.potential(Potential::A, x_in)?;
                let t = self.potential(Potential::A, x2)? - a_x1;
                let integral = self.weighted_coupling_integral(Potential::A, t, a_x1)?;
                Ok(t.exp() * (integral + y1))
            }
            Method::Fs => {
                let b_x1 = self.potential(Potential::B, x_in)?;
                let t = self.potential(Potential::B, x2)? - b_x1;
                let integral = self.weighted_coupling_integral(Potential::B, t, b_x1)?;
                Ok(t.exp() * (integral + y1))
            }
        }
    }

    /// Derivative of the error-imposed SLB mapping with respect to `x_slb`.
    pub fn dy2slb_dxslb(
        &self,
        x_slb: f64,
        x2: f64,
        y1: f64,
        xi_t: f64,
    ) -> Result<f64, DsError> {
        ErrorFactors::new(xi_t, 1.0).validate()?;
        let t = (self.potential(Potential::B, x2)? - self.potential(Potential::B, x_slb)?) / xi_t;
        let a_x2 = self.potential(Potential::A, x2)?;
        let x_at = self.invert_potential(Potential::A, a_x2 - t)?;
        let b_prime = 1.0 / (self.f.eval(x_slb) + self.d.eval(x_slb));
        Ok(-b_prime / xi_t * t.exp() * (y1 + self.h.eval(x_at)))
    }

    /// Sampling-window analysis: acceptable effect band at margin `epsilon`
    /// around the fully supervised value, the interaction-time bounds that
    /// band induces, and whether the nominal inference falls inside.
    pub fn itm_sampling_bounds(
        &self,
        x1: f64,
        x2: f64,
        y1: f64,
        epsilon: f64,
    ) -> Result<SamplingBounds, DsError> {
        assert!(epsilon >= 0.0, "epsilon must be nonnegative");
        let y2_fs = self.y2_learned(Method::Fs, x1, x2, y1, ErrorFactors::IDENTITY)?;
        let y2_low = (1.0 - epsilon) * y2_fs;
        let y2_high = (1.0 + epsilon) * y2_fs;
        let t_if_low = self
            .infer_interaction_time(x2, y1, y2_low)
            .map_err(|e| DsError::BoundInversion { bound: "t_if_low", source: Box::new(e) })?;
        let t_if_high = self
            .infer_interaction_time(x2, y1, y2_high)
            .map_err(|e| DsError::BoundInversion { bound: "t_if_high", source: Box::new(e) })?;
        let t_if_nominal =
            self.potential(Potential::B, x2)? - self.potential(Potential::B, x1)?;
        let y2_slb_nominal = self.y2_learned(Method::Slb, x1, x2, y1, ErrorFactors::IDENTITY)?;
        Ok(SamplingBounds {
            epsilon,
            y2_fs,
            y2_low,
            y2_high,
            t_if_low,
            t_if_high,
            t_if_nominal,
            y2_slb_nominal,
            within_bounds: t_if_low <= t_if_nominal && t_if_nominal <= t_if_high,
        })
    }

    /// Evaluate the SLB mapping over a grid of `x_slb` values and error
    /// factors. Rows are ordered x-major, factor-minor.
    pub fn error_sweep(
        &self,
        x_grid: &[f64],
        x2: f64,
        y1: f64,
        xi_values: &[ErrorFactors],
    ) -> Result<Vec<SweepRow>, DsError> {
        if x_grid.is_empty() {
            return Err(DsError::EmptyGrid);
        }
        let mut rows = Vec::with_capacity(x_grid.len() * xi_values.len());
        for &x in x_grid {
            for &xi in xi_values {
                let y2 = self.y2_learned(Method::Slb, x, x2, y1, xi)?;
                rows.push(SweepRow { x_slb: x, xi_t: xi.xi_t, xi_e: xi.xi_e, y2 });
            }
        }
        Ok(rows)
    }
}

/// Closed form of the SLB mapping for the identity system
/// (`f(x) = d(x) = h(x) = x`), with error factors.
pub fn closed_form_example(
    x_slb: f64,
    x2: f64,
    y1: f64,
    errors: ErrorFactors,
) -> Result<f64, DsError> {
    errors.validate()?;
    for v in [x_slb, x2] {
        if v <= 0.0 {
            return Err(DsError::NonPositiveInput { value: v });
        }
    }
    let p = 1.0 / (2.0 * errors.xi_t);
    let ratio = x2 / x_slb;
    Ok((x2 * p * ratio.ln() + y1 * ratio.powf(p)) / errors.xi_e)
}

/// Monotone potential inverter with a warm-start anchor.
///
/// Potential values are accumulated incrementally from the anchor, so
/// repeated inversions at nearby targets only integrate short intervals.
pub struct Inverter<'a> {
    sys: &'a CoupledSystem,
    which: Potential,
    anchor_x: f64,
    anchor_v: f64,
}

impl Inverter<'_> {
    /// Find `x` with `potential(x) = v` to within `root_tol`.
    pub fn invert(&mut self, v: f64) -> Result<f64, DsError> {
        let sys = self.sys;
        let (anchor_x, anchor_v) = (self.anchor_x, self.anchor_v);
        let (lo, hi) = sys.working_domain();
        let span = hi - lo;
        let lo_lim = lo + span * 1e-15;
        let hi_lim = hi - span * 1e-15;
        let g_integrand = sys.integrand(self.which);
        let err: RefCell<Option<QuadError>> = RefCell::new(None);
        let g = |x: f64| -> f64 {
            match adaptive_simpson(&g_integrand, anchor_x, x, sys.quad_tol, MAX_QUAD_DEPTH) {
                Ok(inc) => anchor_v + inc - v,
                Err(e) => {
                    err.borrow_mut().get_or_insert(e);
                    f64::NAN
                }
            }
        };
        let bracket = bracket_monotone(&g, anchor_x, lo_lim, hi_lim, MAX_EXPANSIONS);
        if let Some(e) = err.borrow_mut().take() {
            return Err(e.into());
        }
        let (blo, bhi) = bracket.map_err(|e| match e {
            RootError::NoBracket { .. } => DsError::OutOfRange { v },
            other => DsError::Root(other),
        })?;
        let root = if blo == bhi {
            blo
        } else {
            let r = bisect(&g, blo, bhi, sys.root_tol, MAX_ROOT_ITER);
            if let Some(e) = err.borrow_mut().take() {
                return Err(e.into());
            }
            r?
        };
        // Move the anchor to the solution for the next query.
        let inc = adaptive_simpson(&g_integrand, anchor_x, root, sys.quad_tol, MAX_QUAD_DEPTH)?;
        self.anchor_v = anchor_v + inc;
        self.anchor_x = root;
        Ok(root)
    }
}
