//! Classical paths and actions underlying the kernels.
//!
//! For fixed endpoints (x0, x) and elapsed time T > 0 the free extremal path is the
//! straight line with constant momentum q = m (x - x0)/T and action
//!
//! ```text
//! S_free = m |x - x0|^2 / (2 T)
//! ```
//!
//! Under the linear potential V(y) = V0 - F.(y - x0) the equation of motion is
//! m y'' = F, the extremal path is y(t) = x0 + v0 t + F t^2/(2m) with
//! v0 = (x - x0)/T - F T/(2m), and the action evaluates to
//!
//! ```text
//! S_lin = m |x - x0|^2 / (2 T) - V0 T + (T/2) F.(x - x0) - |F|^2 T^3 / (24 m)
//! ```
//!
//! which satisfies the Hamilton-Jacobi equation S_T + |grad S|^2/(2m) + V(x) = 0
//! identically. The free-Hamiltonian residual S_T + |grad S|^2/(2m) is exposed both
//! in exact form (for the free action, where it vanishes by construction) and as a
//! central finite difference for arbitrary action callbacks.

use crate::core::{PhysicsConfig, RealVector};
use crate::error::{Error, Result};

/// Endpoints and elapsed time of a propagation problem. `T` is strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData {
    x0: RealVector,
    x: RealVector,
    t: f64,
}

impl BoundaryData {
    pub fn new(x0: RealVector, x: RealVector, t: f64) -> Result<Self> {
        if x0.dim() != x.dim() {
            return Err(Error::InvalidParameter(format!(
                "endpoints have different dimensions: {} vs {}",
                x0.dim(),
                x.dim()
            )));
        }
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::InvalidTime(t));
        }
        Ok(BoundaryData { x0, x, t })
    }

    pub fn x0(&self) -> &RealVector {
        &self.x0
    }

    pub fn x(&self) -> &RealVector {
        &self.x
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn dim(&self) -> usize {
        self.x0.dim()
    }

    /// x - x0.
    pub fn displacement(&self) -> RealVector {
        self.x.sub(&self.x0)
    }

    /// Same endpoints traversed in the opposite direction.
    pub fn reversed(&self) -> Self {
        BoundaryData { x0: self.x.clone(), x: self.x0.clone(), t: self.t }
    }
}

/// Classical action along an extremal path, in the same units as hbar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionValue {
    pub value: f64,
}

impl ActionValue {
    /// Dimensionless phase S / hbar.
    pub fn over_hbar(&self, cfg: &PhysicsConfig) -> f64 {
        self.value / cfg.hbar()
    }
}

/// Linear potential V(y) = V0 - F.(y - anchor). The anchor is supplied by whoever
/// evaluates the potential (it is the trajectory start everywhere in this crate),
/// so the struct itself stays translation-free.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearPotentialSpec {
    pub v0: f64,
    pub force: RealVector,
}

impl LinearPotentialSpec {
    pub fn new(v0: f64, force: RealVector) -> Self {
        LinearPotentialSpec { v0, force }
    }

    /// Zero potential in `dim` dimensions; kernels built from it reduce to the free ones.
    pub fn zero(dim: usize) -> Self {
        LinearPotentialSpec { v0: 0.0, force: RealVector::zeros(dim) }
    }

    pub fn is_zero(&self) -> bool {
        self.v0 == 0.0 && self.force.norm_sq() == 0.0
    }

    /// V at `y` with the potential anchored at `anchor`.
    pub fn potential_at(&self, y: &RealVector, anchor: &RealVector) -> f64 {
        self.v0 - self.force.dot(&y.sub(anchor))
    }
}

/// Constant momentum m (x - x0) / T of the free extremal path.
pub fn classical_momentum(b: &BoundaryData, cfg: &PhysicsConfig) -> RealVector {
    b.displacement().scaled(cfg.mass() / b.t())
}

/// Point on the straight-line extremal path at time `t` in [0, T].
pub fn classical_trajectory(b: &BoundaryData, t: f64) -> Result<RealVector> {
    if !t.is_finite() || t < 0.0 || t > b.t {
        return Err(Error::OutOfRange(format!("t = {t} outside [0, {}]", b.t)));
    }
    let f = t / b.t;
    Ok(b.x0.add(&b.displacement().scaled(f)))
}

/// Free-particle extremal action m |x - x0|^2 / (2 T).
pub fn classical_action_free(b: &BoundaryData, cfg: &PhysicsConfig) -> ActionValue {
    ActionValue { value: cfg.mass() * b.displacement().norm_sq() / (2.0 * b.t) }
}

/// Extremal action for the linear potential V(y) = V0 - F.(y - x0).
///
/// With V0 = 0 and F = 0 the correction terms are exact zeros, so the returned
/// value is bit-identical to [`classical_action_free`].
pub fn classical_action_linear(
    b: &BoundaryData,
    v: &LinearPotentialSpec,
    cfg: &PhysicsConfig,
) -> Result<ActionValue> {
    if v.force.dim() != b.dim() {
        return Err(Error::InvalidParameter(format!(
            "force is {}-dimensional but the boundary is {}-dimensional",
            v.force.dim(),
            b.dim()
        )));
    }
    let t = b.t;
    let m = cfg.mass();
    let s_free = classical_action_free(b, cfg).value;
    let tilt = 0.5 * t * v.force.dot(&b.displacement());
    let sag = v.force.norm_sq() * t * t * t / (24.0 * m);
    Ok(ActionValue { value: s_free - v.v0 * t + tilt - sag })
}

/// |S_T + |grad S|^2 / (2m)| for the free action, using the exact derivatives
/// S_T = -|q|^2/(2m) and grad S = q. The two terms cancel identically, so this
/// returns exactly 0.0; it exists so verification can pin the algebraic identity
/// rather than a small number.
pub fn hamilton_jacobi_residual_exact(b: &BoundaryData, cfg: &PhysicsConfig) -> f64 {
    let q = classical_momentum(b, cfg);
    let kinetic = q.norm_sq() / (2.0 * cfg.mass());
    let s_t = -kinetic;
    (s_t + kinetic).abs()
}

/// Default finite-difference step for [`hamilton_jacobi_residual`].
pub const DEFAULT_HJ_STEP: f64 = 1e-5;

/// |S_T + |grad S|^2 / (2m)| for an arbitrary action callback `action(x, T)`,
/// with central differences of step `h` in both T and each component of x.
///
/// Requires T - h > 0 so the callback is only queried at valid times.
pub fn hamilton_jacobi_residual<F>(
    action: F,
    b: &BoundaryData,
    cfg: &PhysicsConfig,
    h: f64,
) -> Result<f64>
where
    F: Fn(&RealVector, f64) -> f64,
{
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidParameter(format!("finite-difference step must be positive, got {h}")));
    }
    if b.t - h <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "step h = {h} reaches nonpositive times from T = {}",
            b.t
        )));
    }
    let x = &b.x;
    let s_t = (action(x, b.t + h) - action(x, b.t - h)) / (2.0 * h);
    let mut grad_sq = 0.0;
    for ax in 0..b.dim() {
        let mut comps_f: Vec<f64> = x.as_slice().to_vec();
        let mut comps_b = comps_f.clone();
        comps_f[ax] += h;
        comps_b[ax] -= h;
        let fwd = RealVector::new(&comps_f).expect("finite nudge");
        let bwd = RealVector::new(&comps_b).expect("finite nudge");
        let g = (action(&fwd, b.t) - action(&bwd, b.t)) / (2.0 * h);
        grad_sq += g * g;
    }
    let residual = (s_t + grad_sq / (2.0 * cfg.mass())).abs();
    if !residual.is_finite() {
        return Err(Error::EvaluationFailure("action callback produced a non-finite value".to_string()));
    }
    Ok(residual)
}
