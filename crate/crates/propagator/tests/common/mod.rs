//! Shared helpers for the integration tests: an extremal-path action oracle
//! that knows nothing about the closed-form action formulas.

use propagator::{BoundaryData, LinearPotentialSpec, PhysicsConfig, RealVector};

/// Action of the discrete extremal path with `n` segments.
///
/// The path nodes minimize the discretized action
/// sum_k m |y_{k+1} - y_k|^2 / (2 delta) - delta V((y_k + y_{k+1})/2)
/// with the endpoints clamped. For a linear potential the stationarity
/// conditions are the tridiagonal system 2 y_j - y_{j-1} - y_{j+1} =
/// -delta^2 F / m per axis (the discrete m y'' = F), solved here by the
/// Thomas algorithm.
fn discrete_extremal_action(
    b: &BoundaryData,
    v: &LinearPotentialSpec,
    cfg: &PhysicsConfig,
    n: usize,
) -> f64 {
    assert!(n >= 2);
    let d = b.dim();
    let m = cfg.mass();
    let t = b.t();
    let delta = t / n as f64;
    let mut path = vec![vec![0.0f64; d]; n + 1];
    for ax in 0..d {
        let lo = b.x0()[ax];
        let hi = b.x()[ax];
        let rhs_const = -delta * delta * v.force[ax] / m;
        let interior = n - 1;
        let mut c_prime = vec![0.0f64; interior];
        let mut d_prime = vec![0.0f64; interior];
        for j in 0..interior {
            let mut rhs = rhs_const;
            if j == 0 {
                rhs += lo;
            }
            if j == interior - 1 {
                rhs += hi;
            }
            let (diag, sub) = (2.0, -1.0);
            if j == 0 {
                c_prime[j] = -1.0 / diag;
                d_prime[j] = rhs / diag;
            } else {
                let denom = diag - sub * c_prime[j - 1];
                c_prime[j] = -1.0 / denom;
                d_prime[j] = (rhs - sub * d_prime[j - 1]) / denom;
            }
        }
        path[0][ax] = lo;
        path[n][ax] = hi;
        for j in (0..interior).rev() {
            let next = if j == interior - 1 { 0.0 } else { c_prime[j] * path[j + 2][ax] };
            path[j + 1][ax] = d_prime[j] - next;
        }
    }
    let anchor = b.x0();
    let mut action = 0.0;
    for k in 0..n {
        let a = RealVector::new(&path[k]).unwrap();
        let c = RealVector::new(&path[k + 1]).unwrap();
        let step = c.sub(&a);
        let mid = a.add(&step.scaled(0.5));
        action += 0.5 * m * step.norm_sq() / delta - delta * v.potential_at(&mid, anchor);
    }
    action
}

/// Numerical extremal-path action, Richardson-extrapolated over segment
/// doublings {1024, 2048, 4096}. The discrete action converges as delta^2, so
/// two extrapolation levels leave O(delta^6) which is rounding-level here.
pub fn extremal_action_linear(b: &BoundaryData, v: &LinearPotentialSpec, cfg: &PhysicsConfig) -> f64 {
    let s1 = discrete_extremal_action(b, v, cfg, 1024);
    let s2 = discrete_extremal_action(b, v, cfg, 2048);
    let s4 = discrete_extremal_action(b, v, cfg, 4096);
    let r1 = (4.0 * s2 - s1) / 3.0;
    let r2 = (4.0 * s4 - s2) / 3.0;
    (16.0 * r2 - r1) / 15.0
}
