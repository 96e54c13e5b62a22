//! Residual reports and the 9-significant-digit output convention.
//!
//! Every verification routine returns a [`ResidualReport`]; the CLI serializes them
//! as JSON objects with the fixed schema
//!
//! ```text
//! { "check": string, "params": object, "residuals": [number], "fitted_order": number|null, "pass": bool }
//! ```
//!
//! All floating-point values that leave the process (JSON, CSV, stdout) are rounded
//! to 9 significant digits first, so reruns are byte-identical and diffs stay honest.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

/// Outcome of one verification check.
///
/// `params` is a sorted map so serialization order is deterministic. `residuals`
/// holds whatever scalar deviations the check produced, in the order the check
/// defines; `fitted_order` is the log-log convergence order when the check fits one.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    pub check: String,
    pub params: BTreeMap<String, Value>,
    pub residuals: Vec<f64>,
    pub fitted_order: Option<f64>,
    pub pass: bool,
}

impl ResidualReport {
    pub fn new(check: impl Into<String>) -> Self {
        ResidualReport {
            check: check.into(),
            params: BTreeMap::new(),
            residuals: Vec::new(),
            fitted_order: None,
            pass: false,
        }
    }

    pub fn set_param(&mut self, key: &str, value: impl Into<Value>) {
        self.params.insert(key.to_string(), value.into());
    }

    pub fn set_param_f64(&mut self, key: &str, value: f64) {
        self.params.insert(key.to_string(), json_f64(value));
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().cloned().fold(0.0, f64::max)
    }

    /// JSON with every number rounded to 9 significant digits.
    pub fn to_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        round_json_g9(&mut v);
        let mut s = serde_json::to_string_pretty(&v).expect("report serializes");
        s.push('\n');
        s
    }
}

/// `x` as a `serde_json::Value`, with non-finite values stringified (JSON has no inf/nan).
pub fn json_f64(x: f64) -> Value {
    if x.is_finite() {
        serde_json::Number::from_f64(x).map(Value::Number).unwrap_or_else(|| Value::String(x.to_string()))
    } else {
        Value::String(x.to_string())
    }
}

/// Format with exactly 9 significant digits, scientific notation.
pub fn format_g9(x: f64) -> String {
    format!("{x:.8e}")
}

/// Round to the 9-significant-digit value that `format_g9` prints.
pub fn round_g9(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    format_g9(x).parse().expect("g9 round-trips")
}

fn round_json_g9(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if let Some(x) = n.as_f64() {
                // Keep integers intact; only floats get the g9 treatment.
                if !n.is_i64() && !n.is_u64() {
                    if let Some(r) = serde_json::Number::from_f64(round_g9(x)) {
                        *n = r;
                    }
                }
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_json_g9),
        Value::Object(o) => o.values_mut().for_each(round_json_g9),
        _ => {}
    }
}

/// Least-squares slope of ln(y) against ln(x).
///
/// Returns `None` when fewer than two usable points remain (non-positive x are
/// unusable; y is floored at 1e-300 so exact zeros do not poison the fit).
pub fn fit_order_loglog(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(xi, _)| **xi > 0.0 && xi.is_finite())
        .map(|(xi, yi)| (xi.ln(), yi.abs().max(1e-300).ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}
