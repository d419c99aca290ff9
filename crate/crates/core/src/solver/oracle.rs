use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact minimizer of `∫ |u′|^p/p − f u` on `(−1, 1)` with `u(±1) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Oracle1d {
    pub p: f64,
    pub f: f64,
}

/// `x ↦ ((p−1)/p)·f^{1/(p−1)}·(1 − |x|^{p/(p−1)})`.
pub fn oracle_1d(p: f64, f: f64) -> Result<Oracle1d> {
    if !(p >= 2.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!("oracle requires p ≥ 2, got {p}")));
    }
    if !(f > 0.0) || !f.is_finite() {
        return Err(Error::InvalidParameter(format!("oracle requires f > 0, got {f}")));
    }
    Ok(Oracle1d { p, f })
}

impl Oracle1d {
    pub fn value(&self, x: f64) -> f64 {
        let q = self.p / (self.p - 1.0);
        (1.0 / q) * self.f.powf(1.0 / (self.p - 1.0)) * (1.0 - x.abs().powf(q))
    }

    /// `u′(x) = −sign(x)·(f|x|)^{1/(p−1)}`.
    pub fn derivative(&self, x: f64) -> f64 {
        -x.signum() * (self.f * x.abs()).powf(1.0 / (self.p - 1.0))
    }

    /// `|u′|^{p−2} u′`, which equals `−f x` for the exact solution.
    pub fn flux(&self, x: f64) -> f64 {
        let du = self.derivative(x);
        du.abs().powf(self.p - 2.0) * du
    }
}
