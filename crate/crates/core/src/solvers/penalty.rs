use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PenaltyKind {
    Lasso,
    Scad,
}

/// Penalty family plus the SCAD concavity parameter `a` (ignored by Lasso).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltySpec {
    pub kind: PenaltyKind,
    pub a: f64,
}

pub const DEFAULT_SCAD_A: f64 = 3.7;

impl PenaltySpec {
    pub fn lasso() -> Self {
        PenaltySpec {
            kind: PenaltyKind::Lasso,
            a: DEFAULT_SCAD_A,
        }
    }

    pub fn scad(a: f64) -> Result<Self> {
        let spec = PenaltySpec {
            kind: PenaltyKind::Scad,
            a,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == PenaltyKind::Scad && !(self.a > 2.0) {
            return Err(Error::InvalidArgument(format!(
                "SCAD concavity a = {} must exceed 2",
                self.a
            )));
        }
        Ok(())
    }

    /// Minimizer of `½(z − β)² + p_λ(|β|)`.
    pub fn threshold(&self, z: f64, lambda: f64) -> f64 {
        match self.kind {
            PenaltyKind::Lasso => soft_threshold(z, lambda),
            PenaltyKind::Scad => scad_rule(z, lambda, self.a),
        }
    }

    /// `p_λ(t)` for `t ≥ 0`.
    pub fn value(&self, t: f64, lambda: f64) -> f64 {
        match self.kind {
            PenaltyKind::Lasso => lambda * t,
            PenaltyKind::Scad => scad_value(t, lambda, self.a),
        }
    }

    /// Right derivative `p′_λ(t)` for `t ≥ 0`.
    pub fn derivative(&self, t: f64, lambda: f64) -> f64 {
        match self.kind {
            PenaltyKind::Lasso => lambda,
            PenaltyKind::Scad => scad_derivative(t, lambda, self.a),
        }
    }
}

pub fn soft_threshold(z: f64, lambda: f64) -> f64 {
    z.signum() * (z.abs() - lambda).max(0.0)
}

fn scad_rule(z: f64, lambda: f64, a: f64) -> f64 {
    let abs = z.abs();
    if abs <= 2.0 * lambda {
        soft_threshold(z, lambda)
    } else if abs <= a * lambda {
        ((a - 1.0) * z - z.signum() * a * lambda) / (a - 2.0)
    } else {
        z
    }
}

/// Univariate SCAD solution for a unit-curvature quadratic.
pub fn scad_threshold(z: f64, lambda: f64, a: f64) -> Result<f64> {
    if !(a > 2.0) {
        return Err(Error::InvalidArgument(format!("SCAD concavity a = {a} must exceed 2")));
    }
    Ok(scad_rule(z, lambda, a))
}

pub fn scad_value(t: f64, lambda: f64, a: f64) -> f64 {
    if t <= lambda {
        lambda * t
    } else if t <= a * lambda {
        (2.0 * a * lambda * t - t * t - lambda * lambda) / (2.0 * (a - 1.0))
    } else {
        lambda * lambda * (a + 1.0) / 2.0
    }
}

pub fn scad_derivative(t: f64, lambda: f64, a: f64) -> f64 {
    if t <= lambda {
        lambda
    } else if t <= a * lambda {
        (a * lambda - t) / (a - 1.0)
    } else {
        0.0
    }
}
