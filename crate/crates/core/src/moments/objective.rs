use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{MomentDerivatives, MomentSet};
use crate::error::{Error, Result};

/// Weights `(λ₁, λ₂, λ₃, λ₄)` of the MVSK objective
/// `f = −λ₁φ₁ + λ₂φ₂ − λ₃φ₃ + λ₄φ₄`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MvskSpec {
    pub lambda: [f64; 4],
}

impl MvskSpec {
    pub fn new(lambda: [f64; 4]) -> Result<Self> {
        if lambda.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "moment weights must be finite and nonnegative, got {lambda:?}"
            )));
        }
        if lambda.iter().all(|l| *l == 0.0) {
            return Err(Error::InvalidParameter(
                "all moment weights are zero".into(),
            ));
        }
        Ok(Self { lambda })
    }

    /// Same spec with the skewness and kurtosis weights removed.
    pub fn mean_variance_part(&self) -> Self {
        Self {
            lambda: [self.lambda[0], self.lambda[1], 0.0, 0.0],
        }
    }
}

/// Weights from the fourth-order expansion of CRRA utility with risk aversion `ξ`.
pub fn crra_lambdas(xi: f64) -> Result<MvskSpec> {
    if !(xi.is_finite() && xi >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "risk aversion must be >= 0, got {xi}"
        )));
    }
    MvskSpec::new([
        1.0,
        xi / 2.0,
        xi * (xi + 1.0) / 6.0,
        xi * (xi + 1.0) * (xi + 2.0) / 24.0,
    ])
}

/// Objective value and gradient with the convex / nonconvex split.
#[derive(Debug, Clone)]
pub struct ObjectiveEval {
    pub f: f64,
    pub grad: DVector<f64>,
    /// `−λ₁φ₁ + λ₂φ₂`
    pub f_cvx: f64,
    /// `−λ₃φ₃ + λ₄φ₄`
    pub f_ncvx: f64,
    pub grad_ncvx: DVector<f64>,
}

impl ObjectiveEval {
    pub fn from_derivatives(d: &MomentDerivatives, m: &MomentSet, spec: &MvskSpec) -> Self {
        let [l1, l2, l3, l4] = spec.lambda;
        let [p1, p2, p3, p4] = d.values;
        let f_cvx = -l1 * p1 + l2 * p2;
        let f_ncvx = -l3 * p3 + l4 * p4;
        let grad_ncvx = &d.grad4 * l4 - &d.grad3 * l3;
        let grad = m.mu() * (-l1) + &d.sigma_w * (2.0 * l2) + &grad_ncvx;
        Self {
            f: f_cvx + f_ncvx,
            grad,
            f_cvx,
            f_ncvx,
            grad_ncvx,
        }
    }
}

pub fn mvsk_objective(w: &DVector<f64>, m: &MomentSet, spec: &MvskSpec) -> Result<ObjectiveEval> {
    let d = MomentDerivatives::at(w, m)?;
    Ok(ObjectiveEval::from_derivatives(&d, m, spec))
}
