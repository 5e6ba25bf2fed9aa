//! Convex surrogate models of the MVSK objective at an expansion point `wᵏ`.
//! Each model is returned as `½wᵀPw + qᵀw + c` over the weights, and agrees
//! with `f` in value and gradient at `wᵏ`.

use nalgebra::{DMatrix, DVector};

use crate::bounds::nearest_psd;
use crate::error::Result;
use crate::moments::{MomentDerivatives, MomentSet, MvskSpec, ObjectiveEval};
use crate::subsolvers::Quadratic;

/// `f(wᵏ) + ∇f(wᵏ)ᵀ(w − wᵏ) + (τ/2)‖w − wᵏ‖²`, a global majorizer of `f`
/// on the leverage set when `τ ≥ τ_DC`.
pub fn dc_surrogate(
    wk: &DVector<f64>,
    m: &MomentSet,
    spec: &MvskSpec,
    tau: f64,
) -> Result<Quadratic> {
    let d = MomentDerivatives::at(wk, m)?;
    Ok(dc_model(
        wk,
        &ObjectiveEval::from_derivatives(&d, m, spec),
        tau,
    ))
}

/// `f_cvx(w) + f_ncvx(wᵏ) + ∇f_ncvx(wᵏ)ᵀ(w − wᵏ) + (τ/2)‖w − wᵏ‖²`, a global
/// majorizer of `f` on the leverage set when `τ ≥ τ_MM`.
pub fn mm_surrogate(
    wk: &DVector<f64>,
    m: &MomentSet,
    spec: &MvskSpec,
    tau: f64,
) -> Result<Quadratic> {
    let d = MomentDerivatives::at(wk, m)?;
    Ok(mm_model(
        wk,
        m,
        spec,
        &ObjectiveEval::from_derivatives(&d, m, spec),
        tau,
    ))
}

/// `f_cvx(w)` plus the second-order model of `f_ncvx` at `wᵏ` with its
/// Hessian replaced by the nearest PSD matrix, plus `(τ_w/2)‖w − wᵏ‖²`.
pub fn q_surrogate(
    wk: &DVector<f64>,
    m: &MomentSet,
    spec: &MvskSpec,
    tau_w: f64,
) -> Result<Quadratic> {
    let d = MomentDerivatives::at(wk, m)?;
    q_model(
        wk,
        m,
        spec,
        &d,
        &ObjectiveEval::from_derivatives(&d, m, spec),
        tau_w,
    )
}

/// Adds `(τ/2)‖w − wᵏ‖²` in expanded form.
fn proximal(p: &mut DMatrix<f64>, q: &mut DVector<f64>, c: &mut f64, wk: &DVector<f64>, tau: f64) {
    for i in 0..wk.len() {
        p[(i, i)] += tau;
    }
    *q -= wk * tau;
    *c += 0.5 * tau * wk.norm_squared();
}

pub(crate) fn dc_model(wk: &DVector<f64>, e: &ObjectiveEval, tau: f64) -> Quadratic {
    let n = wk.len();
    let mut p = DMatrix::zeros(n, n);
    let mut q = e.grad.clone();
    let mut c = e.f - e.grad.dot(wk);
    proximal(&mut p, &mut q, &mut c, wk, tau);
    Quadratic::new(p, q, c)
}

pub(crate) fn mm_model(
    wk: &DVector<f64>,
    m: &MomentSet,
    spec: &MvskSpec,
    e: &ObjectiveEval,
    tau: f64,
) -> Quadratic {
    let [l1, l2, _, _] = spec.lambda;
    let mut p = m.sigma() * (2.0 * l2);
    let mut q = m.mu() * (-l1) + &e.grad_ncvx;
    let mut c = e.f_ncvx - e.grad_ncvx.dot(wk);
    proximal(&mut p, &mut q, &mut c, wk, tau);
    Quadratic::new(p, q, c)
}

pub(crate) fn q_model(
    wk: &DVector<f64>,
    m: &MomentSet,
    spec: &MvskSpec,
    d: &MomentDerivatives,
    e: &ObjectiveEval,
    tau_w: f64,
) -> Result<Quadratic> {
    let [l1, l2, l3, l4] = spec.lambda;
    let h = nearest_psd(&(&d.hess4 * l4 - &d.hess3 * l3))?;
    let hw = &h * wk;
    let mut p = m.sigma() * (2.0 * l2) + &h;
    let mut q = m.mu() * (-l1) + &e.grad_ncvx - &hw;
    let mut c = e.f_ncvx - e.grad_ncvx.dot(wk) + 0.5 * wk.dot(&hw);
    proximal(&mut p, &mut q, &mut c, wk, tau_w);
    Ok(Quadratic::new(p, q, c))
}
