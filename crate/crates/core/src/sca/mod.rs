//! Successive convex approximation for the MVSK and MVSK-tilting problems.
//!
//! MVSK (`min f(w)` over the leverage set):
//! * [`solve_mvsk_dc`]: isotropic majorizer of all of `f` (CCCP), unit step.
//! * [`solve_mvsk_mm`]: keeps the convex mean–variance part exact and
//!   majorizes the higher moments, unit step.
//! * [`solve_mvsk_q`]: second-order model of the higher moments with a PSD
//!   projected Hessian and a diminishing step.
//!
//! Tilting (`max δ` subject to moment improvements along `d` and a
//! tracking-error budget):
//! * [`solve_tilting_l`]: linearized nonconvex constraints, a QP per step.
//! * [`solve_tilting_q`]: quadratic constraint models, a QCQP per step.

mod layout;
mod mvsk;
mod report;
mod stationarity;
mod surrogate;
mod tilting;

pub use mvsk::{solve_mvsk, solve_mvsk_dc, solve_mvsk_mm, solve_mvsk_q, MvskOptions};
pub use report::{IterationRecord, Method, SolveReport, Termination};
pub use stationarity::{projected_gradient_residual, tilting_kkt_residual};
pub use surrogate::{dc_surrogate, mm_surrogate, q_surrogate};
pub use tilting::{
    eta_linear, eta_quadratic, linear_constraint_models, quadratic_constraint_models,
    solve_tilting, solve_tilting_l, solve_tilting_q, tilting_constraints, ConstraintModel,
    TiltingOptions, TiltingSpec,
};

use serde::{Deserialize, Serialize};

/// Default relative tolerance of the stopping rule.
pub const STOP_TOL: f64 = 1e-6;

/// Diminishing step sizes `γ⁰ = gamma0`, `γᵏ = γᵏ⁻¹(1 − decay·γᵏ⁻¹)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSchedule {
    pub gamma0: f64,
    pub decay: f64,
}

impl Default for StepSchedule {
    fn default() -> Self {
        Self {
            gamma0: 1.0,
            decay: 1e-2,
        }
    }
}

impl StepSchedule {
    /// `γᵏ`, evaluated by running the recurrence `k` times.
    pub fn gamma(&self, k: usize) -> f64 {
        self.iter().nth(k).unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> {
        let decay = self.decay;
        std::iter::successors(Some(self.gamma0), move |g| Some(g * (1.0 - decay * g)))
    }
}

/// `γᵏ` for the default schedule.
pub fn step_size(k: usize) -> f64 {
    StepSchedule::default().gamma(k)
}

/// True when every coordinate moved by at most `STOP_TOL·(|xᵏ⁺¹ᵢ| + |xᵏᵢ|)`
/// or the objective moved by at most `STOP_TOL·(|fᵏ⁺¹| + |fᵏ|)`.
pub fn stop_check(x_prev: &[f64], x_next: &[f64], f_prev: f64, f_next: f64) -> bool {
    stop_check_with(x_prev, x_next, f_prev, f_next, STOP_TOL)
}

/// [`stop_check`] with relative tolerance `tol`.
pub fn stop_check_with(x_prev: &[f64], x_next: &[f64], f_prev: f64, f_next: f64, tol: f64) -> bool {
    debug_assert_eq!(x_prev.len(), x_next.len());
    let x_close = x_prev
        .iter()
        .zip(x_next)
        .all(|(a, b)| (b - a).abs() <= tol * (a.abs() + b.abs()));
    let f_close = (f_next - f_prev).abs() <= tol * (f_next.abs() + f_prev.abs());
    x_close || f_close
}
