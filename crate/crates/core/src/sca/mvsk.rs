use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::layout::Layout;
use super::report::{IterationRecord, Method, SolveReport, Termination};
use super::stationarity::projected_gradient_residual;
use super::surrogate::{dc_model, mm_model, q_model};
use super::{stop_check_with, StepSchedule, STOP_TOL};
use crate::bounds::{dc_tau, mm_tau};
use crate::error::{Error, Result};
use crate::moments::{
    covariance_min_eigen, FeasibleSet, MomentDerivatives, MomentSet, MvskSpec, ObjectiveEval,
    Weights,
};
use crate::subsolvers::{solve_qp, QpProblem, Quadratic, DEFAULT_TOL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MvskOptions {
    pub max_iter: usize,
    /// Proximal weight for Q-MVSK; `None` picks 0 when `λ₂ > 0` and
    /// `1e-6·tr(Σ)/N` otherwise.
    pub tau_w: Option<f64>,
    /// Relative tolerance of the stopping rule.
    pub stop_tol: f64,
    pub sub_tol: f64,
    /// Convergence also requires the projected-gradient residual to be at
    /// most this.
    pub stat_tol: f64,
    /// Starting point; equal weights when `None`.
    pub w0: Option<Weights>,
    pub schedule: StepSchedule,
}

impl Default for MvskOptions {
    fn default() -> Self {
        Self {
            max_iter: 1000,
            tau_w: None,
            stop_tol: STOP_TOL,
            sub_tol: DEFAULT_TOL,
            stat_tol: 1e-5,
            w0: None,
            schedule: StepSchedule::default(),
        }
    }
}

/// Curvature added when a surrogate would otherwise not be strongly convex.
fn curvature_floor(m: &MomentSet) -> f64 {
    let n = m.n_assets() as f64;
    let tr = m.sigma().trace();
    if tr > 0.0 {
        1e-6 * tr / n
    } else {
        1e-12
    }
}

/// DC: isotropic majorizer of `f`, unit step.
pub fn solve_mvsk_dc(
    m: &MomentSet,
    spec: &MvskSpec,
    fs: &FeasibleSet,
    opts: &MvskOptions,
) -> Result<SolveReport> {
    solve_mvsk(Method::Dc, m, spec, fs, opts)
}

/// MM: exact mean-variance part plus an isotropic majorizer of the higher
/// moments, unit step.
pub fn solve_mvsk_mm(
    m: &MomentSet,
    spec: &MvskSpec,
    fs: &FeasibleSet,
    opts: &MvskOptions,
) -> Result<SolveReport> {
    solve_mvsk(Method::Mm, m, spec, fs, opts)
}

/// Q-MVSK: PSD second-order model of the higher moments, diminishing step.
pub fn solve_mvsk_q(
    m: &MomentSet,
    spec: &MvskSpec,
    fs: &FeasibleSet,
    opts: &MvskOptions,
) -> Result<SolveReport> {
    solve_mvsk(Method::Qmvsk, m, spec, fs, opts)
}

pub fn solve_mvsk(
    method: Method,
    m: &MomentSet,
    spec: &MvskSpec,
    fs: &FeasibleSet,
    opts: &MvskOptions,
) -> Result<SolveReport> {
    if method.is_tilting() {
        return Err(Error::InvalidParameter(format!(
            "{method} is not an MVSK method"
        )));
    }
    if !(opts.sub_tol > 0.0 && opts.stat_tol > 0.0 && opts.stop_tol > 0.0) {
        return Err(Error::InvalidParameter("tolerances must be > 0".into()));
    }
    let start = Instant::now();
    let ms = |s: &Instant| s.elapsed().as_secs_f64() * 1e3;
    let n = m.n_assets();
    let mut w = match &opts.w0 {
        Some(w0) => {
            if w0.0.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    found: w0.0.len(),
                });
            }
            w0.to_vector()
        }
        None => Weights::equal(n).to_vector(),
    };
    if !fs.contains(&w, 1e-9) {
        return Err(Error::InvalidParameter(
            "starting point is outside the feasible set".into(),
        ));
    }

    let floor = curvature_floor(m);
    let lambda2 = spec.lambda[1];
    let tau = match method {
        Method::Dc => {
            let t = dc_tau(m, spec, fs);
            if t > 0.0 {
                t
            } else {
                floor
            }
        }
        Method::Mm => {
            let t = mm_tau(m, spec, fs);
            if t > 0.0 || (lambda2 > 0.0 && covariance_min_eigen(m) > 0.0) {
                t
            } else {
                floor
            }
        }
        _ => match opts.tau_w {
            Some(t) if t.is_finite() && t >= 0.0 => t,
            Some(t) => {
                return Err(Error::InvalidParameter(format!(
                    "tau_w must be >= 0, got {t}"
                )))
            }
            None if lambda2 > 0.0 => 0.0,
            None => floor,
        },
    };

    let layout = Layout {
        n,
        lifted: fs.leverage() > 1.0,
        delta: false,
        t: false,
    };
    let cons = layout.w_set(fs.leverage())?;
    let mut d = MomentDerivatives::at(&w, m)?;
    let mut e = ObjectiveEval::from_derivatives(&d, m, spec);
    let mut trace = vec![IterationRecord {
        k: 0,
        objective: e.f,
        gamma: 0.0,
        eta: None,
        max_violation: fs.violation(&w),
        stationarity: 0.0,
        wall_ms: ms(&start),
    }];
    let mut calls = 0;
    let mut termination = Termination::MaxIter;
    let mut final_stat = None;
    let mut gammas = opts.schedule.iter();
    for k in 0..opts.max_iter {
        let model = match method {
            Method::Dc => dc_model(&w, &e, tau),
            Method::Mm => mm_model(&w, m, spec, &e, tau),
            _ => q_model(&w, m, spec, &d, &e, tau)?,
        };
        let w_hat = minimize(&layout, &model, &cons, opts.sub_tol, k + 1)?;
        calls += 1;
        let unit = matches!(method, Method::Dc | Method::Mm);
        let gamma = if unit {
            1.0
        } else {
            gammas.next().unwrap_or(0.0)
        };
        let mut w_next = &w + (&w_hat - &w) * gamma;
        let mut d_next = MomentDerivatives::at(&w_next, m)?;
        let mut e_next = ObjectiveEval::from_derivatives(&d_next, m, spec);
        // a majorizer cannot increase f; an increase is subsolver round-off
        if unit && e_next.f > e.f {
            w_next = w.clone();
            d_next = d.clone();
            e_next = e.clone();
        }
        trace.push(IterationRecord {
            k: k + 1,
            objective: e_next.f,
            gamma,
            eta: None,
            max_violation: fs.violation(&w_next),
            stationarity: (&w_hat - &w).amax(),
            wall_ms: ms(&start),
        });
        let stop = stop_check_with(
            w.as_slice(),
            w_next.as_slice(),
            e.f,
            e_next.f,
            opts.stop_tol,
        );
        w = w_next;
        d = d_next;
        e = e_next;
        if stop {
            calls += 1;
            let r = projected_gradient_residual(&w, &e.grad, fs)?;
            final_stat = Some(r);
            if r <= opts.stat_tol {
                termination = Termination::Converged;
                break;
            }
        }
    }
    let stationarity = match (termination, final_stat) {
        (Termination::Converged, Some(r)) => r,
        _ => {
            calls += 1;
            projected_gradient_residual(&w, &e.grad, fs)?
        }
    };
    Ok(SolveReport {
        method,
        w_final: Weights::from(w.clone()),
        delta_final: None,
        objective_final: e.f,
        moments_final: d.values,
        termination,
        iterations: trace.len() - 1,
        subsolver_calls: calls,
        max_violation: fs.violation(&w),
        stationarity,
        wall_ms: ms(&start),
        trace,
    })
}

fn minimize(
    layout: &Layout,
    model: &Quadratic,
    cons: &crate::subsolvers::LinearConstraintSystem,
    tol: f64,
    iteration: usize,
) -> Result<DVector<f64>> {
    let obj = layout.quadratic(&model.q_mat, &model.q, model.c, 0.0, 0.0, 0.0);
    let res = solve_qp(&QpProblem::new(obj.q_mat, obj.q, cons.clone())?, tol)?;
    if !res.is_optimal() {
        return Err(Error::Subsolver {
            problem: "surrogate QP",
            iteration,
            status: res.status,
        });
    }
    Ok(layout.w(&res.x))
}
