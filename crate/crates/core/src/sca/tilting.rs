//! MVSK tilting: `max δ` over `(w, δ)` subject to
//!
//! * `g₁ = φ₁(w₀) − φ₁(w) + d₁δ ≤ 0`
//! * `g₂ = φ₂(w) − φ₂(w₀) + d₂δ ≤ 0`
//! * `g₃ = φ₃(w₀) − φ₃(w) + d₃δ ≤ 0`
//! * `g₄ = φ₄(w) − φ₄(w₀) + d₄δ ≤ 0`
//! * `g₅ = (w − w₀)ᵀΣ(w − w₀) − κ² ≤ 0`
//!
//! with `w` in the leverage set and `δ ≥ 0`.

use std::time::Instant;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::layout::Layout;
use super::report::{IterationRecord, Method, SolveReport, Termination};
use super::stationarity::kkt_residual;
use super::{stop_check_with, StepSchedule, STOP_TOL};
use crate::bounds::nearest_psd;
use crate::error::{Error, Result};
use crate::moments::{portfolio_moments, FeasibleSet, MomentDerivatives, MomentSet, Weights};
use crate::subsolvers::{
    solve_lp, solve_qcqp_from, solve_qp, LinearConstraintSystem, QcqpProblem, QpProblem, Quadratic,
    SubsolverResult, DEFAULT_TOL,
};

/// Eigenvalues of `Σ` below this fraction of the largest are treated as zero
/// when `κ = 0` pins `Σ(w − w₀)` to zero.
const PIN_EIG_REL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TiltingSpec {
    /// Reference portfolio; also the starting point.
    pub w0: Weights,
    /// Tilt direction `(d₁, d₂, d₃, d₄)`.
    pub d: [f64; 4],
    /// Tracking-error budget.
    pub kappa: f64,
    pub theta: f64,
    pub tau_w: f64,
    pub tau_delta: f64,
}

impl TiltingSpec {
    /// Default spec around `w0`: `dᵢ = |φᵢ(w₀)|`, `κ = c·√φ₂(w₀)`, `θ = ½`,
    /// `τ_w = τ_δ = 1e-5`.
    pub fn new(m: &MomentSet, w0: Weights, c: f64) -> Result<Self> {
        if !(c.is_finite() && c >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tracking-error multiplier must be >= 0, got {c}"
            )));
        }
        let phi = portfolio_moments(&w0.to_vector(), m)?;
        Ok(Self {
            w0,
            d: phi.map(f64::abs),
            kappa: c * phi[1].max(0.0).sqrt(),
            theta: 0.5,
            tau_w: 1e-5,
            tau_delta: 1e-5,
        })
    }

    pub fn validate(&self, m: &MomentSet, fs: &FeasibleSet) -> Result<()> {
        let n = m.n_assets();
        if self.w0.0.len() != n {
            return Err(Error::Dimension {
                expected: n,
                found: self.w0.0.len(),
            });
        }
        if !fs.contains(&self.w0.to_vector(), 1e-9) {
            return Err(Error::InvalidParameter(
                "reference portfolio is outside the feasible set".into(),
            ));
        }
        if self.d.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || self.d.iter().all(|v| *v == 0.0)
        {
            return Err(Error::InvalidParameter(format!(
                "tilt direction must be nonnegative and not all zero, got {:?}",
                self.d
            )));
        }
        if !(self.kappa.is_finite() && self.kappa >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tracking-error budget must be >= 0, got {}",
                self.kappa
            )));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "theta must lie in (0, 1), got {}",
                self.theta
            )));
        }
        for (name, v) in [("tau_w", self.tau_w), ("tau_delta", self.tau_delta)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be >= 0, got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TiltingOptions {
    pub max_iter: usize,
    /// Relative tolerance of the stopping rule.
    pub stop_tol: f64,
    pub sub_tol: f64,
    /// Convergence also requires the KKT residual on the true constraints
    /// to be at most this.
    pub stat_tol: f64,
    pub schedule: StepSchedule,
}

impl Default for TiltingOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            stop_tol: STOP_TOL,
            sub_tol: DEFAULT_TOL,
            stat_tol: 1e-4,
            schedule: StepSchedule::default(),
        }
    }
}

/// Model of `g_index` over `(w, δ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintModel {
    /// 1-based constraint number.
    pub index: usize,
    pub model: Quadratic,
}

/// Problem data shared by every iteration.
pub(super) struct Ctx<'a> {
    pub m: &'a MomentSet,
    pub tilt: &'a TiltingSpec,
    pub leverage: f64,
    pub n: usize,
    pub w0: DVector<f64>,
    pub phi0: [f64; 4],
    /// Rows spanning the range of `Σ`; set when `κ = 0`, where `g₅ ≤ 0`
    /// becomes `Σ(w − w₀) = 0`.
    pub pinned: Option<DMatrix<f64>>,
}

impl<'a> Ctx<'a> {
    pub fn new(m: &'a MomentSet, tilt: &'a TiltingSpec, fs: &FeasibleSet) -> Result<Self> {
        tilt.validate(m, fs)?;
        let w0 = tilt.w0.to_vector();
        let phi0 = portfolio_moments(&w0, m)?;
        let pinned = (tilt.kappa == 0.0).then(|| {
            let eig = SymmetricEigen::new(m.sigma().clone());
            let top = eig.eigenvalues.amax();
            let keep: Vec<usize> = (0..m.n_assets())
                .filter(|&i| top > 0.0 && eig.eigenvalues[i] > PIN_EIG_REL * top)
                .collect();
            let mut rows = DMatrix::zeros(keep.len(), m.n_assets());
            for (r, &i) in keep.iter().enumerate() {
                rows.row_mut(r)
                    .copy_from(&eig.eigenvectors.column(i).transpose());
            }
            rows
        });
        Ok(Self {
            m,
            tilt,
            leverage: fs.leverage(),
            n: m.n_assets(),
            w0,
            phi0,
            pinned,
        })
    }

    pub fn values(&self, d: &MomentDerivatives, w: &DVector<f64>, delta: f64) -> [f64; 5] {
        let [p1, p2, p3, p4] = d.values;
        let [b1, b2, b3, b4] = self.phi0;
        let dd = self.tilt.d;
        let diff = w - &self.w0;
        let te = diff.dot(&(self.m.sigma() * &diff));
        [
            b1 - p1 + dd[0] * delta,
            p2 - b2 + dd[1] * delta,
            b3 - p3 + dd[2] * delta,
            p4 - b4 + dd[3] * delta,
            te - self.tilt.kappa * self.tilt.kappa,
        ]
    }

    /// `∇_w gⱼ` at `w`.
    pub fn gradients(&self, d: &MomentDerivatives, w: &DVector<f64>) -> [DVector<f64>; 5] {
        [
            -self.m.mu(),
            &d.sigma_w * 2.0,
            -&d.grad3,
            d.grad4.clone(),
            self.m.sigma() * (w - &self.w0) * 2.0,
        ]
    }

    /// `δ` coefficient of `gⱼ`.
    pub fn d_coef(&self, j: usize) -> f64 {
        if j < 4 {
            self.tilt.d[j]
        } else {
            0.0
        }
    }

    /// Positive factor bringing `g_{j+1}` to unit δ-coefficient, or unit
    /// budget for the tracking row. Subproblems and `η` work with the
    /// normalized rows, which leaves the feasible set unchanged.
    fn row_scale(&self, j: usize) -> f64 {
        let s = match j {
            0..=3 => self.tilt.d[j],
            4 => self.tilt.kappa * self.tilt.kappa,
            _ => 1.0,
        };
        if s > 0.0 {
            1.0 / s
        } else {
            1.0
        }
    }

    fn normalized(&self, cm: &ConstraintModel) -> Quadratic {
        scaled(&cm.model, self.row_scale(cm.index - 1))
    }

    pub fn linear_models(
        &self,
        d: &MomentDerivatives,
        wk: &DVector<f64>,
        dk: f64,
    ) -> Vec<ConstraintModel> {
        let g = self.values(d, wk, dk);
        let grads = self.gradients(d, wk);
        (0..5)
            .map(|j| {
                let q = stack(&grads[j], self.d_coef(j));
                let c = g[j] - grads[j].dot(wk) - self.d_coef(j) * dk;
                ConstraintModel {
                    index: j + 1,
                    model: Quadratic::linear(q, c),
                }
            })
            .collect()
    }

    pub fn quadratic_models(
        &self,
        d: &MomentDerivatives,
        wk: &DVector<f64>,
        dk: f64,
    ) -> Result<Vec<ConstraintModel>> {
        let n = self.n;
        let mut out = self.linear_models(d, wk, dk);
        let sigma2 = self.m.sigma() * 2.0;
        // g₂ and g₅ are convex quadratics and kept exact
        out[1].model = Quadratic::new(
            pad(&sigma2),
            stack(&DVector::zeros(n), self.tilt.d[1]),
            -self.phi0[1],
        );
        out[4].model = Quadratic::new(
            pad(&sigma2),
            stack(&(-(&sigma2 * &self.w0)), 0.0),
            self.w0.dot(&(self.m.sigma() * &self.w0)) - self.tilt.kappa * self.tilt.kappa,
        );
        let h3 = nearest_psd(&(-&d.hess3))?;
        let h4 = nearest_psd(&d.hess4)?;
        for (j, h) in [(2, h3), (3, h4)] {
            let hw = &h * wk;
            let lin = &out[j].model;
            let q = &lin.q - stack(&hw, 0.0);
            let c = lin.c + 0.5 * wk.dot(&hw);
            out[j].model = Quadratic::new(pad(&h), q, c);
        }
        Ok(out)
    }

    pub fn add_pinned(&self, layout: &Layout, cons: &mut LinearConstraintSystem) {
        if let Some(rows) = &self.pinned {
            for r in rows.row_iter() {
                let r = r.transpose();
                cons.push_eq(&layout.row(&r, 0.0, 0.0), r.dot(&self.w0));
            }
        }
    }

    /// Feasible set of the subproblems before the nonconvex constraints:
    /// leverage set, `δ ≥ 0`, `t ≥ 0`, exact `g₁` and the `κ = 0` pin.
    fn base_constraints(&self, layout: &Layout, g1: &Quadratic) -> Result<LinearConstraintSystem> {
        let mut cons = layout.w_set(self.leverage)?;
        let zero = DVector::zeros(self.n);
        cons.push_ineq(&layout.row(&zero, -1.0, 0.0), 0.0);
        if layout.t {
            cons.push_ineq(&layout.row(&zero, 0.0, -1.0), 0.0);
        }
        let e = embed(layout, &scaled(g1, self.row_scale(0)), 0.0);
        cons.push_ineq(&e.q, -e.c);
        self.add_pinned(layout, &mut cons);
        Ok(cons)
    }

    fn objective(&self, layout: &Layout, wk: &DVector<f64>, dk: f64) -> Quadratic {
        let tw = self.tilt.tau_w;
        let td = self.tilt.tau_delta;
        layout.quadratic(
            &(DMatrix::identity(self.n, self.n) * tw),
            &(wk * -tw),
            0.5 * tw * wk.norm_squared() + 0.5 * td * dk * dk,
            -1.0 - td * dk,
            td,
            0.0,
        )
    }

    /// `η` in normalized units, from the normalized `gⱼ(xᵏ)` over `set` and
    /// the optimal uniform relaxation `t*`.
    fn eta_from(&self, g: &[f64; 5], set: &[usize], t_star: f64) -> f64 {
        let worst = set
            .iter()
            .map(|&j| (self.row_scale(j) * g[j]).max(0.0))
            .fold(0.0, f64::max);
        ((1.0 - self.tilt.theta) * worst + self.tilt.theta * t_star.max(0.0)).max(0.0)
    }

    /// Relaxation level for the linearized subproblem, from an LP over
    /// `(w, u, δ, t)`.
    pub fn eta_linear(
        &self,
        g: &[f64; 5],
        models: &[ConstraintModel],
        iteration: usize,
        tol: f64,
    ) -> Result<f64> {
        let layout = Layout {
            n: self.n,
            lifted: self.leverage > 1.0,
            delta: true,
            t: true,
        };
        let mut cons = self.base_constraints(&layout, &models[0].model)?;
        for cm in &models[1..] {
            if cm.index == 5 && self.pinned.is_some() {
                continue;
            }
            let e = embed(&layout, &self.normalized(cm), -1.0);
            cons.push_ineq(&e.q, -e.c);
        }
        let c = layout.row(&DVector::zeros(self.n), 0.0, 1.0);
        let res = checked(solve_lp(&c, &cons, tol)?, "eta LP", iteration)?;
        Ok(self.eta_from(g, &[1, 2, 3, 4], res.x[layout.t_idx()]))
    }

    /// Relaxation level for the quadratic subproblem, from a QCQP over
    /// `(w, [u], δ, t)`.
    pub fn eta_quadratic(
        &self,
        g: &[f64; 5],
        models: &[ConstraintModel],
        hint: (&DVector<f64>, f64),
        iteration: usize,
        tol: f64,
    ) -> Result<f64> {
        let layout = Layout {
            n: self.n,
            lifted: self.leverage > 1.0,
            delta: true,
            t: true,
        };
        let cons = self.base_constraints(&layout, &models[0].model)?;
        let mut quads = self.exact_quadratics(&layout, models);
        let mut t0 = 0.0f64;
        for cm in &models[2..4] {
            let e = self.normalized(cm);
            t0 = t0.max(e.value(&stack(hint.0, hint.1)));
            quads.push(embed(&layout, &e, -1.0));
        }
        let objective = Quadratic::linear(layout.row(&DVector::zeros(self.n), 0.0, 1.0), 0.0);
        let p = QcqpProblem::new(objective, quads, cons)?;
        // strictly inside the normalized `g̃ⱼ ≤ t` so the barrier can start
        // from the hint
        let x0 = layout.point(hint.0, hint.1, 2.0 * t0 + 1e-3, self.leverage);
        let res = checked(solve_qcqp_from(&p, Some(&x0), tol)?, "eta QCQP", iteration)?;
        Ok(self.eta_from(g, &[2, 3], res.x[layout.t_idx()]))
    }

    /// `g₂ ≤ 0` and, unless pinned, `g₅ ≤ 0`.
    fn exact_quadratics(&self, layout: &Layout, models: &[ConstraintModel]) -> Vec<Quadratic> {
        let mut out = vec![embed(layout, &self.normalized(&models[1]), 0.0)];
        if self.pinned.is_none() {
            out.push(embed(layout, &self.normalized(&models[4]), 0.0));
        }
        out
    }

    fn step_linear(
        &self,
        d: &MomentDerivatives,
        wk: &DVector<f64>,
        dk: f64,
        k: usize,
        tol: f64,
    ) -> Result<(f64, DVector<f64>, f64)> {
        let g = self.values(d, wk, dk);
        let models = self.linear_models(d, wk, dk);
        let eta = self.eta_linear(&g, &models, k, tol)?;
        let layout = Layout {
            n: self.n,
            lifted: self.leverage > 1.0,
            delta: true,
            t: false,
        };
        let mut cons = self.base_constraints(&layout, &models[0].model)?;
        for cm in &models[1..] {
            if cm.index == 5 && self.pinned.is_some() {
                continue;
            }
            let e = embed(&layout, &self.normalized(cm), 0.0);
            cons.push_ineq(&e.q, eta - e.c);
        }
        let obj = self.objective(&layout, wk, dk);
        let qp = QpProblem::new(obj.q_mat, obj.q, cons)?;
        let res = checked(solve_qp(&qp, tol)?, "tilting QP", k)?;
        Ok((eta, layout.w(&res.x), layout.delta(&res.x)))
    }

    fn step_quadratic(
        &self,
        d: &MomentDerivatives,
        wk: &DVector<f64>,
        dk: f64,
        k: usize,
        tol: f64,
    ) -> Result<(f64, DVector<f64>, f64)> {
        let g = self.values(d, wk, dk);
        let models = self.quadratic_models(d, wk, dk)?;
        let eta = self.eta_quadratic(&g, &models, (wk, dk), k, tol)?;
        let layout = Layout {
            n: self.n,
            lifted: self.leverage > 1.0,
            delta: true,
            t: false,
        };
        let cons = self.base_constraints(&layout, &models[0].model)?;
        let mut quads = self.exact_quadratics(&layout, &models);
        for cm in &models[2..4] {
            let mut e = embed(&layout, &self.normalized(cm), 0.0);
            e.c -= eta;
            quads.push(e);
        }
        let p = QcqpProblem::new(self.objective(&layout, wk, dk), quads, cons)?;
        let x0 = layout.point(wk, dk, 0.0, self.leverage);
        let res = checked(solve_qcqp_from(&p, Some(&x0), tol)?, "tilting QCQP", k)?;
        Ok((eta, layout.w(&res.x), layout.delta(&res.x)))
    }

    /// Largest violation of the true constraints, the leverage set and `δ ≥ 0`.
    pub fn violation(&self, g: &[f64; 5], w: &DVector<f64>, delta: f64) -> f64 {
        let fs = FeasibleSet::new(self.leverage).expect("validated leverage");
        g.iter()
            .fold(fs.violation(w), |a, v| a.max(*v))
            .max(-delta)
            .max(0.0)
    }
}

fn stack(w: &DVector<f64>, delta: f64) -> DVector<f64> {
    let mut v = w.clone().resize_vertically(w.len() + 1, 0.0);
    v[w.len()] = delta;
    v
}

/// `n×n` block as an `(n+1)×(n+1)` matrix with a zero `δ` row and column.
fn pad(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut out = DMatrix::zeros(n + 1, n + 1);
    out.view_mut((0, 0), (n, n)).copy_from(a);
    out
}

/// A `(w, δ)` model placed in `layout`, with coefficient `t` on `t`.
fn embed(layout: &Layout, model: &Quadratic, t: f64) -> Quadratic {
    let n = layout.n;
    layout.quadratic(
        &model.q_mat.view((0, 0), (n, n)).into_owned(),
        &model.q.rows(0, n).into_owned(),
        model.c,
        model.q[n],
        model.q_mat[(n, n)],
        t,
    )
}

fn scaled(q: &Quadratic, s: f64) -> Quadratic {
    Quadratic::new(&q.q_mat * s, &q.q * s, q.c * s)
}

fn checked(
    res: SubsolverResult,
    problem: &'static str,
    iteration: usize,
) -> Result<SubsolverResult> {
    if res.is_optimal() {
        Ok(res)
    } else {
        Err(Error::Subsolver {
            problem,
            iteration,
            status: res.status,
        })
    }
}

/// `(g₁, …, g₅)` at `(w, δ)`.
pub fn tilting_constraints(
    w: &DVector<f64>,
    delta: f64,
    m: &MomentSet,
    tilt: &TiltingSpec,
) -> Result<[f64; 5]> {
    let phi0 = portfolio_moments(&tilt.w0.to_vector(), m)?;
    let d = MomentDerivatives::at(w, m)?;
    let ctx = Ctx {
        m,
        tilt,
        leverage: 1.0,
        n: m.n_assets(),
        w0: tilt.w0.to_vector(),
        phi0,
        pinned: None,
    };
    Ok(ctx.values(&d, w, delta))
}

/// First-order models of `g₁ … g₅` at `(wᵏ, δᵏ)`; `g₁` is already linear.
pub fn linear_constraint_models(
    wk: &DVector<f64>,
    delta_k: f64,
    m: &MomentSet,
    tilt: &TiltingSpec,
    fs: &FeasibleSet,
) -> Result<Vec<ConstraintModel>> {
    let ctx = Ctx::new(m, tilt, fs)?;
    Ok(ctx.linear_models(&MomentDerivatives::at(wk, m)?, wk, delta_k))
}

/// Convex models of `g₁ … g₅` at `(wᵏ, δᵏ)`: `g₁`, `g₂`, `g₅` exact, `g₃` and
/// `g₄` second order with PSD-projected Hessians.
pub fn quadratic_constraint_models(
    wk: &DVector<f64>,
    delta_k: f64,
    m: &MomentSet,
    tilt: &TiltingSpec,
    fs: &FeasibleSet,
) -> Result<Vec<ConstraintModel>> {
    let ctx = Ctx::new(m, tilt, fs)?;
    ctx.quadratic_models(&MomentDerivatives::at(wk, m)?, wk, delta_k)
}

/// `η = (1 − θ)·max_{j=2..5} ĝⱼ(wᵏ, δᵏ)₊ + θ·t*`, with `t*` the smallest
/// uniform relaxation of the linearized `ĝ₂ … ĝ₅`. Here `ĝⱼ = gⱼ/dⱼ` for
/// `j ≤ 4` and `ĝ₅ = g₅/κ²` (a zero divisor is replaced by 1).
pub fn eta_linear(
    wk: &DVector<f64>,
    delta_k: f64,
    m: &MomentSet,
    tilt: &TiltingSpec,
    fs: &FeasibleSet,
) -> Result<f64> {
    let ctx = Ctx::new(m, tilt, fs)?;
    let d = MomentDerivatives::at(wk, m)?;
    let models = ctx.linear_models(&d, wk, delta_k);
    ctx.eta_linear(&ctx.values(&d, wk, delta_k), &models, 0, DEFAULT_TOL)
}

/// `η = (1 − θ)·max_{j=3,4} ĝⱼ(wᵏ, δᵏ)₊ + θ·t*`, with `t*` the smallest
/// uniform relaxation of the quadratic models of `ĝ₃`, `ĝ₄`, normalized as
/// in [`eta_linear`].
pub fn eta_quadratic(
    wk: &DVector<f64>,
    delta_k: f64,
    m: &MomentSet,
    tilt: &TiltingSpec,
    fs: &FeasibleSet,
) -> Result<f64> {
    let ctx = Ctx::new(m, tilt, fs)?;
    let d = MomentDerivatives::at(wk, m)?;
    let models = ctx.quadratic_models(&d, wk, delta_k)?;
    ctx.eta_quadratic(
        &ctx.values(&d, wk, delta_k),
        &models,
        (wk, delta_k),
        0,
        DEFAULT_TOL,
    )
}

/// L-MVSKT: every nonconvex constraint linearized, one LP and one QP per step.
pub fn solve_tilting_l(
    m: &MomentSet,
    tilt: &TiltingSpec,
    fs: &FeasibleSet,
    opts: &TiltingOptions,
) -> Result<SolveReport> {
    solve_tilting(Method::Lmvskt, m, tilt, fs, opts)
}

/// Q-MVSKT: quadratic constraint models, two QCQPs per step.
pub fn solve_tilting_q(
    m: &MomentSet,
    tilt: &TiltingSpec,
    fs: &FeasibleSet,
    opts: &TiltingOptions,
) -> Result<SolveReport> {
    solve_tilting(Method::Qmvskt, m, tilt, fs, opts)
}

pub fn solve_tilting(
    method: Method,
    m: &MomentSet,
    tilt: &TiltingSpec,
    fs: &FeasibleSet,
    opts: &TiltingOptions,
) -> Result<SolveReport> {
    if !method.is_tilting() {
        return Err(Error::InvalidParameter(format!(
            "{method} is not a tilting method"
        )));
    }
    if !(opts.sub_tol > 0.0 && opts.stat_tol > 0.0 && opts.stop_tol > 0.0) {
        return Err(Error::InvalidParameter("tolerances must be > 0".into()));
    }
    let start = Instant::now();
    let ms = |s: &Instant| s.elapsed().as_secs_f64() * 1e3;
    let ctx = Ctx::new(m, tilt, fs)?;
    let mut w = ctx.w0.clone();
    let mut delta = 0.0;
    let mut d = MomentDerivatives::at(&w, m)?;
    let mut g = ctx.values(&d, &w, delta);
    let mut trace = vec![IterationRecord {
        k: 0,
        objective: delta,
        gamma: 0.0,
        eta: None,
        max_violation: ctx.violation(&g, &w, delta),
        stationarity: 0.0,
        wall_ms: ms(&start),
    }];
    let mut calls = 0;
    let mut termination = Termination::MaxIter;
    let mut final_kkt = None;
    let mut gammas = opts.schedule.iter();
    for k in 0..opts.max_iter {
        let (eta, w_hat, delta_hat) = match method {
            Method::Lmvskt => ctx.step_linear(&d, &w, delta, k + 1, opts.sub_tol)?,
            _ => ctx.step_quadratic(&d, &w, delta, k + 1, opts.sub_tol)?,
        };
        calls += 2;
        // a `δ̂` within the subsolver's accuracy of zero is zero
        let delta_hat = if delta_hat.abs() <= opts.sub_tol {
            0.0
        } else {
            delta_hat
        };
        let gamma = gammas.next().unwrap_or(0.0);
        let w_next = &w + (&w_hat - &w) * gamma;
        let delta_next = delta + gamma * (delta_hat - delta);
        let step = (&w_hat - &w).amax().max((delta_hat - delta).abs());
        let d_next = MomentDerivatives::at(&w_next, m)?;
        let g_next = ctx.values(&d_next, &w_next, delta_next);
        trace.push(IterationRecord {
            k: k + 1,
            objective: delta_next,
            gamma,
            eta: Some(eta),
            max_violation: ctx.violation(&g_next, &w_next, delta_next),
            stationarity: step,
            wall_ms: ms(&start),
        });
        let x_prev: Vec<f64> = w.iter().copied().chain([delta]).collect();
        let x_next: Vec<f64> = w_next.iter().copied().chain([delta_next]).collect();
        let stop = stop_check_with(&x_prev, &x_next, -delta, -delta_next, opts.stop_tol);
        w = w_next;
        delta = delta_next;
        d = d_next;
        g = g_next;
        if stop {
            let r = kkt_residual(&ctx, &d, &w, delta)?;
            final_kkt = Some(r);
            if r <= opts.stat_tol {
                termination = Termination::Converged;
                break;
            }
        }
    }
    let stationarity = match (termination, final_kkt) {
        (Termination::Converged, Some(r)) => r,
        _ => kkt_residual(&ctx, &d, &w, delta)?,
    };
    Ok(SolveReport {
        method,
        w_final: Weights::from(w.clone()),
        delta_final: Some(delta),
        objective_final: delta,
        moments_final: d.values,
        termination,
        iterations: trace.len() - 1,
        subsolver_calls: calls,
        max_violation: ctx.violation(&g, &w, delta),
        stationarity,
        wall_ms: ms(&start),
        trace,
    })
}
