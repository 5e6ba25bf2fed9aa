//! Stationarity certificates evaluated on the original problems rather
//! than on the surrogates.

use nalgebra::{DMatrix, DVector};

use super::layout::Layout;
use super::tilting::{Ctx, TiltingSpec};
use crate::error::{Error, Result};
use crate::moments::{FeasibleSet, MomentDerivatives, MomentSet};
use crate::subsolvers::{lift_l1, nnls, solve_qp, LinearConstraintSystem, QpProblem, DEFAULT_TOL};

/// `‖w − Proj_𝒲(w − ∇f(w))‖∞`, with the projection solved as a QP over the
/// lifted leverage set.
pub fn projected_gradient_residual(
    w: &DVector<f64>,
    grad: &DVector<f64>,
    fs: &FeasibleSet,
) -> Result<f64> {
    let n = w.len();
    if grad.len() != n {
        return Err(Error::Dimension {
            expected: n,
            found: grad.len(),
        });
    }
    let layout = Layout {
        n,
        lifted: fs.leverage() > 1.0,
        delta: false,
        t: false,
    };
    let target = w - grad;
    let obj = layout.quadratic(&DMatrix::identity(n, n), &(-target), 0.0, 0.0, 0.0, 0.0);
    let res = solve_qp(
        &QpProblem::new(obj.q_mat, obj.q, layout.w_set(fs.leverage())?)?,
        DEFAULT_TOL,
    )?;
    if !res.is_optimal() {
        return Err(Error::Subsolver {
            problem: "projection QP",
            iteration: 0,
            status: res.status,
        });
    }
    Ok((w - layout.w(&res.x)).amax())
}

/// KKT residual of `(w, δ)` for the tilting problem with its true
/// constraints.
///
/// Every constraint row is divided by the larger of its gradient ∞-norm and
/// its absolute value, then the multipliers are fitted by nonnegative least
/// squares over the stationarity and complementarity equations. The result is the largest of
/// the fitted stationarity, complementarity and primal residuals.
pub fn tilting_kkt_residual(
    w: &DVector<f64>,
    delta: f64,
    m: &MomentSet,
    tilt: &TiltingSpec,
    fs: &FeasibleSet,
) -> Result<f64> {
    let ctx = Ctx::new(m, tilt, fs)?;
    if w.len() != ctx.n {
        return Err(Error::Dimension {
            expected: ctx.n,
            found: w.len(),
        });
    }
    kkt_residual(&ctx, &MomentDerivatives::at(w, m)?, w, delta)
}

pub(super) fn kkt_residual(
    ctx: &Ctx<'_>,
    d: &MomentDerivatives,
    w: &DVector<f64>,
    delta: f64,
) -> Result<f64> {
    let n = ctx.n;
    let layout = Layout {
        n,
        lifted: true,
        delta: true,
        t: false,
    };
    let dim = layout.dim();
    // u = |w| leaves every lifted row that can be active at w active
    let mut x = layout.point(w, delta, 0.0, 1.0);
    for i in 0..n {
        x[n + i] = w[i].abs();
    }

    let mut cons = lift_l1(n, ctx.leverage)?.with_extra_vars(1);
    cons.push_ineq(&layout.row(&DVector::zeros(n), -1.0, 0.0), 0.0);
    ctx.add_pinned(&layout, &mut cons);

    // (gradient, value) of each inequality, normalised
    let mut ineq: Vec<(DVector<f64>, f64)> = (0..cons.a_in.nrows())
        .map(|i| {
            let a = cons.a_in.row(i).transpose();
            let v = a.dot(&x) - cons.b_in[i];
            (a, v)
        })
        .collect();
    let g = ctx.values(d, w, delta);
    let grads = ctx.gradients(d, w);
    for j in 0..5 {
        if j == 4 && ctx.pinned.is_some() {
            continue;
        }
        ineq.push((layout.row(&grads[j], ctx.d_coef(j), 0.0), g[j]));
    }
    let mut eq: Vec<(DVector<f64>, f64)> = (0..cons.a_eq.nrows())
        .map(|i| {
            let a = cons.a_eq.row(i).transpose();
            let v = a.dot(&x) - cons.b_eq[i];
            (a, v)
        })
        .collect();
    for (a, v) in ineq.iter_mut().chain(eq.iter_mut()) {
        let s = a.amax().max(v.abs());
        if s > 0.0 {
            *a /= s;
            *v /= s;
        }
    }

    let primal = ineq
        .iter()
        .map(|(_, v)| v.max(0.0))
        .chain(eq.iter().map(|(_, v)| v.abs()))
        .fold(0.0, f64::max);

    // min ½‖Mz − b‖² over z = (λ ≥ 0, ν), rows = stationarity then complementarity
    let (ni, ne) = (ineq.len(), eq.len());
    let mut mat = DMatrix::zeros(dim + ni, ni + ne);
    for (c, (a, v)) in ineq.iter().enumerate() {
        mat.view_mut((0, c), (dim, 1)).copy_from(a);
        mat[(dim + c, c)] = *v;
    }
    for (c, (a, _)) in eq.iter().enumerate() {
        mat.view_mut((0, ni + c), (dim, 1)).copy_from(a);
    }
    let mut b = DVector::zeros(dim + ni);
    b[layout.delta_idx()] = 1.0;
    let mut z = match nnls(&mat, &b, ni) {
        Some(z) => z,
        None => fit_by_qp(&mat, &b, ni, ne)?,
    };
    for i in 0..ni {
        z[i] = z[i].max(0.0);
    }
    let r = &mat * &z - &b;
    let stationarity = r.rows(0, dim).amax();
    let complementarity = r.rows(dim, ni).amax();
    Ok(stationarity.max(complementarity).max(primal))
}

/// The multiplier fit as a ridge-regularised QP, for when the active-set
/// solver fails.
fn fit_by_qp(mat: &DMatrix<f64>, b: &DVector<f64>, ni: usize, ne: usize) -> Result<DVector<f64>> {
    let mut p = mat.transpose() * mat;
    p = (&p + p.transpose()) * 0.5;
    let ridge = 1e-14 * (1.0 + p.diagonal().amax());
    for i in 0..ni + ne {
        p[(i, i)] += ridge;
    }
    let q = -(mat.transpose() * b);
    let mut nonneg = LinearConstraintSystem::empty(ni + ne);
    for i in 0..ni {
        let mut r = DVector::zeros(ni + ne);
        r[i] = -1.0;
        nonneg.push_ineq(&r, 0.0);
    }
    let res = solve_qp(&QpProblem::new(p, q, nonneg)?, DEFAULT_TOL)?;
    if !res.is_optimal() {
        return Err(Error::Subsolver {
            problem: "multiplier fit",
            iteration: 0,
            status: res.status,
        });
    }
    Ok(res.x)
}
