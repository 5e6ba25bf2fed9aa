use nalgebra::{DMatrix, DVector};

use super::kkt::{qp_residual, KktResidual};
use super::{reduce_equalities, Duals, LinearConstraintSystem, SolveStatus, SubsolverResult};
use crate::error::{Error, Result};

const MAX_ITER: usize = 200;
const STEP_FRACTION: f64 = 0.99;
const REG: f64 = 1e-13;
const BLOWUP: f64 = 1e12;
/// Rows with `‖aᵢ‖∞ ≤ FLAT_ROW·|bᵢ|` cannot bind below `‖x‖∞ = BLOWUP`.
const FLAT_ROW: f64 = 1.0 / BLOWUP;
const LP_REG: f64 = 1e-12;
const INNER: f64 = 1e-3;

/// `min ½xᵀQx + qᵀx` subject to `cons`.
#[derive(Debug, Clone)]
pub struct QpProblem {
    pub q_mat: DMatrix<f64>,
    pub q: DVector<f64>,
    pub cons: LinearConstraintSystem,
}

impl QpProblem {
    pub fn new(q_mat: DMatrix<f64>, q: DVector<f64>, cons: LinearConstraintSystem) -> Result<Self> {
        let p = Self { q_mat, q, cons };
        p.validate()?;
        Ok(p)
    }

    pub fn n_vars(&self) -> usize {
        self.q.len()
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.q_mat * x)) + self.q.dot(x)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.q.len();
        if self.q_mat.shape() != (n, n) {
            return Err(Error::Dimension {
                expected: n * n,
                found: self.q_mat.len(),
            });
        }
        if self.cons.n_vars() != n {
            return Err(Error::Dimension {
                expected: n,
                found: self.cons.n_vars(),
            });
        }
        self.cons.validate()?;
        if self
            .q_mat
            .iter()
            .chain(self.q.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::Data("QP data has non-finite entries".into()));
        }
        let scale = self.q_mat.amax().max(1.0);
        for i in 0..n {
            for j in 0..i {
                if (self.q_mat[(i, j)] - self.q_mat[(j, i)]).abs() > 1e-10 * scale {
                    return Err(Error::InvalidParameter("QP matrix is not symmetric".into()));
                }
            }
        }
        Ok(())
    }
}

/// Row- and objective-scaled copy of a QP together with the factors needed
/// to map multipliers back.
struct Scaled {
    p: DMatrix<f64>,
    q: DVector<f64>,
    a: DMatrix<f64>,
    b: DVector<f64>,
    g: DMatrix<f64>,
    h: DVector<f64>,
    obj_scale: f64,
    eq_map: DMatrix<f64>,
    in_rows: Vec<(usize, f64)>,
}

enum Prescreen {
    Ok(Scaled),
    Infeasible,
}

fn scale_problem(prob: &QpProblem) -> Prescreen {
    let n = prob.n_vars();
    let c = &prob.cons;
    let mut obj = prob.q_mat.amax().max(prob.q.amax());
    if obj == 0.0 {
        obj = 1.0;
    }
    let obj_scale = 1.0 / obj;

    let eq = reduce_equalities(&c.a_eq, &c.b_eq);
    if !eq.consistent {
        return Prescreen::Infeasible;
    }
    let mut in_rows = Vec::new();
    for i in 0..c.a_in.nrows() {
        let norm = c.a_in.row(i).amax();
        // a row this flat only binds far outside any sensible iterate
        if norm == 0.0 || norm <= FLAT_ROW * c.b_in[i].abs() {
            if c.b_in[i] < -1e-12 {
                return Prescreen::Infeasible;
            }
            continue;
        }
        in_rows.push((i, 1.0 / norm));
    }
    let mut g = DMatrix::zeros(in_rows.len(), n);
    let mut h = DVector::zeros(in_rows.len());
    for (r, &(i, s)) in in_rows.iter().enumerate() {
        g.row_mut(r).copy_from(&(c.a_in.row(i) * s));
        h[r] = c.b_in[i] * s;
    }
    Prescreen::Ok(Scaled {
        p: &prob.q_mat * obj_scale,
        q: &prob.q * obj_scale,
        a: eq.a,
        b: eq.b,
        g,
        h,
        obj_scale,
        eq_map: eq.map,
        in_rows,
    })
}

/// Solves a convex QP with a primal-dual interior point method using
/// Mehrotra's predictor-corrector. The status is `Optimal` only when the
/// KKT residual in the caller's units is at most `tol`.
pub fn solve_qp(prob: &QpProblem, tol: f64) -> Result<SubsolverResult> {
    prob.validate()?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be > 0, got {tol}"
        )));
    }
    let n = prob.n_vars();
    let sp = match scale_problem(prob) {
        Prescreen::Ok(s) => s,
        Prescreen::Infeasible => {
            return Ok(finish(
                prob,
                DVector::zeros(n),
                None,
                SolveStatus::Infeasible,
                0,
            ));
        }
    };
    Ok(ipm(prob, &sp, tol))
}

/// `min cᵀx` subject to `cons`, through the QP core with a `1e-12·I`
/// quadratic term.
pub fn solve_lp(
    c: &DVector<f64>,
    cons: &LinearConstraintSystem,
    tol: f64,
) -> Result<SubsolverResult> {
    let n = c.len();
    let prob = QpProblem::new(DMatrix::identity(n, n) * LP_REG, c.clone(), cons.clone())?;
    solve_qp(&prob, tol)
}

struct Iterate {
    x: DVector<f64>,
    y: DVector<f64>,
    z: DVector<f64>,
    s: DVector<f64>,
}

fn ipm(prob: &QpProblem, sp: &Scaled, tol: f64) -> SubsolverResult {
    let n = sp.q.len();
    let p_eq = sp.a.nrows();
    let m = sp.g.nrows();

    let Some(mut it) = initial_point(sp) else {
        return finish(prob, DVector::zeros(n), None, SolveStatus::MaxIter, 0);
    };
    let mut best: Option<(f64, Iterate)> = None;
    let mut iters = 0;

    for iter in 0..MAX_ITER {
        iters = iter + 1;
        let r_d = &sp.p * &it.x + &sp.q + sp.a.transpose() * &it.y + sp.g.transpose() * &it.z;
        let r_p = &sp.a * &it.x - &sp.b;
        let r_i = &sp.g * &it.x + &it.s - &sp.h;
        let mu = if m > 0 {
            it.s.dot(&it.z) / m as f64
        } else {
            0.0
        };

        let scaled_res = r_d
            .amax()
            .max(if p_eq > 0 { r_p.amax() } else { 0.0 })
            .max(if m > 0 { r_i.amax() } else { 0.0 })
            .max(mu);
        if scaled_res <= tol {
            let (x, duals) = unscale(sp, &it);
            let res = qp_residual(prob, &x, &duals).max();
            // polish well past `tol` so vertex solutions come out sharp
            if res <= tol && scaled_res <= INNER * tol {
                return finish(prob, x, Some(duals), SolveStatus::Optimal, iter);
            }
            if best.as_ref().is_none_or(|(b, _)| res < *b) {
                best = Some((res, clone_iterate(&it)));
            }
        }

        // past this point the iterates only drift; fall back to the best one
        if best.is_some() && (mu < INNER * INNER * tol || it.z.amax() > BLOWUP) {
            break;
        }
        if it.x.amax() > BLOWUP {
            return finish(prob, it.x.clone(), None, SolveStatus::Unbounded, iter);
        }
        if it.z.amax() > BLOWUP || (p_eq > 0 && it.y.amax() > BLOWUP) {
            return finish(prob, it.x.clone(), None, SolveStatus::Infeasible, iter);
        }

        let w = it.z.component_div(&it.s);
        let Some(kkt) = factor(sp, &w) else {
            break;
        };

        // predictor
        let r_c = it.s.component_mul(&it.z);
        let Some((_, _, dz_a, ds_a)) = solve_newton(sp, &kkt, &it, &w, &r_d, &r_p, &r_i, &r_c)
        else {
            break;
        };
        let alpha_aff = max_step(&it.s, &ds_a).min(max_step(&it.z, &dz_a));
        let sigma = if m > 0 {
            let mu_aff = (&it.s + &ds_a * alpha_aff).dot(&(&it.z + &dz_a * alpha_aff)) / m as f64;
            (mu_aff / mu).clamp(0.0, 1.0).powi(3)
        } else {
            0.0
        };

        // corrector
        let r_c = &r_c + ds_a.component_mul(&dz_a) - DVector::from_element(m, sigma * mu);
        let Some((dx, dy, dz, ds)) = solve_newton(sp, &kkt, &it, &w, &r_d, &r_p, &r_i, &r_c) else {
            break;
        };
        let alpha = (STEP_FRACTION * max_step(&it.s, &ds).min(max_step(&it.z, &dz))).min(1.0);
        if alpha < 1e-12 {
            break;
        }

        it.x += &dx * alpha;
        it.y += &dy * alpha;
        it.z += &dz * alpha;
        it.s += &ds * alpha;
    }

    let (x, duals) = unscale(sp, &it);
    let res = qp_residual(prob, &x, &duals).max();
    let (x, duals, res) = match best {
        Some((b, bi)) if b < res => {
            let (x, d) = unscale(sp, &bi);
            (x, d, b)
        }
        _ => (x, duals, res),
    };
    let (x, duals, res) = match polish(prob, &x, &duals) {
        Some((px, pd, pr)) if pr < res => (px, pd, pr),
        _ => (x, duals, res),
    };
    if res <= tol {
        return finish(prob, x, Some(duals), SolveStatus::Optimal, iters);
    }
    let primal = sp.a.nrows() > 0 && (&sp.a * &x - &sp.b).amax() > 1e-6
        || (&sp.g * &x - &sp.h).iter().any(|v| *v > 1e-6);
    let status = if primal {
        SolveStatus::Infeasible
    } else {
        SolveStatus::MaxIter
    };
    finish(prob, x, Some(duals), status, iters)
}

/// Re-solves the equality-constrained QP on a guessed active set, for runs
/// where the interior iterates stall just short of the tolerance. Returns the
/// best candidate and its KKT residual.
fn polish(prob: &QpProblem, x: &DVector<f64>, duals: &Duals) -> Option<(DVector<f64>, Duals, f64)> {
    let n = prob.n_vars();
    let c = &prob.cons;
    let p_eq = c.a_eq.nrows();
    let slack: Vec<f64> = (0..c.a_in.nrows())
        .map(|i| c.b_in[i] - c.a_in.row(i).dot(&x.transpose()))
        .collect();
    let norms: Vec<f64> = (0..c.a_in.nrows()).map(|i| c.a_in.row(i).amax()).collect();
    let by_dual: Vec<usize> = (0..slack.len())
        .filter(|&i| norms[i] > 0.0 && duals.ineq[i] * norms[i] > slack[i] / norms[i])
        .collect();
    let by_slack: Vec<usize> = (0..slack.len())
        .filter(|&i| norms[i] > 0.0 && slack[i] <= 1e-7 * norms[i] * (1.0 + x.amax()))
        .collect();
    let mut best: Option<(DVector<f64>, Duals, f64)> = None;
    for active in [by_dual, by_slack] {
        let k = p_eq + active.len();
        let mut kkt = DMatrix::zeros(n + k, n + k);
        let mut rhs = DVector::zeros(n + k);
        kkt.view_mut((0, 0), (n, n)).copy_from(&prob.q_mat);
        rhs.rows_mut(0, n).copy_from(&(-&prob.q));
        for r in 0..k {
            let (row, b) = if r < p_eq {
                (c.a_eq.row(r).into_owned(), c.b_eq[r])
            } else {
                let i = active[r - p_eq];
                (c.a_in.row(i).into_owned(), c.b_in[i])
            };
            kkt.view_mut((n + r, 0), (1, n)).copy_from(&row);
            kkt.view_mut((0, n + r), (n, 1)).copy_from(&row.transpose());
            rhs[n + r] = b;
        }
        let svd = kkt.svd(true, true);
        let eps = 1e-13 * svd.singular_values.amax();
        let Ok(sol) = svd.solve(&rhs, eps) else {
            continue;
        };
        if sol.iter().any(|v| !v.is_finite()) {
            continue;
        }
        let mut d = Duals {
            eq: sol.rows(n, p_eq).into_owned(),
            ineq: DVector::zeros(c.a_in.nrows()),
            quad: DVector::zeros(0),
        };
        for (r, &i) in active.iter().enumerate() {
            d.ineq[i] = sol[n + p_eq + r];
        }
        let px = sol.rows(0, n).into_owned();
        let res = qp_residual(prob, &px, &d).max();
        if best.as_ref().is_none_or(|b| res < b.2) {
            best = Some((px, d, res));
        }
    }
    best
}

fn clone_iterate(it: &Iterate) -> Iterate {
    Iterate {
        x: it.x.clone(),
        y: it.y.clone(),
        z: it.z.clone(),
        s: it.s.clone(),
    }
}

fn initial_point(sp: &Scaled) -> Option<Iterate> {
    let n = sp.q.len();
    let p_eq = sp.a.nrows();
    let m = sp.g.nrows();
    let dim = n + p_eq;
    let mut k = DMatrix::zeros(dim, dim);
    let h = &sp.p + sp.g.transpose() * &sp.g + DMatrix::identity(n, n) * 1e-8;
    k.view_mut((0, 0), (n, n)).copy_from(&h);
    k.view_mut((n, 0), (p_eq, n)).copy_from(&sp.a);
    k.view_mut((0, n), (n, p_eq)).copy_from(&sp.a.transpose());
    for i in 0..p_eq {
        k[(n + i, n + i)] = -1e-10;
    }
    let mut rhs = DVector::zeros(dim);
    rhs.rows_mut(0, n)
        .copy_from(&(-&sp.q + sp.g.transpose() * &sp.h));
    rhs.rows_mut(n, p_eq).copy_from(&sp.b);
    let sol = k.lu().solve(&rhs)?;
    let x = sol.rows(0, n).into_owned();
    let mut s = &sp.h - &sp.g * &x;
    if m > 0 {
        let min_s = s.min();
        if min_s < 1.0 {
            s.add_scalar_mut(1.0 - min_s);
        }
    }
    Some(Iterate {
        x,
        y: DVector::zeros(p_eq),
        z: DVector::from_element(m, 1.0),
        s,
    })
}

struct Factored {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    k: DMatrix<f64>,
}

/// Reduced KKT matrix `[P + GᵀWG, Aᵀ; A, 0]` with `W = Z S⁻¹`.
fn factor(sp: &Scaled, w: &DVector<f64>) -> Option<Factored> {
    let n = sp.q.len();
    let p_eq = sp.a.nrows();
    let dim = n + p_eq;
    let mut k = DMatrix::zeros(dim, dim);
    let mut gw = sp.g.clone();
    for (r, wr) in w.iter().enumerate() {
        gw.row_mut(r).scale_mut(*wr);
    }
    let h = &sp.p + sp.g.transpose() * gw;
    k.view_mut((0, 0), (n, n)).copy_from(&h);
    k.view_mut((n, 0), (p_eq, n)).copy_from(&sp.a);
    k.view_mut((0, n), (n, p_eq)).copy_from(&sp.a.transpose());
    let mut kr = k.clone();
    for i in 0..n {
        kr[(i, i)] += REG;
    }
    for i in 0..p_eq {
        kr[(n + i, n + i)] -= REG;
    }
    let lu = kr.lu();
    if !lu.is_invertible() {
        return None;
    }
    Some(Factored { lu, k })
}

#[allow(clippy::too_many_arguments)]
fn solve_newton(
    sp: &Scaled,
    f: &Factored,
    it: &Iterate,
    w: &DVector<f64>,
    r_d: &DVector<f64>,
    r_p: &DVector<f64>,
    r_i: &DVector<f64>,
    r_c: &DVector<f64>,
) -> Option<(DVector<f64>, DVector<f64>, DVector<f64>, DVector<f64>)> {
    let n = sp.q.len();
    let p_eq = sp.a.nrows();
    // Δz = WGΔx + S⁻¹(Z r_i − r_c)
    let t = (it.z.component_mul(r_i) - r_c).component_div(&it.s);
    let mut rhs = DVector::zeros(n + p_eq);
    rhs.rows_mut(0, n)
        .copy_from(&(-r_d - sp.g.transpose() * &t));
    rhs.rows_mut(n, p_eq).copy_from(&(-r_p));
    let mut sol = f.lu.solve(&rhs)?;
    // iterative refinement against the unregularized matrix
    for _ in 0..2 {
        let res = &rhs - &f.k * &sol;
        sol += f.lu.solve(&res)?;
    }
    if sol.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let dx = sol.rows(0, n).into_owned();
    let dy = sol.rows(n, p_eq).into_owned();
    let gdx = &sp.g * &dx;
    let dz = w.component_mul(&gdx) + t;
    let ds = -r_i - gdx;
    Some((dx, dy, dz, ds))
}

/// Largest `α ∈ [0, 1]` with `v + α·dv ≥ 0`.
fn max_step(v: &DVector<f64>, dv: &DVector<f64>) -> f64 {
    v.iter()
        .zip(dv.iter())
        .filter(|(_, d)| **d < 0.0)
        .map(|(x, d)| -x / d)
        .fold(1.0, f64::min)
}

fn unscale(sp: &Scaled, it: &Iterate) -> (DVector<f64>, Duals) {
    (it.x.clone(), unscale_duals(sp, &it.y, &it.z))
}

fn unscale_duals(sp: &Scaled, y: &DVector<f64>, z: &DVector<f64>) -> Duals {
    let n_in = sp.in_rows.iter().map(|r| r.0 + 1).max().unwrap_or(0);
    let eq = sp.eq_map.transpose() * y / sp.obj_scale;
    let mut ineq = DVector::zeros(n_in);
    for (r, &(i, s)) in sp.in_rows.iter().enumerate() {
        ineq[i] = z[r] * s / sp.obj_scale;
    }
    Duals {
        eq,
        ineq,
        quad: DVector::zeros(0),
    }
}

fn finish(
    prob: &QpProblem,
    x: DVector<f64>,
    duals: Option<Duals>,
    status: SolveStatus,
    iterations: usize,
) -> SubsolverResult {
    let mut duals = duals.unwrap_or_else(|| Duals {
        eq: DVector::zeros(prob.cons.a_eq.nrows()),
        ineq: DVector::zeros(prob.cons.a_in.nrows()),
        quad: DVector::zeros(0),
    });
    // rows dropped as empty still get a (zero) multiplier slot
    duals.eq = duals.eq.resize_vertically(prob.cons.a_eq.nrows(), 0.0);
    duals.ineq = duals.ineq.resize_vertically(prob.cons.a_in.nrows(), 0.0);
    let kkt: KktResidual = qp_residual(prob, &x, &duals);
    SubsolverResult {
        objective: prob.objective(&x),
        kkt_residual: kkt.max(),
        x,
        status,
        iterations,
        duals,
        stage_objectives: Vec::new(),
    }
}
