use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::kkt::qcqp_residual;
use super::{nnls, reduce_equalities, Duals, LinearConstraintSystem, SolveStatus, SubsolverResult};
use crate::error::{Error, Result};

const T_FACTOR: f64 = 10.0;
const MAX_NEWTON: usize = 60;
const MAX_TOTAL_NEWTON: usize = 2000;
const ARMIJO: f64 = 0.25;
const NEWTON_EPS: f64 = 1e-20;
/// Phase-I optima at or below this (in normalised units) are treated as
/// feasible with an empty interior and solved with relaxed constraints.
const RELAX_LIMIT: f64 = 1e-9;
const RELAX_MARGIN: f64 = 1e-13;
const BLOWUP: f64 = 1e12;
/// Radius of the phase-I search ball, relative to `1 + ‖x₀‖∞`.
const PHASE_ONE_RADIUS: f64 = 1e4;
/// Extra barrier rounds allowed when the KKT residual misses the tolerance.
const EXTRA_STAGES: usize = 3;
/// An optimal barrier run is certified when its recovered multipliers meet
/// `KKT_SLACK·tol`; the gap bound alone already meets `tol`.
const KKT_SLACK: f64 = 10.0;
/// Normalised rows with `|f̂ᵢ| ≤ ACTIVE` are treated as active when the
/// multipliers are refined.
const ACTIVE: f64 = 1e-6;

/// `½xᵀQx + qᵀx + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    pub q_mat: DMatrix<f64>,
    pub q: DVector<f64>,
    pub c: f64,
}

impl Quadratic {
    pub fn new(q_mat: DMatrix<f64>, q: DVector<f64>, c: f64) -> Self {
        Self { q_mat, q, c }
    }

    pub fn linear(q: DVector<f64>, c: f64) -> Self {
        let n = q.len();
        Self {
            q_mat: DMatrix::zeros(n, n),
            q,
            c,
        }
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.q_mat * x)) + self.q.dot(x) + self.c
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.q_mat * x + &self.q
    }

    fn is_linear(&self) -> bool {
        self.q_mat.iter().all(|v| *v == 0.0)
    }
}

/// `min f₀(x)` subject to `fᵢ(x) ≤ 0` for convex quadratics `fᵢ` and `cons`.
#[derive(Debug, Clone)]
pub struct QcqpProblem {
    pub objective: Quadratic,
    pub constraints: Vec<Quadratic>,
    pub cons: LinearConstraintSystem,
}

impl QcqpProblem {
    pub fn new(
        objective: Quadratic,
        constraints: Vec<Quadratic>,
        cons: LinearConstraintSystem,
    ) -> Result<Self> {
        let p = Self {
            objective,
            constraints,
            cons,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn n_vars(&self) -> usize {
        self.objective.q.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_vars();
        self.cons.validate()?;
        if self.cons.n_vars() != n {
            return Err(Error::Dimension {
                expected: n,
                found: self.cons.n_vars(),
            });
        }
        for f in std::iter::once(&self.objective).chain(&self.constraints) {
            if f.q.len() != n || f.q_mat.shape() != (n, n) {
                return Err(Error::Dimension {
                    expected: n,
                    found: f.q.len(),
                });
            }
            if f.q_mat.iter().chain(f.q.iter()).any(|v| !v.is_finite()) || !f.c.is_finite() {
                return Err(Error::Data("QCQP data has non-finite entries".into()));
            }
            if !f.is_linear() {
                check_psd(&f.q_mat)?;
            }
        }
        Ok(())
    }

    /// Largest violation over quadratic and linear constraints.
    pub fn violation(&self, x: &DVector<f64>) -> f64 {
        self.constraints
            .iter()
            .map(|c| c.value(x))
            .fold(self.cons.violation(x), f64::max)
    }
}

fn check_psd(m: &DMatrix<f64>) -> Result<()> {
    let scale = m.amax();
    for i in 0..m.nrows() {
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-10 * scale {
                return Err(Error::InvalidParameter(
                    "quadratic matrix is not symmetric".into(),
                ));
            }
        }
    }
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, 0)
        .ok_or_else(|| Error::Eigen("eigensolver did not converge".into()))?;
    if eig.eigenvalues.min() < -1e-10 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::InvalidParameter(format!(
            "quadratic matrix is not PSD (min eigenvalue {:e})",
            eig.eigenvalues.min()
        )));
    }
    Ok(())
}

/// Where a barrier row came from in the caller's problem.
#[derive(Debug, Clone, Copy)]
enum Origin {
    Quad(usize),
    Lin(usize),
    Aux,
}

/// A normalised inequality `½xᵀQx + aᵀx + c ≤ 0`.
#[derive(Debug, Clone)]
struct Row {
    q_mat: Option<DMatrix<f64>>,
    a: DVector<f64>,
    c: f64,
    /// normalised = scale · original
    scale: f64,
    origin: Origin,
}

impl Row {
    fn value(&self, x: &DVector<f64>) -> f64 {
        let quad = self.q_mat.as_ref().map_or(0.0, |q| 0.5 * x.dot(&(q * x)));
        quad + self.a.dot(x) + self.c
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        match &self.q_mat {
            Some(q) => q * x + &self.a,
            None => self.a.clone(),
        }
    }

    fn curvature(&self, d: &DVector<f64>) -> f64 {
        self.q_mat.as_ref().map_or(0.0, |q| d.dot(&(q * d)))
    }
}

struct Barrier {
    obj_q: DMatrix<f64>,
    obj_a: DVector<f64>,
    rows: Vec<Row>,
    a: DMatrix<f64>,
    b: DVector<f64>,
}

impl Barrier {
    fn n(&self) -> usize {
        self.obj_a.len()
    }

    fn obj_value(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.obj_q * x)) + self.obj_a.dot(x)
    }
}

struct CenterOutcome {
    x: DVector<f64>,
    nu: DVector<f64>,
    steps: usize,
    stopped_early: bool,
}

/// Damped Newton centering of `t·f₀ − Σ log(−fᵢ)` under `Ax = b`.
fn center<F: Fn(&DVector<f64>) -> bool>(
    bp: &Barrier,
    mut x: DVector<f64>,
    t: f64,
    early: &F,
) -> Option<CenterOutcome> {
    let n = bp.n();
    let p_eq = bp.a.nrows();
    let mut nu = DVector::zeros(p_eq);
    let mut steps = 0;
    for _ in 0..MAX_NEWTON {
        let f: Vec<f64> = bp.rows.iter().map(|r| r.value(&x)).collect();
        if f.iter().any(|v| !(*v < 0.0)) {
            return None;
        }
        let mut g = (&bp.obj_q * &x + &bp.obj_a) * t;
        let mut h = &bp.obj_q * t;
        for (row, fi) in bp.rows.iter().zip(&f) {
            let gi = row.gradient(&x);
            let inv = -1.0 / fi;
            g.axpy(inv, &gi, 1.0);
            if let Some(q) = &row.q_mat {
                h += q * inv;
            }
            h.ger(inv * inv, &gi, &gi, 1.0);
        }

        // symmetric diagonal equilibration before the factorisation
        let d = DVector::from_fn(n, |i, _| {
            let v = h[(i, i)];
            if v > 0.0 {
                1.0 / v.sqrt()
            } else {
                1.0
            }
        });
        let dim = n + p_eq;
        let mut k = DMatrix::zeros(dim, dim);
        for i in 0..n {
            for j in 0..n {
                k[(i, j)] = d[i] * h[(i, j)] * d[j];
            }
            k[(i, i)] += 1e-14;
            for r in 0..p_eq {
                k[(i, n + r)] = d[i] * bp.a[(r, i)];
                k[(n + r, i)] = d[i] * bp.a[(r, i)];
            }
        }
        let mut rhs = DVector::zeros(dim);
        for i in 0..n {
            rhs[i] = -d[i] * g[i];
        }
        if p_eq > 0 {
            let rp = &bp.b - &bp.a * &x;
            rhs.rows_mut(n, p_eq).copy_from(&rp);
        }
        let lu = k.clone().lu();
        let mut sol = lu.solve(&rhs)?;
        let res = &rhs - &k * &sol;
        sol += lu.solve(&res)?;
        let dx = DVector::from_fn(n, |i, _| d[i] * sol[i]);
        nu = sol.rows(n, p_eq).into_owned();
        if dx.iter().any(|v| !v.is_finite()) {
            return None;
        }

        let slope = g.dot(&dx);
        let lambda2 = dx.dot(&(&h * &dx));
        if lambda2 <= NEWTON_EPS || slope >= 0.0 {
            break;
        }

        // barrier-potential change along dx, from exact quadratic expansions
        let o1 = (&bp.obj_q * &x + &bp.obj_a).dot(&dx);
        let o2 = dx.dot(&(&bp.obj_q * &dx));
        let rows: Vec<(f64, f64, f64)> = bp
            .rows
            .iter()
            .zip(&f)
            .map(|(r, fi)| (*fi, r.gradient(&x).dot(&dx), r.curvature(&dx)))
            .collect();
        let mut s = 1.0;
        let mut accepted = false;
        for _ in 0..80 {
            let feasible = rows
                .iter()
                .all(|(f0, f1, f2)| f0 + s * f1 + 0.5 * s * s * f2 < 0.0);
            if feasible {
                let dphi = t * (s * o1 + 0.5 * s * s * o2)
                    - rows
                        .iter()
                        .map(|(f0, f1, f2)| ((f0 + s * f1 + 0.5 * s * s * f2) / f0).ln())
                        .sum::<f64>();
                if dphi <= ARMIJO * s * slope {
                    accepted = true;
                    break;
                }
            }
            s *= 0.5;
        }
        if !accepted {
            break;
        }
        x.axpy(s, &dx, 1.0);
        steps += 1;
        if x.amax() > BLOWUP {
            return Some(CenterOutcome {
                x,
                nu,
                steps,
                stopped_early: false,
            });
        }
        if early(&x) {
            return Some(CenterOutcome {
                x,
                nu,
                steps,
                stopped_early: true,
            });
        }
    }
    Some(CenterOutcome {
        x,
        nu,
        steps,
        stopped_early: false,
    })
}

struct BarrierOutcome {
    x: DVector<f64>,
    t: f64,
    nu: DVector<f64>,
    newton: usize,
    stages: Vec<f64>,
    status: SolveStatus,
}

fn barrier<F: Fn(&DVector<f64>) -> bool>(
    bp: &Barrier,
    x0: DVector<f64>,
    t0: f64,
    gap: f64,
    early: F,
) -> BarrierOutcome {
    let m = bp.rows.len().max(1) as f64;
    let mut t = t0;
    let mut x = x0;
    let mut nu = DVector::zeros(bp.a.nrows());
    let mut newton = 0;
    let mut stages = Vec::new();
    loop {
        let Some(out) = center(bp, x.clone(), t, &early) else {
            return BarrierOutcome {
                x,
                t,
                nu,
                newton,
                stages,
                status: SolveStatus::MaxIter,
            };
        };
        x = out.x;
        nu = out.nu;
        newton += out.steps;
        stages.push(bp.obj_value(&x));
        if out.stopped_early || m / t <= gap {
            return BarrierOutcome {
                x,
                t,
                nu,
                newton,
                stages,
                status: SolveStatus::Optimal,
            };
        }
        if x.amax() > BLOWUP {
            return BarrierOutcome {
                x,
                t,
                nu,
                newton,
                stages,
                status: SolveStatus::Unbounded,
            };
        }
        if newton > MAX_TOTAL_NEWTON {
            return BarrierOutcome {
                x,
                t,
                nu,
                newton,
                stages,
                status: SolveStatus::MaxIter,
            };
        }
        t *= T_FACTOR;
    }
}

/// Normalised rows of the caller's problem plus its reduced equalities.
struct Normalised {
    rows: Vec<Row>,
    obj_scale: f64,
    eq: super::ReducedEq,
}

fn normalise(p: &QcqpProblem) -> std::result::Result<Normalised, SolveStatus> {
    let mut rows = Vec::new();
    for (i, c) in p.constraints.iter().enumerate() {
        let lin = c.is_linear();
        let mag = c.q_mat.amax().max(c.q.amax());
        if mag == 0.0 {
            if c.c > 0.0 {
                return Err(SolveStatus::Infeasible);
            }
            continue;
        }
        let s = 1.0 / mag;
        rows.push(Row {
            q_mat: if lin { None } else { Some(&c.q_mat * s) },
            a: &c.q * s,
            c: c.c * s,
            scale: s,
            origin: Origin::Quad(i),
        });
    }
    let g = &p.cons.a_in;
    for i in 0..g.nrows() {
        let mag = g.row(i).amax();
        if mag == 0.0 {
            if p.cons.b_in[i] < 0.0 {
                return Err(SolveStatus::Infeasible);
            }
            continue;
        }
        let s = 1.0 / mag;
        rows.push(Row {
            q_mat: None,
            a: g.row(i).transpose() * s,
            c: -p.cons.b_in[i] * s,
            scale: s,
            origin: Origin::Lin(i),
        });
    }
    let eq = reduce_equalities(&p.cons.a_eq, &p.cons.b_eq);
    if !eq.consistent {
        return Err(SolveStatus::Infeasible);
    }
    let mag = p.objective.q_mat.amax().max(p.objective.q.amax());
    let obj_scale = if mag > 0.0 { 1.0 / mag } else { 1.0 };
    Ok(Normalised {
        rows,
        obj_scale,
        eq,
    })
}

/// Solves a convex QCQP with a log-barrier method, running a phase-I search
/// for a strictly feasible start. `Optimal` means the duality-gap bound is
/// below `tol` and the recovered multipliers give a KKT residual of at most
/// `10·tol`.
pub fn solve_qcqp(p: &QcqpProblem, tol: f64) -> Result<SubsolverResult> {
    solve_qcqp_from(p, None, tol)
}

/// As [`solve_qcqp`], starting the search from `x0` when given.
pub fn solve_qcqp_from(
    p: &QcqpProblem,
    x0: Option<&DVector<f64>>,
    tol: f64,
) -> Result<SubsolverResult> {
    p.validate()?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be > 0, got {tol}"
        )));
    }
    let n = p.n_vars();
    if let Some(x0) = x0 {
        if x0.len() != n {
            return Err(Error::Dimension {
                expected: n,
                found: x0.len(),
            });
        }
    }
    let norm = match normalise(p) {
        Ok(v) => v,
        Err(status) => return Ok(failed(p, DVector::zeros(n), status, 0)),
    };

    // affine-feasible start: project the hint (rows of `eq.a` are orthonormal)
    let start = x0.cloned().unwrap_or_else(|| DVector::zeros(n));
    let start = if norm.eq.a.nrows() > 0 {
        &start - norm.eq.a.transpose() * (&norm.eq.a * &start - &norm.eq.b)
    } else {
        start
    };

    let mut rows = norm.rows.clone();
    let mut newton = 0;
    let worst = rows
        .iter()
        .map(|r| r.value(&start))
        .fold(f64::NEG_INFINITY, f64::max);
    let x_feasible = if worst < 0.0 {
        start
    } else {
        let (x1, s_star, steps) = phase_one(&rows, &norm.eq, &start, tol);
        newton += steps;
        if s_star < 0.0 {
            x1
        } else if s_star <= RELAX_LIMIT {
            // per-row margins keep the violation below `0.1·tol` in the
            // caller's units
            for r in &mut rows {
                r.c -= r.value(&x1).max(0.0) + RELAX_MARGIN.min(0.1 * tol * r.scale);
            }
            x1
        } else {
            return Ok(failed(p, x1, SolveStatus::Infeasible, newton));
        }
    };

    let bp = Barrier {
        obj_q: &p.objective.q_mat * norm.obj_scale,
        obj_a: &p.objective.q * norm.obj_scale,
        rows,
        a: norm.eq.a.clone(),
        b: norm.eq.b.clone(),
    };
    // the gap bound must hold in the caller's units as well
    let gap = 0.1 * tol * norm.obj_scale.min(1.0);
    let mut out = barrier(&bp, x_feasible, 1.0, gap, |_| false);
    newton += out.newton;
    let mut stages: Vec<f64> = out.stages.clone();
    let (mut duals, mut kkt) = recover_duals(p, &norm, &bp, &out);
    // the gap bound can be met before the caller's KKT tolerance is; keep
    // tightening from the last center
    for _ in 0..EXTRA_STAGES {
        if kkt <= tol || out.status != SolveStatus::Optimal {
            break;
        }
        let more = barrier(
            &bp,
            out.x.clone(),
            out.t * T_FACTOR,
            out.t * 1e-4 * gap,
            |_| false,
        );
        newton += more.newton;
        stages.extend(more.stages.iter().copied());
        if more.status != SolveStatus::Optimal {
            break;
        }
        let (d, k) = recover_duals(p, &norm, &bp, &more);
        if k >= kkt {
            break;
        }
        out = more;
        duals = d;
        kkt = k;
    }
    let stages = stages
        .iter()
        .map(|v| v / norm.obj_scale + p.objective.c)
        .collect();
    let status = match out.status {
        SolveStatus::Optimal if kkt <= KKT_SLACK * tol => SolveStatus::Optimal,
        SolveStatus::Optimal => SolveStatus::MaxIter,
        s => s,
    };
    Ok(SubsolverResult {
        objective: p.objective.value(&out.x),
        kkt_residual: kkt,
        x: out.x,
        status,
        iterations: newton,
        duals,
        stage_objectives: stages,
    })
}

/// Multipliers `λ̂ᵢ = 1/(t·(−f̂ᵢ))`, `ν̂ = ν/t` in the caller's units,
/// refined when that lowers the KKT residual.
fn recover_duals(
    p: &QcqpProblem,
    norm: &Normalised,
    bp: &Barrier,
    out: &BarrierOutcome,
) -> (Duals, f64) {
    let mut duals = Duals {
        eq: norm.eq.map.transpose() * (&out.nu / (out.t * norm.obj_scale)),
        ineq: DVector::zeros(p.cons.a_in.nrows()),
        quad: DVector::zeros(p.constraints.len()),
    };
    for r in &bp.rows {
        let lam = 1.0 / (out.t * (-r.value(&out.x))) * r.scale / norm.obj_scale;
        match r.origin {
            Origin::Quad(i) => duals.quad[i] = lam,
            Origin::Lin(i) => duals.ineq[i] = lam,
            Origin::Aux => {}
        }
    }
    let mut kkt = qcqp_residual(p, &out.x, &duals).max();
    if let Some(refined) = refine_duals(p, &out.x, &bp.rows, &duals) {
        let r = qcqp_residual(p, &out.x, &refined).max();
        if r < kkt {
            kkt = r;
            duals = refined;
        }
    }
    (duals, kkt)
}

/// Nonnegative least-squares multipliers for the near-active rows at `x`, keeping the
/// barrier estimates elsewhere. Barrier estimates `1/(t·(−fᵢ))` lose
/// precision once `fᵢ` is within a few ulps of zero.
fn refine_duals(p: &QcqpProblem, x: &DVector<f64>, rows: &[Row], base: &Duals) -> Option<Duals> {
    let n = x.len();
    let mut active = Vec::new();
    let mut rhs = -p.objective.gradient(x);
    for r in rows {
        let lam = match r.origin {
            Origin::Quad(i) => base.quad[i],
            Origin::Lin(i) => base.ineq[i],
            Origin::Aux => continue,
        };
        let grad = r.gradient(x) / r.scale;
        if r.value(x).abs() <= ACTIVE {
            active.push((r.origin, grad));
        } else {
            rhs.axpy(-lam, &grad, 1.0);
        }
    }
    let p_eq = p.cons.a_eq.nrows();
    let k = active.len() + p_eq;
    if k == 0 {
        return None;
    }
    let mut j = DMatrix::zeros(n, k);
    for (c, (_, g)) in active.iter().enumerate() {
        j.set_column(c, g);
    }
    for r in 0..p_eq {
        j.set_column(active.len() + r, &p.cons.a_eq.row(r).transpose());
    }
    let y = nnls(&j, &rhs, active.len())?;
    let mut out = base.clone();
    for (c, (origin, _)) in active.iter().enumerate() {
        let v = y[c].max(0.0);
        match origin {
            Origin::Quad(i) => out.quad[*i] = v,
            Origin::Lin(i) => out.ineq[*i] = v,
            Origin::Aux => {}
        }
    }
    out.eq = y.rows(active.len(), p_eq).into_owned();
    Some(out)
}

/// `min s` subject to `f̂ᵢ(x) ≤ s`, `s ≥ −1` and the equalities, stopping as
/// soon as every `f̂ᵢ(x) < 0`. Returns the point, the final `s` and the
/// Newton step count.
fn phase_one(
    rows: &[Row],
    eq: &super::ReducedEq,
    start: &DVector<f64>,
    tol: f64,
) -> (DVector<f64>, f64, usize) {
    let n = start.len();
    let pad = |v: &DVector<f64>, last: f64| {
        let mut out = v.clone().resize_vertically(n + 1, 0.0);
        out[n] = last;
        out
    };
    let mut ph_rows: Vec<Row> = rows
        .iter()
        .map(|r| Row {
            q_mat: r
                .q_mat
                .as_ref()
                .map(|q| q.clone().resize(n + 1, n + 1, 0.0)),
            a: pad(&r.a, -1.0),
            c: r.c,
            scale: 1.0,
            origin: Origin::Aux,
        })
        .collect();
    ph_rows.push(Row {
        q_mat: None,
        a: pad(&DVector::zeros(n), -1.0),
        c: -1.0,
        scale: 1.0,
        origin: Origin::Aux,
    });
    // ‖x − start‖² ≤ R² keeps the search bounded when the feasible set has
    // no interior and some variable is free in one direction
    let r2 = (PHASE_ONE_RADIUS * (1.0 + start.amax())).powi(2);
    let mut ball = DMatrix::zeros(n + 1, n + 1);
    for i in 0..n {
        ball[(i, i)] = 2.0 / r2;
    }
    ph_rows.push(Row {
        q_mat: Some(ball),
        a: pad(&(start * (-2.0 / r2)), 0.0),
        c: start.norm_squared() / r2 - 1.0,
        scale: 1.0,
        origin: Origin::Aux,
    });
    let worst = rows
        .iter()
        .map(|r| r.value(start))
        .fold(f64::NEG_INFINITY, f64::max);
    let bp = Barrier {
        obj_q: DMatrix::zeros(n + 1, n + 1),
        obj_a: pad(&DVector::zeros(n), 1.0),
        rows: ph_rows,
        a: eq.a.clone().resize_horizontally(n + 1, 0.0),
        b: eq.b.clone(),
    };
    let strictly_inside = |z: &DVector<f64>| {
        let x = z.rows(0, n).into_owned();
        rows.iter().all(|r| r.value(&x) < 0.0)
    };
    let out = barrier(
        &bp,
        pad(start, worst.max(0.0) + 1.0),
        1.0,
        0.01 * tol.min(1e-10),
        strictly_inside,
    );
    let x = out.x.rows(0, n).into_owned();
    let s_star = rows
        .iter()
        .map(|r| r.value(&x))
        .fold(f64::NEG_INFINITY, f64::max);
    (x, s_star, out.newton)
}

fn failed(
    p: &QcqpProblem,
    x: DVector<f64>,
    status: SolveStatus,
    iterations: usize,
) -> SubsolverResult {
    let duals = Duals {
        eq: DVector::zeros(p.cons.a_eq.nrows()),
        ineq: DVector::zeros(p.cons.a_in.nrows()),
        quad: DVector::zeros(p.constraints.len()),
    };
    SubsolverResult {
        objective: p.objective.value(&x),
        kkt_residual: qcqp_residual(p, &x, &duals).max(),
        x,
        status,
        iterations,
        duals,
        stage_objectives: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::super::simplex;
    use super::*;

    fn ball(n: usize) -> Quadratic {
        Quadratic::new(DMatrix::identity(n, n) * 2.0, DVector::zeros(n), -1.0)
    }

    #[test]
    fn unit_ball_support_point() {
        let p = QcqpProblem::new(
            Quadratic::linear(DVector::from_vec(vec![1.0, 0.0]), 0.0),
            vec![ball(2)],
            LinearConstraintSystem::empty(2),
        )
        .unwrap();
        let r = solve_qcqp(&p, 1e-9).unwrap();
        assert!(r.is_optimal(), "{:?} kkt {}", r.status, r.kkt_residual);
        assert!(
            (r.x[0] + 1.0).abs() <= 1e-9 && r.x[1].abs() <= 1e-9,
            "{}",
            r.x
        );
    }

    #[test]
    fn radial_projection() {
        let c = DVector::from_vec(vec![2.0_f64.sqrt(), 2.0_f64.sqrt()]);
        // ‖x − c‖² = xᵀx − 2cᵀx + cᵀc
        let obj = Quadratic::new(DMatrix::identity(2, 2) * 2.0, &c * -2.0, c.dot(&c));
        let p = QcqpProblem::new(obj, vec![ball(2)], LinearConstraintSystem::empty(2)).unwrap();
        let r = solve_qcqp(&p, 1e-9).unwrap();
        assert!(r.is_optimal());
        assert!((&r.x - &c / 2.0).amax() <= 1e-9, "{}", r.x);
    }

    #[test]
    fn infeasible_quadratics() {
        // ‖x‖² ≤ 1 and x₁ ≥ 2
        let far = Quadratic::linear(DVector::from_vec(vec![-1.0, 0.0]), 2.0);
        let p = QcqpProblem::new(
            Quadratic::linear(DVector::from_vec(vec![0.0, 1.0]), 0.0),
            vec![ball(2), far],
            LinearConstraintSystem::empty(2),
        )
        .unwrap();
        assert_eq!(
            solve_qcqp(&p, 1e-9).unwrap().status,
            SolveStatus::Infeasible
        );
    }

    #[test]
    fn simplex_with_equality_and_ball() {
        // min −x₁ over the simplex intersected with ‖x‖² ≤ 0.66
        let mut q = ball(3);
        q.c = -0.66;
        let p = QcqpProblem::new(
            Quadratic::linear(DVector::from_vec(vec![-1.0, 0.0, 0.0]), 0.0),
            vec![q],
            simplex(3),
        )
        .unwrap();
        let r = solve_qcqp(&p, 1e-9).unwrap();
        assert!(r.is_optimal(), "{:?} {}", r.status, r.kkt_residual);
        // optimum x = (0.8, 0.1, 0.1)
        assert!((r.x[0] - 0.8).abs() <= 1e-8, "{}", r.x);
        for w in r.stage_objectives.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn touching_feasible_set_is_relaxed() {
        // x₁ ≤ 0 and x₁ ≥ 0 leave no interior
        let p = QcqpProblem::new(
            Quadratic::new(
                DMatrix::identity(2, 2),
                DVector::from_vec(vec![0.0, -1.0]),
                0.0,
            ),
            vec![
                Quadratic::linear(DVector::from_vec(vec![1.0, 0.0]), 0.0),
                Quadratic::linear(DVector::from_vec(vec![-1.0, 0.0]), 0.0),
            ],
            LinearConstraintSystem::empty(2),
        )
        .unwrap();
        let r = solve_qcqp(&p, 1e-9).unwrap();
        assert!(r.is_optimal(), "{:?} {}", r.status, r.kkt_residual);
        assert!(r.x[0].abs() <= 1e-9 && (r.x[1] - 1.0).abs() <= 1e-9);
    }
}
