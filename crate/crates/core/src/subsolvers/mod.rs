//! Dense convex subproblem solvers.
//!
//! * [`solve_qp`]: primal-dual interior point with Mehrotra predictor-corrector.
//! * [`solve_lp`]: the same core with a vanishing quadratic term.
//! * [`solve_qcqp`]: log-barrier method with damped Newton centering and a
//!   phase-I search for a strictly feasible start.
//!
//! The problems handed over by the outer loops have at most `2N + 2`
//! variables, so everything here is dense.

pub mod kkt;
mod nnls;
mod qcqp;
mod qp;

pub use qcqp::{solve_qcqp, solve_qcqp_from, QcqpProblem, Quadratic};
pub use qp::{solve_lp, solve_qp, QpProblem};

pub(crate) use nnls::nnls;

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

/// Default KKT tolerance for subproblems.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Linear constraints `A_eq x = b_eq`, `A_in x ≤ b_in`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraintSystem {
    pub a_eq: DMatrix<f64>,
    pub b_eq: DVector<f64>,
    pub a_in: DMatrix<f64>,
    pub b_in: DVector<f64>,
}

impl LinearConstraintSystem {
    pub fn new(
        a_eq: DMatrix<f64>,
        b_eq: DVector<f64>,
        a_in: DMatrix<f64>,
        b_in: DVector<f64>,
    ) -> Result<Self> {
        let s = Self {
            a_eq,
            b_eq,
            a_in,
            b_in,
        };
        s.validate()?;
        Ok(s)
    }

    /// A system over `n` variables with no rows.
    pub fn empty(n: usize) -> Self {
        Self {
            a_eq: DMatrix::zeros(0, n),
            b_eq: DVector::zeros(0),
            a_in: DMatrix::zeros(0, n),
            b_in: DVector::zeros(0),
        }
    }

    pub fn n_vars(&self) -> usize {
        self.a_eq.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        if self.a_in.ncols() != self.a_eq.ncols() {
            return Err(Error::Dimension {
                expected: self.a_eq.ncols(),
                found: self.a_in.ncols(),
            });
        }
        if self.a_eq.nrows() != self.b_eq.len() {
            return Err(Error::Dimension {
                expected: self.a_eq.nrows(),
                found: self.b_eq.len(),
            });
        }
        if self.a_in.nrows() != self.b_in.len() {
            return Err(Error::Dimension {
                expected: self.a_in.nrows(),
                found: self.b_in.len(),
            });
        }
        let finite = self
            .a_eq
            .iter()
            .chain(self.b_eq.iter())
            .chain(self.a_in.iter())
            .chain(self.b_in.iter())
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Data(
                "constraint system has non-finite entries".into(),
            ));
        }
        Ok(())
    }

    /// Appends `extra` zero columns (new trailing variables).
    pub fn with_extra_vars(&self, extra: usize) -> Self {
        let n = self.n_vars() + extra;
        let pad = |m: &DMatrix<f64>| {
            let mut out = DMatrix::zeros(m.nrows(), n);
            out.view_mut((0, 0), (m.nrows(), m.ncols())).copy_from(m);
            out
        };
        Self {
            a_eq: pad(&self.a_eq),
            b_eq: self.b_eq.clone(),
            a_in: pad(&self.a_in),
            b_in: self.b_in.clone(),
        }
    }

    pub fn push_eq(&mut self, row: &DVector<f64>, rhs: f64) {
        self.a_eq = push_row(&self.a_eq, row);
        self.b_eq = push_value(&self.b_eq, rhs);
    }

    pub fn push_ineq(&mut self, row: &DVector<f64>, rhs: f64) {
        self.a_in = push_row(&self.a_in, row);
        self.b_in = push_value(&self.b_in, rhs);
    }

    /// Largest violation of any row at `x`.
    pub fn violation(&self, x: &DVector<f64>) -> f64 {
        let eq = (&self.a_eq * x - &self.b_eq).amax();
        let ineq = (&self.a_in * x - &self.b_in)
            .iter()
            .fold(0.0f64, |a, v| a.max(*v));
        if self.a_eq.nrows() == 0 {
            ineq
        } else {
            eq.max(ineq)
        }
    }
}

fn push_row(m: &DMatrix<f64>, row: &DVector<f64>) -> DMatrix<f64> {
    assert_eq!(row.len(), m.ncols(), "row length must match variable count");
    let mut out = m.clone().resize_vertically(m.nrows() + 1, 0.0);
    out.row_mut(m.nrows()).copy_from(&row.transpose());
    out
}

fn push_value(v: &DVector<f64>, value: f64) -> DVector<f64> {
    let mut out = v.clone().resize_vertically(v.len() + 1, 0.0);
    out[v.len()] = value;
    out
}

/// Encodes `{w | 1ᵀw = 1, ‖w‖₁ ≤ L}` over the lifted variable `(w, u)`:
/// `1ᵀw = 1`, `w − u ≤ 0`, `−w − u ≤ 0`, `1ᵀu ≤ L`.
pub fn lift_l1(n: usize, leverage: f64) -> Result<LinearConstraintSystem> {
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one asset".into()));
    }
    if !(leverage.is_finite() && leverage >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "leverage must be >= 1, got {leverage}"
        )));
    }
    let mut a_eq = DMatrix::zeros(1, 2 * n);
    a_eq.view_mut((0, 0), (1, n)).fill(1.0);
    let mut a_in = DMatrix::zeros(2 * n + 1, 2 * n);
    for i in 0..n {
        a_in[(i, i)] = 1.0;
        a_in[(i, n + i)] = -1.0;
        a_in[(n + i, i)] = -1.0;
        a_in[(n + i, n + i)] = -1.0;
        a_in[(2 * n, n + i)] = 1.0;
    }
    let mut b_in = DVector::zeros(2 * n + 1);
    b_in[2 * n] = leverage;
    LinearConstraintSystem::new(a_eq, DVector::from_element(1, 1.0), a_in, b_in)
}

/// The long-only simplex `1ᵀw = 1`, `w ≥ 0` over `w` alone.
pub fn simplex(n: usize) -> LinearConstraintSystem {
    LinearConstraintSystem {
        a_eq: DMatrix::from_element(1, n, 1.0),
        b_eq: DVector::from_element(1, 1.0),
        a_in: -DMatrix::identity(n, n),
        b_in: DVector::zeros(n),
    }
}

/// Equality rows with dependent rows removed and the rest orthonormalised.
/// `map` expresses the kept rows as combinations of the original ones,
/// `a = map · a_orig`, so original multipliers are `mapᵀ y`.
pub(crate) struct ReducedEq {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub map: DMatrix<f64>,
    pub consistent: bool,
}

pub(crate) fn reduce_equalities(a: &DMatrix<f64>, b: &DVector<f64>) -> ReducedEq {
    let (p, n) = a.shape();
    let mut basis: Vec<(DVector<f64>, DVector<f64>, f64)> = Vec::new();
    let mut consistent = true;
    let b_scale = 1.0 + b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for i in 0..p {
        let row = a.row(i).transpose();
        let norm0 = row.norm();
        let mut v = row.clone();
        let mut coef = DVector::zeros(p);
        coef[i] = 1.0;
        let mut rhs = b[i];
        for _ in 0..2 {
            for (q, m, bq) in &basis {
                let c = v.dot(q);
                v -= q * c;
                coef -= m * c;
                rhs -= c * bq;
            }
        }
        let norm = v.norm();
        if norm0 == 0.0 || norm <= 1e-10 * norm0 {
            if rhs.abs() > 1e-9 * b_scale {
                consistent = false;
            }
            continue;
        }
        basis.push((v / norm, coef / norm, rhs / norm));
    }
    let k = basis.len();
    let mut out_a = DMatrix::zeros(k, n);
    let mut out_b = DVector::zeros(k);
    let mut map = DMatrix::zeros(k, p);
    for (r, (q, m, bq)) in basis.iter().enumerate() {
        out_a.row_mut(r).copy_from(&q.transpose());
        map.row_mut(r).copy_from(&m.transpose());
        out_b[r] = *bq;
    }
    ReducedEq {
        a: out_a,
        b: out_b,
        map,
        consistent,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIter,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::MaxIter => "max_iter",
        };
        f.write_str(s)
    }
}

/// Lagrange multipliers in the original problem's units.
#[derive(Debug, Clone, PartialEq)]
pub struct Duals {
    /// Equality rows (free sign).
    pub eq: DVector<f64>,
    /// Linear inequality rows (nonnegative).
    pub ineq: DVector<f64>,
    /// Quadratic constraints (nonnegative); empty for QP/LP.
    pub quad: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct SubsolverResult {
    pub x: DVector<f64>,
    pub status: SolveStatus,
    pub objective: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub duals: Duals,
    /// Objective at the end of each barrier stage (QCQP only).
    pub stage_objectives: Vec<f64>,
}

impl SubsolverResult {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}
