//! Variable layout shared by the subproblems: `(w, [u], [δ], [t])`.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::subsolvers::{lift_l1, simplex, LinearConstraintSystem, Quadratic};

#[derive(Debug, Clone, Copy)]
pub(crate) struct Layout {
    pub n: usize,
    /// `(w, u)` with `−u ≤ w ≤ u`, `1ᵀu ≤ L`; otherwise `w ≥ 0`. The
    /// lifted form has an empty interior at `L = 1`, so solvers use the
    /// simplex form there.
    pub lifted: bool,
    pub delta: bool,
    pub t: bool,
}

impl Layout {
    pub fn dim(&self) -> usize {
        self.n * if self.lifted { 2 } else { 1 } + usize::from(self.delta) + usize::from(self.t)
    }

    pub fn delta_idx(&self) -> usize {
        debug_assert!(self.delta);
        self.n * if self.lifted { 2 } else { 1 }
    }

    pub fn t_idx(&self) -> usize {
        debug_assert!(self.t);
        self.dim() - 1
    }

    /// The feasible set of `w` padded to the full layout.
    pub fn w_set(&self, leverage: f64) -> Result<LinearConstraintSystem> {
        let base = if self.lifted {
            lift_l1(self.n, leverage)?
        } else {
            simplex(self.n)
        };
        Ok(base.with_extra_vars(self.dim() - base.n_vars()))
    }

    /// Linear row with the given `w`, `δ` and `t` coefficients.
    pub fn row(&self, w: &DVector<f64>, delta: f64, t: f64) -> DVector<f64> {
        let mut r = DVector::zeros(self.dim());
        r.rows_mut(0, self.n).copy_from(w);
        if self.delta {
            r[self.delta_idx()] = delta;
        }
        if self.t {
            r[self.t_idx()] = t;
        }
        r
    }

    /// `½wᵀPw + qᵀw + c + δ·delta + t·t_coef` over the full layout, with an
    /// optional `½·delta_curv·δ²` term.
    pub fn quadratic(
        &self,
        p_w: &DMatrix<f64>,
        q_w: &DVector<f64>,
        c: f64,
        delta: f64,
        delta_curv: f64,
        t: f64,
    ) -> Quadratic {
        let dim = self.dim();
        let mut p = DMatrix::zeros(dim, dim);
        p.view_mut((0, 0), (self.n, self.n)).copy_from(p_w);
        if self.delta {
            let i = self.delta_idx();
            p[(i, i)] = delta_curv;
        }
        Quadratic::new(p, self.row(q_w, delta, t), c)
    }

    pub fn w(&self, x: &DVector<f64>) -> DVector<f64> {
        x.rows(0, self.n).into_owned()
    }

    pub fn delta(&self, x: &DVector<f64>) -> f64 {
        x[self.delta_idx()]
    }

    /// A full-layout point at `(w, δ, t)`; `u` sits strictly above `|w|`
    /// whenever the leverage budget allows.
    pub fn point(&self, w: &DVector<f64>, delta: f64, t: f64, leverage: f64) -> DVector<f64> {
        let mut x = DVector::zeros(self.dim());
        x.rows_mut(0, self.n).copy_from(w);
        if self.lifted {
            let slack = ((leverage - w.lp_norm(1)) / (self.n as f64 + 1.0)).max(0.0);
            for i in 0..self.n {
                x[self.n + i] = w[i].abs() + slack;
            }
        }
        if self.delta {
            x[self.delta_idx()] = delta;
        }
        if self.t {
            x[self.t_idx()] = t;
        }
        x
    }
}
