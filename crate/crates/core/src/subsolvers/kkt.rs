//! KKT residuals recomputed from problem data, multipliers and a primal
//! point. Kept apart from the solvers' own stopping tests so results can be
//! audited independently.

use nalgebra::DVector;

use super::{Duals, LinearConstraintSystem, QcqpProblem, QpProblem};

/// Component-wise KKT residuals, all in ∞-norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResidual {
    pub stationarity: f64,
    pub primal: f64,
    pub complementarity: f64,
    pub dual: f64,
}

impl KktResidual {
    pub fn max(&self) -> f64 {
        self.stationarity
            .max(self.primal)
            .max(self.complementarity)
            .max(self.dual)
    }
}

fn linear_terms(
    cons: &LinearConstraintSystem,
    x: &DVector<f64>,
    d: &Duals,
    grad: &mut DVector<f64>,
) -> (f64, f64, f64) {
    let mut primal = 0.0f64;
    let mut comp = 0.0f64;
    let mut dual = 0.0f64;
    for i in 0..cons.a_eq.nrows() {
        let row = cons.a_eq.row(i);
        let y = d.eq.get(i).copied().unwrap_or(0.0);
        for j in 0..x.len() {
            grad[j] += y * row[j];
        }
        primal = primal.max((row.dot(&x.transpose()) - cons.b_eq[i]).abs());
    }
    for i in 0..cons.a_in.nrows() {
        let row = cons.a_in.row(i);
        let z = d.ineq.get(i).copied().unwrap_or(0.0);
        for j in 0..x.len() {
            grad[j] += z * row[j];
        }
        let g = row.dot(&x.transpose()) - cons.b_in[i];
        primal = primal.max(g);
        comp = comp.max((z * g).abs());
        dual = dual.max(-z);
    }
    (primal, comp, dual)
}

pub fn qp_residual(p: &QpProblem, x: &DVector<f64>, d: &Duals) -> KktResidual {
    let mut grad = &p.q_mat * x + &p.q;
    let (primal, complementarity, dual) = linear_terms(&p.cons, x, d, &mut grad);
    KktResidual {
        stationarity: grad.amax(),
        primal,
        complementarity,
        dual,
    }
}

pub fn qcqp_residual(p: &QcqpProblem, x: &DVector<f64>, d: &Duals) -> KktResidual {
    let mut grad = p.objective.gradient(x);
    let (mut primal, mut complementarity, mut dual) = linear_terms(&p.cons, x, d, &mut grad);
    for (i, c) in p.constraints.iter().enumerate() {
        let lam = d.quad.get(i).copied().unwrap_or(0.0);
        grad += c.gradient(x) * lam;
        let v = c.value(x);
        primal = primal.max(v);
        complementarity = complementarity.max((lam * v).abs());
        dual = dual.max(-lam);
    }
    KktResidual {
        stationarity: grad.amax(),
        primal,
        complementarity,
        dual,
    }
}

#[cfg(test)]
mod tests {
    use super::super::simplex;
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn hand_checked_point() {
        // min ½‖x‖² − 2x₁ over the simplex: x = (1, 0), y = 1, z = (0, 1)
        let p = QpProblem::new(
            DMatrix::identity(2, 2),
            DVector::from_vec(vec![-2.0, 0.0]),
            simplex(2),
        )
        .unwrap();
        let x = DVector::from_vec(vec![1.0, 0.0]);
        let d = Duals {
            eq: DVector::from_element(1, 1.0),
            ineq: DVector::from_vec(vec![0.0, 1.0]),
            quad: DVector::zeros(0),
        };
        assert_eq!(qp_residual(&p, &x, &d).max(), 0.0);
        let wrong = Duals {
            eq: DVector::from_element(1, 0.5),
            ..d.clone()
        };
        assert_eq!(qp_residual(&p, &x, &wrong).stationarity, 0.5);
        let neg = Duals {
            ineq: DVector::from_vec(vec![-0.1, 1.0]),
            ..d
        };
        assert_eq!(qp_residual(&p, &x, &neg).dual, 0.1);
    }
}
