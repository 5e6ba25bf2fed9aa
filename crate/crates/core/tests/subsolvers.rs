use mvsk_core::subsolvers::kkt::{qcqp_residual, qp_residual};
use mvsk_core::subsolvers::{
    lift_l1, simplex, solve_lp, solve_qcqp, solve_qp, LinearConstraintSystem, QcqpProblem,
    QpProblem, Quadratic, SolveStatus,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-9;

fn uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

fn random_pd<R: Rng>(rng: &mut R, n: usize, floor: f64) -> DMatrix<f64> {
    let b = DMatrix::from_fn(n, n, |_, _| uniform(rng, -1.0, 1.0));
    &b * b.transpose() + DMatrix::identity(n, n) * floor
}

fn lifted(w: &DVector<f64>) -> DVector<f64> {
    let n = w.len();
    DVector::from_fn(2 * n, |i, _| if i < n { w[i] } else { w[i - n].abs() })
}

/// Box `[-1, 1]ⁿ` plus random cuts that keep the origin strictly inside.
fn random_polytope<R: Rng>(rng: &mut R, n: usize) -> LinearConstraintSystem {
    let mut a = DMatrix::zeros(2 * n, n);
    for i in 0..n {
        a[(i, i)] = 1.0;
        a[(n + i, i)] = -1.0;
    }
    let mut cons = LinearConstraintSystem::new(
        DMatrix::zeros(0, n),
        DVector::zeros(0),
        a,
        DVector::from_element(2 * n, 1.0),
    )
    .unwrap();
    for _ in 0..rng.random_range(0..=n) {
        let row = DVector::from_fn(n, |_, _| uniform(rng, -1.0, 1.0));
        cons.push_ineq(&row, uniform(rng, 0.1, 1.0));
    }
    cons
}

#[test]
fn lifted_set_with_one_asset() {
    let cons = lift_l1(1, 1.0).unwrap();
    assert!(cons.violation(&DVector::from_vec(vec![1.0, 1.0])) <= 0.0);
    assert!(cons.violation(&DVector::from_vec(vec![1.0, 1.0 + 1e-6])) > 0.0);
    assert!(cons.violation(&DVector::from_vec(vec![1.0 - 1e-6, 1.0])) > 0.0);
}

#[test]
fn unit_leverage_lifted_set_is_the_simplex() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cons = lift_l1(2, 1.0).unwrap();
    for _ in 0..1000 {
        let a = uniform(&mut rng, -0.5, 1.5);
        let w = DVector::from_vec(vec![a, 1.0 - a]);
        let member = cons.violation(&lifted(&w)) <= 1e-12;
        assert_eq!(member, (0.0..=1.0).contains(&a), "a = {a}");
    }
}

#[test]
fn leverage_arithmetic() {
    let cons = lift_l1(2, 1.5).unwrap();
    assert!(cons.violation(&lifted(&DVector::from_vec(vec![1.25, -0.25]))) <= 1e-15);
    assert!(cons.violation(&lifted(&DVector::from_vec(vec![1.3, -0.3]))) > 0.05);
}

/// Euclidean projection onto `{1ᵀw = 1, ‖w‖₁ ≤ L}`:
/// `w = soft(v − ν, θ)` with `ν` fixing the sum and `θ ≥ 0` the ℓ₁ norm.
fn project_leverage(v: &DVector<f64>, leverage: f64) -> DVector<f64> {
    let soft =
        |nu: f64, theta: f64| v.map(|x| (x - nu).signum() * ((x - nu).abs() - theta).max(0.0));
    let shift = |theta: f64| {
        let (mut lo, mut hi) = (v.min() - theta - 1.0, v.max() + theta + 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if soft(mid, theta).sum() > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let w = soft(shift(0.0), 0.0);
    if w.lp_norm(1) <= leverage {
        return w;
    }
    let mut hi = 1.0;
    while soft(shift(hi), hi).lp_norm(1) > leverage {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if soft(shift(mid), mid).lp_norm(1) > leverage {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    soft(shift(hi), hi)
}

#[test]
fn qp_matches_projected_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let leverage = 1.5;
    for _ in 0..6 {
        let n = rng.random_range(2..=4);
        let q_mat = random_pd(&mut rng, n, 0.2);
        let q = DVector::from_fn(n, |_, _| uniform(&mut rng, -2.0, 2.0));
        let f = |w: &DVector<f64>| 0.5 * w.dot(&(&q_mat * w)) + q.dot(w);

        let step = 1.0 / q_mat.symmetric_eigenvalues().max();
        let mut w = DVector::from_element(n, 1.0 / n as f64);
        for _ in 0..1_000_000 {
            let next = project_leverage(&(&w - (&q_mat * &w + &q) * step), leverage);
            let moved = (&next - &w).amax();
            w = next;
            if moved < 1e-15 {
                break;
            }
        }

        let big_q = DMatrix::from_fn(2 * n, 2 * n, |i, j| {
            if i < n && j < n {
                q_mat[(i, j)]
            } else {
                0.0
            }
        });
        let big_c = DVector::from_fn(2 * n, |i, _| if i < n { q[i] } else { 0.0 });
        let p = QpProblem::new(big_q, big_c, lift_l1(n, leverage).unwrap()).unwrap();
        let r = solve_qp(&p, TOL).unwrap();
        assert!(r.is_optimal());
        let x = r.x.rows(0, n).into_owned();
        assert!((f(&x) - f(&w)).abs() <= 1e-6, "{} vs {}", f(&x), f(&w));
        assert!(qp_residual(&p, &r.x, &r.duals).max() <= 10.0 * TOL);
    }
}

/// Minimum of `cᵀx` over the vertices of `cons` (no equalities).
fn vertex_min(c: &DVector<f64>, cons: &LinearConstraintSystem) -> f64 {
    let n = c.len();
    let m = cons.a_in.nrows();
    let mut best = f64::INFINITY;
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        let a = DMatrix::from_fn(n, n, |i, j| cons.a_in[(idx[i], j)]);
        let b = DVector::from_fn(n, |i, _| cons.b_in[idx[i]]);
        if let Some(x) = a.clone().lu().solve(&b) {
            if a.clone().svd(false, false).singular_values.min() > 1e-10
                && cons.violation(&x) <= 1e-9
            {
                best = best.min(c.dot(&x));
            }
        }
        // next n-subset of 0..m in lexicographic order
        let mut i = n;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if idx[i] < m - n + i {
                break;
            }
        }
        idx[i] += 1;
        for j in i + 1..n {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

#[test]
fn lp_matches_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..40 {
        let n = rng.random_range(1..=6);
        let cons = random_polytope(&mut rng, n);
        let c = DVector::from_fn(n, |_, _| uniform(&mut rng, -1.0, 1.0));
        let r = solve_lp(&c, &cons, TOL).unwrap();
        assert!(r.is_optimal());
        let oracle = vertex_min(&c, &cons);
        assert!(
            (c.dot(&r.x) - oracle).abs() <= 1e-7,
            "{} vs {oracle}",
            c.dot(&r.x)
        );
    }
}

#[test]
fn infeasible_lp_is_reported() {
    let cons = LinearConstraintSystem::new(
        DMatrix::zeros(0, 1),
        DVector::zeros(0),
        DMatrix::from_vec(2, 1, vec![1.0, -1.0]),
        DVector::from_vec(vec![-1.0, -1.0]),
    )
    .unwrap();
    let r = solve_lp(&DVector::from_element(1, 1.0), &cons, TOL).unwrap();
    assert_eq!(r.status, SolveStatus::Infeasible);
}

/// Central-cut ellipsoid method started from the ball of radius `√n`, which
/// holds the box `[-1, 1]ⁿ`. Infeasible centers are cut with the gradient of
/// the most violated constraint, feasible ones with the objective gradient.
fn ellipsoid_min(p: &QcqpProblem) -> f64 {
    let n = p.n_vars();
    assert!(n >= 2);
    let nf = n as f64;
    let mut c = DVector::zeros(n);
    let mut e = DMatrix::identity(n, n) * nf;
    let mut best = f64::INFINITY;
    for _ in 0..20_000 {
        let rows = (&p.cons.a_in * &c - &p.cons.b_in).argmax();
        let quads = p
            .constraints
            .iter()
            .map(|q| (q.value(&c), q))
            .max_by(|a, b| a.0.total_cmp(&b.0));
        let g = match quads {
            Some((v, q)) if v > 0.0 && v >= rows.1 => q.gradient(&c),
            _ if rows.1 > 0.0 => p.cons.a_in.row(rows.0).transpose(),
            _ => {
                best = best.min(p.objective.value(&c));
                p.objective.gradient(&c)
            }
        };
        let eg = &e * &g;
        let norm = g.dot(&eg).sqrt();
        if !(norm > 1e-300) {
            break;
        }
        let gt = eg / norm;
        c -= &gt / (nf + 1.0);
        e = (&e - &gt * gt.transpose() * (2.0 / (nf + 1.0))) * (nf * nf / (nf * nf - 1.0));
        e = (&e + e.transpose()) * 0.5;
    }
    best
}

#[test]
fn qcqp_matches_cutting_plane_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..12 {
        let n = rng.random_range(2..=4);
        let k = rng.random_range(1..=3);
        let constraints = (0..k)
            .map(|_| {
                Quadratic::new(
                    random_pd(&mut rng, n, 0.0),
                    DVector::from_fn(n, |_, _| uniform(&mut rng, -0.5, 0.5)),
                    uniform(&mut rng, -1.0, -0.1),
                )
            })
            .collect();
        let objective = Quadratic::new(
            random_pd(&mut rng, n, 0.0) * 0.5,
            DVector::from_fn(n, |_, _| uniform(&mut rng, -1.0, 1.0)),
            0.0,
        );
        let p = QcqpProblem::new(objective, constraints, random_polytope(&mut rng, n)).unwrap();
        let r = solve_qcqp(&p, TOL).unwrap();
        assert!(r.is_optimal());
        assert!(p.violation(&r.x) <= 1e-9);
        assert!(qcqp_residual(&p, &r.x, &r.duals).max() <= 10.0 * TOL);
        let oracle = ellipsoid_min(&p);
        assert!(
            (r.objective - oracle).abs() <= 1e-5,
            "{} vs {oracle}",
            r.objective
        );
        for w in r.stage_objectives.windows(2) {
            assert!(w[1] <= w[0] + 1e-12 * (1.0 + w[0].abs()), "{w:?}");
        }
    }
}

#[test]
fn infeasible_qcqp_is_reported() {
    let inside = Quadratic::new(DMatrix::identity(2, 2) * 2.0, DVector::zeros(2), -1.0);
    let far = Quadratic::new(
        DMatrix::identity(2, 2) * 2.0,
        DVector::from_vec(vec![-10.0, 0.0]),
        24.0,
    );
    let p = QcqpProblem::new(
        Quadratic::linear(DVector::zeros(2), 0.0),
        vec![inside, far],
        LinearConstraintSystem::empty(2),
    )
    .unwrap();
    assert_eq!(solve_qcqp(&p, TOL).unwrap().status, SolveStatus::Infeasible);
}

#[test]
fn qp_over_simplex_closed_forms() {
    let r = solve_qp(
        &QpProblem::new(DMatrix::identity(5, 5), DVector::zeros(5), simplex(5)).unwrap(),
        TOL,
    )
    .unwrap();
    assert!((r.x.add_scalar(-0.2)).amax() <= 1e-9);
    let r = solve_qp(
        &QpProblem::new(
            DMatrix::identity(2, 2),
            DVector::from_vec(vec![-2.0, 0.0]),
            simplex(2),
        )
        .unwrap(),
        TOL,
    )
    .unwrap();
    assert!((r.x - DVector::from_vec(vec![1.0, 0.0])).amax() <= 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn qp_is_invariant_under_row_permutation(seed in 0u64..100_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(2..=5);
        let q_mat = random_pd(&mut rng, n, 0.1);
        let q = DVector::from_fn(n, |_, _| uniform(&mut rng, -2.0, 2.0));
        let cons = random_polytope(&mut rng, n);
        let rows = cons.a_in.nrows();
        let mut perm: Vec<usize> = (0..rows).collect();
        for i in (1..rows).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let shuffled = LinearConstraintSystem::new(
            cons.a_eq.clone(),
            cons.b_eq.clone(),
            DMatrix::from_fn(rows, n, |i, j| cons.a_in[(perm[i], j)]),
            DVector::from_fn(rows, |i, _| cons.b_in[perm[i]]),
        )
        .unwrap();
        let a = solve_qp(&QpProblem::new(q_mat.clone(), q.clone(), cons).unwrap(), TOL).unwrap();
        let b = solve_qp(&QpProblem::new(q_mat, q, shuffled).unwrap(), TOL).unwrap();
        prop_assert!(a.is_optimal() && b.is_optimal());
        prop_assert!((&a.x - &b.x).amax() <= 1e-8);
    }
}
