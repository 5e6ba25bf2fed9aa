//! Shared fixtures for the criterion benches.

use mvsk_core::moments::{crra_lambdas, estimate_moments, MvskSpec};
use mvsk_core::subsolvers::{simplex, QpProblem};
use mvsk_core::synthetic::{generate_returns, SyntheticSpec};
use mvsk_core::{MomentSet, ReturnsMatrix, TiltingSpec, Weights};

/// Asset counts swept by the benches.
pub const SIZES: [usize; 4] = [5, 10, 20, 40];

/// Synthetic panel with `n` assets and `5n` observations.
pub fn returns(n: usize, seed: u64) -> ReturnsMatrix {
    generate_returns(&SyntheticSpec::new(n, seed)).expect("valid synthetic spec")
}

pub fn moments(n: usize, seed: u64) -> MomentSet {
    estimate_moments(&returns(n, seed)).expect("moments of a synthetic panel")
}

/// CRRA weights at risk aversion 10.
pub fn crra10() -> MvskSpec {
    crra_lambdas(10.0).expect("valid risk aversion")
}

/// Tilting around equal weights with budget `c = 1`.
pub fn tilt(m: &MomentSet) -> TiltingSpec {
    TiltingSpec::new(m, Weights::equal(m.n_assets()), 1.0).expect("valid tilting spec")
}

/// Long-only mean-variance QP `min λ₂wᵀΣw − μᵀw` over the simplex.
pub fn mean_variance_qp(m: &MomentSet) -> QpProblem {
    let lambda = crra10().lambda;
    QpProblem::new(
        m.sigma() * (2.0 * lambda[1]),
        -m.mu().clone(),
        simplex(m.n_assets()),
    )
    .expect("valid QP")
}
