#![allow(dead_code)]

use mvsk_core::moments::{estimate_moments, mvsk_objective, MomentSet, MvskSpec};
use mvsk_core::synthetic::{generate_returns, SyntheticSpec};
use nalgebra::DVector;
use rand::Rng;

pub fn instance(n: usize, t: usize, seed: u64) -> MomentSet {
    let mut spec = SyntheticSpec::new(n, seed);
    spec.n_obs = t;
    estimate_moments(&generate_returns(&spec).unwrap()).unwrap()
}

pub fn random_simplex<R: Rng>(rng: &mut R, n: usize) -> DVector<f64> {
    let e = DVector::from_fn(n, |_, _| -rng.random::<f64>().max(1e-300).ln());
    let s = e.sum();
    e / s
}

/// Uniform-ish point of `{1ᵀw = 1, ‖w‖₁ ≤ L}`: `(1 + a)p − a·q` with
/// `p`, `q` on the simplex and `a ≤ (L − 1)/2`.
pub fn random_feasible<R: Rng>(rng: &mut R, n: usize, leverage: f64) -> DVector<f64> {
    let p = random_simplex(rng, n);
    if leverage <= 1.0 {
        return p;
    }
    let q = random_simplex(rng, n);
    let a = rng.random::<f64>() * (leverage - 1.0) / 2.0;
    &p * (1.0 + a) - q * a
}

/// Euclidean projection onto the unit simplex by sorting.
pub fn simplex_projection(v: &DVector<f64>) -> DVector<f64> {
    let mut u: Vec<f64> = v.iter().copied().collect();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut css = 0.0;
    let mut theta = 0.0;
    for (i, ui) in u.iter().enumerate() {
        css += ui;
        let t = (css - 1.0) / (i as f64 + 1.0);
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.map(|x| (x - theta).max(0.0))
}

/// `‖w − Proj(w − ∇f(w))‖∞` on the unit simplex.
pub fn simplex_pg_residual(w: &DVector<f64>, m: &MomentSet, spec: &MvskSpec) -> f64 {
    let g = mvsk_objective(w, m, spec).unwrap().grad;
    (w - simplex_projection(&(w - g))).amax()
}

/// Minimum of `f` over the two-asset simplex on a grid of step `h`.
pub fn grid_min_n2(m: &MomentSet, spec: &MvskSpec, h: f64) -> (f64, DVector<f64>) {
    let steps = (1.0 / h).round() as usize;
    (0..=steps)
        .map(|i| {
            let a = i as f64 / steps as f64;
            let w = DVector::from_vec(vec![a, 1.0 - a]);
            (mvsk_objective(&w, m, spec).unwrap().f, w)
        })
        .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
        .unwrap()
}
