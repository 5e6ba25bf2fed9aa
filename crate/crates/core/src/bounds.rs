//! Curvature constants for the majorizing surrogates and the nearest PSD
//! projection used by the quadratic surrogates.
//!
//! Both constants come from Gershgorin bounds on the Hessian rows over the
//! leverage set, where every `|wₖ| ≤ ‖w‖₁ ≤ L`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::moments::{FeasibleSet, MomentSet, MvskSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvatureConstants {
    pub tau_dc: f64,
    pub tau_mm: f64,
}

impl CurvatureConstants {
    pub fn compute(m: &MomentSet, spec: &MvskSpec, fs: &FeasibleSet) -> Self {
        Self {
            tau_dc: dc_tau(m, spec, fs),
            tau_mm: mm_tau(m, spec, fs),
        }
    }
}

/// Row sums used by the two bounds, maximised over the row index `i`.
#[derive(Debug, Clone, Copy)]
struct TensorRowSums {
    /// `maxᵢ Σⱼₖ |Φᵢⱼ⁽ᵏ⁾|`
    phi_full: f64,
    /// `maxᵢ Σⱼ maxₖ |Φᵢⱼ⁽ᵏ⁾|`
    phi_max: f64,
    /// `maxᵢ Σⱼₖₗ |Ψᵢⱼ⁽ᵏ'ˡ⁾|`
    psi_full: f64,
    /// `maxᵢ Σⱼ maxₖₗ |Ψᵢⱼ⁽ᵏ'ˡ⁾|`
    psi_max: f64,
}

fn row_sums(m: &MomentSet) -> TensorRowSums {
    let n = m.n_assets();
    let mut out = TensorRowSums {
        phi_full: 0.0,
        phi_max: 0.0,
        psi_full: 0.0,
        psi_max: 0.0,
    };
    for i in 0..n {
        let (mut phi_full, mut phi_max, mut psi_full, mut psi_max) = (0.0, 0.0, 0.0, 0.0);
        for j in 0..n {
            let mut pm = 0.0f64;
            let mut qm = 0.0f64;
            for k in 0..n {
                let p = m.phi_at(i, j, k).abs();
                phi_full += p;
                pm = pm.max(p);
                for l in 0..n {
                    let q = m.psi_at(i, j, k, l).abs();
                    psi_full += q;
                    qm = qm.max(q);
                }
            }
            phi_max += pm;
            psi_max += qm;
        }
        out.phi_full = out.phi_full.max(phi_full);
        out.phi_max = out.phi_max.max(phi_max);
        out.psi_full = out.psi_full.max(psi_full);
        out.psi_max = out.psi_max.max(psi_max);
    }
    out
}

/// Induced ∞-norm (largest absolute row sum).
pub fn inf_norm(a: &DMatrix<f64>) -> f64 {
    a.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `τ_DC ≥ ρ(∇²f(w))` on the leverage set:
/// `2λ₂‖Σ‖∞ + 6λ₃L·maxᵢΣⱼₖ|Φᵢⱼ⁽ᵏ⁾| + 12λ₄L²·maxᵢΣⱼₖₗ|Ψᵢⱼ⁽ᵏ'ˡ⁾|`.
pub fn dc_tau(m: &MomentSet, spec: &MvskSpec, fs: &FeasibleSet) -> f64 {
    let [_, l2, l3, l4] = spec.lambda;
    let lev = fs.leverage();
    let s = row_sums(m);
    2.0 * l2 * inf_norm(m.sigma())
        + 6.0 * l3 * lev * s.phi_full
        + 12.0 * l4 * lev * lev * s.psi_full
}

/// `τ_MM ≥ ρ(∇²f_ncvx(w))` on the leverage set:
/// `6λ₃L·maxᵢΣⱼmaxₖ|Φᵢⱼ⁽ᵏ⁾| + 12λ₄L²·maxᵢΣⱼmaxₖₗ|Ψᵢⱼ⁽ᵏ'ˡ⁾|`.
pub fn mm_tau(m: &MomentSet, spec: &MvskSpec, fs: &FeasibleSet) -> f64 {
    let [_, _, l3, l4] = spec.lambda;
    let lev = fs.leverage();
    let s = row_sums(m);
    6.0 * l3 * lev * s.phi_max + 12.0 * l4 * lev * lev * s.psi_max
}

/// The higher-moment part of [`dc_tau`] (without the `2λ₂‖Σ‖∞` term).
pub fn dc_tau_high_order(m: &MomentSet, spec: &MvskSpec, fs: &FeasibleSet) -> f64 {
    let [_, _, l3, l4] = spec.lambda;
    let lev = fs.leverage();
    let s = row_sums(m);
    6.0 * l3 * lev * s.phi_full + 12.0 * l4 * lev * lev * s.psi_full
}

/// Nearest symmetric PSD matrix in Frobenius norm: eigenvalues below zero
/// are clamped to zero.
pub fn nearest_psd(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !a.is_square() {
        return Err(Error::Dimension {
            expected: a.nrows() * a.nrows(),
            found: a.len(),
        });
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigen("matrix has non-finite entries".into()));
    }
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 0)
        .ok_or_else(|| Error::Eigen("symmetric eigensolver did not converge".into()))?;
    let d = eig.eigenvalues.map(|v| v.max(0.0));
    let u = &eig.eigenvectors;
    let mut out = u * DMatrix::from_diagonal(&d) * u.transpose();
    // exact symmetry for downstream solvers
    let n = out.nrows();
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (out[(i, j)] + out[(j, i)]);
            out[(i, j)] = avg;
            out[(j, i)] = avg;
        }
    }
    Ok(out)
}
