//! Sample co-moment tensors and portfolio moment evaluation.
//!
//! The co-skewness matrix `Φ` is `N × N²` and is stored as `N` contiguous
//! row-major `N × N` blocks `Φ⁽¹⁾…Φ⁽ᴺ⁾`; the co-kurtosis matrix `Ψ` is
//! `N × N³` stored as `N` contiguous row-major `N × N²` blocks. Row `i` of
//! `Φ⁽ᵏ⁾` holds `E[r̃ᵢ r̃ⱼ r̃ₖ]` for `j = 0..N`, and row `i` of `Ψ⁽ᵏ⁾` holds
//! `E[r̃ᵢ r̃ⱼ r̃ₖ r̃ₗ]` ordered by `(l, j)`. Column `k` of either Hessian is then
//! a set of dot products over contiguous memory.

mod io;
mod objective;

pub use io::{read_moments, read_returns_csv, write_moments, write_returns_csv};
pub use objective::{crra_lambdas, mvsk_objective, MvskSpec, ObjectiveEval};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest asset count accepted by default. `Ψ` alone needs `8·N⁴` bytes.
pub const DEFAULT_MAX_ASSETS: usize = 150;

/// Bytes needed to hold a dense [`MomentSet`] for `n` assets.
pub fn moment_footprint_bytes(n: usize) -> u128 {
    let n = n as u128;
    8 * (n + n * n + n * n * n + n * n * n * n)
}

/// Refuses asset counts whose dense co-kurtosis tensor would exceed `cap`.
pub fn check_asset_cap(n: usize, cap: usize) -> Result<()> {
    if n > cap {
        return Err(Error::TooManyAssets {
            n_assets: n,
            cap,
            bytes: moment_footprint_bytes(n),
        });
    }
    Ok(())
}

/// A `T × N` panel of simple returns, one row per observation.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnsMatrix {
    data: DMatrix<f64>,
    tickers: Vec<String>,
}

impl ReturnsMatrix {
    pub fn new(data: DMatrix<f64>, tickers: Vec<String>) -> Result<Self> {
        let (t, n) = data.shape();
        if n == 0 {
            return Err(Error::Data("return panel has no assets".into()));
        }
        if t < 2 {
            return Err(Error::TooFewObservations(t));
        }
        if tickers.len() != n {
            return Err(Error::Dimension {
                expected: n,
                found: tickers.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            // column-major storage
            let (row, col) = (pos % t, pos / t);
            return Err(Error::Data(format!(
                "non-finite return at observation {row}, asset {col}"
            )));
        }
        Ok(Self { data, tickers })
    }

    /// Builds a panel with generated tickers `A1..AN`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let t = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::Dimension {
                expected: n,
                found: bad.len(),
            });
        }
        let data = DMatrix::from_fn(t, n, |i, j| rows[i][j]);
        Self::new(data, default_tickers(n))
    }

    pub fn n_obs(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_assets(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }
}

pub(crate) fn default_tickers(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("A{i}")).collect()
}

/// Leverage-constrained feasible set `{w | 1ᵀw = 1, ‖w‖₁ ≤ L}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibleSet {
    leverage: f64,
}

impl FeasibleSet {
    pub fn new(leverage: f64) -> Result<Self> {
        if !(leverage.is_finite() && leverage >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "leverage must be >= 1, got {leverage}"
            )));
        }
        Ok(Self { leverage })
    }

    /// The unit simplex (`L = 1`, no shorting).
    pub fn long_only() -> Self {
        Self { leverage: 1.0 }
    }

    pub fn leverage(&self) -> f64 {
        self.leverage
    }

    /// Largest violation of the budget and leverage constraints.
    pub fn violation(&self, w: &DVector<f64>) -> f64 {
        let budget = (w.sum() - 1.0).abs();
        let lev = (w.lp_norm(1) - self.leverage).max(0.0);
        budget.max(lev)
    }

    pub fn contains(&self, w: &DVector<f64>, tol: f64) -> bool {
        self.violation(w) <= tol
    }
}

/// Portfolio weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Weights(pub Vec<f64>);

impl Weights {
    pub fn equal(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.0)
    }

    pub fn is_feasible(&self, set: &FeasibleSet) -> bool {
        set.contains(&self.to_vector(), 1e-9)
    }
}

impl From<DVector<f64>> for Weights {
    fn from(v: DVector<f64>) -> Self {
        Self(v.iter().copied().collect())
    }
}

/// Mean, covariance, co-skewness and co-kurtosis of `N` assets.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSet {
    n: usize,
    mu: DVector<f64>,
    sigma: DMatrix<f64>,
    phi: Vec<f64>,
    psi: Vec<f64>,
}

impl MomentSet {
    /// Assembles a moment set from raw parts, checking shapes, finiteness,
    /// symmetry of `Σ` and full super-symmetry of `Φ` and `Ψ`.
    pub fn from_parts(
        mu: DVector<f64>,
        sigma: DMatrix<f64>,
        phi: Vec<f64>,
        psi: Vec<f64>,
    ) -> Result<Self> {
        let n = mu.len();
        if n == 0 {
            return Err(Error::Data("moment set has no assets".into()));
        }
        if sigma.shape() != (n, n) {
            return Err(Error::Dimension {
                expected: n * n,
                found: sigma.len(),
            });
        }
        if phi.len() != n.pow(3) {
            return Err(Error::Dimension {
                expected: n.pow(3),
                found: phi.len(),
            });
        }
        if psi.len() != n.pow(4) {
            return Err(Error::Dimension {
                expected: n.pow(4),
                found: psi.len(),
            });
        }
        let all_finite = mu
            .iter()
            .chain(sigma.iter())
            .chain(&phi)
            .chain(&psi)
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::Data("moment set contains non-finite entries".into()));
        }
        let m = Self {
            n,
            mu,
            sigma,
            phi,
            psi,
        };
        m.check_symmetry(1e-10)?;
        let floor = -1e-10 * m.sigma.amax();
        if covariance_min_eigen(&m) < floor {
            return Err(Error::Data(
                "covariance matrix is not positive semidefinite".into(),
            ));
        }
        Ok(m)
    }

    fn check_symmetry(&self, rel_tol: f64) -> Result<()> {
        let n = self.n;
        let phi_tol = rel_tol
            * self
                .phi
                .iter()
                .fold(f64::MIN_POSITIVE, |a, v| a.max(v.abs()));
        let psi_tol = rel_tol
            * self
                .psi
                .iter()
                .fold(f64::MIN_POSITIVE, |a, v| a.max(v.abs()));
        let s_max = self.sigma.amax();
        for i in 0..n {
            for j in 0..i {
                let (a, b) = (self.sigma[(i, j)], self.sigma[(j, i)]);
                if (a - b).abs() > rel_tol * s_max.max(f64::MIN_POSITIVE) {
                    return Err(Error::Data(format!(
                        "covariance not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let (a, b) = (self.phi_at(i, j, k), {
                        let (x, y, z) = sorted3(i, j, k);
                        self.phi_at(x, y, z)
                    });
                    if (a - b).abs() > phi_tol {
                        return Err(Error::Data(format!(
                            "co-skewness not super-symmetric at ({i}, {j}, {k})"
                        )));
                    }
                    for l in 0..n {
                        let (a, b) = (self.psi_at(i, j, k, l), self.psi_at_sorted(i, j, k, l));
                        if (a - b).abs() > psi_tol {
                            return Err(Error::Data(format!(
                                "co-kurtosis not super-symmetric at ({i}, {j}, {k}, {l})"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn n_assets(&self) -> usize {
        self.n
    }

    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    /// Flattened co-skewness matrix (`N` blocks of `N × N`).
    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    /// Flattened co-kurtosis matrix (`N` blocks of `N × N²`).
    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    /// `Φᵢⱼ⁽ᵏ⁾ = E[r̃ᵢ r̃ⱼ r̃ₖ]`.
    #[inline]
    pub fn phi_at(&self, i: usize, j: usize, k: usize) -> f64 {
        let n = self.n;
        self.phi[(k * n + i) * n + j]
    }

    /// `Ψᵢⱼ⁽ᵏ'ˡ⁾ = E[r̃ᵢ r̃ⱼ r̃ₖ r̃ₗ]`.
    #[inline]
    pub fn psi_at(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let n = self.n;
        self.psi[((k * n + i) * n + l) * n + j]
    }

    fn psi_at_sorted(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let mut idx = [i, j, k, l];
        idx.sort_unstable();
        self.psi_at(idx[0], idx[1], idx[2], idx[3])
    }

    /// Contiguous row `i` of block `k` of `Φ` (length `N`).
    #[inline]
    fn phi_row(&self, i: usize, k: usize) -> &[f64] {
        let n = self.n;
        let start = (k * n + i) * n;
        &self.phi[start..start + n]
    }

    /// Contiguous row `i` of block `k` of `Ψ` (length `N²`).
    #[inline]
    fn psi_row(&self, i: usize, k: usize) -> &[f64] {
        let n = self.n;
        let start = (k * n + i) * n * n;
        &self.psi[start..start + n * n]
    }

    fn check_dim(&self, w: &DVector<f64>) -> Result<()> {
        if w.len() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                found: w.len(),
            });
        }
        Ok(())
    }

    pub fn footprint_bytes(&self) -> u128 {
        moment_footprint_bytes(self.n)
    }
}

fn sorted3(i: usize, j: usize, k: usize) -> (usize, usize, usize) {
    let mut idx = [i, j, k];
    idx.sort_unstable();
    (idx[0], idx[1], idx[2])
}

/// All orderings of three positions.
const PERM3: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

fn perm4() -> Vec<[usize; 4]> {
    let mut out = Vec::with_capacity(24);
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    if a != b && a != c && a != d && b != c && b != d && c != d {
                        out.push([a, b, c, d]);
                    }
                }
            }
        }
    }
    out
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Estimates sample moments with the default asset cap.
pub fn estimate_moments(r: &ReturnsMatrix) -> Result<MomentSet> {
    estimate_moments_with_cap(r, DEFAULT_MAX_ASSETS)
}

/// Sample mean, covariance, co-skewness and co-kurtosis (divisor `T`).
///
/// Each unique index combination is accumulated once and scattered to all of
/// its permutations. Work is split across assets with rayon, but every sum is
/// taken in observation order so the result does not depend on thread count.
pub fn estimate_moments_with_cap(r: &ReturnsMatrix, max_assets: usize) -> Result<MomentSet> {
    let (t, n) = r.data.shape();
    if t < 2 {
        return Err(Error::TooFewObservations(t));
    }
    check_asset_cap(n, max_assets)?;
    let tf = t as f64;

    let mu = DVector::from_fn(n, |j, _| r.data.column(j).iter().sum::<f64>() / tf);
    // centered returns, one contiguous column per asset
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|j| r.data.column(j).iter().map(|v| v - mu[j]).collect())
        .collect();

    // pairwise products r̃ᵢ∘r̃ⱼ for i ≤ j
    let pair_index = |i: usize, j: usize| i * n - i * (i + 1) / 2 + j;
    let pairs: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let cols = &cols;
            (i..n).map(move |j| cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).collect())
        })
        .collect();

    let mut sigma = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = pairs[pair_index(i, j)].iter().sum::<f64>() / tf;
            sigma[(i, j)] = v;
            sigma[(j, i)] = v;
        }
    }

    let phi_unique: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut out = Vec::new();
            for j in i..n {
                let p = &pairs[pair_index(i, j)];
                for col in &cols[j..] {
                    out.push(dot(p, col) / tf);
                }
            }
            out
        })
        .collect();

    let psi_unique: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut out = Vec::new();
            for j in i..n {
                let p = &pairs[pair_index(i, j)];
                for k in j..n {
                    for l in k..n {
                        out.push(dot(p, &pairs[pair_index(k, l)]) / tf);
                    }
                }
            }
            out
        })
        .collect();

    let mut phi = vec![0.0; n * n * n];
    for (i, vals) in phi_unique.iter().enumerate() {
        let mut it = vals.iter();
        for j in i..n {
            for k in j..n {
                let v = *it.next().expect("co-skewness combination count");
                let idx = [i, j, k];
                for p in PERM3 {
                    let (a, b, c) = (idx[p[0]], idx[p[1]], idx[p[2]]);
                    phi[(c * n + a) * n + b] = v;
                }
            }
        }
    }

    let perms = perm4();
    let mut psi = vec![0.0; n * n * n * n];
    for (i, vals) in psi_unique.iter().enumerate() {
        let mut it = vals.iter();
        for j in i..n {
            for k in j..n {
                for l in k..n {
                    let v = *it.next().expect("co-kurtosis combination count");
                    let idx = [i, j, k, l];
                    for p in &perms {
                        let (a, b, c, d) = (idx[p[0]], idx[p[1]], idx[p[2]], idx[p[3]]);
                        psi[((c * n + a) * n + d) * n + b] = v;
                    }
                }
            }
        }
    }

    Ok(MomentSet {
        n,
        mu,
        sigma,
        phi,
        psi,
    })
}

/// Portfolio moments `(φ₁, φ₂, φ₃, φ₄)` by direct tensor contraction.
pub fn portfolio_moments(w: &DVector<f64>, m: &MomentSet) -> Result<[f64; 4]> {
    m.check_dim(w)?;
    let n = m.n;
    let ww = kron2(w);
    let phi1 = w.dot(&m.mu);
    let phi2 = w.dot(&(&m.sigma * w));
    let mut phi3 = 0.0;
    let mut phi4 = 0.0;
    for i in 0..n {
        let mut s3 = 0.0;
        let mut s4 = 0.0;
        for k in 0..n {
            s3 += w[k] * dot(m.phi_row(i, k), w.as_slice());
            s4 += w[k] * dot(m.psi_row(i, k), &ww);
        }
        phi3 += w[i] * s3;
        phi4 += w[i] * s4;
    }
    Ok([phi1, phi2, phi3, phi4])
}

fn kron2(w: &DVector<f64>) -> Vec<f64> {
    let n = w.len();
    let mut ww = Vec::with_capacity(n * n);
    for l in 0..n {
        for j in 0..n {
            ww.push(w[l] * w[j]);
        }
    }
    ww
}

fn symmetrize(mut h: DMatrix<f64>) -> DMatrix<f64> {
    let n = h.nrows();
    let scale = h.amax().max(f64::MIN_POSITIVE);
    for i in 0..n {
        for j in 0..i {
            let (a, b) = (h[(i, j)], h[(j, i)]);
            debug_assert!(
                (a - b).abs() <= 1e-10 * scale,
                "Hessian asymmetry {} exceeds tolerance",
                (a - b).abs() / scale
            );
            let avg = 0.5 * (a + b);
            h[(i, j)] = avg;
            h[(j, i)] = avg;
        }
    }
    h
}

/// `∇²φ₃(w) = 6 [Φ⁽¹⁾w ⋯ Φ⁽ᴺ⁾w]`.
pub fn hess_phi3(w: &DVector<f64>, m: &MomentSet) -> Result<DMatrix<f64>> {
    m.check_dim(w)?;
    let n = m.n;
    let h = DMatrix::from_fn(n, n, |i, k| 6.0 * dot(m.phi_row(i, k), w.as_slice()));
    Ok(symmetrize(h))
}

/// `∇²φ₄(w) = 12 [Ψ⁽¹⁾(w⊗w) ⋯ Ψ⁽ᴺ⁾(w⊗w)]`.
pub fn hess_phi4(w: &DVector<f64>, m: &MomentSet) -> Result<DMatrix<f64>> {
    m.check_dim(w)?;
    let n = m.n;
    let ww = kron2(w);
    let h = DMatrix::from_fn(n, n, |i, k| 12.0 * dot(m.psi_row(i, k), &ww));
    Ok(symmetrize(h))
}

/// `∇φ₃(w) = ½ ∇²φ₃(w) w`.
pub fn grad_phi3(w: &DVector<f64>, m: &MomentSet) -> Result<DVector<f64>> {
    Ok(hess_phi3(w, m)? * w * 0.5)
}

/// `∇φ₄(w) = ⅓ ∇²φ₄(w) w`.
pub fn grad_phi4(w: &DVector<f64>, m: &MomentSet) -> Result<DVector<f64>> {
    Ok(hess_phi4(w, m)? * w / 3.0)
}

/// Everything the outer loops need at one point, from a single `O(N⁴)` pass.
#[derive(Debug, Clone)]
pub struct MomentDerivatives {
    /// `(φ₁, φ₂, φ₃, φ₄)`.
    pub values: [f64; 4],
    pub sigma_w: DVector<f64>,
    pub grad3: DVector<f64>,
    pub grad4: DVector<f64>,
    pub hess3: DMatrix<f64>,
    pub hess4: DMatrix<f64>,
}

impl MomentDerivatives {
    pub fn at(w: &DVector<f64>, m: &MomentSet) -> Result<Self> {
        let hess3 = hess_phi3(w, m)?;
        let hess4 = hess_phi4(w, m)?;
        let grad3 = &hess3 * w * 0.5;
        let grad4 = &hess4 * w / 3.0;
        let sigma_w = &m.sigma * w;
        let values = [
            w.dot(&m.mu),
            w.dot(&sigma_w),
            w.dot(&grad3) / 3.0,
            w.dot(&grad4) / 4.0,
        ];
        Ok(Self {
            values,
            sigma_w,
            grad3,
            grad4,
            hess3,
            hess4,
        })
    }
}

/// Smallest eigenvalue of `Σ`.
pub fn covariance_min_eigen(m: &MomentSet) -> f64 {
    SymmetricEigen::new(m.sigma.clone()).eigenvalues.min()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sample_panel() -> ReturnsMatrix {
        ReturnsMatrix::from_rows(&[
            vec![0.01, -0.02, 0.005],
            vec![0.03, 0.01, -0.01],
            vec![-0.02, 0.00, 0.02],
            vec![0.00, 0.04, 0.01],
            vec![0.015, -0.01, -0.03],
        ])
        .unwrap()
    }

    #[test]
    fn constant_returns_have_zero_central_moments() {
        let r = ReturnsMatrix::from_rows(&[vec![0.3], vec![0.3], vec![0.3]]).unwrap();
        let m = estimate_moments(&r).unwrap();
        assert_relative_eq!(m.mu()[0], 0.3, epsilon = 1e-15);
        assert_eq!(m.sigma()[(0, 0)], 0.0);
        assert_eq!(m.phi(), &[0.0]);
        assert_eq!(m.psi(), &[0.0]);
    }

    #[test]
    fn three_point_sample_by_hand() {
        let r = ReturnsMatrix::from_rows(&[vec![-1.0], vec![0.0], vec![1.0]]).unwrap();
        let m = estimate_moments(&r).unwrap();
        assert_eq!(m.mu()[0], 0.0);
        assert_relative_eq!(m.sigma()[(0, 0)], 2.0 / 3.0, epsilon = 1e-15);
        assert_eq!(m.phi()[0], 0.0);
        assert_relative_eq!(m.psi()[0], 2.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn rejects_short_and_non_finite_panels() {
        assert!(matches!(
            ReturnsMatrix::from_rows(&[vec![1.0, 2.0]]),
            Err(Error::TooFewObservations(1))
        ));
        assert!(matches!(
            ReturnsMatrix::from_rows(&[vec![1.0], vec![f64::NAN]]),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn asset_cap_is_enforced() {
        let r = sample_panel();
        let err = estimate_moments_with_cap(&r, 2).unwrap_err();
        assert!(matches!(
            err,
            Error::TooManyAssets {
                n_assets: 3,
                cap: 2,
                ..
            }
        ));
        assert_eq!(
            moment_footprint_bytes(200),
            8 * (200 + 200u128.pow(2) + 200u128.pow(3) + 200u128.pow(4))
        );
    }

    #[test]
    fn unit_vector_picks_diagonal_entries() {
        let m = estimate_moments(&sample_panel()).unwrap();
        for i in 0..3 {
            let mut e = DVector::zeros(3);
            e[i] = 1.0;
            let [p1, p2, p3, p4] = portfolio_moments(&e, &m).unwrap();
            assert_eq!(p1, m.mu()[i]);
            assert_eq!(p2, m.sigma()[(i, i)]);
            assert_eq!(p3, m.phi_at(i, i, i));
            assert_eq!(p4, m.psi_at(i, i, i, i));
        }
    }

    #[test]
    fn identity_covariance_equal_weights() {
        let n = 4;
        let m = MomentSet::from_parts(
            DVector::zeros(n),
            DMatrix::identity(n, n),
            vec![0.0; n.pow(3)],
            vec![0.0; n.pow(4)],
        )
        .unwrap();
        let w = DVector::from_element(n, 1.0 / n as f64);
        let [_, p2, _, _] = portfolio_moments(&w, &m).unwrap();
        assert_relative_eq!(p2, 1.0 / n as f64, epsilon = 1e-15);
        assert_eq!(grad_phi3(&w, &m).unwrap(), DVector::zeros(n));
        assert_eq!(hess_phi4(&w, &m).unwrap(), DMatrix::zeros(n, n));
    }

    #[test]
    fn from_parts_rejects_broken_symmetry() {
        let n = 2;
        let mut phi = vec![0.0; 8];
        phi[1] = 1.0;
        let res = MomentSet::from_parts(
            DVector::zeros(n),
            DMatrix::identity(n, n),
            phi,
            vec![0.0; 16],
        );
        assert!(matches!(res, Err(Error::Data(_))));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let m = estimate_moments(&sample_panel()).unwrap();
        let w = DVector::from_element(2, 0.5);
        assert!(matches!(
            portfolio_moments(&w, &m),
            Err(Error::Dimension {
                expected: 3,
                found: 2
            })
        ));
        assert!(hess_phi3(&w, &m).is_err());
    }

    #[test]
    fn feasible_set_membership() {
        let fs = FeasibleSet::new(1.5).unwrap();
        assert!(fs.contains(&DVector::from_vec(vec![1.25, -0.25]), 1e-12));
        assert!(!fs.contains(&DVector::from_vec(vec![1.3, -0.3]), 1e-12));
        assert!(FeasibleSet::new(0.5).is_err());
    }
}
