//! Least squares with sign constraints (Lawson–Hanson active set).

use nalgebra::{DMatrix, DVector};

/// `min ‖Ax − b‖₂` subject to `xᵢ ≥ 0` for `i < n_nonneg`; the remaining
/// columns are free.
pub(crate) fn nnls(a: &DMatrix<f64>, b: &DVector<f64>, n_nonneg: usize) -> Option<DVector<f64>> {
    let n = a.ncols();
    let mut passive: Vec<bool> = (0..n).map(|i| i >= n_nonneg).collect();
    let mut x = DVector::zeros(n);
    if n == 0 {
        return Some(x);
    }
    if passive.iter().any(|p| *p) {
        x = restricted_ls(a, b, &passive)?;
    }
    let scale = a.amax() * b.amax().max(1e-300);
    let tol = 1e-14 * scale * (a.nrows().max(n) as f64);
    for _ in 0..3 * n + 10 {
        let grad = a.transpose() * (b - a * &x);
        let entering = (0..n_nonneg)
            .filter(|&j| !passive[j] && grad[j] > tol)
            .max_by(|&i, &j| grad[i].partial_cmp(&grad[j]).unwrap());
        let Some(j) = entering else {
            return Some(x);
        };
        passive[j] = true;
        loop {
            let z = restricted_ls(a, b, &passive)?;
            let blocking: Vec<usize> = (0..n_nonneg)
                .filter(|&i| passive[i] && z[i] <= 0.0)
                .collect();
            if blocking.is_empty() {
                x = z;
                break;
            }
            let alpha = blocking
                .iter()
                .map(|&i| x[i] / (x[i] - z[i]))
                .fold(f64::INFINITY, f64::min);
            x += (&z - &x) * alpha;
            for i in 0..n_nonneg {
                if passive[i] && x[i] <= f64::EPSILON * x.amax() {
                    passive[i] = false;
                    x[i] = 0.0;
                }
            }
        }
    }
    Some(x)
}

/// Least squares over the passive columns, zero elsewhere.
fn restricted_ls(a: &DMatrix<f64>, b: &DVector<f64>, passive: &[bool]) -> Option<DVector<f64>> {
    let cols: Vec<usize> = (0..a.ncols()).filter(|&i| passive[i]).collect();
    let mut out = DVector::zeros(a.ncols());
    if cols.is_empty() {
        return Some(out);
    }
    let sub = a.select_columns(&cols);
    let svd = sub.svd(true, true);
    let eps = 1e-13 * svd.singular_values.max();
    let y = svd.solve(b, eps).ok()?;
    for (k, &i) in cols.iter().enumerate() {
        out[i] = y[k];
    }
    Some(out)
}
