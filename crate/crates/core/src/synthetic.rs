//! Synthetic return panels `r_t = μ + B·z_t` with skewed, heavy-tailed
//! shocks.
//!
//! `B = vol·U·diag(s)` with `U` a random orthogonal matrix and `s`
//! log-spaced so that `cond(B) = cond`. Each asset's shock is a
//! standardized shifted gamma variable with skewness `±skew` (sign drawn
//! per asset). With `skew = 0` the shocks are symmetric: Student-t scaled to
//! unit variance when `tail_dof` is set, standard normal otherwise.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::{default_tickers, ReturnsMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_assets: usize,
    pub n_obs: usize,
    pub seed: u64,
    /// Magnitude of the per-asset shock skewness.
    pub skew: f64,
    /// Degrees of freedom of the symmetric shocks used when `skew = 0`.
    pub tail_dof: Option<f64>,
    /// Scale of the mixing matrix (per-period volatility).
    pub vol: f64,
    /// Typical per-period mean return.
    pub mean: f64,
    /// Condition number of the mixing matrix.
    pub cond: f64,
}

impl SyntheticSpec {
    /// `n` assets, `5n` observations, unit shock skewness.
    pub fn new(n_assets: usize, seed: u64) -> Self {
        Self {
            n_assets,
            n_obs: 5 * n_assets,
            seed,
            skew: 1.0,
            tail_dof: None,
            vol: 1e-2,
            mean: 5e-4,
            cond: 10.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.n_assets < 2 {
            return bad(format!("need at least 2 assets, got {}", self.n_assets));
        }
        if self.n_obs < self.n_assets {
            return bad(format!(
                "need at least as many observations as assets ({} < {})",
                self.n_obs, self.n_assets
            ));
        }
        if !(self.skew.is_finite() && self.skew >= 0.0) {
            return bad(format!("skew must be >= 0, got {}", self.skew));
        }
        if let Some(dof) = self.tail_dof {
            if !(dof.is_finite() && dof > 2.0) {
                return bad(format!("tail_dof must be > 2, got {dof}"));
            }
        }
        if !(self.vol.is_finite() && self.vol > 0.0) {
            return bad(format!("vol must be > 0, got {}", self.vol));
        }
        if !self.mean.is_finite() {
            return bad(format!("mean must be finite, got {}", self.mean));
        }
        if !(self.cond.is_finite() && self.cond >= 1.0) {
            return bad(format!("cond must be >= 1, got {}", self.cond));
        }
        Ok(())
    }
}

enum Shock {
    Gamma { dist: Gamma<f64>, k: f64 },
    Student { dist: StudentT<f64>, scale: f64 },
    Normal,
}

impl Shock {
    fn new(spec: &SyntheticSpec) -> Result<Self> {
        if spec.skew > 0.0 {
            let k = (2.0 / spec.skew).powi(2);
            Ok(Shock::Gamma {
                dist: Gamma::new(k, 1.0).map_err(|e| Error::InvalidParameter(e.to_string()))?,
                k,
            })
        } else if let Some(dof) = spec.tail_dof {
            Ok(Shock::Student {
                dist: StudentT::new(dof).map_err(|e| Error::InvalidParameter(e.to_string()))?,
                scale: ((dof - 2.0) / dof).sqrt(),
            })
        } else {
            Ok(Shock::Normal)
        }
    }

    /// Zero-mean, unit-variance draw.
    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            Shock::Gamma { dist, k } => (dist.sample(rng) - k) / k.sqrt(),
            Shock::Student { dist, scale } => dist.sample(rng) * scale,
            Shock::Normal => rng.sample(StandardNormal),
        }
    }
}

/// Deterministic for a given spec.
pub fn generate_returns(spec: &SyntheticSpec) -> Result<ReturnsMatrix> {
    spec.validate()?;
    let (n, t) = (spec.n_assets, spec.n_obs);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let u = g.qr().q();
    let s = DVector::from_fn(n, |i, _| spec.cond.powf(-(i as f64) / (n - 1) as f64));
    let b = u * DMatrix::from_diagonal(&s) * spec.vol;
    let mu = DVector::from_fn(n, |_, _| spec.mean * rng.random_range(0.5..1.5));
    let signs: Vec<f64> = (0..n)
        .map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 })
        .collect();

    let shock = Shock::new(spec)?;
    let mut data = DMatrix::zeros(t, n);
    let mut z = DVector::zeros(n);
    for row in 0..t {
        for j in 0..n {
            z[j] = signs[j] * shock.sample(&mut rng);
        }
        let r = &mu + &b * &z;
        data.row_mut(row).copy_from(&r.transpose());
    }
    ReturnsMatrix::new(data, default_tickers(n))
}
