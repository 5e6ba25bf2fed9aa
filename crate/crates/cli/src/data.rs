use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use anyhow::Context;
use mvsk_core::moments::{
    check_asset_cap, estimate_moments_with_cap, read_moments, read_returns_csv, DEFAULT_MAX_ASSETS,
};
use mvsk_core::synthetic::{generate_returns, SyntheticSpec};
use mvsk_core::{MomentSet, ReturnsMatrix};

use crate::config::{usage, RunConfig};

pub fn max_assets(cfg: &RunConfig) -> usize {
    cfg.max_assets.unwrap_or(DEFAULT_MAX_ASSETS)
}

/// Generator spec from the config; `n_assets` must be set.
pub fn synthetic_spec(cfg: &RunConfig, n_assets: usize) -> SyntheticSpec {
    let mut spec = SyntheticSpec::new(n_assets, cfg.seed.unwrap_or(0));
    if let Some(t) = cfg.n_obs {
        spec.n_obs = t;
    }
    if let Some(v) = cfg.skew {
        spec.skew = v;
    }
    spec.tail_dof = cfg.tail_dof.or(spec.tail_dof);
    if let Some(v) = cfg.vol {
        spec.vol = v;
    }
    if let Some(v) = cfg.mean {
        spec.mean = v;
    }
    if let Some(v) = cfg.cond {
        spec.cond = v;
    }
    spec
}

pub fn read_csv(path: &Path) -> anyhow::Result<ReturnsMatrix> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    read_returns_csv(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

/// Where the moments of a run come from.
pub enum Source {
    Binary,
    Csv { n_obs: usize },
    Synthetic { n_obs: usize },
}

/// Moments from `--moments`, `--input` or the generator, in that order.
pub fn load_moments(cfg: &RunConfig) -> anyhow::Result<(MomentSet, Source)> {
    let cap = max_assets(cfg);
    if let Some(path) = &cfg.moments {
        let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
        let m = read_moments(BufReader::new(file), cap)
            .with_context(|| format!("reading {}", path.display()))?;
        return Ok((m, Source::Binary));
    }
    if let Some(path) = &cfg.input {
        let r = read_csv(path)?;
        let n_obs = r.n_obs();
        let m = estimate_moments_with_cap(&r, cap)?;
        return Ok((m, Source::Csv { n_obs }));
    }
    let Some(n) = cfg.n_assets else {
        return usage("no data: pass --moments, --input or --n-assets");
    };
    check_asset_cap(n, cap)?;
    let r = generate_returns(&synthetic_spec(cfg, n))?;
    let n_obs = r.n_obs();
    Ok((
        estimate_moments_with_cap(&r, cap)?,
        Source::Synthetic { n_obs },
    ))
}
