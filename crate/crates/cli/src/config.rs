//! Run configuration shared by every subcommand.
//!
//! The same struct is filled from command-line flags and from a TOML file
//! given with `--config`; a flag that is present wins over the file.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use mvsk_core::sca::Method;
use serde::Deserialize;

/// Config file format understood by this build.
pub const CONFIG_VERSION: u32 = 1;

/// Raised for anything the user can fix by changing flags or the config
/// file. Maps to exit code 1.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage<T>(msg: impl Into<String>) -> anyhow::Result<T> {
    Err(UsageError(msg.into()).into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Mvsk,
    Tilting,
}

impl Kind {
    pub fn of(method: Method) -> Self {
        if method.is_tilting() {
            Kind::Tilting
        } else {
            Kind::Mvsk
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Mvsk => "mvsk",
            Kind::Tilting => "tilting",
        })
    }
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// TOML file with default values for any of the flags below
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Format version of a config file
    #[arg(skip)]
    pub version: Option<u32>,

    // data
    /// Returns CSV: a ticker header, then one row per period
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Moment set in the flat binary layout written by `moments`
    #[arg(long)]
    pub moments: Option<PathBuf>,
    /// Synthetic data: number of assets
    #[arg(long)]
    pub n_assets: Option<usize>,
    /// Synthetic data: number of observations (default 5N)
    #[arg(long)]
    pub n_obs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Synthetic data: shock skewness magnitude (0 gives symmetric shocks)
    #[arg(long)]
    pub skew: Option<f64>,
    /// Synthetic data: Student-t degrees of freedom when skew = 0
    #[arg(long)]
    pub tail_dof: Option<f64>,
    /// Synthetic data: per-period volatility scale
    #[arg(long)]
    pub vol: Option<f64>,
    /// Synthetic data: typical per-period mean return
    #[arg(long)]
    pub mean: Option<f64>,
    /// Synthetic data: condition number of the mixing matrix
    #[arg(long)]
    pub cond: Option<f64>,
    /// Largest asset count accepted (co-kurtosis storage grows as N^4)
    #[arg(long)]
    pub max_assets: Option<usize>,

    // problem
    #[arg(long, value_enum)]
    pub kind: Option<Kind>,
    /// dc | mm | qmvsk | lmvskt | qmvskt
    #[arg(long)]
    pub method: Option<Method>,
    /// CRRA risk aversion for the MVSK weights
    #[arg(long)]
    pub xi: Option<f64>,
    /// Explicit MVSK weights λ1,λ2,λ3,λ4 (overrides xi)
    #[arg(long, value_delimiter = ',', num_args = 4)]
    pub lambda: Option<Vec<f64>>,
    /// Leverage bound L on ‖w‖₁
    #[arg(long)]
    pub leverage: Option<f64>,
    /// Tracking-error budget as a multiple of the reference volatility
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub tau_w: Option<f64>,
    #[arg(long)]
    pub tau_delta: Option<f64>,
    /// Reference portfolio for tilting (default equal weights)
    #[arg(long, value_delimiter = ',')]
    pub w0: Option<Vec<f64>>,

    // solver
    #[arg(long)]
    pub stop_tol: Option<f64>,
    #[arg(long)]
    pub sub_tol: Option<f64>,
    #[arg(long)]
    pub stat_tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,

    // bench
    /// Asset counts to sweep
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    /// Methods to compare
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<Method>>,
    /// Seeded repetitions per cell
    #[arg(long)]
    pub reps: Option<usize>,

    // output
    /// Main output file of the subcommand
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Solve report (JSON); printed to stdout when absent
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Per-iteration trace (CSV)
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Per-run rows of a benchmark sweep (CSV)
    #[arg(long)]
    pub runs: Option<PathBuf>,
    /// Record wall-clock times in reports and traces
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub timing: Option<bool>,
}

macro_rules! merge_fields {
    ($dst:ident, $src:ident; $($f:ident),* $(,)?) => {
        $( if $dst.$f.is_none() { $dst.$f = $src.$f; } )*
    };
}

impl RunConfig {
    /// Flags merged over the `--config` file, if any.
    pub fn resolve(mut self) -> anyhow::Result<Self> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let file = load(&path)?;
        merge_fields!(self, file;
            input, moments, n_assets, n_obs, seed, skew, tail_dof, vol, mean, cond, max_assets,
            kind, method, xi, lambda, leverage, c, theta, tau_w, tau_delta, w0,
            stop_tol, sub_tol, stat_tol, max_iter, sizes, methods, reps,
            out, report, trace, runs, timing,
        );
        self.version = file.version;
        Ok(self)
    }

    /// Method and problem kind, checked for consistency.
    pub fn method_and_kind(&self) -> anyhow::Result<(Method, Kind)> {
        let method = match (self.method, self.kind) {
            (Some(m), _) => m,
            (None, Some(Kind::Mvsk)) | (None, None) => Method::Qmvsk,
            (None, Some(Kind::Tilting)) => Method::Qmvskt,
        };
        let kind = Kind::of(method);
        if let Some(k) = self.kind {
            if k != kind {
                return usage(format!("method {method} does not solve the {k} problem"));
            }
        }
        Ok((method, kind))
    }

    /// Rejects nonpositive or non-finite tolerances.
    pub fn check_tolerances(&self) -> anyhow::Result<()> {
        for (name, v) in [
            ("stop_tol", self.stop_tol),
            ("sub_tol", self.sub_tol),
            ("stat_tol", self.stat_tol),
        ] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return usage(format!("{name} must be > 0, got {v}"));
                }
            }
        }
        Ok(())
    }

    pub fn timing(&self) -> bool {
        self.timing.unwrap_or(false)
    }
}

fn load(path: &Path) -> anyhow::Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
    let cfg: RunConfig =
        toml::from_str(&text).map_err(|e| UsageError(format!("config {}: {e}", path.display())))?;
    match cfg.version {
        Some(CONFIG_VERSION) => Ok(cfg),
        Some(v) => usage(format!(
            "config {}: unsupported version {v} (this build reads version {CONFIG_VERSION})",
            path.display()
        )),
        None => usage(format!(
            "config {}: missing `version = {CONFIG_VERSION}`",
            path.display()
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig, toml::de::Error> {
        toml::from_str(text)
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(parse("version = 1\nmethod = \"mm\"\n").is_ok());
        assert!(parse("version = 1\nmethd = \"mm\"\n").is_err());
        assert!(parse("version = 1\nconfig = \"x.toml\"\n").is_err());
    }

    #[test]
    fn flags_win_over_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(
            &path,
            "version = 1\nmethod = \"mm\"\nxi = 4.0\nmax_iter = 7\n",
        )
        .unwrap();
        let flags = RunConfig {
            config: Some(path),
            xi: Some(10.0),
            ..Default::default()
        };
        let cfg = flags.resolve().unwrap();
        assert_eq!(cfg.xi, Some(10.0));
        assert_eq!(cfg.method, Some(Method::Mm));
        assert_eq!(cfg.max_iter, Some(7));
    }

    #[test]
    fn version_is_required() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "method = \"mm\"\n").unwrap();
        let cfg = RunConfig {
            config: Some(path.clone()),
            ..Default::default()
        };
        assert!(cfg.resolve().is_err());
        std::fs::write(&path, "version = 2\n").unwrap();
        let cfg = RunConfig {
            config: Some(path),
            ..Default::default()
        };
        assert!(cfg
            .resolve()
            .unwrap_err()
            .downcast_ref::<UsageError>()
            .is_some());
    }

    #[test]
    fn kind_must_match_method() {
        let cfg = RunConfig {
            kind: Some(Kind::Mvsk),
            method: Some(Method::Lmvskt),
            ..Default::default()
        };
        assert!(cfg.method_and_kind().is_err());
        let cfg = RunConfig {
            kind: Some(Kind::Tilting),
            ..Default::default()
        };
        assert_eq!(
            cfg.method_and_kind().unwrap(),
            (Method::Qmvskt, Kind::Tilting)
        );
        assert_eq!(
            RunConfig::default().method_and_kind().unwrap().0,
            Method::Qmvsk
        );
    }
}
