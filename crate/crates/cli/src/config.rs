//! Config-file loading and flag/file merging. Every flag has a config-file
//! counterpart; an explicit flag always wins.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use traceform::{EntropicFunctional, SolverOptions};

use crate::error::{usage, CliError};
use crate::CommonArgs;

/// Upper bound on grid points, so a typo in a step size fails fast instead
/// of writing gigabytes.
const MAX_GRID_POINTS: usize = 1_000_000;

/// On-disk counterpart of the command-line flags (TOML). Unknown keys are
/// rejected so typos surface as errors rather than silent defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub functional: Option<String>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub out: Option<PathBuf>,
    /// Accepted for interface stability; no current subcommand samples.
    #[allow(dead_code)]
    pub seed: Option<u64>,
    pub b_range: Option<String>,
    pub alpha: Option<f64>,
    pub family: Option<String>,
    pub q_range: Option<String>,
    pub observables: Option<Vec<PathBuf>>,
    pub targets: Option<Vec<f64>>,
    pub dim: Option<usize>,
    pub bell_b: Option<f64>,
}

pub fn load_file(path: Option<&Path>) -> Result<FileConfig, CliError> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })?;
    toml::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

/// Shared settings after merging flags over the config file.
pub struct Settings {
    pub functional: EntropicFunctional,
    pub options: SolverOptions,
    pub out: Option<PathBuf>,
}

impl Settings {
    pub fn resolve(common: &CommonArgs, file: &FileConfig) -> Result<Self, CliError> {
        let spec = common
            .functional
            .clone()
            .or_else(|| file.functional.clone())
            .unwrap_or_else(|| "shannon".to_string());
        let functional = EntropicFunctional::parse(&spec)?;
        let defaults = SolverOptions::default();
        let options = SolverOptions {
            tol: common.tol.or(file.tol).unwrap_or(defaults.tol),
            max_iter: common.max_iter.or(file.max_iter).unwrap_or(defaults.max_iter),
            ..defaults
        };
        let out = common.out.clone().or_else(|| file.out.clone());
        Ok(Settings {
            functional,
            options,
            out,
        })
    }

    pub fn require_out(&self) -> Result<&Path, CliError> {
        self.out
            .as_deref()
            .ok_or_else(|| usage("missing --out (or `out` in the config file)"))
    }
}

/// Parse "lo:hi:step" into the inclusive grid `lo, lo+step, ..` up to `hi`.
/// The endpoint is kept when it lands on the grid within 1e-9 steps of
/// roundoff.
pub fn parse_range(spec: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [lo, hi, step] = parts[..] else {
        return Err(usage(format!("range {spec:?} must be lo:hi:step")));
    };
    let lo: f64 = lo
        .parse()
        .map_err(|_| usage(format!("range {spec:?}: bad lower bound {lo:?}")))?;
    let hi: f64 = hi
        .parse()
        .map_err(|_| usage(format!("range {spec:?}: bad upper bound {hi:?}")))?;
    let step: f64 = step
        .parse()
        .map_err(|_| usage(format!("range {spec:?}: bad step {step:?}")))?;
    if !lo.is_finite() || !hi.is_finite() || !step.is_finite() {
        return Err(usage(format!("range {spec:?}: bounds must be finite")));
    }
    if step <= 0.0 {
        return Err(usage(format!("range {spec:?}: step must be positive")));
    }
    if hi < lo {
        return Err(usage(format!("range {spec:?}: upper bound below lower")));
    }
    let count = (hi - lo) / step + 1e-9;
    if count > MAX_GRID_POINTS as f64 {
        return Err(usage(format!(
            "range {spec:?}: more than {MAX_GRID_POINTS} points"
        )));
    }
    let n = count.floor() as usize;
    Ok((0..=n).map(|i| lo + i as f64 * step).collect())
}
