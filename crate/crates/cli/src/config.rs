//! Flag/config-file merging. Precedence: command line, then `--config`
//! file, then the figure preset, then built-in defaults.

use std::path::{Path, PathBuf};

use clap::Args;
use kfeller_core::ModelParams;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Model constants shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    /// Drift constant B (mean-reversion level is B/beta)
    #[arg(long = "B", visible_alias = "drift", allow_negative_numbers = true)]
    pub b: Option<f64>,
    /// Mean-reversion rate
    #[arg(long, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    /// Diffusion coefficient
    #[arg(long, allow_negative_numbers = true)]
    pub sigma: Option<f64>,
    /// Jump intensity
    #[arg(long, conflicts_with = "n", allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    /// Resonance index: sets lambda = 2 n beta
    #[arg(long)]
    pub n: Option<u32>,
    /// Laplace jump rate (jump density (k/2) e^{-k|z|})
    #[arg(long, allow_negative_numbers = true)]
    pub k: Option<f64>,
}

/// Options common to every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML file with defaults for any flag (keys as the long flag names, `-` → `_`)
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory for output files
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Omit the timestamp and run times so reruns are byte-identical
    #[arg(long)]
    pub deterministic: bool,
}

/// Contents of a `--config` file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(rename = "B", alias = "drift")]
    pub b: Option<f64>,
    pub beta: Option<f64>,
    pub sigma: Option<f64>,
    pub lambda: Option<f64>,
    pub n: Option<u32>,
    pub k: Option<f64>,
    pub y: Option<f64>,
    pub t: Option<Vec<f64>>,
    pub grid: Option<String>,
    pub init: Option<String>,
    pub a: Option<f64>,
    pub variance: Option<f64>,
    pub seed: Option<u64>,
    pub n_paths: Option<usize>,
    pub euler_steps: Option<usize>,
    pub suite: Option<String>,
    pub only: Option<Vec<String>>,
    pub out_dir: Option<PathBuf>,
    pub prefix: Option<String>,
    pub quad_tol: Option<f64>,
    pub series_tol: Option<f64>,
    pub overlay_sigma: Option<f64>,
    pub plot: Option<bool>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config file {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("config file {}: {e}", path.display())))
    }
}

/// Model defaults: `k = beta = 1`, `n = 1`, `B = 0`, `sigma = 0`.
#[derive(Debug, Clone, Copy)]
pub struct ModelDefaults {
    pub b: f64,
    pub beta: f64,
    pub sigma: f64,
    pub n: u32,
    pub k: f64,
}

impl Default for ModelDefaults {
    fn default() -> Self {
        Self {
            b: 0.0,
            beta: 1.0,
            sigma: 0.0,
            n: 1,
            k: 1.0,
        }
    }
}

pub fn pick<T>(cli: Option<T>, file: Option<T>, default: T) -> T {
    cli.or(file).unwrap_or(default)
}

pub fn resolve_params(m: &ModelArgs, f: &FileConfig, d: ModelDefaults) -> Result<ModelParams, CliError> {
    if f.lambda.is_some() && f.n.is_some() {
        return Err(CliError::Config(
            "config file sets both `lambda` and `n`; keep one".into(),
        ));
    }
    let b = pick(m.b, f.b, d.b);
    let beta = pick(m.beta, f.beta, d.beta);
    let sigma = pick(m.sigma, f.sigma, d.sigma);
    let k = pick(m.k, f.k, d.k);
    // a command-line choice of either one beats the file
    let lambda = match (m.lambda, m.n, f.lambda, f.n) {
        (Some(l), _, _, _) => l,
        (None, Some(n), _, _) => 2.0 * f64::from(n) * beta,
        (None, None, Some(l), _) => l,
        (None, None, None, Some(n)) => 2.0 * f64::from(n) * beta,
        (None, None, None, None) => 2.0 * f64::from(d.n) * beta,
    };
    ModelParams::new(b, beta, sigma, lambda, k).map_err(|e| CliError::Config(e.to_string()))
}

/// Parses `0,1,10`.
pub fn parse_times(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|p| {
            let p = p.trim();
            p.parse::<f64>()
                .map_err(|_| format!("`{p}` is not a number in the time list `{s}`"))
        })
        .collect()
}

pub fn check_times(ts: &[f64]) -> Result<(), CliError> {
    if ts.is_empty() {
        return Err(CliError::Config("the time list is empty".into()));
    }
    if let Some(t) = ts.iter().find(|t| !(**t >= 0.0) || !t.is_finite()) {
        return Err(CliError::Config(format!("times must be finite and >= 0, got {t}")));
    }
    Ok(())
}

/// Effective model constants as echoed in outputs.
#[derive(Debug, Clone, Serialize)]
pub struct ParamsEcho {
    #[serde(rename = "B")]
    pub b: f64,
    pub beta: f64,
    pub sigma: f64,
    pub lambda: f64,
    pub k: f64,
    pub alpha: f64,
}

impl From<&ModelParams> for ParamsEcho {
    fn from(p: &ModelParams) -> Self {
        Self {
            b: p.b(),
            beta: p.beta(),
            sigma: p.sigma(),
            lambda: p.lambda(),
            k: p.k(),
            alpha: p.alpha(),
        }
    }
}
