use std::path::{Path, PathBuf};

use clap::Args;
use kfeller_core::density::{self, weak_discontinuity_report, Evolved, InitialData};
use kfeller_core::figures::{self, FIG1_SIGMA, FIG1_TIMES, FIG2_A, FIG2_TIMES};
use kfeller_core::grid::{read_two_column, UniformGrid};
use kfeller_core::kernel::{self, KernelMethod};
use kfeller_core::mc::{self, ModelCdf};
use kfeller_core::spectral::{self, CharFn, DEFAULT_QUAD_TOL};
use kfeller_core::validation::{self, Suite};
use kfeller_core::{Error, ModelParams, Resonance};
use log::info;
use serde::Serialize;

use crate::config::{
    check_times, parse_times, pick, resolve_params, CommonArgs, FileConfig, ModelArgs, ModelDefaults, ParamsEcho,
};
use crate::output::{ensure_dir, num_tag, write_plot_script, write_table, Meta, PlotCurve, PlotPanel};
use crate::CliError;

fn parse_grid(s: &str) -> Result<UniformGrid, CliError> {
    s.parse()
        .map_err(|e: Error| CliError::Config(format!("bad grid `{s}` (expected min:max:count): {e}")))
}

fn times(cli: Option<&str>, f: &FileConfig, default: &[f64]) -> Result<Vec<f64>, CliError> {
    let ts = match cli {
        Some(s) => parse_times(s).map_err(CliError::Config)?,
        None => f.t.clone().unwrap_or_else(|| default.to_vec()),
    };
    check_times(&ts)?;
    Ok(ts)
}

#[derive(Debug, Clone, Args)]
pub struct KernelArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    /// Initial state
    #[arg(long, allow_negative_numbers = true)]
    pub y: Option<f64>,
    /// Comma-separated times
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<String>,
    /// Output grid min:max:count
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    /// Also compute every curve with this sigma (the σ > 0 overlay)
    #[arg(long)]
    pub overlay_sigma: Option<f64>,
    /// Tolerance on the series truncation bound before falling back to spectral inversion
    #[arg(long)]
    pub series_tol: Option<f64>,
    /// Absolute tolerance of the spectral inversion
    #[arg(long)]
    pub quad_tol: Option<f64>,
    /// Output file name prefix
    #[arg(long)]
    pub prefix: Option<String>,
    /// Write a matplotlib script overlaying the curves
    #[arg(long)]
    pub plot: bool,
    /// Figure preset (1)
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=1))]
    pub figure: Option<u8>,
}

#[derive(Debug, Clone, Serialize)]
struct KernelConfig {
    params: ParamsEcho,
    y: f64,
    t: Vec<f64>,
    sigmas: Vec<f64>,
    grid: String,
    series_tol: f64,
    quad_tol: f64,
    prefix: String,
    out_dir: PathBuf,
    figure: Option<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    FiniteSum,
    Series,
    Spectral,
    Closed,
    Quadrature,
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = serde_json::to_value(self).expect("unit variant");
        write!(f, "{}", s.as_str().unwrap_or_default())
    }
}

/// Kernel values on a grid with the data recorded in the CSV header.
pub struct KernelCurve {
    pub values: Vec<f64>,
    pub branch: Branch,
    pub atom_weight: f64,
    pub atom_location: f64,
    pub atom_variance: f64,
    pub terms_used: Option<u32>,
    pub truncation_bound: f64,
    pub quad_error: f64,
}

/// Finite sum for integer α; otherwise the series if its truncation bound
/// meets `series_tol`, else spectral inversion.
pub fn kernel_curve(
    params: &ModelParams,
    t: f64,
    y: f64,
    xs: &[f64],
    grid: &UniformGrid,
    series_tol: f64,
    quad_tol: f64,
) -> Result<KernelCurve, CliError> {
    let from_result = |r: kernel::KernelResult| -> Result<KernelCurve, CliError> {
        let values = xs.iter().map(|&x| r.density(x)).collect::<Result<Vec<_>, _>>()?;
        Ok(KernelCurve {
            values,
            branch: match r.meta.method {
                KernelMethod::FiniteSum => Branch::FiniteSum,
                KernelMethod::Series => Branch::Series,
            },
            atom_weight: r.atom_weight,
            atom_location: r.atom_center,
            atom_variance: r.atom_variance,
            terms_used: Some(r.meta.terms_used),
            truncation_bound: r.meta.truncation_bound,
            quad_error: 0.0,
        })
    };
    if let Resonance::General { .. } = params.resonance() {
        let r = kernel::fundamental_series(params, t, y, series_tol, kernel::DEFAULT_MAX_TERMS)?;
        if r.meta.truncation_bound <= series_tol {
            return from_result(r);
        }
        info!(
            "series bound {:.2e} above {series_tol:.0e} at t={t}; using spectral inversion",
            r.meta.truncation_bound
        );
        let cf = CharFn::new(*params, t, y)?;
        let subtract = params.sigma() == 0.0 || t == 0.0;
        let g = spectral::invert_grid(&cf, grid, subtract, quad_tol)?;
        let tc = params.time_coeffs(t)?;
        return Ok(KernelCurve {
            values: g.values,
            branch: Branch::Spectral,
            atom_weight: cf.atom_weight(),
            atom_location: cf.center(),
            atom_variance: tc.gaussian_variance(),
            terms_used: None,
            truncation_bound: 0.0,
            quad_error: g.err_estimate,
        });
    }
    from_result(kernel::fundamental_finite_sum(params, t, y)?)
}

fn stationary_sup_diff(params: &ModelParams, xs: &[f64], values: &[f64]) -> Option<f64> {
    let st = kernel::stationary_density(params).ok()?;
    let mut worst: f64 = 0.0;
    for (&x, &v) in xs.iter().zip(values) {
        if let Ok(s) = st.value(x) {
            worst = worst.max((v - s).abs());
        }
    }
    Some(worst)
}

pub fn run_kernel(a: &KernelArgs) -> Result<Vec<PathBuf>, CliError> {
    let f = FileConfig::load(a.common.config.as_deref())?;
    let fig = a.figure;
    let params = resolve_params(&a.model, &f, ModelDefaults::default())?;
    let y = pick(a.y, f.y, 0.0);
    let ts = times(a.t.as_deref(), &f, &FIG1_TIMES)?;
    let grid_spec = pick(a.grid.clone(), f.grid.clone(), figures::default_grid(1).to_string());
    let grid = parse_grid(&grid_spec)?;
    let overlay = a.overlay_sigma.or(f.overlay_sigma).or(fig.map(|_| FIG1_SIGMA));
    let mut sigmas = vec![params.sigma()];
    if let Some(s) = overlay {
        if s != params.sigma() {
            sigmas.push(s);
        }
    }
    let series_tol = pick(a.series_tol, f.series_tol, 1e-8);
    let quad_tol = pick(a.quad_tol, f.quad_tol, DEFAULT_QUAD_TOL);
    if !(series_tol > 0.0 && quad_tol > 0.0) {
        return Err(CliError::Config("series_tol and quad_tol must be > 0".into()));
    }
    let prefix = pick(a.prefix.clone(), f.prefix.clone(), "kernel".to_string());
    let out_dir = pick(a.common.out_dir.clone(), f.out_dir.clone(), PathBuf::from("."));
    let plot = a.plot || f.plot.unwrap_or(false) || fig.is_some();
    let config = KernelConfig {
        params: (&params).into(),
        y,
        t: ts.clone(),
        sigmas: sigmas.clone(),
        grid: grid.to_string(),
        series_tol,
        quad_tol,
        prefix: prefix.clone(),
        out_dir: out_dir.clone(),
        figure: fig,
    };
    ensure_dir(&out_dir)?;
    let xs = grid.points();
    let mut written = Vec::new();
    let mut panels = Vec::new();
    for &t in &ts {
        let mut curves = Vec::new();
        for (i, &sigma) in sigmas.iter().enumerate() {
            let p = params.with_sigma(sigma)?;
            let c = kernel_curve(&p, t, y, &xs, &grid, series_tol, quad_tol)?;
            let mut meta = Meta::new("kernel", &config, a.common.deterministic);
            meta.push_num("t", t);
            meta.push_num("y", y);
            meta.push_num("sigma", sigma);
            meta.push_num("alpha", p.alpha());
            meta.push("branch", c.branch);
            if let Some(n) = c.terms_used {
                meta.push("terms_used", n);
            }
            meta.push_num("truncation_bound", c.truncation_bound);
            meta.push_num("quad_error", c.quad_error);
            meta.push_num("atom_weight", c.atom_weight);
            meta.push_num("atom_location", c.atom_location);
            meta.push_num("atom_variance", c.atom_variance);
            // σ > 0 values include the smoothed no-jump packet
            meta.push("atom_in_values", c.atom_variance > 0.0);
            if let Some(d) = stationary_sup_diff(&p, &xs, &c.values) {
                meta.push_num("stationary_sup_diff", d);
            }
            let name = format!("{prefix}_t{}_sigma{}.csv", num_tag(t), num_tag(sigma));
            let path = out_dir.join(&name);
            write_table(&path, &meta, &["x", "value"], &[&xs, &c.values])?;
            info!("wrote {}", path.display());
            written.push(path);
            curves.push(PlotCurve {
                file: name,
                label: format!("sigma={sigma}"),
                style: if i == 0 { "-" } else { "--" }.into(),
            });
        }
        panels.push(PlotPanel {
            title: format!("t={t}"),
            curves,
        });
    }
    if plot {
        let script = out_dir.join(format!("{prefix}_plot.py"));
        written.push(write_plot_script(
            &script,
            "Fundamental solution at the requested times",
            &format!("{prefix}.png"),
            &panels,
        )?);
    }
    Ok(written)
}

#[derive(Debug, Clone, Args)]
pub struct DensityArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    /// Initial data: gaussian, step, or a CSV file with x,value columns
    #[arg(long)]
    pub init: Option<String>,
    /// Centre parameter of the Gaussian (mean a) or step (on [-a-1/2, -a+1/2])
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,
    /// Variance of the Gaussian data
    #[arg(long)]
    pub variance: Option<f64>,
    /// Comma-separated times
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<String>,
    /// Output grid min:max:count (defaults to the data grid for CSV input)
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    /// Output file name prefix
    #[arg(long)]
    pub prefix: Option<String>,
    /// Write a matplotlib script overlaying the times
    #[arg(long)]
    pub plot: bool,
    /// Figure preset (2): Gaussian and step data side by side
    #[arg(long, value_parser = clap::value_parser!(u8).range(2..=2))]
    pub figure: Option<u8>,
}

#[derive(Debug, Clone, Serialize)]
struct DensityConfig {
    params: ParamsEcho,
    init: Vec<String>,
    a: f64,
    variance: f64,
    t: Vec<f64>,
    grid: String,
    prefix: String,
    out_dir: PathBuf,
    figure: Option<u8>,
}

fn load_init(spec: &str, a: f64, variance: f64) -> Result<(String, InitialData), CliError> {
    match spec {
        "gaussian" => {
            if !(variance > 0.0) {
                return Err(CliError::Config(format!("variance must be > 0, got {variance}")));
            }
            Ok(("gaussian".into(), InitialData::Gaussian { a, variance }))
        }
        "step" => Ok(("step".into(), InitialData::Step { a })),
        path => {
            let file = std::fs::File::open(path).map_err(|e| {
                CliError::Config(format!(
                    "--init `{path}` is not gaussian, step or a readable CSV file: {e}"
                ))
            })?;
            let data = read_two_column(file).map_err(|e| CliError::Config(format!("{path}: {e}")))?;
            let init = InitialData::sampled(&data.x, &data.y).map_err(|e| CliError::Config(format!("{path}: {e}")))?;
            let stem = Path::new(path)
                .file_stem()
                .map_or("data".to_string(), |s| s.to_string_lossy().into_owned());
            Ok((stem, init))
        }
    }
}

fn evolve_on(
    params: &ModelParams,
    init: &InitialData,
    t: f64,
    grid: &UniformGrid,
) -> Result<(Branch, Evolved), CliError> {
    if !matches!(init, InitialData::Sampled { .. }) {
        match density::evolve(params, init, t) {
            Ok(e) => return Ok((Branch::Closed, e)),
            Err(Error::NonIntegerAlpha(_) | Error::NoClosedForm(_) | Error::Unsupported(_)) => {}
            Err(e) => return Err(e.into()),
        }
    }
    let g = density::evolve_numeric(params, init, t, grid)?;
    Ok((Branch::Quadrature, Evolved::Grid { grid: g }))
}

pub fn run_density(a: &DensityArgs) -> Result<Vec<PathBuf>, CliError> {
    let f = FileConfig::load(a.common.config.as_deref())?;
    let fig = a.figure;
    let params = resolve_params(&a.model, &f, ModelDefaults::default())?;
    let ts = times(a.t.as_deref(), &f, &FIG2_TIMES)?;
    let ca = pick(a.a, f.a, FIG2_A);
    let variance = pick(a.variance, f.variance, 0.5);
    let specs: Vec<String> = match (a.init.clone().or(f.init.clone()), fig) {
        (Some(s), _) => vec![s],
        (None, Some(_)) => vec!["gaussian".into(), "step".into()],
        (None, None) => vec!["gaussian".into()],
    };
    let inits = specs
        .iter()
        .map(|s| load_init(s, ca, variance))
        .collect::<Result<Vec<_>, _>>()?;
    let grid_spec = a.grid.clone().or(f.grid.clone());
    let grid = match (&grid_spec, &inits[..]) {
        (Some(s), _) => parse_grid(s)?,
        (None, [(_, InitialData::Sampled { grid, .. })]) => *grid,
        (None, _) => figures::default_grid(2),
    };
    let prefix = pick(a.prefix.clone(), f.prefix.clone(), "density".to_string());
    let out_dir = pick(a.common.out_dir.clone(), f.out_dir.clone(), PathBuf::from("."));
    let plot = a.plot || f.plot.unwrap_or(false) || fig.is_some();
    let config = DensityConfig {
        params: (&params).into(),
        init: specs.clone(),
        a: ca,
        variance,
        t: ts.clone(),
        grid: grid.to_string(),
        prefix: prefix.clone(),
        out_dir: out_dir.clone(),
        figure: fig,
    };
    ensure_dir(&out_dir)?;
    let xs = grid.points();
    let mut written = Vec::new();
    let mut panels = Vec::new();
    for (tag, init) in &inits {
        let mut curves = Vec::new();
        for &t in &ts {
            let (branch, e) = evolve_on(&params, init, t, &grid)?;
            let values = e.values(&xs);
            let mut meta = Meta::new("density", &config, a.common.deterministic);
            meta.push("init", tag);
            meta.push_num("t", t);
            meta.push("branch", branch);
            // grid results only see the mass inside the window
            let mass_key = if branch == Branch::Closed {
                "mass"
            } else {
                "mass_on_grid"
            };
            meta.push_num(mass_key, e.mass()?);
            if let Some(expr) = e.expr() {
                let rep = weak_discontinuity_report(expr);
                meta.push("discontinuities", serde_json::to_string(&rep).expect("plain data"));
            }
            let name = format!("{prefix}_{tag}_t{}.csv", num_tag(t));
            let path = out_dir.join(&name);
            write_table(&path, &meta, &["x", "value"], &[&xs, &values])?;
            info!("wrote {}", path.display());
            written.push(path);
            curves.push(PlotCurve {
                file: name,
                label: format!("t={t}"),
                style: "-".into(),
            });
        }
        panels.push(PlotPanel {
            title: tag.clone(),
            curves,
        });
    }
    if plot {
        let script = out_dir.join(format!("{prefix}_plot.py"));
        written.push(write_plot_script(
            &script,
            "Evolution of the initial densities",
            &format!("{prefix}.png"),
            &panels,
        )?);
    }
    Ok(written)
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    /// Initial state
    #[arg(long, allow_negative_numbers = true)]
    pub y: Option<f64>,
    /// Final time
    #[arg(long)]
    pub t: Option<f64>,
    /// Number of sample paths (default 100000)
    #[arg(long)]
    pub n_paths: Option<usize>,
    /// Random seed (default 1)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Use the Euler scheme with this many steps instead of exact sampling
    #[arg(long)]
    pub euler_steps: Option<usize>,
    /// Write terminal values as a single-column CSV
    #[arg(long)]
    pub samples: Option<PathBuf>,
    /// JSON report path (stdout when omitted)
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
struct SimulateConfig {
    params: ParamsEcho,
    y: f64,
    t: f64,
    n_paths: usize,
    seed: u64,
    euler_steps: Option<usize>,
}

#[derive(Debug, Serialize)]
struct SimulateOutput<'a> {
    version: &'a str,
    config: &'a SimulateConfig,
    model_branch: Branch,
    report: mc::SimReport,
}

pub fn run_simulate(a: &SimulateArgs) -> Result<Vec<PathBuf>, CliError> {
    let f = FileConfig::load(a.common.config.as_deref())?;
    let params = resolve_params(&a.model, &f, ModelDefaults::default())?;
    let y = pick(a.y, f.y, 0.0);
    let t = match (a.t, f.t.as_deref()) {
        (Some(t), _) => t,
        (None, Some([t])) => *t,
        (None, Some(_)) => return Err(CliError::Config("simulate takes a single time `t`".into())),
        (None, None) => 1.0,
    };
    check_times(&[t])?;
    let n_paths = pick(a.n_paths, f.n_paths, 100_000);
    let seed = pick(a.seed, f.seed, 1);
    let euler_steps = a.euler_steps.or(f.euler_steps);
    let config = SimulateConfig {
        params: (&params).into(),
        y,
        t,
        n_paths,
        seed,
        euler_steps,
    };
    let samples = match euler_steps {
        Some(steps) => mc::simulate_euler(&params, y, t, n_paths, seed, steps)?,
        None => mc::simulate(&params, y, t, n_paths, seed)?,
    };
    let mut written = Vec::new();
    if let Some(path) = &a.samples {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            ensure_dir(dir)?;
        }
        let meta = Meta::new("simulate", &config, a.common.deterministic);
        let xs: Vec<f64> = samples.iter().map(|s| s.terminal).collect();
        write_table(path, &meta, &["x"], &[&xs])?;
        written.push(path.clone());
    }
    // finite sum for integer α; σ = 0 series when its bound is small; the
    // inverted grid for σ > 0 (the smoothed series CDF is slow to evaluate)
    let (branch, report) = match params.resonance() {
        Resonance::General { .. } if params.sigma() > 0.0 => {
            let sd = params.transition_variance(t)?.sqrt();
            let c = params.singular_location(t, y)?;
            let g = UniformGrid::new(c - 12.0 * sd, c + 12.0 * sd, 4001)?;
            let inv = spectral::invert_grid(&CharFn::new(params, t, y)?, &g, false, DEFAULT_QUAD_TOL)?;
            (Branch::Spectral, mc::ks_against(&samples, ModelCdf::Grid(&inv), seed)?)
        }
        Resonance::General { .. } => {
            let r = kernel::fundamental_series(&params, t, y, 1e-6, kernel::DEFAULT_MAX_TERMS)?;
            if r.meta.truncation_bound > 1e-6 {
                return Err(CliError::Core(Error::NoClosedForm(format!(
                    "series bound {:.2e} too large for a KS comparison at t={t}; use a smaller t",
                    r.meta.truncation_bound
                ))));
            }
            (Branch::Series, mc::ks_against(&samples, ModelCdf::Kernel(&r), seed)?)
        }
        _ => {
            let r = kernel::fundamental_finite_sum(&params, t, y)?;
            (Branch::FiniteSum, mc::ks_against(&samples, ModelCdf::Kernel(&r), seed)?)
        }
    };
    let out = SimulateOutput {
        version: kfeller_core::VERSION,
        config: &config,
        model_branch: branch,
        report,
    };
    let json = serde_json::to_string_pretty(&out).expect("plain data");
    match &a.report {
        Some(path) => {
            crate::output::write_text(path, &(json + "\n"))?;
            written.push(path.clone());
        }
        None => println!("{json}"),
    }
    Ok(written)
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// quick or full
    #[arg(long)]
    pub suite: Option<String>,
    /// Run only these checks (comma-separated or repeated)
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<String>,
    /// Base seed for the Monte Carlo checks (default 7)
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON report path (stdout when omitted)
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// List the available checks and exit
    #[arg(long)]
    pub list: bool,
}

#[derive(Debug, Serialize)]
struct ValidateOutput<'a> {
    version: &'a str,
    suite: Suite,
    seed: u64,
    passed: bool,
    checks: Vec<validation::CheckResult>,
}

pub fn run_validate(a: &ValidateArgs) -> Result<Vec<PathBuf>, CliError> {
    if a.list {
        for c in validation::CHECKS {
            println!("{c}");
        }
        return Ok(Vec::new());
    }
    let f = FileConfig::load(a.common.config.as_deref())?;
    let suite: Suite = pick(a.suite.clone(), f.suite.clone(), "quick".into())
        .parse()
        .map_err(|e: Error| CliError::Config(e.to_string()))?;
    let seed = pick(a.seed, f.seed, 7);
    let only = if a.only.is_empty() {
        f.only.clone()
    } else {
        Some(a.only.clone())
    };
    let mut checks =
        validation::run_suite(suite, only.as_deref(), seed).map_err(|e| CliError::Config(e.to_string()))?;
    for c in &mut checks {
        eprintln!(
            "{} {:<20} measured {:.3e}  tolerance {:.1e}  {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.measured,
            c.tolerance,
            c.detail
        );
        if a.common.deterministic {
            c.seconds = 0.0;
        }
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    let total = checks.len();
    let out = ValidateOutput {
        version: kfeller_core::VERSION,
        suite,
        seed,
        passed: failed == 0,
        checks,
    };
    let json = serde_json::to_string_pretty(&out).expect("plain data");
    let mut written = Vec::new();
    match &a.report {
        Some(path) => {
            crate::output::write_text(path, &(json + "\n"))?;
            written.push(path.clone());
        }
        None => println!("{json}"),
    }
    if failed > 0 {
        return Err(CliError::ValidationFailed { failed, total });
    }
    Ok(written)
}
