//! Exact-in-distribution simulation of the jump-diffusion and
//! Kolmogorov–Smirnov comparison against model CDFs.
//!
//! Every path owns a ChaCha8 stream keyed by `(seed, path_index)`, so the
//! samples do not depend on how paths are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::KernelResult;
use crate::model::{check_time, ModelParams};
use crate::spectral::SpectralGrid;
use crate::term::Expr;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub terminal: f64,
    pub jump_count: u32,
}

fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn laplace<R: Rng>(rng: &mut R, k: f64) -> f64 {
    let e1: f64 = Exp1.sample(rng);
    let e2: f64 = Exp1.sample(rng);
    (e1 - e2) / k
}

fn ou_step<R: Rng>(params: &ModelParams, x: f64, dt: f64, rng: &mut R) -> f64 {
    let mean = params.singular_location(dt, x).unwrap_or(x);
    if params.sigma() == 0.0 || dt == 0.0 {
        return mean;
    }
    let beta = params.beta();
    let var = params.sigma() * params.sigma() * -(-2.0 * beta * dt).exp_m1() / (2.0 * beta);
    let z: f64 = StandardNormal.sample(rng);
    mean + var.sqrt() * z
}

fn check_paths(n_paths: usize) -> Result<()> {
    if n_paths == 0 {
        return Err(Error::InvalidInput("n_paths must be >= 1".into()));
    }
    Ok(())
}

/// Exact event-driven simulation: Poisson jump count, uniform order
/// statistics for the jump epochs, exact OU transitions in between and
/// Laplace jumps of rate `k`.
pub fn simulate(params: &ModelParams, y: f64, t: f64, n_paths: usize, seed: u64) -> Result<Vec<PathSample>> {
    check_time(t)?;
    check_paths(n_paths)?;
    let mean_jumps = params.lambda() * t;
    let poisson = if mean_jumps > 0.0 {
        Some(Poisson::new(mean_jumps).map_err(|e| Error::InvalidParams(format!("Poisson({mean_jumps}): {e}")))?)
    } else {
        None
    };
    Ok((0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(seed, i);
            let n = poisson.as_ref().map_or(0, |p| p.sample(&mut rng) as u32);
            if n == 0 && params.sigma() == 0.0 {
                return PathSample {
                    terminal: params.singular_location(t, y).unwrap_or(y),
                    jump_count: 0,
                };
            }
            let mut times: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * t).collect();
            times.sort_by(f64::total_cmp);
            let mut x = y;
            let mut now = 0.0;
            for s in times {
                x = ou_step(params, x, s - now, &mut rng);
                x += laplace(&mut rng, params.k());
                now = s;
            }
            x = ou_step(params, x, t - now, &mut rng);
            PathSample {
                terminal: x,
                jump_count: n,
            }
        })
        .collect())
}

/// Euler–Maruyama with `steps` equal steps and Poisson jump counts per
/// step. Biased by the time step; kept as a cross-check of [`simulate`].
pub fn simulate_euler(
    params: &ModelParams,
    y: f64,
    t: f64,
    n_paths: usize,
    seed: u64,
    steps: usize,
) -> Result<Vec<PathSample>> {
    check_time(t)?;
    check_paths(n_paths)?;
    if steps == 0 {
        return Err(Error::InvalidInput("Euler scheme needs steps >= 1".into()));
    }
    let dt = t / steps as f64;
    let per_step = params.lambda() * dt;
    let poisson = if per_step > 0.0 {
        Some(Poisson::new(per_step).map_err(|e| Error::InvalidParams(format!("Poisson({per_step}): {e}")))?)
    } else {
        None
    };
    let sq = params.sigma() * dt.sqrt();
    Ok((0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(seed, i);
            let mut x = y;
            let mut count = 0;
            for _ in 0..steps {
                let z: f64 = StandardNormal.sample(&mut rng);
                x += (params.b() - params.beta() * x) * dt + sq * z;
                let n = poisson.as_ref().map_or(0, |p| p.sample(&mut rng) as u32);
                for _ in 0..n {
                    x += laplace(&mut rng, params.k());
                }
                count += n;
            }
            PathSample {
                terminal: x,
                jump_count: count,
            }
        })
        .collect())
}

/// Model distribution the samples are compared with.
#[derive(Debug, Clone, Copy)]
pub enum ModelCdf<'a> {
    /// For σ = 0 the comparison is conditioned on at least one jump and
    /// uses the regular part divided by `1 - q`.
    Kernel(&'a KernelResult),
    /// A density expression of unit mass.
    Expr(&'a Expr),
    /// Inverted or evolved samples; the trapezoid CDF is normalized by its
    /// total.
    Grid(&'a SpectralGrid),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub n_paths: usize,
    pub seed: u64,
    /// Number of samples entering the KS statistic.
    pub ks_samples: usize,
    pub ks_distance: f64,
    pub atom_fraction: f64,
    pub atom_fraction_stderr: f64,
    pub sample_mean: f64,
    pub mean_stderr: f64,
    pub sample_variance: f64,
    pub variance_stderr: f64,
}

/// Sum in a fixed binary-tree order.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 16 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

/// KS distance between the sorted sample and a CDF.
pub fn ks_distance(sorted: &[f64], cdf: &dyn Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i as f64 + 1.0) / n - f)
        })
        .fold(0.0, f64::max)
}

fn grid_cdf(g: &SpectralGrid) -> impl Fn(f64) -> f64 + '_ {
    let cum = g.cumulative();
    let total = cum.last().copied().unwrap_or(1.0);
    let h = g.x_grid.spacing();
    move |x: f64| {
        if x <= g.x_grid.min {
            return 0.0;
        }
        if x >= g.x_grid.max || h == 0.0 {
            return 1.0;
        }
        let s = (x - g.x_grid.min) / h;
        let i = (s.floor() as usize).min(cum.len() - 2);
        let f = s - i as f64;
        // exact integral of the linear interpolant over the partial cell
        let partial = h * (g.values[i] * f + 0.5 * (g.values[i + 1] - g.values[i]) * f * f);
        (cum[i] + partial) / total
    }
}

/// Summary statistics and the KS distance against `model`.
pub fn ks_against(samples: &[PathSample], model: ModelCdf<'_>, seed: u64) -> Result<SimReport> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("no samples".into()));
    }
    let n = samples.len() as f64;
    let atoms = samples.iter().filter(|s| s.jump_count == 0).count() as f64;
    let atom_fraction = atoms / n;
    let xs: Vec<f64> = samples.iter().map(|s| s.terminal).collect();
    let mean = pairwise_sum(&xs) / n;
    let dev2: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let m2 = pairwise_sum(&dev2) / n;
    let dev4: Vec<f64> = dev2.iter().map(|d| d * d).collect();
    let m4 = pairwise_sum(&dev4) / n;
    let var = if samples.len() > 1 { m2 * n / (n - 1.0) } else { 0.0 };

    let (mut sorted, cdf): (Vec<f64>, Box<dyn Fn(f64) -> f64 + '_>) = match model {
        ModelCdf::Kernel(k) if k.sigma == 0.0 => {
            let omq = 1.0 - k.atom_weight;
            if !(omq > 0.0) {
                return Err(Error::InvalidInput(
                    "the kernel has no regular part to compare with".into(),
                ));
            }
            let cond: Vec<f64> = samples
                .iter()
                .filter(|s| s.jump_count > 0)
                .map(|s| s.terminal)
                .collect();
            (cond, Box::new(move |x| k.regular_cdf(x).unwrap_or(f64::NAN) / omq))
        }
        ModelCdf::Kernel(k) => (xs.clone(), Box::new(move |x| k.cdf(x).unwrap_or(f64::NAN))),
        ModelCdf::Expr(e) => (xs.clone(), Box::new(move |x| e.cdf(x).unwrap_or(f64::NAN))),
        ModelCdf::Grid(g) => (xs.clone(), Box::new(grid_cdf(g))),
    };
    if sorted.is_empty() {
        return Err(Error::InvalidInput(
            "no jump-containing samples to compare with the regular part".into(),
        ));
    }
    sorted.sort_by(f64::total_cmp);
    let ks = ks_distance(&sorted, &*cdf);
    if ks.is_nan() {
        return Err(Error::Consistency("model CDF evaluation failed".into()));
    }
    Ok(SimReport {
        n_paths: samples.len(),
        seed,
        ks_samples: sorted.len(),
        ks_distance: ks.clamp(0.0, 1.0),
        atom_fraction,
        atom_fraction_stderr: (atom_fraction * (1.0 - atom_fraction) / n).sqrt(),
        sample_mean: mean,
        mean_stderr: (var / n).sqrt(),
        sample_variance: var,
        variance_stderr: ((m4 - m2 * m2).max(0.0) / n).sqrt(),
    })
}
