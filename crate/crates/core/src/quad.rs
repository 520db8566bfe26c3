//! Quadrature rules used by the spectral inversion and the sampled-data
//! convolutions.

use std::sync::OnceLock;

/// Outcome of an adaptive rule: the value and the difference between the
/// last two refinements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
}

/// Ooura–Mori variable transform `t / (1 - exp(-u(t)))` and its derivative.
fn om_phi(t: f64, a: f64, b: f64) -> Option<(f64, f64)> {
    let u = 2.0 * t + a * (1.0 - (-t).exp()) + b * (t.exp() - 1.0);
    if -u > 700.0 {
        return None;
    }
    if u > 45.0 {
        // the remaining nodes sit on the zeros of cos to double precision
        return None;
    }
    let du = 2.0 + a * (-t).exp() + b * t.exp();
    let em = (-u).exp();
    let d = -(-u).exp_m1();
    let phi = t / d;
    let dphi = (d - t * em * du) / (d * d);
    Some((phi, dphi))
}

fn de_cos_sum(f: &dyn Fn(f64) -> f64, omega: f64, m: f64) -> f64 {
    let h = std::f64::consts::PI / m;
    let b = 0.25;
    let a = b / (1.0 + m * (1.0 + m).ln() / (4.0 * std::f64::consts::PI)).sqrt();
    let term = |k: i64| -> Option<f64> {
        let t = (k as f64 - 0.5) * h;
        let (phi, dphi) = om_phi(t, a, b)?;
        let x = m * phi / omega;
        Some(f(x) * (m * phi).cos() * dphi)
    };
    // both directions end where the transform itself says the remaining
    // nodes are negligible
    let mut sum = 0.0;
    let mut k = 1i64;
    while let Some(v) = term(k) {
        sum += v;
        k += 1;
    }
    let mut k = 0i64;
    while let Some(v) = term(k) {
        sum += v;
        k -= 1;
    }
    sum * m * h / omega
}

/// `∫_0^∞ f(w) cos(ω w) dw` for `ω > 0` by the double-exponential Fourier
/// rule, doubling the mesh parameter until two successive values agree to
/// `tol` or `max_level` doublings are spent.
pub fn fourier_cos(f: &dyn Fn(f64) -> f64, omega: f64, tol: f64, max_level: u32) -> QuadResult {
    assert!(omega > 0.0, "fourier_cos needs a positive frequency");
    let mut m = 16.0;
    let mut prev = de_cos_sum(f, omega, m);
    let mut err = f64::INFINITY;
    for _ in 0..max_level {
        m *= 2.0;
        let cur = de_cos_sum(f, omega, m);
        err = (cur - prev).abs();
        prev = cur;
        if err <= tol {
            break;
        }
    }
    QuadResult {
        value: prev,
        error: err,
    }
}

fn exp_sinh_sum(f: &dyn Fn(f64) -> f64, h: f64) -> f64 {
    let half_pi = std::f64::consts::FRAC_PI_2;
    let node = |t: f64| -> f64 {
        let s = half_pi * t.sinh();
        if !(-700.0..=700.0).contains(&s) {
            return 0.0;
        }
        let x = s.exp();
        let w = half_pi * t.cosh() * x;
        let v = f(x) * w;
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    let mut sum = node(0.0);
    for dir in [1.0, -1.0] {
        let mut small = 0;
        let mut j = 1;
        loop {
            let v = node(dir * h * f64::from(j));
            sum += v;
            if v.abs() <= 1e-18 * sum.abs().max(1e-300) {
                small += 1;
                if small >= 3 {
                    break;
                }
            } else {
                small = 0;
            }
            j += 1;
            if j > 1_000_000 {
                break;
            }
        }
    }
    sum * h
}

/// `∫_0^∞ f(w) dw` for integrands decaying at least algebraically, by
/// exp-sinh trapezoidal sums with step halving.
pub fn exp_sinh(f: &dyn Fn(f64) -> f64, tol: f64, max_level: u32) -> QuadResult {
    let mut h = 0.5;
    let mut prev = exp_sinh_sum(f, h);
    let mut err = f64::INFINITY;
    for _ in 0..max_level {
        h *= 0.5;
        let cur = exp_sinh_sum(f, h);
        err = (cur - prev).abs();
        prev = cur;
        if err <= tol * prev.abs().max(1.0) {
            break;
        }
    }
    QuadResult {
        value: prev,
        error: err,
    }
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * z * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = z;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn gl20() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(20))
}

/// Composite 20-point Gauss–Legendre over `panels` equal panels of `[a, b]`.
pub fn gl_composite(f: &dyn Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let (x, w) = gl20();
    let step = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + step * p as f64;
        let mid = lo + 0.5 * step;
        let mut s = 0.0;
        for (xi, wi) in x.iter().zip(w) {
            s += wi * f(mid + 0.5 * step * xi);
        }
        total += 0.5 * step * s;
    }
    total
}

/// Gauss–Legendre on `[a, b]` with panel doubling until two levels agree
/// to `tol`.
pub fn gl_adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> QuadResult {
    let mut panels = 1;
    let mut prev = gl_composite(f, a, b, panels);
    let mut err = f64::INFINITY;
    while panels < 1 << 14 {
        panels *= 2;
        let cur = gl_composite(f, a, b, panels);
        err = (cur - prev).abs();
        prev = cur;
        if err <= tol {
            break;
        }
    }
    QuadResult {
        value: prev,
        error: err,
    }
}

/// Composite Simpson weights for `n` equally spaced samples with spacing `h`.
/// An even number of intervals uses the plain rule; otherwise the last three
/// intervals get the 3/8 rule.
pub fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![0.0; n];
    if n < 2 {
        return w;
    }
    if n == 2 {
        w[0] = 0.5 * h;
        w[1] = 0.5 * h;
        return w;
    }
    let intervals = n - 1;
    let simpson_end = if intervals.is_multiple_of(2) { n - 1 } else { n - 4 };
    let mut i = 0;
    while i + 2 <= simpson_end {
        w[i] += h / 3.0;
        w[i + 1] += 4.0 * h / 3.0;
        w[i + 2] += h / 3.0;
        i += 2;
    }
    if intervals % 2 == 1 {
        let s = simpson_end;
        w[s] += 3.0 * h / 8.0;
        w[s + 1] += 9.0 * h / 8.0;
        w[s + 2] += 9.0 * h / 8.0;
        w[s + 3] += 3.0 * h / 8.0;
    }
    w
}
