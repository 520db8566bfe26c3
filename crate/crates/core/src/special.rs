//! Scalar special functions: error functions with scaled complementary
//! forms, the modified Bessel function `K0`, and binomial coefficients with
//! real upper index.

use std::f64::consts::PI;

const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;

pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Scaled complementary error function `e^{x^2} erfc(x)`.
pub fn erfcx(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        if x < -26.7 {
            return f64::INFINITY;
        }
        return 2.0 * exp_sq(x) - erfcx(-x);
    }
    if x < 26.0 {
        return exp_sq(x) * libm::erfc(x);
    }
    // asymptotic series, terms shrink monotonically for x >= 26 well past
    // the point where they fall below machine precision
    let inv = 1.0 / (2.0 * x * x);
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 1..30 {
        term *= -((2 * n - 1) as f64) * inv;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum * FRAC_1_SQRT_PI / x
}

/// `e^{x^2}` with the rounding error of `x*x` carried into a second factor.
fn exp_sq(x: f64) -> f64 {
    let hi = x * x;
    let lo = x.mul_add(x, -hi);
    hi.exp() * lo.exp()
}

/// `e^{c} erfc(z)` without forming the overflowing or underflowing factors
/// separately.
pub fn exp_erfc(c: f64, z: f64) -> f64 {
    if z > 0.5 {
        let e = c - z * z;
        if e < -745.5 {
            return 0.0;
        }
        e.exp() * erfcx(z)
    } else {
        let v = libm::erfc(z);
        if c > 709.0 {
            // erfc(z) >= erfc(0.5) here, so the product overflows anyway
            return f64::INFINITY * v.signum();
        }
        c.exp() * v
    }
}

/// Standard normal density scaled to variance `v`: `e^{-x^2/(2v)}/sqrt(2 pi v)`.
pub fn normal_pdf(x: f64, v: f64) -> f64 {
    (-x * x / (2.0 * v)).exp() / (2.0 * PI * v).sqrt()
}

/// Generalized binomial coefficient `C(a, j)` for real `a`.
pub fn binom_real(a: f64, j: u32) -> f64 {
    let mut c = 1.0;
    for i in 0..j {
        c *= (a - f64::from(i)) / f64::from(i + 1);
    }
    c
}

pub fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * f64::from(i))
}

/// `Gamma((i+1)/2)` for even `i`, i.e. `(i-1)!! sqrt(pi) / 2^{i/2}`.
pub fn half_gamma_even(i: u32) -> f64 {
    debug_assert!(i.is_multiple_of(2));
    let mut g = PI.sqrt();
    let mut j = 1;
    while j < i {
        g *= f64::from(j) / 2.0;
        j += 2;
    }
    g
}

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Modified Bessel function of the second kind, order zero, for `x > 0`.
pub fn bessel_k0(x: f64) -> f64 {
    if x.is_nan() || x < 0.0 {
        return f64::NAN;
    }
    if x == 0.0 {
        return f64::INFINITY;
    }
    if x <= 2.0 {
        let y = 0.25 * x * x;
        let lead = -((0.5 * x).ln() + EULER_GAMMA);
        // K0 = lead * I0 + sum y^m/(m!)^2 H_m
        let mut term = 1.0;
        let mut i0 = 1.0;
        let mut h = 0.0;
        let mut tail = 0.0;
        for m in 1..60 {
            let mf = f64::from(m);
            term *= y / (mf * mf);
            h += 1.0 / mf;
            i0 += term;
            tail += term * h;
            if term < 1e-18 * i0 {
                break;
            }
        }
        lead * i0 + tail
    } else {
        // Steed's continued fraction for K_nu with nu = 0
        let mut b = 2.0 * (1.0 + x);
        let mut d = 1.0 / b;
        let mut delh = d;
        let mut q1 = 0.0;
        let mut q2 = 1.0;
        let a1 = 0.25;
        let mut q = a1;
        let mut c = a1;
        let mut a = -a1;
        let mut s = 1.0 + q * delh;
        for i in 1..10_000 {
            let fi = f64::from(i);
            a -= 2.0 * fi;
            c = -a * c / (fi + 1.0);
            let qnew = (q1 - b * q2) / a;
            q1 = q2;
            q2 = qnew;
            q += c * qnew;
            b += 2.0;
            d = 1.0 / (b + a * d);
            delh *= b * d - 1.0;
            let dels = q * delh;
            s += dels;
            if (dels / s).abs() < 1e-17 {
                break;
            }
        }
        (PI / (2.0 * x)).sqrt() * (-x).exp() / s
    }
}
