//! Dense univariate polynomials, coefficients in ascending order.

pub(crate) fn binom(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut c = 1.0;
    for i in 0..k {
        c = c * f64::from(n - i) / f64::from(i + 1);
    }
    c
}

/// `p(x + s)`.
pub(crate) fn shift(p: &[f64], s: f64) -> Vec<f64> {
    let mut out = vec![0.0; p.len()];
    for (i, &c) in p.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let mut sp = 1.0;
        for j in (0..=i).rev() {
            out[j] += c * binom(i as u32, j as u32) * sp;
            sp *= s;
        }
    }
    out
}

/// `p(-x)`.
pub(crate) fn reflect(p: &[f64]) -> Vec<f64> {
    p.iter()
        .enumerate()
        .map(|(i, &c)| if i % 2 == 1 { -c } else { c })
        .collect()
}

pub(crate) fn eval(p: &[f64], x: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

pub(crate) fn add_into(acc: &mut Vec<f64>, p: &[f64], scale: f64) {
    if acc.len() < p.len() {
        acc.resize(p.len(), 0.0);
    }
    for (a, &c) in acc.iter_mut().zip(p) {
        *a += scale * c;
    }
}

pub(crate) fn mul(p: &[f64], q: &[f64]) -> Vec<f64> {
    if p.is_empty() || q.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; p.len() + q.len() - 1];
    for (i, &a) in p.iter().enumerate() {
        for (j, &b) in q.iter().enumerate() {
            out[i + j] += a * b;
        }
    }
    out
}

/// `x^m` as a coefficient vector.
pub(crate) fn monomial(m: u32, c: f64) -> Vec<f64> {
    let mut v = vec![0.0; m as usize + 1];
    v[m as usize] = c;
    v
}

/// Polynomial `P` with `d/du [P(u) e^{b u}] = u^m e^{b u}`, `b != 0`.
pub(crate) fn exp_antiderivative(m: u32, b: f64) -> Vec<f64> {
    let mut out = vec![0.0; m as usize + 1];
    // coefficient of u^{m-i}: (-1)^i m!/(m-i)! / b^{i+1}
    let mut c = 1.0 / b;
    for i in 0..=m {
        out[(m - i) as usize] = c;
        c *= -f64::from(m - i) / b;
    }
    out
}
