//! Integer-order Bessel functions of real positive argument.
//!
//! `J_n` comes from Miller's downward recurrence normalised with
//! `J_0 + 2 sum J_2k = 1`. `Y_0`, `Y_1` come from the Neumann series over the
//! same `J_k` for moderate arguments and from Hankel's asymptotic expansion
//! for `x >= ASYMPTOTIC_FROM`; higher `Y_n` use the (stable) upward recurrence.

use num_complex::Complex64;
use std::f64::consts::{FRAC_2_PI, FRAC_PI_2, FRAC_PI_4, PI};

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const ASYMPTOTIC_FROM: f64 = 25.0;
const RESCALE_ABOVE: f64 = 1e200;

fn check_argument(x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("Bessel argument must be finite and positive, got {x}")))
    }
}

/// `J_0..=J_{n_max}` and `Y_0..=Y_{n_max}` at `x > 0`.
pub fn bessel_jy(n_max: usize, x: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    check_argument(x)?;
    if x >= ASYMPTOTIC_FROM && (n_max as f64) < 0.5 * x {
        let (j0, y0) = hankel_asymptotic(0, x);
        let (j1, y1) = hankel_asymptotic(1, x);
        return Ok((upward(j0, j1, n_max, x), upward(y0, y1, n_max, x)));
    }
    let top = miller_top(n_max, x);
    let j = miller(top, x);
    let (y0, y1) = if x >= ASYMPTOTIC_FROM {
        (hankel_asymptotic(0, x).1, hankel_asymptotic(1, x).1)
    } else {
        neumann_y01(&j, x)
    };
    let y = upward(y0, y1, n_max, x);
    Ok((j[..=n_max].to_vec(), y))
}

/// First-kind Hankel functions `H_n^(1)(x) = J_n + i Y_n` for `n = 0..=n_max`.
pub fn hankel1_all(n_max: usize, x: f64) -> Result<Vec<Complex64>> {
    let (j, y) = bessel_jy(n_max, x)?;
    Ok(j.into_iter().zip(y).map(|(a, b)| Complex64::new(a, b)).collect())
}

/// Second-kind Hankel functions `H_n^(2)(x) = J_n - i Y_n` for `n = 0..=n_max`.
pub fn hankel2_all(n_max: usize, x: f64) -> Result<Vec<Complex64>> {
    let (j, y) = bessel_jy(n_max, x)?;
    Ok(j.into_iter().zip(y).map(|(a, b)| Complex64::new(a, -b)).collect())
}

/// `H_n^(1)(x)` for `x > 0`. Accuracy is validated for `n <= 12`,
/// `1e-3 <= x <= 1e3`.
pub fn hankel1(n: usize, x: f64) -> Result<Complex64> {
    let (j, y) = bessel_jy(n, x)?;
    Ok(Complex64::new(j[n], y[n]))
}

/// `H_n^(1)` at the negative real argument `-x`, continued through the upper
/// half plane: `H_n^(1)(x e^{i pi}) = -(-1)^n H_n^(2)(x)`.
pub fn hankel1_neg(n: usize, x: f64) -> Result<Complex64> {
    let h = hankel1(n, x)?.conj();
    Ok(if n % 2 == 0 { -h } else { h })
}

/// `[H_0^(1)(-x), ..., H_{n_max}^(1)(-x)]`.
pub fn hankel1_neg_all(n_max: usize, x: f64) -> Result<Vec<Complex64>> {
    let h2 = hankel2_all(n_max, x)?;
    Ok(h2
        .into_iter()
        .enumerate()
        .map(|(n, h)| if n % 2 == 0 { -h } else { h })
        .collect())
}

fn upward(f0: f64, f1: f64, n_max: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(f0);
    if n_max >= 1 {
        out.push(f1);
    }
    for k in 1..n_max {
        let next = 2.0 * k as f64 / x * out[k] - out[k - 1];
        out.push(next);
    }
    out
}

fn miller_top(n_max: usize, x: f64) -> usize {
    let nm = (n_max as f64).max(x.ceil());
    let top = (nm + 30.0 + 10.0 * nm.cbrt()).ceil() as usize;
    top + top % 2
}

/// `J_0..=J_top` by downward recurrence from an even starting order.
fn miller(top: usize, x: f64) -> Vec<f64> {
    let mut j = vec![0.0; top + 1];
    let mut above = 0.0;
    let mut current = 1e-30;
    let mut norm = 0.0;
    j[top] = current;
    if top % 2 == 0 {
        norm += 2.0 * current;
    }
    for k in (1..=top).rev() {
        let below = 2.0 * k as f64 / x * current - above;
        above = current;
        current = below;
        j[k - 1] = current;
        if (k - 1) % 2 == 0 && k - 1 > 0 {
            norm += 2.0 * current;
        }
        if current.abs() > RESCALE_ABOVE {
            let s = 1.0 / RESCALE_ABOVE;
            for v in &mut j[k - 1..] {
                *v *= s;
            }
            above *= s;
            current *= s;
            norm *= s;
        }
    }
    norm += j[0];
    for v in &mut j {
        *v /= norm;
    }
    j
}

/// Neumann series for `Y_0` and `Y_1` in terms of the `J_k` table.
fn neumann_y01(j: &[f64], x: f64) -> (f64, f64) {
    let log_term = (0.5 * x).ln() + EULER_GAMMA;
    let mut s0 = 0.0;
    let mut k = 1;
    while 2 * k < j.len() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        s0 += sign * j[2 * k] / k as f64;
        k += 1;
    }
    let y0 = FRAC_2_PI * (log_term * j[0] - 2.0 * s0);

    let mut s1 = 0.0;
    let mut m = 1;
    while 2 * m + 1 < j.len() {
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        let mf = m as f64;
        s1 += sign * (2.0 * mf + 1.0) / (mf * (mf + 1.0)) * j[2 * m + 1];
        m += 1;
    }
    let y1 = FRAC_2_PI * ((log_term - 1.0) * j[1] - j[0] / x - s1);
    (y0, y1)
}

/// Hankel's expansion of `H_n^(1)(x)`, returned as `(J_n, Y_n)`.
fn hankel_asymptotic(n: usize, x: f64) -> (f64, f64) {
    let mu = 4.0 * (n * n) as f64;
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        term *= Complex64::new(0.0, (mu - odd * odd) / (kf * 8.0 * x));
        let size = term.norm();
        if size > last {
            break;
        }
        sum += term;
        last = size;
        if size < 1e-17 * sum.norm() {
            break;
        }
    }
    let phase = x - n as f64 * FRAC_PI_2 - FRAC_PI_4;
    let h = (2.0 / (PI * x)).sqrt() * Complex64::from_polar(1.0, phase) * sum;
    (h.re, h.im)
}
