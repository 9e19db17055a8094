//! Bessel/Hankel evaluation against an independent ascending-series /
//! asymptotic-expansion oracle, plus the standard identities.

use mmv_imaging::fields::{bessel_jy, hankel1, hankel1_neg};
use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

fn factorial(n: usize) -> f64 {
    (1..=n).map(|v| v as f64).product()
}

fn digamma_int(m: usize) -> f64 {
    // psi(m) for integer m >= 1
    -EULER_GAMMA + (1..m).map(|j| 1.0 / j as f64).sum::<f64>()
}

/// Ascending series for J_n and Y_n.
fn series(n: usize, x: f64) -> (f64, f64) {
    let q = -0.25 * x * x;
    let half = 0.5 * x;
    let mut j = 0.0;
    let mut tail = 0.0;
    let mut term = 1.0 / factorial(n); // q^k / (k! (n+k)!)
    for k in 0..200 {
        j += term;
        tail += (digamma_int(k + 1) + digamma_int(n + k + 1)) * term;
        term *= q / ((k + 1) as f64 * (n + k + 1) as f64);
        if term.abs() < 1e-30 && k > 10 {
            break;
        }
    }
    let jn = half.powi(n as i32) * j;
    let mut head = 0.0;
    for k in 0..n {
        head += factorial(n - k - 1) / factorial(k) * (0.25 * x * x).powi(k as i32);
    }
    let yn = -head / (PI * half.powi(n as i32)) + 2.0 / PI * half.ln() * jn
        - half.powi(n as i32) / PI * tail;
    (jn, yn)
}

fn asymptotic01(n: usize, x: f64) -> (f64, f64) {
    let mu = 4.0 * (n * n) as f64;
    let mut p = 0.0;
    let mut qs = 0.0;
    let mut a = 1.0;
    let mut last = f64::INFINITY;
    for k in 0..80 {
        if k > 0 {
            let odd = (2 * k - 1) as f64;
            a *= (mu - odd * odd) / (k as f64 * 8.0 * x);
        }
        if a.abs() > last {
            break;
        }
        last = a.abs();
        match k % 4 {
            0 => p += a,
            1 => qs += a,
            2 => p -= a,
            _ => qs -= a,
        }
    }
    let chi = x - n as f64 * FRAC_PI_2 - FRAC_PI_4;
    let s = (2.0 / (PI * x)).sqrt();
    (s * (p * chi.cos() - qs * chi.sin()), s * (p * chi.sin() + qs * chi.cos()))
}

fn oracle(n: usize, x: f64) -> Complex64 {
    if x <= 12.0 {
        let (j, y) = series(n, x);
        return Complex64::new(j, y);
    }
    let (j0, y0) = asymptotic01(0, x);
    let (j1, y1) = asymptotic01(1, x);
    let (mut jm, mut j) = (j0, j1);
    let (mut ym, mut y) = (y0, y1);
    if n == 0 {
        return Complex64::new(j0, y0);
    }
    for k in 1..n {
        let jn = 2.0 * k as f64 / x * j - jm;
        let yn = 2.0 * k as f64 / x * y - ym;
        jm = j;
        j = jn;
        ym = y;
        y = yn;
    }
    Complex64::new(j, y)
}

#[test]
fn hankel_matches_series_asymptotic_oracle_on_log_grid() {
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let x = 10f64.powf(-3.0 + 6.0 * i as f64 / 99.0);
        for n in 0..=12 {
            let h = hankel1(n, x).unwrap();
            let o = oracle(n, x);
            let rel = (h - o).norm() / o.norm();
            worst = worst.max(rel);
            assert!(rel < 1e-9, "n={n} x={x:.6e}: impl {h} oracle {o} rel {rel:.2e}");
        }
    }
    eprintln!("worst relative deviation {worst:.2e}");
}

#[test]
fn hankel_zero_at_one_matches_reference() {
    let h = hankel1(0, 1.0).unwrap();
    assert!((h - Complex64::new(0.765_197_686_6, 0.088_256_964_2)).norm() < 1e-10);
    let o = oracle(0, 1.0);
    assert!((h - o).norm() < 1e-12);
}

#[test]
fn wronskian_at_2_3() {
    let x = 2.3;
    let (j, y) = bessel_jy(6, x).unwrap();
    for n in 0..=5 {
        let w = j[n + 1] * y[n] - j[n] * y[n + 1];
        assert!((w - 2.0 / (PI * x)).abs() < 1e-10, "n={n}: {w}");
    }
}

#[test]
fn wronskian_across_arguments() {
    for &x in &[1e-2, 0.7, 5.0, 11.9, 12.1, 24.0, 26.0, 150.0, 900.0] {
        let (j, y) = bessel_jy(13, x).unwrap();
        for n in 0..=12 {
            let w = j[n + 1] * y[n] - j[n] * y[n + 1];
            let scale = (j[n + 1] * y[n]).abs().max((j[n] * y[n + 1]).abs()).max(2.0 / (PI * x));
            assert!((w - 2.0 / (PI * x)).abs() < 1e-11 * scale, "n={n} x={x}");
        }
    }
}

#[test]
fn negative_argument_continuation() {
    for n in 0..=5 {
        for &x in &[0.5, 1.0, 3.3, 17.0] {
            let (j, y) = {
                let o = oracle(n, x);
                (o.re, o.im)
            };
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            let expected = -sign * Complex64::new(j, -y);
            let got = hankel1_neg(n, x).unwrap();
            assert!((got - expected).norm() < 1e-10 * expected.norm(), "n={n} x={x}");
        }
    }
}
