//! Test-side oracles shared by the integration tests and the acceptance run.
#![allow(dead_code)]

use mmv_imaging::solver::{
    group_norm_12, group_norms, newton_root_bpsigma, spg_solve_lstau, GroupStructure, SensingOperator, SolverConfig,
};
use mmv_imaging::{CMatrix, Complex64};
use rand::Rng;
use rand_distr::StandardNormal;

pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    })
}

/// Projection onto the group ball by bisection on the KKT threshold:
/// group `n` is scaled by `max(|J_n| - theta, 0) / |J_n|` with `theta`
/// solving `sum max(|J_n| - theta, 0) = tau`.
pub fn kkt_projection(j: &CMatrix, groups: GroupStructure, tau: f64) -> CMatrix {
    let norms = group_norms(j, groups);
    if norms.iter().sum::<f64>() <= tau {
        return j.clone();
    }
    let excess = |theta: f64| norms.iter().map(|&v| (v - theta).max(0.0)).sum::<f64>() - tau;
    let (mut lo, mut hi) = (0.0, norms.iter().copied().fold(0.0, f64::max));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if excess(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let theta = 0.5 * (lo + hi);
    let mut out = j.clone();
    for r in 0..j.nrows() {
        let v = norms[r / groups.g];
        let f = if v > 0.0 { (v - theta).max(0.0) / v } else { 0.0 };
        for c in 0..j.ncols() {
            out[(r, c)] *= f;
        }
    }
    out
}

/// Largest `Re <J - X, Z - X>` over feasible test points `Z`; a projection
/// `X` of `J` makes this non-positive for every feasible `Z`.
pub fn variational_gap<R: Rng>(rng: &mut R, j: &CMatrix, x: &CMatrix, groups: GroupStructure, tau: f64, trials: usize) -> f64 {
    let d = j - x;
    let mut worst = f64::NEG_INFINITY;
    for t in 0..trials {
        let mut z = random_matrix(rng, j.nrows(), j.ncols());
        if t % 2 == 0 {
            // extreme point: one group on the sphere of radius tau
            let keep = rng.random_range(0..groups.n_groups);
            for r in 0..z.nrows() {
                if r / groups.g != keep {
                    z.row_mut(r).fill(Complex64::new(0.0, 0.0));
                }
            }
        }
        let n = group_norm_12(&z, groups);
        if n > 0.0 {
            z *= Complex64::new(tau * rng.random_range(0.0..=1.0) / n, 0.0);
        }
        let dz = &z - x;
        let ip: f64 = d.iter().zip(dz.iter()).map(|(a, b)| (a.conj() * b).re).sum();
        worst = worst.max(ip);
    }
    worst
}

/// Rearranges `2N x P` (row pairs per group) into `N x 2P`.
pub fn pairs_to_wide(j: &CMatrix) -> CMatrix {
    let n = j.nrows() / 2;
    let p = j.ncols();
    CMatrix::from_fn(n, 2 * p, |r, c| if c < p { j[(2 * r, c)] } else { j[(2 * r + 1, c - p)] })
}

pub fn wide_to_pairs(w: &CMatrix) -> CMatrix {
    let p = w.ncols() / 2;
    CMatrix::from_fn(2 * w.nrows(), p, |r, c| if r % 2 == 0 { w[(r / 2, c)] } else { w[(r / 2, c + p)] })
}

pub fn tight_config() -> SolverConfig {
    SolverConfig { gap_tol: 1e-10, root_tol: 1e-9, max_iter: 20_000, ..SolverConfig::default() }
}

/// `phi(tau)` from an accurate `LS_tau` solve.
pub fn pareto_value(op: &SensingOperator, y: &CMatrix, tau: f64, groups: GroupStructure) -> f64 {
    let j0 = CMatrix::zeros(groups.rows(), y.ncols());
    spg_solve_lstau(op, y, &j0, tau, groups, &tight_config()).unwrap().residual_norm()
}

/// Root of `phi(tau) = sigma` from a dense sweep that brackets the root,
/// refined by bisection on accurate `LS_tau` solves.
pub fn tau_sweep_root(op: &SensingOperator, y: &CMatrix, sigma: f64, groups: GroupStructure, tau_max: f64, points: usize) -> f64 {
    let mut lo = 0.0;
    let mut hi = tau_max;
    for i in 1..=points {
        let t = tau_max * i as f64 / points as f64;
        if pareto_value(op, y, t, groups) <= sigma {
            hi = t;
            break;
        }
        lo = t;
    }
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if pareto_value(op, y, mid, groups) > sigma {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Planted group-sparse recovery trial. Returns (support exact, relative error).
pub fn planted_recovery<R: Rng>(rng: &mut R, q: usize, n: usize, p: usize, k: usize) -> (bool, f64) {
    let phi = random_matrix(rng, q, n).unscale((q as f64).sqrt());
    let groups = GroupStructure::new(1, n).unwrap();
    let mut support: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let s = rng.random_range(i..n);
        support.swap(i, s);
    }
    support.truncate(k);
    let mut j_star = CMatrix::zeros(n, p);
    for &s in &support {
        let row = random_matrix(rng, 1, p);
        j_star.row_mut(s).copy_from(&row);
    }
    let y = &phi * &j_star;
    let op = SensingOperator::new(&phi, None, p).unwrap();
    let res = newton_root_bpsigma(&op, &y, 0.0, groups, &tight_config()).unwrap();
    let norms = group_norms(&res.j, groups);
    let top = norms.iter().copied().fold(0.0, f64::max);
    let mut found: Vec<usize> = (0..n).filter(|&i| norms[i] > 1e-6 * top).collect();
    found.sort_unstable();
    support.sort_unstable();
    let err = (&res.j - &j_star).norm() / j_star.norm();
    (found == support, err)
}
