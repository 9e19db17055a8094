//! Row groups, mixed norms and the Euclidean projection onto the
//! sum-of-group-norms ball.

use crate::error::{Error, Result};
use crate::CMatrix;

/// Consecutive row groups of size `g`: group `n` owns rows `g*n .. g*n + g`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroupStructure {
    pub g: usize,
    pub n_groups: usize,
}

impl GroupStructure {
    pub fn new(g: usize, n_groups: usize) -> Result<Self> {
        if g == 0 {
            return Err(Error::invalid("group size must be positive"));
        }
        Ok(Self { g, n_groups })
    }

    pub fn rows(&self) -> usize {
        self.g * self.n_groups
    }

    fn check(&self, m: &CMatrix) -> Result<()> {
        if m.nrows() != self.rows() {
            return Err(Error::invalid(format!(
                "matrix has {} rows, groups expect {}",
                m.nrows(),
                self.rows()
            )));
        }
        Ok(())
    }
}

/// Frobenius norm of every group's submatrix.
pub fn group_norms(j: &CMatrix, groups: GroupStructure) -> Vec<f64> {
    let mut sq = vec![0.0; groups.n_groups];
    let rows = j.nrows();
    for col in j.column_iter() {
        for (r, v) in col.iter().enumerate().take(rows) {
            sq[r / groups.g] += v.norm_sqr();
        }
    }
    sq.into_iter().map(f64::sqrt).collect()
}

/// Sum of group Frobenius norms.
pub fn group_norm_12(j: &CMatrix, groups: GroupStructure) -> f64 {
    group_norms(j, groups).iter().sum()
}

/// Largest group Frobenius norm (dual of [`group_norm_12`]).
pub fn group_norm_inf2(z: &CMatrix, groups: GroupStructure) -> f64 {
    group_norms(z, groups).into_iter().fold(0.0, f64::max)
}

/// Projects non-negative `v` onto `{w >= 0 : sum w <= tau}`.
pub fn project_l1_ball(v: &[f64], tau: f64) -> Vec<f64> {
    if v.iter().sum::<f64>() <= tau {
        return v.to_vec();
    }
    if tau <= 0.0 {
        return vec![0.0; v.len()];
    }
    let mut sorted = v.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (i, &s) in sorted.iter().enumerate() {
        cumulative += s;
        let t = (cumulative - tau) / (i + 1) as f64;
        if s > t {
            theta = t;
        } else {
            break;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Closest matrix (Frobenius) with `group_norm_12 <= tau`.
pub fn project_group_l1(j: &CMatrix, groups: GroupStructure, tau: f64) -> Result<CMatrix> {
    if !(tau >= 0.0) {
        return Err(Error::invalid(format!("projection radius must be non-negative, got {tau}")));
    }
    groups.check(j)?;
    let norms = group_norms(j, groups);
    if norms.iter().sum::<f64>() <= tau {
        return Ok(j.clone());
    }
    let shrunk = project_l1_ball(&norms, tau);
    let factors: Vec<f64> = norms
        .iter()
        .zip(&shrunk)
        .map(|(&n, &s)| if n > 0.0 { s / n } else { 0.0 })
        .collect();
    let mut out = j.clone();
    for mut col in out.column_iter_mut() {
        for (r, v) in col.iter_mut().enumerate() {
            *v *= factors[r / groups.g];
        }
    }
    Ok(out)
}
