//! Masked dense sensing operator with sparsity-aware products.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::CMatrix;

/// `Phi` applied column-by-column to a contrast-source matrix, with an
/// optional column-major data mask (`true` keeps the entry). Masked entries
/// are zero in every residual the solver sees.
#[derive(Debug, Clone)]
pub struct SensingOperator<'a> {
    phi: &'a CMatrix,
    mask: Option<Vec<bool>>,
    /// Rows with at least one kept entry; the adjoint skips the others.
    live_rows: Vec<usize>,
}

impl<'a> SensingOperator<'a> {
    pub fn new(phi: &'a CMatrix, mask: Option<Vec<bool>>, n_cols: usize) -> Result<Self> {
        let rows = phi.nrows();
        if let Some(m) = &mask {
            if m.len() != rows * n_cols {
                return Err(Error::invalid(format!(
                    "mask has {} entries, expected {rows} x {n_cols}",
                    m.len()
                )));
            }
        }
        let live_rows = (0..rows)
            .filter(|&r| mask.as_ref().is_none_or(|m| (0..n_cols).any(|p| m[p * rows + r])))
            .collect();
        Ok(Self { phi, mask, live_rows })
    }

    pub fn phi(&self) -> &CMatrix {
        self.phi
    }

    pub fn mask(&self) -> Option<&[bool]> {
        self.mask.as_deref()
    }

    /// Full product `Phi J`, skipping all-zero rows of `J`.
    pub fn apply(&self, j: &CMatrix) -> CMatrix {
        let (q, n) = self.phi.shape();
        let p = j.ncols();
        let mut out = CMatrix::zeros(q, p);
        let phi = self.phi.as_slice();
        let buf = out.as_mut_slice();
        for col in 0..p {
            let jc = j.column(col);
            let o = &mut buf[col * q..(col + 1) * q];
            for k in 0..n {
                let coeff = jc[k];
                if coeff == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let a = &phi[k * q..(k + 1) * q];
                for (dst, &src) in o.iter_mut().zip(a) {
                    *dst += src * coeff;
                }
            }
        }
        out
    }

    /// `Phi^H R`; `R` is assumed zero on masked entries.
    pub fn adjoint(&self, r: &CMatrix) -> CMatrix {
        let (q, n) = self.phi.shape();
        let p = r.ncols();
        let mut out = CMatrix::zeros(n, p);
        let phi = self.phi.as_slice();
        let dense = self.live_rows.len() == q;
        for col in 0..p {
            let rc = r.column(col);
            for k in 0..n {
                let a = &phi[k * q..(k + 1) * q];
                let mut acc = Complex64::new(0.0, 0.0);
                if dense {
                    for (x, y) in a.iter().zip(rc.iter()) {
                        acc += x.conj() * y;
                    }
                } else {
                    for &row in &self.live_rows {
                        acc += a[row].conj() * rc[row];
                    }
                }
                out[(k, col)] = acc;
            }
        }
        out
    }

    /// Zeroes masked entries in place.
    pub fn restrict(&self, m: &mut CMatrix) {
        if let Some(mask) = &self.mask {
            for (v, &keep) in m.iter_mut().zip(mask) {
                if !keep {
                    *v = Complex64::new(0.0, 0.0);
                }
            }
        }
    }

    /// `restrict(Y - model)`.
    pub fn residual(&self, y: &CMatrix, model: &CMatrix) -> CMatrix {
        let mut r = y - model;
        self.restrict(&mut r);
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(rows: usize, cols: usize, seed: u64) -> CMatrix {
        let mut s = seed;
        CMatrix::from_fn(rows, cols, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let a = (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let b = (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
            Complex64::new(a, b)
        })
    }

    #[test]
    fn products_match_dense_algebra() {
        let phi = sample(7, 11, 1);
        let j = sample(11, 3, 2);
        let r = sample(7, 3, 3);
        let op = SensingOperator::new(&phi, None, 3).unwrap();
        assert!((op.apply(&j) - &phi * &j).norm() < 1e-12);
        assert!((op.adjoint(&r) - phi.adjoint() * &r).norm() < 1e-12);
    }

    #[test]
    fn masked_adjoint_ignores_dead_rows() {
        let phi = sample(4, 5, 4);
        let mut mask = vec![true; 8];
        mask[1] = false;
        mask[5] = false; // row 1 dead in both columns
        let op = SensingOperator::new(&phi, Some(mask), 2).unwrap();
        let mut r = sample(4, 2, 5);
        op.restrict(&mut r);
        assert!((op.adjoint(&r) - phi.adjoint() * &r).norm() < 1e-12);
        assert!(SensingOperator::new(&phi, Some(vec![true; 3]), 2).is_err());
    }
}
