use num_complex::Complex64;
use std::f64::consts::PI;

use super::bessel::hankel1_neg_all;
use crate::error::{Error, Result};
use crate::geometry::Point2;

/// Vacuum permeability (H/m).
pub const MU0: f64 = 1.256_637_062_12e-6;
/// Vacuum permittivity (F/m).
pub const EPS0: f64 = 8.854_187_812_8e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wavenumber {
    pub frequency: f64,
    pub omega: f64,
    pub k: f64,
}

impl Wavenumber {
    pub fn from_frequency(frequency: f64) -> Result<Self> {
        if !(frequency > 0.0 && frequency.is_finite()) {
            return Err(Error::invalid(format!("frequency must be positive, got {frequency}")));
        }
        let omega = 2.0 * PI * frequency;
        Ok(Self { frequency, omega, k: omega * (MU0 * EPS0).sqrt() })
    }

    pub fn wavelength(&self) -> f64 {
        2.0 * PI / self.k
    }
}

fn separation(xs: Point2, xr: Point2, r_min: f64) -> Result<f64> {
    let r = xs.distance(xr);
    if r <= 0.0 || r < r_min {
        return Err(Error::NearSingular { distance: r, guard: r_min });
    }
    Ok(r)
}

/// `E_33 = (1/4) omega mu0 H_0^(1)(-kR)`: field of a unit line current at `xs`
/// observed at `xr`.
pub fn dipole_field_tm(xs: Point2, xr: Point2, w: &Wavenumber, r_min: f64) -> Result<Complex64> {
    let r = separation(xs, xr, r_min)?;
    let h = hankel1_neg_all(0, w.k * r)?;
    Ok(0.25 * w.omega * MU0 * h[0])
}

/// In-plane field matrix `[[E11, E12], [E21, E22]]` of a unit electric dipole
/// at `xs` oriented along `x_j` (column) observed at `xr` (row = component).
pub fn dipole_field_te(xs: Point2, xr: Point2, w: &Wavenumber, r_min: f64) -> Result<[[Complex64; 2]; 2]> {
    let r = separation(xs, xr, r_min)?;
    let d = xr - xs;
    let (x1, x2) = (d.x, d.y);
    let k = w.k;
    let h = hankel1_neg_all(2, k * r)?;
    let pre = 1.0 / (4.0 * w.omega * EPS0);
    let r2 = r * r;
    let e11 = -k * pre * (h[1] / r + k * x2 * x2 / r2 * h[2]);
    let e22 = -k * pre * (h[1] / r + k * x1 * x1 / r2 * h[2]);
    let e12 = k * k * x1 * x2 * pre / r2 * h[2];
    Ok([[e11, e12], [e12, e22]])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w500() -> Wavenumber {
        Wavenumber::from_frequency(500e6).unwrap()
    }

    #[test]
    fn wavelength_at_500_mhz() {
        assert!((w500().wavelength() - 0.5996).abs() < 1e-4);
    }

    #[test]
    fn tm_is_symmetric_in_points() {
        let w = w500();
        let a = Point2::new(0.3, -0.2);
        let b = Point2::new(-2.1, 1.4);
        assert_eq!(dipole_field_tm(a, b, &w, 0.0).unwrap(), dipole_field_tm(b, a, &w, 0.0).unwrap());
    }

    #[test]
    fn tm_decays_like_inverse_sqrt() {
        let w = w500();
        let o = Point2::default();
        let near = dipole_field_tm(o, Point2::new(20.0, 0.0), &w, 0.0).unwrap().norm();
        let far = dipole_field_tm(o, Point2::new(80.0, 0.0), &w, 0.0).unwrap().norm();
        assert!((near / far - 2.0).abs() < 0.1);
    }

    #[test]
    fn te_matrix_is_symmetric_and_axis_aligned_offdiag_vanishes() {
        let w = w500();
        let m = dipole_field_te(Point2::new(0.1, 0.2), Point2::new(1.7, -0.4), &w, 0.0).unwrap();
        assert_eq!(m[0][1], m[1][0]);
        let m = dipole_field_te(Point2::new(0.1, 0.2), Point2::new(1.7, 0.2), &w, 0.0).unwrap();
        assert_eq!(m[0][1], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn guard_rejects_close_points() {
        let w = w500();
        let a = Point2::new(0.0, 0.0);
        assert!(matches!(
            dipole_field_tm(a, Point2::new(0.0005, 0.0), &w, 0.001),
            Err(Error::NearSingular { .. })
        ));
        assert!(dipole_field_te(a, a, &w, 0.0).is_err());
    }
}
