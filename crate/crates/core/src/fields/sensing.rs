use num_complex::Complex64;

use super::dipole::{dipole_field_te, dipole_field_tm, Wavenumber};
use crate::error::{Error, Result};
use crate::geometry::{ImagingGrid, Point2, PolarizationMode, TransceiverLayout};
use crate::CMatrix;

/// Free-space operator from pixel contrast sources to receiver channels.
///
/// TM: `Q x N`. TE: `2Q x 2N`, rows `(2q, 2q+1)` are the `x1`/`x2` field
/// components at receiver `q`, columns `(2n, 2n+1)` the `x1`/`x2` source
/// components of pixel `n`. TE-tangential: `Q x 2N`, each row is the field
/// projected on the receiver's tangential direction.
#[derive(Debug, Clone)]
pub struct SensingMatrix {
    pub entries: CMatrix,
    pub polarization: PolarizationMode,
}

impl SensingMatrix {
    pub fn group_size(&self) -> usize {
        self.polarization.group_size()
    }

    pub fn n_pixels(&self) -> usize {
        self.entries.ncols() / self.group_size()
    }
}

/// Unit tangent (counter-clockwise) of the orbit through `p`.
pub fn tangential_direction(p: Point2) -> Point2 {
    let a = p.angle();
    Point2::new(-a.sin(), a.cos())
}

/// Midpoint-rule discretisation: every entry is the dipole field scaled by the
/// cell area. Near-singularity guard is `dx / 10`.
pub fn build_sensing_matrix(
    grid: &ImagingGrid,
    layout: &TransceiverLayout,
    pol: PolarizationMode,
    w: &Wavenumber,
) -> Result<SensingMatrix> {
    build_sensing_matrix_with_guard(grid, layout, pol, w, grid.dx / 10.0)
}

pub fn build_sensing_matrix_with_guard(
    grid: &ImagingGrid,
    layout: &TransceiverLayout,
    pol: PolarizationMode,
    w: &Wavenumber,
    r_min: f64,
) -> Result<SensingMatrix> {
    if let Some(q) = layout.rx.iter().position(|&r| grid.contains(r)) {
        return Err(Error::Geometry(format!(
            "receiver {q} at ({:.4}, {:.4}) lies inside the imaging grid",
            layout.rx[q].x, layout.rx[q].y
        )));
    }
    let n = grid.len();
    let q = layout.n_rx();
    let area = grid.cell_area();
    let centers = grid.centers();
    let entries = match pol {
        PolarizationMode::Tm => {
            let mut m = CMatrix::zeros(q, n);
            for (col, &c) in centers.iter().enumerate() {
                for (row, &r) in layout.rx.iter().enumerate() {
                    m[(row, col)] = dipole_field_tm(c, r, w, r_min)? * area;
                }
            }
            m
        }
        PolarizationMode::Te => {
            let mut m = CMatrix::zeros(2 * q, 2 * n);
            for (col, &c) in centers.iter().enumerate() {
                for (row, &r) in layout.rx.iter().enumerate() {
                    let e = dipole_field_te(c, r, w, r_min)?;
                    for i in 0..2 {
                        for j in 0..2 {
                            m[(2 * row + i, 2 * col + j)] = e[i][j] * area;
                        }
                    }
                }
            }
            m
        }
        PolarizationMode::TeTangential => {
            let mut m = CMatrix::zeros(q, 2 * n);
            for (col, &c) in centers.iter().enumerate() {
                for (row, &r) in layout.rx.iter().enumerate() {
                    let e = dipole_field_te(c, r, w, r_min)?;
                    let t = tangential_direction(r);
                    for j in 0..2 {
                        let v: Complex64 = t.x * e[0][j] + t.y * e[1][j];
                        m[(row, 2 * col + j)] = v * area;
                    }
                }
            }
            m
        }
    };
    Ok(SensingMatrix { entries, polarization: pol })
}
