//! TM electric-field integral equation on PEC contours: pulse basis, point
//! matching at segment midpoints.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::PI;

use super::scene::PecTarget;
use super::series::incident_tm;
use crate::error::{Error, Result};
use crate::fields::{bessel_jy, Wavenumber, MU0};
use crate::geometry::Point2;

/// Largest accepted 2-norm condition number of the impedance matrix.
pub const MAX_CONDITION: f64 = 1e12;
/// Minimum boundary sampling density.
pub const MIN_SEGMENTS_PER_WAVELENGTH: f64 = 10.0;
/// `exp(Euler gamma)` rounded as customary in the small-argument Hankel form.
const GAMMA_EXP: f64 = 1.781;

const GAUSS_NODES: [f64; 4] = [-0.861_136_311_594_052_6, -0.339_981_043_584_856_3, 0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
const GAUSS_WEIGHTS: [f64; 4] = [0.347_854_845_137_453_9, 0.652_145_154_862_546_1, 0.652_145_154_862_546_1, 0.347_854_845_137_453_9];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: Point2,
    b: Point2,
    mid: Point2,
    len: f64,
}

fn h0_2(x: f64) -> Result<Complex64> {
    let (j, y) = bessel_jy(0, x)?;
    Ok(Complex64::new(j[0], -y[0]))
}

/// Method-of-moments model of one or more PEC contours. The impedance matrix
/// is factored once and reused for every transmitter.
#[derive(Debug, Clone)]
pub struct MomSolver {
    w: Wavenumber,
    segments: Vec<Segment>,
    lu: nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>,
    condition: f64,
}

impl MomSolver {
    /// `segments[i]` chords on target `i`; circles are discretized directly.
    pub fn new(targets: &[PecTarget], w: &Wavenumber, segments: &[usize]) -> Result<Self> {
        if targets.is_empty() || targets.len() != segments.len() {
            return Err(Error::invalid("need one segment count per target"));
        }
        let lambda = w.wavelength();
        let mut segs = Vec::new();
        for (t, &n) in targets.iter().zip(segments) {
            let per = t.perimeter();
            if n < super::scene::MIN_CONTOUR_SEGMENTS || (n as f64) < MIN_SEGMENTS_PER_WAVELENGTH * per / lambda {
                return Err(Error::invalid(format!(
                    "{n} segments too coarse for a contour of {:.3} wavelengths",
                    per / lambda
                )));
            }
            let nodes = t.boundary_nodes(n);
            for s in 0..n {
                let (a, b) = (nodes[s], nodes[(s + 1) % n]);
                segs.push(Segment { a, b, mid: (a + b) * 0.5, len: a.distance(b) });
            }
        }
        let amp = -0.25 * w.omega * MU0;
        let k = w.k;
        let m = segs.len();
        let mut z = DMatrix::<Complex64>::zeros(m, m);
        for (i, si) in segs.iter().enumerate() {
            for (j, sj) in segs.iter().enumerate() {
                z[(i, j)] = if i == j {
                    let l = sj.len;
                    amp * l * Complex64::new(1.0, -2.0 / PI * ((GAMMA_EXP * k * l / 4.0).ln() - 1.0))
                } else {
                    amp * integrate_h0(sj, si.mid, k)?
                };
            }
        }
        let sv = z.clone().singular_values();
        let (smax, smin) = (sv.max(), sv.min());
        let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        if !(condition <= MAX_CONDITION) {
            return Err(Error::IllConditioned(condition));
        }
        Ok(Self { w: *w, segments: segs, lu: z.lu(), condition })
    }

    /// Segment count of `target` satisfying the sampling rule with `per_wavelength` chords.
    pub fn segments_for(target: &PecTarget, w: &Wavenumber, per_wavelength: f64) -> usize {
        let n = (per_wavelength.max(MIN_SEGMENTS_PER_WAVELENGTH) * target.perimeter() / w.wavelength()).ceil() as usize;
        n.max(super::scene::MIN_CONTOUR_SEGMENTS)
    }

    pub fn condition_number(&self) -> f64 {
        self.condition
    }

    pub fn unknowns(&self) -> usize {
        self.segments.len()
    }

    /// Induced surface current for a unit line source at `tx`.
    pub fn currents(&self, tx: Point2) -> Result<DVector<Complex64>> {
        let rhs = DVector::from_iterator(
            self.segments.len(),
            self.segments.iter().map(|s| incident_tm(tx, s.mid, &self.w).map(|e| -e)).collect::<Result<Vec<_>>>()?,
        );
        self.lu.solve(&rhs).ok_or_else(|| Error::NonConvergent("singular impedance matrix".into()))
    }

    /// Scattered `E_z` at each receiver for a unit line source at `tx`.
    pub fn scattered(&self, tx: Point2, rx: &[Point2]) -> Result<Vec<Complex64>> {
        let current = self.currents(tx)?;
        let amp = -0.25 * self.w.omega * MU0;
        rx.iter()
            .map(|&r| {
                let mut e = Complex64::new(0.0, 0.0);
                for (s, c) in self.segments.iter().zip(current.iter()) {
                    e += c * integrate_h0(s, r, self.w.k)?;
                }
                Ok(amp * e)
            })
            .collect()
    }
}

/// `int_seg H_0^(2)(k |x - x'|) dl'` by 4-point Gauss-Legendre.
fn integrate_h0(s: &Segment, x: Point2, k: f64) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for (t, wgt) in GAUSS_NODES.iter().zip(GAUSS_WEIGHTS) {
        let p = s.a + (s.b - s.a) * (0.5 * (1.0 + t));
        let r = p.distance(x);
        if r == 0.0 {
            return Err(Error::NearSingular { distance: 0.0, guard: 0.0 });
        }
        acc += wgt * h0_2(k * r)?;
    }
    Ok(acc * (0.5 * s.len))
}

/// Scattered `E_z` at `rx_list` from one PEC contour discretized with `segments` chords.
pub fn scatter_mom_tm(
    target: &PecTarget,
    tx: Point2,
    rx_list: &[Point2],
    w: &Wavenumber,
    segments: usize,
) -> Result<Vec<Complex64>> {
    MomSolver::new(std::slice::from_ref(target), w, &[segments])?.scattered(tx, rx_list)
}
