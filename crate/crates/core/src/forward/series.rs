//! Cylindrical-harmonic (T-matrix) scattering by PEC circular cylinders.
//!
//! Fields are expanded in `H_n^(2)` outgoing waves about each circle centre
//! and coupled through Graf's addition theorem, so several circles are
//! handled exactly up to truncation.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::scene::PecTarget;
use crate::error::{Error, Result};
use crate::fields::{bessel_jy, Wavenumber, EPS0, MU0};
use crate::geometry::Point2;

const I: Complex64 = Complex64::new(0.0, 1.0);
/// Largest tail term accepted relative to the absolute sum of the series.
const TAIL_TOLERANCE: f64 = 1e-10;
/// Extra harmonics beyond `ceil(k a)` used when no order is requested.
pub const EXTRA_ORDERS: usize = 15;

/// Which field component the PEC condition acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CylinderPolarization {
    /// `E_z` potential, Dirichlet condition.
    Tm,
    /// `H_z` potential, Neumann condition.
    Te,
}

/// Smallest harmonic order accepted for a circle of radius `a`.
pub fn minimum_order(w: &Wavenumber, radius: f64) -> usize {
    (w.k * radius).ceil() as usize + EXTRA_ORDERS
}

/// `(J_n(x), H_n^(2)(x))` for `n = 0..=n_max`.
fn j_and_h2(n_max: usize, x: f64) -> Result<(Vec<f64>, Vec<Complex64>)> {
    let (j, y) = bessel_jy(n_max, x)?;
    let h = j.iter().zip(&y).map(|(&a, &b)| Complex64::new(a, -b)).collect();
    Ok((j, h))
}

/// Integer-order lookup using `Z_{-n} = (-1)^n Z_n`.
fn signed<T: Copy + std::ops::Neg<Output = T>>(table: &[T], n: i64) -> T {
    let v = table[n.unsigned_abs() as usize];
    if n < 0 && n % 2 != 0 {
        -v
    } else {
        v
    }
}

fn cis(t: f64) -> Complex64 {
    Complex64::from_polar(1.0, t)
}

/// Line source amplitude: `E_z = -(omega mu0 / 4) H_0^(2)(kR)` for a unit
/// electric current, `H_z = -(omega eps0 / 4) H_0^(2)(kR)` for a unit
/// magnetic current.
fn source_amplitude(pol: CylinderPolarization, w: &Wavenumber) -> f64 {
    match pol {
        CylinderPolarization::Tm => -0.25 * w.omega * MU0,
        CylinderPolarization::Te => -0.25 * w.omega * EPS0,
    }
}

/// Incident `E_z` of a unit electric line current at `tx`.
pub fn incident_tm(tx: Point2, x: Point2, w: &Wavenumber) -> Result<Complex64> {
    let (_, h) = j_and_h2(0, w.k * tx.distance(x))?;
    Ok(source_amplitude(CylinderPolarization::Tm, w) * h[0])
}

/// Incident in-plane `(E_x, E_y)` of a unit magnetic line current at `tx`.
pub fn incident_te(tx: Point2, x: Point2, w: &Wavenumber) -> Result<[Complex64; 2]> {
    let d = x - tx;
    let r = d.norm();
    let (_, h) = j_and_h2(1, w.k * r)?;
    // grad H_z = -A k H_1 (d / r)
    let a = source_amplitude(CylinderPolarization::Te, w);
    let gx = -a * w.k * h[1] * (d.x / r);
    let gy = -a * w.k * h[1] * (d.y / r);
    let s = 1.0 / (I * w.omega * EPS0);
    Ok([s * gy, -s * gx])
}

#[derive(Debug, Clone)]
struct Cylinder {
    center: Point2,
    radius: f64,
    order: usize,
    offset: usize,
    /// `T_n H_n(ka)` for `n = -order..=order`, with `T_n` the diagonal
    /// scattering coefficient.
    t: Vec<Complex64>,
    /// `H_n(ka)`: unknowns are outgoing coefficients times this factor, which
    /// keeps high orders from amplifying round-off.
    scale: Vec<Complex64>,
}

impl Cylinder {
    fn len(&self) -> usize {
        2 * self.order + 1
    }
}

/// Multiple scattering between PEC circles for one polarization and frequency.
///
/// The interaction matrix is factored once; each transmitter costs one
/// back-substitution.
#[derive(Debug, Clone)]
pub struct CircleScatterer {
    pol: CylinderPolarization,
    w: Wavenumber,
    cylinders: Vec<Cylinder>,
    lu: nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>,
}

/// Outgoing-wave coefficients about every circle for one illumination.
#[derive(Debug, Clone)]
pub struct ScatteredWave<'a> {
    scatterer: &'a CircleScatterer,
    coeffs: DVector<Complex64>,
}

impl CircleScatterer {
    /// `orders[i]` is the maximum harmonic `|n|` kept for circle `i`; `None`
    /// picks [`minimum_order`] for each circle.
    pub fn new(
        targets: &[PecTarget],
        pol: CylinderPolarization,
        w: &Wavenumber,
        orders: Option<&[usize]>,
    ) -> Result<Self> {
        if targets.is_empty() {
            return Err(Error::Geometry("no circles to scatter from".into()));
        }
        let mut cylinders = Vec::with_capacity(targets.len());
        let mut offset = 0;
        for (i, t) in targets.iter().enumerate() {
            let PecTarget::Circle { center, radius } = *t else {
                return Err(Error::Geometry("series solver only handles circular targets".into()));
            };
            let min = minimum_order(w, radius);
            let order = orders.map_or(min, |o| o[i]);
            if order < min {
                return Err(Error::invalid(format!(
                    "harmonic order {order} below the minimum {min} for ka = {:.3}",
                    w.k * radius
                )));
            }
            let ka = w.k * radius;
            let (j, h) = j_and_h2(order + 1, ka)?;
            let mut t = Vec::with_capacity(2 * order + 1);
            let mut scale = Vec::with_capacity(2 * order + 1);
            for n in -(order as i64)..=order as i64 {
                let m = n.unsigned_abs() as usize;
                let sign = if n < 0 && m % 2 == 1 { -1.0 } else { 1.0 };
                // T_n H_n(ka): -J_n for TM, -J_n' H_n / H_n' for TE
                let th = match pol {
                    CylinderPolarization::Tm => Complex64::new(-j[m], 0.0),
                    CylinderPolarization::Te => {
                        // Z_n' = (Z_{n-1} - Z_{n+1}) / 2, Z_{-1} = -Z_1
                        let jm1 = if m == 0 { -j[1] } else { j[m - 1] };
                        let hm1 = if m == 0 { -h[1] } else { h[m - 1] };
                        -0.5 * (jm1 - j[m + 1]) * h[m] / (0.5 * (hm1 - h[m + 1]))
                    }
                };
                let s = h[m] * sign;
                if th.is_finite() && s.is_finite() {
                    t.push(th * sign);
                    scale.push(s);
                } else {
                    t.push(Complex64::new(0.0, 0.0));
                    scale.push(Complex64::new(f64::INFINITY, 0.0));
                }
            }
            cylinders.push(Cylinder { center, radius, order, offset, t, scale });
            offset += 2 * order + 1;
        }
        for a in 0..cylinders.len() {
            for b in a + 1..cylinders.len() {
                let (ca, cb) = (&cylinders[a], &cylinders[b]);
                if ca.center.distance(cb.center) <= ca.radius + cb.radius {
                    return Err(Error::Geometry(format!("circles {a} and {b} overlap")));
                }
            }
        }

        let size = offset;
        let mut a = DMatrix::<Complex64>::identity(size, size);
        for (i, ci) in cylinders.iter().enumerate() {
            for (jdx, cj) in cylinders.iter().enumerate() {
                if i == jdx {
                    continue;
                }
                let d = ci.center - cj.center;
                let (kd, theta) = (w.k * d.norm(), d.angle());
                let (_, h) = j_and_h2(ci.order + cj.order, kd)?;
                for (mi, m) in (-(ci.order as i64)..=ci.order as i64).enumerate() {
                    for (ni, n) in (-(cj.order as i64)..=cj.order as i64).enumerate() {
                        let s = signed(&h, n - m) * cis((n - m) as f64 * theta) / cj.scale[ni];
                        if s.is_finite() {
                            a[(ci.offset + mi, cj.offset + ni)] -= ci.t[mi] * s;
                        }
                    }
                }
            }
        }
        Ok(Self { pol, w: *w, cylinders, lu: a.lu() })
    }

    pub fn polarization(&self) -> CylinderPolarization {
        self.pol
    }

    /// Solves for the scattered wave excited by a unit line source at `tx`.
    pub fn illuminate(&self, tx: Point2) -> Result<ScatteredWave<'_>> {
        let size: usize = self.cylinders.iter().map(Cylinder::len).sum();
        let amp = source_amplitude(self.pol, &self.w);
        let mut rhs = DVector::<Complex64>::zeros(size);
        for c in &self.cylinders {
            let d = tx - c.center;
            if d.norm() <= c.radius {
                return Err(Error::Geometry("transmitter lies inside a target".into()));
            }
            let (_, h) = j_and_h2(c.order, self.w.k * d.norm())?;
            let phi = d.angle();
            for (mi, m) in (-(c.order as i64)..=c.order as i64).enumerate() {
                rhs[c.offset + mi] = c.t[mi] * amp * signed(&h, m) * cis(-(m as f64) * phi);
            }
        }
        let coeffs = self
            .lu
            .solve(&rhs)
            .ok_or_else(|| Error::NonConvergent("singular multiple-scattering system".into()))?;
        if coeffs.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonConvergent("non-finite scattering coefficients".into()));
        }
        Ok(ScatteredWave { scatterer: self, coeffs })
    }
}

impl ScatteredWave<'_> {
    /// Scattered potential (`E_z` for TM, `H_z` for TE) at `x` outside all circles.
    pub fn potential(&self, x: Point2) -> Result<Complex64> {
        let mut total = Complex64::new(0.0, 0.0);
        for c in &self.scatterer.cylinders {
            let (sum, _, _) = self.expand(c, x, false)?;
            total += sum;
        }
        Ok(total)
    }

    /// Scattered in-plane `(E_x, E_y)` at `x` for TE illumination.
    pub fn e_field(&self, x: Point2) -> Result<[Complex64; 2]> {
        if self.scatterer.pol != CylinderPolarization::Te {
            return Err(Error::invalid("in-plane electric field needs a TE scatterer"));
        }
        let (mut gx, mut gy) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for c in &self.scatterer.cylinders {
            let (_, dx, dy) = self.expand(c, x, true)?;
            gx += dx;
            gy += dy;
        }
        let w = &self.scatterer.w;
        let s = 1.0 / (I * w.omega * EPS0);
        Ok([s * gy, -s * gx])
    }

    /// Contribution of one circle: value and optionally its gradient.
    fn expand(&self, c: &Cylinder, x: Point2, gradient: bool) -> Result<(Complex64, Complex64, Complex64)> {
        let d = x - c.center;
        let rho = d.norm();
        if rho < c.radius * (1.0 - 1e-12) {
            return Err(Error::Geometry("observation point inside a target".into()));
        }
        let k = self.scatterer.w.k;
        let (_, h) = j_and_h2(c.order + 1, k * rho)?;
        let (_, h_a) = j_and_h2(c.order + 1, k * c.radius)?;
        let phi = d.angle();
        let (mut val, mut gx, mut gy) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        let (mut abs_sum, mut tail) = (0.0, 0.0);
        for (ni, n) in (-(c.order as i64)..=c.order as i64).enumerate() {
            let cn = self.coeffs[c.offset + ni];
            if cn == Complex64::new(0.0, 0.0) {
                continue;
            }
            // H_n(k rho) / H_n(k a) without forming the large factors' product
            let term = cn * (signed(&h, n) / signed(&h_a, n)) * cis(n as f64 * phi);
            val += term;
            abs_sum += term.norm();
            if n.unsigned_abs() as usize == c.order {
                tail += term.norm();
            }
            if gradient {
                // (d_x + i d_y) Z_n e^{in phi} = -k Z_{n+1} e^{i(n+1)phi}
                // (d_x - i d_y) Z_n e^{in phi} =  k Z_{n-1} e^{i(n-1)phi}
                let up = -k * (signed(&h, n + 1) / signed(&h_a, n)) * cis((n + 1) as f64 * phi);
                let down = k * (signed(&h, n - 1) / signed(&h_a, n)) * cis((n - 1) as f64 * phi);

                gx += cn * 0.5 * (up + down);
                gy += cn * (up - down) / (2.0 * I);
            }
        }
        if abs_sum > 0.0 && tail > TAIL_TOLERANCE * abs_sum {
            return Err(Error::NonConvergent(format!(
                "harmonic series tail {:.2e} of its sum after order {}",
                tail / abs_sum,
                c.order
            )));
        }
        Ok((val, gx, gy))
    }
}

/// Scattered `E_z` at `rx` from one PEC circle lit by a unit line current at `tx`.
pub fn scatter_circle_tm(target: &PecTarget, tx: Point2, rx: Point2, w: &Wavenumber, n_terms: usize) -> Result<Complex64> {
    let s = CircleScatterer::new(std::slice::from_ref(target), CylinderPolarization::Tm, w, Some(&[n_terms]))?;
    s.illuminate(tx)?.potential(rx)
}

/// Scattered `(E_x, E_y)` at `rx` from one PEC circle lit by a unit magnetic
/// line current (along the invariance axis) at `tx`.
pub fn scatter_circle_te(target: &PecTarget, tx: Point2, rx: Point2, w: &Wavenumber, n_terms: usize) -> Result<[Complex64; 2]> {
    let s = CircleScatterer::new(std::slice::from_ref(target), CylinderPolarization::Te, w, Some(&[n_terms]))?;
    s.illuminate(tx)?.e_field(rx)
}
