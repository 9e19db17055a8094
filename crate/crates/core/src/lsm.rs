//! Linear sampling method and its higher-order variant.
//!
//! The far-field equation `Y g = f` is solved per sampling point with a
//! Tikhonov filter on the singular values of `Y`, `a = 0.01 max s_d`.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fields::{dipole_field_te, dipole_field_tm, hankel1_neg_all, tangential_direction, Wavenumber, MU0};
use crate::forward::{MeasurementSet, Scene};
use crate::geometry::{ImagingGrid, Point2, PolarizationMode};
use crate::imaging::{IndicatorKind, IndicatorMap, MapFlags};
use crate::CMatrix;

/// Tikhonov parameter relative to the largest singular value.
pub const REGULARIZATION: f64 = 0.01;

/// SVD of the arranged data matrix, shared by all sampling points.
#[derive(Debug, Clone)]
pub struct LsmOperator {
    /// Left singular vectors as columns.
    pub u: CMatrix,
    /// Singular values, descending.
    pub s: Vec<f64>,
    pub a: f64,
    pub polarization: PolarizationMode,
    pub zero_filled: usize,
}

impl LsmOperator {
    /// Arranges `data` as receiver channels by transmitter channels (TE:
    /// block-diagonal `[[E1, 0], [0, E2]]` per pair) and factors it.
    pub fn new(data: &MeasurementSet) -> Result<Self> {
        let zero_filled = data.mask.iter().filter(|&&m| !m).count();
        let y = match data.polarization {
            PolarizationMode::Tm | PolarizationMode::TeTangential => data.y.clone(),
            PolarizationMode::Te => {
                let (q, p) = (data.layout.n_rx(), data.layout.n_tx());
                let mut m = CMatrix::zeros(2 * q, 2 * p);
                for r in 0..q {
                    for t in 0..p {
                        m[(2 * r, 2 * t)] = data.y[(2 * r, t)];
                        m[(2 * r + 1, 2 * t + 1)] = data.y[(2 * r + 1, t)];
                    }
                }
                m
            }
        };
        if y.iter().all(|v| *v == Complex64::new(0.0, 0.0)) {
            return Err(Error::Data("LSM needs non-zero data".into()));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite data".into()));
        }
        let svd = y.svd(true, false);
        let u_full = svd.u.ok_or_else(|| Error::NonConvergent("SVD did not return U".into()))?;
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
        let s: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
        let u = CMatrix::from_fn(u_full.nrows(), order.len(), |r, c| u_full[(r, order[c])]);
        let a = REGULARIZATION * s[0];
        Ok(Self { u, s, a, polarization: data.polarization, zero_filled })
    }

    /// `sum_d (s_d / (s_d^2 + a^2))^2 |u_d^H f_c|^2`, summed over the columns `f_c`.
    pub fn g_norm_sq(&self, f: &CMatrix) -> f64 {
        let proj = self.u.ad_mul(f);
        let mut total = 0.0;
        for (d, &s) in self.s.iter().enumerate() {
            let filt = s / (s * s + self.a * self.a);
            let row: f64 = proj.row(d).iter().map(|v| v.norm_sqr()).sum();
            total += filt * filt * row;
        }
        total
    }

    /// Tikhonov solution `g` for a single right-hand side (right singular
    /// vectors are recomputed, so this is meant for checks, not imaging).
    pub fn solve(data_matrix: &CMatrix, f: &DVector<Complex64>) -> Result<DVector<Complex64>> {
        let svd = data_matrix.clone().svd(true, true);
        let u = svd.u.ok_or_else(|| Error::NonConvergent("SVD did not return U".into()))?;
        let v_t = svd.v_t.ok_or_else(|| Error::NonConvergent("SVD did not return V".into()))?;
        let a = REGULARIZATION * svd.singular_values.max();
        let mut g = DVector::zeros(v_t.ncols());
        for (d, &s) in svd.singular_values.iter().enumerate() {
            let coeff = u.column(d).dotc(f) * (s / (s * s + a * a));
            g += v_t.row(d).adjoint() * coeff;
        }
        Ok(g)
    }
}

/// Right-hand side of the far-field equation for sampling point `xs`.
fn rhs(
    pol: PolarizationMode,
    xs: Point2,
    rx: &[Point2],
    w: &Wavenumber,
    r_min: f64,
) -> Result<CMatrix> {
    Ok(match pol {
        PolarizationMode::Tm => {
            let mut f = CMatrix::zeros(rx.len(), 1);
            for (q, &r) in rx.iter().enumerate() {
                f[(q, 0)] = dipole_field_tm(xs, r, w, r_min)?;
            }
            f
        }
        PolarizationMode::Te => {
            let mut f = CMatrix::zeros(2 * rx.len(), 2);
            for (q, &r) in rx.iter().enumerate() {
                let e = dipole_field_te(xs, r, w, r_min)?;
                for i in 0..2 {
                    for j in 0..2 {
                        f[(2 * q + i, j)] = e[i][j];
                    }
                }
            }
            f
        }
        PolarizationMode::TeTangential => {
            let mut f = CMatrix::zeros(rx.len(), 2);
            for (q, &r) in rx.iter().enumerate() {
                let e = dipole_field_te(xs, r, w, r_min)?;
                let t = tangential_direction(r);
                for j in 0..2 {
                    f[(q, j)] = e[0][j] * t.x + e[1][j] * t.y;
                }
            }
            f
        }
    })
}

/// Turns `|g|^2` values into `1/|g|^2`, clamping divergent pixels.
fn invert_norms(norms: Vec<f64>, grid: &ImagingGrid, kind: IndicatorKind, zero_filled: usize) -> Result<IndicatorMap> {
    let finite_max = norms
        .iter()
        .filter(|&&n| n > 0.0 && n.is_finite())
        .map(|&n| 1.0 / n)
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max);
    let mut saturated = 0;
    let values = norms
        .into_iter()
        .map(|n| {
            let v = 1.0 / n;
            if v.is_finite() && n > 0.0 {
                v
            } else {
                saturated += 1;
                finite_max
            }
        })
        .collect();
    let mut map = IndicatorMap::new(values, grid.clone(), kind)?;
    map.flags = MapFlags { zero_filled, saturated };
    Ok(map)
}

/// `gamma_LSM(x_s) = 1 / |g_{x_s}|^2` at every grid cell centre.
pub fn lsm_indicator(data: &MeasurementSet, grid: &ImagingGrid, w: &Wavenumber) -> Result<IndicatorMap> {
    let op = LsmOperator::new(data)?;
    let r_min = grid.dx / 10.0;
    let norms = grid
        .centers()
        .into_iter()
        .map(|c| Ok(op.g_norm_sq(&rhs(data.polarization, c, &data.layout.rx, w, r_min)?)))
        .collect::<Result<Vec<_>>>()?;
    invert_norms(norms, grid, IndicatorKind::Lsm, op.zero_filled)
}

/// Highest multipole order for a covering radius: `round(k a)`.
pub fn ilsm_order(w: &Wavenumber, radius: f64) -> Result<usize> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::invalid(format!("covering radius must be positive, got {radius}")));
    }
    let order = (w.k * radius).round() as usize;
    if order == 0 {
        return Err(Error::invalid(format!(
            "k a = {:.3} rounds to order 0; target too small for the improved indicator",
            w.k * radius
        )));
    }
    Ok(order)
}

/// Improved indicator `(prod_i |g^x_i|^2/|g|^2 * |g^y_i|^2/|g|^2)^(1/2I)`
/// with test functions `(1/4) omega mu0 H_i^(1)(-kR) {cos, sin}(i (phi_r - phi_s))`,
/// angles taken about the coordinate origin. TM only.
pub fn improved_lsm_indicator(
    data: &MeasurementSet,
    grid: &ImagingGrid,
    w: &Wavenumber,
    radius_a: f64,
) -> Result<IndicatorMap> {
    if data.polarization != PolarizationMode::Tm {
        return Err(Error::invalid("the improved indicator is defined for TM data only"));
    }
    let order = ilsm_order(w, radius_a)?;
    let op = LsmOperator::new(data)?;
    let rx = &data.layout.rx;
    let r_min = grid.dx / 10.0;
    let pre = 0.25 * w.omega * MU0;
    let mut values = Vec::with_capacity(grid.len());
    let mut saturated = 0;
    for xs in grid.centers() {
        let base = op.g_norm_sq(&rhs(PolarizationMode::Tm, xs, rx, w, r_min)?);
        let mut fx = vec![CMatrix::zeros(rx.len(), 1); order];
        let mut fy = vec![CMatrix::zeros(rx.len(), 1); order];
        for (q, &r) in rx.iter().enumerate() {
            let dist = xs.distance(r);
            if dist < r_min {
                return Err(Error::NearSingular { distance: dist, guard: r_min });
            }
            let h = hankel1_neg_all(order, w.k * dist)?;
            let dphi = r.angle() - xs.angle();
            for i in 1..=order {
                let arg = i as f64 * dphi;
                fx[i - 1][(q, 0)] = pre * h[i] * arg.cos();
                fy[i - 1][(q, 0)] = pre * h[i] * arg.sin();
            }
        }
        let mut log_sum = 0.0;
        for i in 0..order {
            log_sum += (op.g_norm_sq(&fx[i]) / base).ln() + (op.g_norm_sq(&fy[i]) / base).ln();
        }
        let v = (log_sum / (2 * order) as f64).exp();
        if v.is_finite() {
            values.push(v);
        } else {
            saturated += 1;
            values.push(f64::NAN);
        }
    }
    let finite_max = values.iter().copied().filter(|v| v.is_finite()).fold(0.0, f64::max);
    for v in &mut values {
        if !v.is_finite() {
            *v = finite_max;
        }
    }
    let mut map = IndicatorMap::new(values, grid.clone(), IndicatorKind::ImprovedLsm)?;
    map.flags = MapFlags { zero_filled: op.zero_filled, saturated };
    Ok(map)
}

/// Radius of the smallest disc containing `points` (incremental algorithm).
pub fn enclosing_radius(points: &[Point2]) -> (Point2, f64) {
    fn circle2(a: Point2, b: Point2) -> (Point2, f64) {
        let c = (a + b) * 0.5;
        (c, c.distance(a))
    }
    fn circle3(a: Point2, b: Point2, c: Point2) -> (Point2, f64) {
        let d = 2.0 * (a.x * (b.y - c.y) + b.x * (c.y - a.y) + c.x * (a.y - b.y));
        if d.abs() < 1e-300 {
            let pairs = [circle2(a, b), circle2(a, c), circle2(b, c)];
            return pairs.into_iter().fold((a, 0.0), |acc, p| if p.1 > acc.1 { p } else { acc });
        }
        let (a2, b2, c2) = (a.x * a.x + a.y * a.y, b.x * b.x + b.y * b.y, c.x * c.x + c.y * c.y);
        let ux = (a2 * (b.y - c.y) + b2 * (c.y - a.y) + c2 * (a.y - b.y)) / d;
        let uy = (a2 * (c.x - b.x) + b2 * (a.x - c.x) + c2 * (b.x - a.x)) / d;
        let center = Point2::new(ux, uy);
        (center, center.distance(a))
    }
    let eps = 1e-12;
    let inside = |c: &(Point2, f64), p: Point2| p.distance(c.0) <= c.1 * (1.0 + eps) + eps;
    let Some(&first) = points.first() else {
        return (Point2::default(), 0.0);
    };
    let mut c = (first, 0.0);
    for i in 1..points.len() {
        if inside(&c, points[i]) {
            continue;
        }
        c = (points[i], 0.0);
        for j in 0..i {
            if inside(&c, points[j]) {
                continue;
            }
            c = circle2(points[i], points[j]);
            for k in 0..j {
                if !inside(&c, points[k]) {
                    c = circle3(points[i], points[j], points[k]);
                }
            }
        }
    }
    c
}

/// Radius of the smallest disc covering all targets of `scene`.
pub fn covering_radius(scene: &Scene) -> f64 {
    let pts: Vec<Point2> = scene.targets.iter().flat_map(|t| t.boundary_nodes(720)).collect();
    enclosing_radius(&pts).1
}

/// Covering radius estimated from a plain LSM map: half the diagonal of the
/// bounding box of pixels within `threshold_db` of the maximum.
pub fn auto_radius(map: &IndicatorMap, threshold_db: f64) -> Result<f64> {
    let db = crate::imaging::db_scale(map)?;
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (n, &v) in db.values.iter().enumerate() {
        if v >= threshold_db {
            let c = map.grid.center(n);
            x0 = x0.min(c.x - 0.5 * map.grid.dx);
            x1 = x1.max(c.x + 0.5 * map.grid.dx);
            y0 = y0.min(c.y - 0.5 * map.grid.dx);
            y1 = y1.max(c.y + 0.5 * map.grid.dx);
        }
    }
    Ok(0.5 * (x1 - x0).hypot(y1 - y0))
}
