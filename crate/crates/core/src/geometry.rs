//! Imaging grids, circular transceiver layouts and the cross-validation
//! partition of receivers.
//!
//! Angles are radians everywhere in this module; the degree-valued
//! constructors convert once at the boundary.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_polar(radius: f64, angle: f64) -> Self {
        Self::new(radius * angle.cos(), radius * angle.sin())
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    pub fn rotated(self, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

impl std::ops::Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl std::ops::Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl std::ops::Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, rhs: f64) -> Point2 {
        Point2::new(self.x * rhs, self.y * rhs)
    }
}

/// Uniform pixel grid over the rectangular inversion domain.
///
/// Pixel `n = row * nx + col`, rows run along `y`, columns along `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagingGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub dx: f64,
    pub nx: usize,
    pub ny: usize,
}

impl ImagingGrid {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64, dx: f64) -> Result<Self> {
        let finite = [x_min, x_max, y_min, y_max, dx].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::Geometry("grid bounds must be finite".into()));
        }
        if !(x_max > x_min && y_max > y_min) {
            return Err(Error::Geometry(format!(
                "empty grid bounds [{x_min}, {x_max}] x [{y_min}, {y_max}]"
            )));
        }
        if dx <= 0.0 {
            return Err(Error::Geometry(format!("grid spacing must be positive, got {dx}")));
        }
        let count = |extent: f64, axis: &str| -> Result<usize> {
            let cells = extent / dx;
            let rounded = cells.round();
            if rounded < 1.0 || (cells - rounded).abs() * dx > 1e-6 * dx {
                return Err(Error::Geometry(format!(
                    "spacing {dx} does not divide the {axis} extent {extent} ({cells:.6} cells)"
                )));
            }
            Ok(rounded as usize)
        };
        let nx = count(x_max - x_min, "x")?;
        let ny = count(y_max - y_min, "y")?;
        Ok(Self { x_min, x_max, y_min, y_max, dx, nx, ny })
    }

    /// Grid with `nx` x `ny` square cells anchored at `(x_min, y_min)`.
    pub fn with_counts(x_min: f64, y_min: f64, dx: f64, nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::Geometry("grid needs at least one cell per axis".into()));
        }
        Self::new(x_min, x_min + nx as f64 * dx, y_min, y_min + ny as f64 * dx, dx)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        debug_assert!(row < self.ny && col < self.nx);
        row * self.nx + col
    }

    pub fn row_col(&self, n: usize) -> (usize, usize) {
        (n / self.nx, n % self.nx)
    }

    pub fn center(&self, n: usize) -> Point2 {
        let (row, col) = self.row_col(n);
        Point2::new(
            self.x_min + (col as f64 + 0.5) * self.dx,
            self.y_min + (row as f64 + 0.5) * self.dx,
        )
    }

    pub fn centers(&self) -> Vec<Point2> {
        (0..self.len()).map(|n| self.center(n)).collect()
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    pub fn cell_area(&self) -> f64 {
        self.dx * self.dx
    }
}

/// `build_grid` in the operation table: bounds `[x_min, x_max, y_min, y_max]`.
pub fn build_grid(bounds: [f64; 4], dx: f64) -> Result<ImagingGrid> {
    ImagingGrid::new(bounds[0], bounds[1], bounds[2], bounds[3], dx)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RxRole {
    Reconstruction,
    CrossValidation,
}

impl RxRole {
    pub fn as_str(self) -> &'static str {
        match self {
            RxRole::Reconstruction => "rec",
            RxRole::CrossValidation => "cv",
        }
    }
}

impl FromStr for RxRole {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rec" => Ok(RxRole::Reconstruction),
            "cv" => Ok(RxRole::CrossValidation),
            other => Err(Error::invalid(format!("unknown receiver role '{other}'"))),
        }
    }
}

/// Field polarization of the measurement.
///
/// `TeTangential` is the single-component TE measurement (one scalar per
/// receiver along the receiver's tangential direction) that still carries
/// two contrast-source components per pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolarizationMode {
    Tm,
    Te,
    TeTangential,
}

impl PolarizationMode {
    pub fn channels_per_receiver(self) -> usize {
        match self {
            PolarizationMode::Tm | PolarizationMode::TeTangential => 1,
            PolarizationMode::Te => 2,
        }
    }

    /// Rows of the contrast-source matrix per pixel.
    pub fn group_size(self) -> usize {
        match self {
            PolarizationMode::Tm => 1,
            PolarizationMode::Te | PolarizationMode::TeTangential => 2,
        }
    }
}

impl fmt::Display for PolarizationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PolarizationMode::Tm => "TM",
            PolarizationMode::Te => "TE",
            PolarizationMode::TeTangential => "TE-tangential",
        })
    }
}

impl FromStr for PolarizationMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "TM" => Ok(PolarizationMode::Tm),
            "TE" => Ok(PolarizationMode::Te),
            "TE-TANGENTIAL" => Ok(PolarizationMode::TeTangential),
            _ => Err(Error::invalid(format!("unknown polarization '{s}'"))),
        }
    }
}

/// Transmitters and a shared receiver set with per-transmitter activity masks.
#[derive(Debug, Clone, PartialEq)]
pub struct TransceiverLayout {
    pub tx: Vec<Point2>,
    pub rx: Vec<Point2>,
    pub rx_role: Vec<RxRole>,
    /// Column-major `Q x P`: `active[p * Q + q]`.
    active: Vec<bool>,
}

impl TransceiverLayout {
    /// All receivers start in the reconstruction role.
    pub fn new(tx: Vec<Point2>, rx: Vec<Point2>, active: Vec<bool>) -> Result<Self> {
        if tx.is_empty() || rx.is_empty() {
            return Err(Error::Geometry("layout needs at least one transmitter and one receiver".into()));
        }
        if active.len() != tx.len() * rx.len() {
            return Err(Error::Geometry(format!(
                "activity mask has {} entries, expected {}",
                active.len(),
                tx.len() * rx.len()
            )));
        }
        let q = rx.len();
        for p in 0..tx.len() {
            if !active[p * q..(p + 1) * q].iter().any(|&a| a) {
                return Err(Error::Geometry(format!("transmitter {p} has no active receiver")));
            }
        }
        let rx_role = vec![RxRole::Reconstruction; rx.len()];
        Ok(Self { tx, rx, rx_role, active })
    }

    pub fn n_tx(&self) -> usize {
        self.tx.len()
    }

    pub fn n_rx(&self) -> usize {
        self.rx.len()
    }

    pub fn is_active(&self, q: usize, p: usize) -> bool {
        self.active[p * self.rx.len() + q]
    }

    pub fn active_mask(&self) -> &[bool] {
        &self.active
    }

    pub fn active_count(&self, p: usize) -> usize {
        let q = self.rx.len();
        self.active[p * q..(p + 1) * q].iter().filter(|&&a| a).count()
    }

    pub fn indices_with_role(&self, role: RxRole) -> Vec<usize> {
        (0..self.rx.len()).filter(|&q| self.rx_role[q] == role).collect()
    }

    pub fn cv_count(&self) -> usize {
        self.rx_role.iter().filter(|&&r| r == RxRole::CrossValidation).count()
    }

    /// Keep only the listed transmitters, in the given order.
    pub fn select_tx(&self, keep: &[usize]) -> Result<Self> {
        let q = self.rx.len();
        let mut tx = Vec::with_capacity(keep.len());
        let mut active = Vec::with_capacity(keep.len() * q);
        for &p in keep {
            if p >= self.tx.len() {
                return Err(Error::invalid(format!("transmitter index {p} out of range")));
            }
            tx.push(self.tx[p]);
            active.extend_from_slice(&self.active[p * q..(p + 1) * q]);
        }
        let mut out = Self::new(tx, self.rx.clone(), active)?;
        out.rx_role = self.rx_role.clone();
        Ok(out)
    }
}

/// Smallest absolute angle between two directions, in `[0, pi]`.
pub fn angular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

/// `P` equally spaced transmitters and a full receiver ring sampled every
/// `rx_step_deg`; receivers closer than `dead_zone_deg` to a transmitter
/// (on either side) are inactive for that transmitter.
pub fn build_circular_layout(
    radius_tx: f64,
    radius_rx: f64,
    n_tx: usize,
    rx_step_deg: f64,
    dead_zone_deg: f64,
) -> Result<TransceiverLayout> {
    if !(radius_tx > 0.0 && radius_rx > 0.0) {
        return Err(Error::Geometry("orbit radii must be positive".into()));
    }
    if n_tx == 0 {
        return Err(Error::Geometry("need at least one transmitter".into()));
    }
    if !(0.0..180.0).contains(&dead_zone_deg) {
        return Err(Error::Geometry(format!("dead zone {dead_zone_deg} deg outside [0, 180)")));
    }
    let ring = 360.0 / rx_step_deg;
    if !(rx_step_deg > 0.0) || (ring - ring.round()).abs() > 1e-9 * ring {
        return Err(Error::Geometry(format!(
            "receiver step {rx_step_deg} deg does not divide the full circle"
        )));
    }
    let n_rx = ring.round() as usize;
    let step = rx_step_deg.to_radians();
    let dead = dead_zone_deg.to_radians();
    let tx_angles: Vec<f64> = (0..n_tx).map(|p| 2.0 * PI * p as f64 / n_tx as f64).collect();
    let rx_angles: Vec<f64> = (0..n_rx).map(|q| q as f64 * step).collect();

    let mut active = Vec::with_capacity(n_tx * n_rx);
    for &ta in &tx_angles {
        for &ra in &rx_angles {
            // receivers exactly at the dead-zone edge stay active
            active.push(angular_distance(ta, ra) >= dead - 1e-9);
        }
    }
    TransceiverLayout::new(
        tx_angles.iter().map(|&a| Point2::from_polar(radius_tx, a)).collect(),
        rx_angles.iter().map(|&a| Point2::from_polar(radius_rx, a)).collect(),
        active,
    )
}

/// Cross-validation split settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvSplitConfig {
    /// Target fraction of receivers held out.
    pub cv_fraction: f64,
    /// Minimum arc length (m) covered by one contiguous CV arc.
    pub arc_len: f64,
    /// Angular anchor (rad) of the first arc.
    pub offset: f64,
}

/// Partition receivers into contiguous CV arcs spread evenly around the orbit.
pub fn split_cv(layout: &TransceiverLayout, cv_fraction: f64, arc_len: f64) -> Result<TransceiverLayout> {
    split_cv_with(layout, CvSplitConfig { cv_fraction, arc_len, offset: 0.0 })
}

pub fn split_cv_with(layout: &TransceiverLayout, cfg: CvSplitConfig) -> Result<TransceiverLayout> {
    if !(cfg.cv_fraction > 0.0 && cfg.cv_fraction < 0.5) {
        return Err(Error::invalid(format!("cv_fraction {} outside (0, 0.5)", cfg.cv_fraction)));
    }
    if !(cfg.arc_len > 0.0) {
        return Err(Error::invalid("CV arc length must be positive"));
    }
    let q = layout.n_rx();
    if q < 2 {
        return Err(Error::invalid("need at least two receivers to split"));
    }

    // angular order, rotated so that the first receiver is the first one at or after the offset
    let mut order: Vec<usize> = (0..q).collect();
    let angle = |i: usize| (layout.rx[i].angle() - cfg.offset).rem_euclid(2.0 * PI);
    order.sort_by(|&a, &b| angle(a).total_cmp(&angle(b)));

    let mut gaps: Vec<f64> = order
        .windows(2)
        .map(|w| layout.rx[w[0]].distance(layout.rx[w[1]]))
        .collect();
    gaps.sort_by(f64::total_cmp);
    let spacing = gaps[gaps.len() / 2];

    let per_arc = ((cfg.arc_len / spacing) - 1e-9).ceil().max(1.0) as usize;
    if per_arc >= q {
        return Err(Error::invalid(format!(
            "CV arc of {} m needs {per_arc} receivers but only {q} exist",
            cfg.arc_len
        )));
    }
    let n_arcs = ((cfg.cv_fraction * q as f64 / per_arc as f64).round() as usize).max(1);
    if n_arcs * per_arc >= q {
        return Err(Error::invalid("CV split would leave no reconstruction receivers"));
    }

    let segment = q as f64 / n_arcs as f64;
    let lead = ((segment - per_arc as f64) / 2.0).max(0.0);
    let mut out = layout.clone();
    out.rx_role = vec![RxRole::Reconstruction; q];
    for a in 0..n_arcs {
        let start = (a as f64 * segment + lead).floor() as usize;
        for k in 0..per_arc {
            out.rx_role[order[(start + k) % q]] = RxRole::CrossValidation;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_examples() {
        let g = build_grid([-1.0, 1.0, -0.4, 1.6], 0.01).unwrap();
        assert_eq!((g.nx, g.ny, g.len()), (200, 200, 40000));

        let g = build_grid([0.0, 1.0, 0.0, 1.0], 1.0).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.center(0), Point2::new(0.5, 0.5));

        let g = build_grid([0.0, 1.0, 0.0, 2.0], 0.5).unwrap();
        assert_eq!(g.len(), 8);
        assert_eq!(g.center(0), Point2::new(0.25, 0.25));
    }

    #[test]
    fn grid_rejects_non_divisible_extent() {
        let err = build_grid([-1.0, 1.0, -0.4, 1.6], 0.03).unwrap_err();
        assert!(err.to_string().contains("does not divide"), "{err}");
        assert!(build_grid([0.0, 0.0, 0.0, 1.0], 0.1).is_err());
        assert!(build_grid([0.0, 1.0, 0.0, 1.0], -0.1).is_err());
    }

    #[test]
    fn grid_index_bijection() {
        let g = ImagingGrid::with_counts(-0.3, 0.2, 0.1, 7, 5).unwrap();
        for n in 0..g.len() {
            let (r, c) = g.row_col(n);
            assert_eq!(g.index(r, c), n);
            let p = g.center(n);
            let col = ((p.x - g.x_min) / g.dx).floor() as usize;
            let row = ((p.y - g.y_min) / g.dx).floor() as usize;
            assert_eq!((row, col), (r, c));
        }
    }

    #[test]
    fn simulation_layout_has_61_active_receivers() {
        let l = build_circular_layout(3.0, 3.0, 18, 5.0, 30.0).unwrap();
        assert_eq!(l.n_tx(), 18);
        assert_eq!(l.n_rx(), 72);
        let spacing = l.tx[1].angle() - l.tx[0].angle();
        assert!((spacing.to_degrees() - 20.0).abs() < 1e-9);
        for p in 0..18 {
            assert_eq!(l.active_count(p), 61);
        }
    }

    #[test]
    fn dense_layout_has_151_active_receivers() {
        let l = build_circular_layout(3.0, 3.0, 90, 2.0, 30.0).unwrap();
        assert!((0..90).all(|p| l.active_count(p) == 151));
    }

    #[test]
    fn no_dead_zone_keeps_everything() {
        let l = build_circular_layout(3.0, 3.0, 1, 5.0, 0.0).unwrap();
        assert_eq!(l.active_count(0), 72);
    }

    #[test]
    fn fresnel_layout_has_49_receivers() {
        // receivers from 60 to 300 deg relative to the source
        let l = build_circular_layout(0.720, 0.760, 36, 5.0, 60.0).unwrap();
        assert_eq!(l.n_tx(), 36);
        for p in 0..36 {
            assert_eq!(l.active_count(p), 49);
            let ta = l.tx[p].angle();
            for q in 0..l.n_rx() {
                let d = angular_distance(ta, l.rx[q].angle()).to_degrees();
                assert_eq!(l.is_active(q, p), d >= 60.0 - 1e-6);
            }
        }
        assert!((l.tx[0].norm() - 0.720).abs() < 1e-12);
        assert!((l.rx[0].norm() - 0.760).abs() < 1e-12);
    }

    #[test]
    fn dead_zone_masks_respect_distance() {
        let l = build_circular_layout(3.0, 3.0, 7, 3.0, 37.0).unwrap();
        for p in 0..l.n_tx() {
            for q in 0..l.n_rx() {
                if l.is_active(q, p) {
                    let d = angular_distance(l.tx[p].angle(), l.rx[q].angle());
                    assert!(d >= 37f64.to_radians() - 1e-9);
                }
            }
        }
    }

    #[test]
    fn empty_mask_is_rejected() {
        assert!(build_circular_layout(3.0, 3.0, 1, 120.0, 179.0).is_err());
    }

    fn arc_layout(q: usize, radius: f64, span_deg: f64) -> TransceiverLayout {
        let rx: Vec<Point2> = (0..q)
            .map(|i| Point2::from_polar(radius, (i as f64 * span_deg / (q - 1) as f64).to_radians()))
            .collect();
        TransceiverLayout::new(vec![Point2::new(0.0, -radius)], rx, vec![true; q]).unwrap()
    }

    #[test]
    fn split_61_receivers_into_six_pairs() {
        let l = arc_layout(61, 3.0, 300.0);
        let spacing = l.rx[0].distance(l.rx[1]);
        let s = split_cv(&l, 0.2, 2.0 * spacing).unwrap();
        let cv = s.indices_with_role(RxRole::CrossValidation);
        assert_eq!(cv.len(), 12);
        // six runs of two consecutive indices
        let runs = cv.windows(2).filter(|w| w[1] != w[0] + 1).count() + 1;
        assert_eq!(runs, 6);
    }

    #[test]
    fn tiny_fraction_keeps_one_arc() {
        let l = arc_layout(61, 3.0, 300.0);
        let spacing = l.rx[0].distance(l.rx[1]);
        let s = split_cv(&l, 1e-6, 0.5 * spacing).unwrap();
        assert_eq!(s.cv_count(), 1);
    }

    #[test]
    fn dense_configuration_uses_four_per_arc() {
        let l = build_circular_layout(3.0, 3.0, 1, 2.0, 0.0).unwrap();
        let arc = 3.0 * 8f64.to_radians() * 0.999;
        let s = split_cv(&l, 0.2, arc).unwrap();
        let mut roles: Vec<_> = s.rx_role.clone();
        roles.extend_from_slice(&s.rx_role);
        // every CV run has length 4
        let mut run = 0;
        let mut runs = Vec::new();
        for r in roles.iter().skip_while(|&&r| r == RxRole::CrossValidation) {
            if *r == RxRole::CrossValidation {
                run += 1;
            } else if run > 0 {
                runs.push(run);
                run = 0;
            }
        }
        assert!(runs.iter().all(|&r| r == 4), "{runs:?}");
        let target = (0.2 * 180.0_f64).round() as i64;
        assert!((s.cv_count() as i64 - target).abs() <= 4);
    }

    #[test]
    fn split_rejects_oversized_arc() {
        let l = arc_layout(20, 1.0, 90.0);
        assert!(split_cv(&l, 0.2, 10.0).is_err());
        assert!(split_cv(&l, 0.6, 0.01).is_err());
    }

    #[test]
    fn split_is_deterministic_partition() {
        let l = build_circular_layout(3.0, 3.0, 18, 5.0, 30.0).unwrap();
        let a = split_cv(&l, 0.2, 0.4).unwrap();
        let b = split_cv(&l, 0.2, 0.4).unwrap();
        assert_eq!(a, b);
        let rec = a.indices_with_role(RxRole::Reconstruction);
        let cv = a.indices_with_role(RxRole::CrossValidation);
        assert_eq!(rec.len() + cv.len(), l.n_rx());
        assert!(rec.iter().all(|q| !cv.contains(q)));
    }

    #[test]
    fn polarization_group_sizes() {
        assert_eq!(PolarizationMode::Tm.group_size(), 1);
        assert_eq!(PolarizationMode::Te.group_size(), 2);
        assert_eq!(PolarizationMode::Te.channels_per_receiver(), 2);
        assert_eq!("te".parse::<PolarizationMode>().unwrap(), PolarizationMode::Te);
    }
}
