//! PEC target shapes for synthetic scenes.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::Point2;

/// Minimum number of polygon edges accepted for a contour target.
pub const MIN_CONTOUR_SEGMENTS: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub enum PecTarget {
    Circle { center: Point2, radius: f64 },
    /// Closed polygon, counter-clockwise, first vertex not repeated.
    Contour(Vec<Point2>),
}

impl PecTarget {
    pub fn circle(center: Point2, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Geometry(format!("circle radius must be positive, got {radius}")));
        }
        Ok(Self::Circle { center, radius })
    }

    pub fn contour(mut vertices: Vec<Point2>) -> Result<Self> {
        if vertices.len() > 1 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        if vertices.len() < MIN_CONTOUR_SEGMENTS {
            return Err(Error::Geometry(format!(
                "contour needs at least {MIN_CONTOUR_SEGMENTS} segments, got {}",
                vertices.len()
            )));
        }
        if vertices.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::Geometry("contour has non-finite vertices".into()));
        }
        if signed_area(&vertices) < 0.0 {
            vertices.reverse();
        }
        if self_intersects(&vertices) {
            return Err(Error::Geometry("contour is self-intersecting".into()));
        }
        Ok(Self::Contour(vertices))
    }

    /// Polygonal approximation of a circle with `segments` edges.
    pub fn circle_contour(center: Point2, radius: f64, segments: usize) -> Result<Self> {
        Self::circle(center, radius)?;
        Self::contour(
            (0..segments)
                .map(|s| center + Point2::from_polar(radius, 2.0 * PI * s as f64 / segments as f64))
                .collect(),
        )
    }

    /// Disc `(c1, r1)` minus disc `(c2, r2)`, traced with roughly `segments`
    /// edges. The second disc must cut the first one into a crescent.
    pub fn crescent(c1: Point2, r1: f64, c2: Point2, r2: f64, segments: usize) -> Result<Self> {
        let d = c1.distance(c2);
        if !(d > (r1 - r2).abs() && d < r1 + r2) {
            return Err(Error::Geometry("crescent discs must intersect in two points".into()));
        }
        let axis = (c2 - c1).angle();
        // half-angles of the common chord seen from each centre
        let a1 = ((d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1)).clamp(-1.0, 1.0).acos();
        let a2 = ((d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2)).clamp(-1.0, 1.0).acos();
        let outer_span = 2.0 * PI - 2.0 * a1;
        let inner_span = 2.0 * a2;
        let (outer_len, inner_len) = (r1 * outer_span, r2 * inner_span);
        let n_outer = ((segments as f64 * outer_len / (outer_len + inner_len)).round() as usize).max(8);
        let n_inner = segments.saturating_sub(n_outer).max(8);
        let mut pts = Vec::with_capacity(n_outer + n_inner);
        for s in 0..n_outer {
            let t = axis + a1 + outer_span * s as f64 / n_outer as f64;
            pts.push(c1 + Point2::from_polar(r1, t));
        }
        // back along the part of circle 2 lying inside circle 1
        for s in 0..n_inner {
            let t = axis + PI + a2 - inner_span * s as f64 / n_inner as f64;
            pts.push(c2 + Point2::from_polar(r2, t));
        }
        Self::contour(pts)
    }

    pub fn contains(&self, p: Point2) -> bool {
        match self {
            Self::Circle { center, radius } => p.distance(*center) < *radius,
            Self::Contour(v) => {
                let mut inside = false;
                let n = v.len();
                for i in 0..n {
                    let (a, b) = (v[i], v[(i + 1) % n]);
                    if (a.y > p.y) != (b.y > p.y) {
                        let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                        if p.x < x {
                            inside = !inside;
                        }
                    }
                }
                inside
            }
        }
    }

    /// Euclidean distance from `p` to the target boundary.
    pub fn boundary_distance(&self, p: Point2) -> f64 {
        match self {
            Self::Circle { center, radius } => (p.distance(*center) - radius).abs(),
            Self::Contour(v) => {
                let n = v.len();
                (0..n).map(|i| segment_distance(p, v[i], v[(i + 1) % n])).fold(f64::INFINITY, f64::min)
            }
        }
    }

    pub fn perimeter(&self) -> f64 {
        match self {
            Self::Circle { radius, .. } => 2.0 * PI * radius,
            Self::Contour(v) => (0..v.len()).map(|i| v[i].distance(v[(i + 1) % v.len()])).sum(),
        }
    }

    /// Centre and radius of a disc covering the target.
    pub fn bounding_circle(&self) -> (Point2, f64) {
        match self {
            Self::Circle { center, radius } => (*center, *radius),
            Self::Contour(v) => {
                let c = v.iter().fold(Point2::default(), |acc, &p| acc + p) * (1.0 / v.len() as f64);
                let r = v.iter().map(|p| p.distance(c)).fold(0.0, f64::max);
                (c, r)
            }
        }
    }

    /// Boundary resampled into `segments` equal-length chords, returned as
    /// the chord end points (closed, first point not repeated).
    pub fn boundary_nodes(&self, segments: usize) -> Vec<Point2> {
        match self {
            Self::Circle { center, radius } => (0..segments)
                .map(|s| *center + Point2::from_polar(*radius, 2.0 * PI * s as f64 / segments as f64))
                .collect(),
            Self::Contour(v) => resample_closed(v, segments),
        }
    }
}

fn signed_area(v: &[Point2]) -> f64 {
    let n = v.len();
    0.5 * (0..n).map(|i| v[i].x * v[(i + 1) % n].y - v[(i + 1) % n].x * v[i].y).sum::<f64>()
}

fn cross(a: Point2, b: Point2) -> f64 {
    a.x * b.y - a.y * b.x
}

fn segments_cross(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let d1 = cross(b - a, c - a);
    let d2 = cross(b - a, d - a);
    let d3 = cross(d - c, a - c);
    let d4 = cross(d - c, b - c);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

fn self_intersects(v: &[Point2]) -> bool {
    let n = v.len();
    for i in 0..n {
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            if segments_cross(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]) {
                return true;
            }
        }
    }
    false
}

pub(crate) fn segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b - a;
    let len2 = ab.x * ab.x + ab.y * ab.y;
    if len2 == 0.0 {
        return p.distance(a);
    }
    let ap = p - a;
    let t = ((ap.x * ab.x + ap.y * ab.y) / len2).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

fn resample_closed(v: &[Point2], segments: usize) -> Vec<Point2> {
    let n = v.len();
    let mut cum = Vec::with_capacity(n + 1);
    cum.push(0.0);
    for i in 0..n {
        cum.push(cum[i] + v[i].distance(v[(i + 1) % n]));
    }
    let total = cum[n];
    let mut out = Vec::with_capacity(segments);
    let mut edge = 0;
    for s in 0..segments {
        let target = total * s as f64 / segments as f64;
        while edge + 1 < n && cum[edge + 1] <= target {
            edge += 1;
        }
        let len = cum[edge + 1] - cum[edge];
        let t = if len > 0.0 { (target - cum[edge]) / len } else { 0.0 };
        out.push(v[edge] + (v[(edge + 1) % n] - v[edge]) * t);
    }
    out
}

/// Collection of PEC targets illuminated together.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scene {
    pub targets: Vec<PecTarget>,
}

impl Scene {
    pub fn new(targets: Vec<PecTarget>) -> Result<Self> {
        if targets.is_empty() {
            return Err(Error::Geometry("scene has no targets".into()));
        }
        Ok(Self { targets })
    }

    /// Two circles of radius 0.2 m centred at `(-0.45, 0.6)` and `(0.45, 0.6)`.
    pub fn two_circles() -> Self {
        Self {
            targets: vec![
                PecTarget::Circle { center: Point2::new(-0.45, 0.6), radius: 0.2 },
                PecTarget::Circle { center: Point2::new(0.45, 0.6), radius: 0.2 },
            ],
        }
    }

    /// Disc of radius 0.6 m at the origin minus the same disc shifted to `(0.4, 0)`.
    pub fn crescent() -> Self {
        let t = PecTarget::crescent(Point2::new(0.0, 0.0), 0.6, Point2::new(0.4, 0.0), 0.6, 400)
            .expect("fixed crescent geometry is valid");
        Self { targets: vec![t] }
    }

    pub fn contains(&self, p: Point2) -> bool {
        self.targets.iter().any(|t| t.contains(p))
    }

    pub fn boundary_distance(&self, p: Point2) -> f64 {
        self.targets.iter().map(|t| t.boundary_distance(p)).fold(f64::INFINITY, f64::min)
    }

    pub fn all_circles(&self) -> bool {
        self.targets.iter().all(|t| matches!(t, PecTarget::Circle { .. }))
    }
}
