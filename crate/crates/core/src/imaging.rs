//! Indicator maps from contrast sources, dB scaling and image metrics.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fields::{build_sensing_matrix, Wavenumber};
use crate::forward::{MeasurementSet, Scene};
use crate::geometry::ImagingGrid;
use crate::solver::{cv_spgl1, newton_root_bpsigma, GroupStructure, SensingOperator, SolveResult, SolverConfig};
use crate::CMatrix;

/// Contrast sources for `data` on `grid` and their indicator map. With
/// `cfg.sigma` set, all valid entries are fitted to that residual; otherwise
/// the cross-validation receivers of the layout decide when to stop.
pub fn reconstruct_mmv(
    data: &MeasurementSet,
    grid: &ImagingGrid,
    w: &Wavenumber,
    cfg: &SolverConfig,
) -> Result<(IndicatorMap, SolveResult)> {
    let phi = build_sensing_matrix(grid, &data.layout, data.polarization, w)?;
    let groups = GroupStructure::new(data.polarization.group_size(), grid.len())?;
    let result = match cfg.sigma {
        Some(sigma) => {
            let op = SensingOperator::new(&phi.entries, Some(data.mask.clone()), data.y.ncols())?;
            newton_root_bpsigma(&op, &data.y, sigma, groups, cfg)?
        }
        None => {
            let (fit, cv) = data.split_masks();
            if !cv.iter().any(|&m| m) {
                return Err(Error::invalid("no noise level given and the layout has no cross-validation receivers"));
            }
            cv_spgl1(&phi.entries, &data.y, fit, &cv, groups, cfg)?
        }
    };
    let map = image_mmv(&result.j, groups, grid)?;
    Ok((map, result))
}

/// Default dB value given to zero pixels.
pub const DB_FLOOR: f64 = -60.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndicatorKind {
    Mmv,
    Lsm,
    ImprovedLsm,
}

impl IndicatorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Mmv => "mmv",
            Self::Lsm => "lsm",
            Self::ImprovedLsm => "ilsm",
        }
    }
}

impl fmt::Display for IndicatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IndicatorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mmv" => Ok(Self::Mmv),
            "lsm" => Ok(Self::Lsm),
            "ilsm" => Ok(Self::ImprovedLsm),
            other => Err(Error::invalid(format!("unknown indicator kind `{other}`"))),
        }
    }
}

/// How the stored values relate to the raw indicator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scale {
    Linear,
    /// `10 log10(v / max v)`, zeros clamped to `floor`.
    Decibel { floor: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MapFlags {
    /// Data samples zero-filled because they were masked.
    pub zero_filled: usize,
    /// Pixels whose indicator diverged and were clamped.
    pub saturated: usize,
}

/// Per-pixel indicator on an imaging grid.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorMap {
    pub values: Vec<f64>,
    pub grid: ImagingGrid,
    pub kind: IndicatorKind,
    pub scale: Scale,
    pub flags: MapFlags,
}

impl IndicatorMap {
    pub fn new(values: Vec<f64>, grid: ImagingGrid, kind: IndicatorKind) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(format!(
                "{} values for a grid of {} pixels",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Data("indicator values must be finite and non-negative".into()));
        }
        Ok(Self { values, grid, kind, scale: Scale::Linear, flags: MapFlags::default() })
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        best
    }

    /// Linear values, undoing a dB scale if present.
    pub fn linear_values(&self) -> Vec<f64> {
        match self.scale {
            Scale::Linear => self.values.clone(),
            Scale::Decibel { .. } => self.values.iter().map(|&d| 10f64.powf(d / 10.0)).collect(),
        }
    }
}

/// `sum_p |j_{p,n}|^2` (TM) or `sum_p |j_{p,2n}|^2 + |j_{p,2n+1}|^2` (TE) per pixel.
pub fn image_mmv(j: &CMatrix, groups: GroupStructure, grid: &ImagingGrid) -> Result<IndicatorMap> {
    if j.nrows() != groups.rows() || groups.n_groups != grid.len() {
        return Err(Error::invalid(format!(
            "contrast sources with {} rows do not match {} pixels of group size {}",
            j.nrows(),
            grid.len(),
            groups.g
        )));
    }
    let mut values = vec![0.0; grid.len()];
    for col in j.column_iter() {
        for (r, v) in col.iter().enumerate() {
            values[r / groups.g] += v.norm_sqr();
        }
    }
    IndicatorMap::new(values, grid.clone(), IndicatorKind::Mmv)
}

pub fn db_scale(map: &IndicatorMap) -> Result<IndicatorMap> {
    db_scale_with_floor(map, DB_FLOOR)
}

/// `10 log10(v / max v)`; zero (and sub-floor) pixels become `floor`.
pub fn db_scale_with_floor(map: &IndicatorMap, floor: f64) -> Result<IndicatorMap> {
    if !(floor < 0.0) {
        return Err(Error::invalid(format!("dB floor must be negative, got {floor}")));
    }
    let lin = map.linear_values();
    let top = lin.iter().copied().fold(0.0, f64::max);
    if !(top > 0.0) {
        return Err(Error::Data("cannot dB-scale an all-zero map".into()));
    }
    let values = lin
        .iter()
        .map(|&v| if v > 0.0 { (10.0 * (v / top).log10()).max(floor) } else { floor })
        .collect();
    Ok(IndicatorMap { values, scale: Scale::Decibel { floor }, ..map.clone() })
}

/// Pearson correlation of two pixel vectors, negative values clipped to 0.
pub fn corr_coeff(reference: &[f64], image: &[f64]) -> Result<f64> {
    if reference.len() != image.len() || reference.is_empty() {
        return Err(Error::invalid("images must have the same non-zero size"));
    }
    let n = reference.len() as f64;
    let ma = reference.iter().sum::<f64>() / n;
    let mb = image.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&a, &b) in reference.iter().zip(image) {
        let (da, db) = (a - ma, b - mb);
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::Data("correlation of a constant image is undefined".into()));
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(0.0, 1.0))
}

/// Pixels whose centre lies within `dx` of a target boundary, dilated by
/// `halo` cells in every direction.
pub fn boundary_band(grid: &ImagingGrid, scene: &Scene, halo: usize) -> Vec<bool> {
    let core: Vec<bool> = grid.centers().iter().map(|&c| scene.boundary_distance(c) <= grid.dx).collect();
    let mut band = vec![false; grid.len()];
    let h = halo as isize;
    for n in 0..grid.len() {
        if !core[n] {
            continue;
        }
        let (row, col) = grid.row_col(n);
        for dr in -h..=h {
            for dc in -h..=h {
                let (r, c) = (row as isize + dr, col as isize + dc);
                if r >= 0 && c >= 0 && (r as usize) < grid.ny && (c as usize) < grid.nx {
                    band[grid.index(r as usize, c as usize)] = true;
                }
            }
        }
    }
    band
}

/// Share of the (linear) indicator mass inside the boundary band.
pub fn boundary_energy_fraction(map: &IndicatorMap, scene: &Scene, halo: usize) -> Result<f64> {
    let band = boundary_band(&map.grid, scene, halo);
    let lin = map.linear_values();
    let total: f64 = lin.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Data("indicator map has no mass".into()));
    }
    Ok(lin.iter().zip(&band).filter(|(_, &b)| b).map(|(v, _)| v).sum::<f64>() / total)
}

/// 8-connected labels of `mask`; `None` outside the mask.
pub fn connected_components(mask: &[bool], grid: &ImagingGrid) -> (Vec<Option<usize>>, usize) {
    let mut labels = vec![None; mask.len()];
    let mut count = 0;
    let mut stack = Vec::new();
    for start in 0..mask.len() {
        if !mask[start] || labels[start].is_some() {
            continue;
        }
        labels[start] = Some(count);
        stack.push(start);
        while let Some(n) = stack.pop() {
            let (row, col) = grid.row_col(n);
            for dr in -1isize..=1 {
                for dc in -1isize..=1 {
                    let (r, c) = (row as isize + dr, col as isize + dc);
                    if r < 0 || c < 0 || r as usize >= grid.ny || c as usize >= grid.nx {
                        continue;
                    }
                    let m = grid.index(r as usize, c as usize);
                    if mask[m] && labels[m].is_none() {
                        labels[m] = Some(count);
                        stack.push(m);
                    }
                }
            }
        }
        count += 1;
    }
    (labels, count)
}

/// Outcome of [`target_separation`].
#[derive(Debug, Clone, PartialEq)]
pub struct Separation {
    /// Connected components above the threshold.
    pub components: usize,
    /// Components touching each target's neighbourhood.
    pub per_target: Vec<Vec<usize>>,
    /// Every target is hit and no component touches two targets.
    pub separated: bool,
}

/// Connected components of the map above `threshold_db` (relative to its
/// maximum), matched against the neighbourhood of each target: its interior
/// plus cells within `reach` of its boundary.
pub fn target_separation(map: &IndicatorMap, scene: &Scene, threshold_db: f64, reach: f64) -> Result<Separation> {
    let db = db_scale(map)?;
    let mask: Vec<bool> = db.values.iter().map(|&v| v >= threshold_db).collect();
    let (labels, components) = connected_components(&mask, &map.grid);
    let centers = map.grid.centers();
    let mut per_target = Vec::with_capacity(scene.targets.len());
    for t in &scene.targets {
        let mut hit: Vec<usize> = centers
            .iter()
            .zip(&labels)
            .filter_map(|(&c, l)| l.filter(|_| t.contains(c) || t.boundary_distance(c) <= reach))
            .collect();
        hit.sort_unstable();
        hit.dedup();
        per_target.push(hit);
    }
    let all_hit = per_target.iter().all(|h| !h.is_empty());
    let mut shared = false;
    for a in 0..per_target.len() {
        for b in a + 1..per_target.len() {
            shared |= per_target[a].iter().any(|l| per_target[b].contains(l));
        }
    }
    Ok(Separation { components, per_target, separated: all_hit && !shared })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::PecTarget;
    use crate::geometry::{build_grid, Point2};
    use num_complex::Complex64;

    fn grid() -> ImagingGrid {
        build_grid([-1.0, 1.0, -1.0, 1.0], 0.1).unwrap()
    }

    #[test]
    fn mmv_image_examples() {
        let g = grid();
        let groups = GroupStructure::new(1, g.len()).unwrap();
        let zero = image_mmv(&CMatrix::zeros(g.len(), 2), groups, &g).unwrap();
        assert!(zero.values.iter().all(|&v| v == 0.0));
        let mut j = CMatrix::zeros(g.len(), 2);
        j[(4, 0)] = Complex64::new(2.0, 0.0);
        let m = image_mmv(&j, groups, &g).unwrap();
        assert_eq!(m.values[4], 4.0);
        assert_eq!(m.values.iter().sum::<f64>(), 4.0);

        let groups = GroupStructure::new(2, g.len()).unwrap();
        let mut j = CMatrix::zeros(2 * g.len(), 1);
        j[(6, 0)] = Complex64::new(0.0, 3.0);
        j[(7, 0)] = Complex64::new(4.0, 0.0);
        assert_eq!(image_mmv(&j, groups, &g).unwrap().values[3], 25.0);
    }

    #[test]
    fn db_examples() {
        let g = build_grid([0.0, 2.0, 0.0, 1.0], 1.0).unwrap();
        let m = IndicatorMap::new(vec![1.0, 0.1], g.clone(), IndicatorKind::Lsm).unwrap();
        let d = db_scale(&m).unwrap();
        assert_eq!(d.values[0], 0.0);
        assert!((d.values[1] + 10.0).abs() < 1e-12);
        let u = IndicatorMap::new(vec![3.0, 3.0], g.clone(), IndicatorKind::Lsm).unwrap();
        assert_eq!(db_scale(&u).unwrap().values, vec![0.0, 0.0]);
        let z = IndicatorMap::new(vec![1.0, 0.0], g, IndicatorKind::Mmv).unwrap();
        assert_eq!(db_scale(&z).unwrap().values[1], DB_FLOOR);
    }

    #[test]
    fn correlation_examples() {
        let a = [1.0, 2.0, 3.0, 5.0];
        assert!((corr_coeff(&a, &a).unwrap() - 1.0).abs() < 1e-15);
        let b: Vec<f64> = a.iter().map(|v| 3.0 * v + 7.0).collect();
        assert!((corr_coeff(&a, &b).unwrap() - 1.0).abs() < 1e-12);
        let c: Vec<f64> = a.iter().map(|v| -v).collect();
        assert_eq!(corr_coeff(&a, &c).unwrap(), 0.0);
        assert!(corr_coeff(&a, &[1.0; 4]).is_err());
    }

    #[test]
    fn boundary_fraction_extremes() {
        let g = grid();
        let scene = Scene::new(vec![PecTarget::circle(Point2::new(0.0, 0.0), 0.5).unwrap()]).unwrap();
        let band = boundary_band(&g, &scene, 0);
        let on: Vec<f64> = band.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        let m = IndicatorMap::new(on, g.clone(), IndicatorKind::Mmv).unwrap();
        assert_eq!(boundary_energy_fraction(&m, &scene, 0).unwrap(), 1.0);
        let uniform = IndicatorMap::new(vec![1.0; g.len()], g.clone(), IndicatorKind::Mmv).unwrap();
        let halo = boundary_band(&g, &scene, 2);
        let ratio = halo.iter().filter(|&&b| b).count() as f64 / g.len() as f64;
        assert!((boundary_energy_fraction(&uniform, &scene, 2).unwrap() - ratio).abs() < 1e-12);
    }

    #[test]
    fn separation_of_two_blobs() {
        let g = grid();
        let scene = Scene::new(vec![
            PecTarget::circle(Point2::new(-0.5, 0.0), 0.2).unwrap(),
            PecTarget::circle(Point2::new(0.5, 0.0), 0.2).unwrap(),
        ])
        .unwrap();
        let values: Vec<f64> = g.centers().iter().map(|&c| if scene.contains(c) { 1.0 } else { 0.0 }).collect();
        let m = IndicatorMap::new(values.clone(), g.clone(), IndicatorKind::Mmv).unwrap();
        let s = target_separation(&m, &scene, -10.0, 0.1).unwrap();
        assert_eq!(s.components, 2);
        assert!(s.separated);
        // a bridge along y = 0 merges them
        let bridged: Vec<f64> = g
            .centers()
            .iter()
            .zip(&values)
            .map(|(c, &v)| if c.y.abs() < 0.06 && c.x.abs() < 0.5 { 1.0 } else { v })
            .collect();
        let m = IndicatorMap::new(bridged, g, IndicatorKind::Mmv).unwrap();
        assert!(!target_separation(&m, &scene, -10.0, 0.1).unwrap().separated);
    }
}
