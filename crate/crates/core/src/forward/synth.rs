//! Measurement matrices assembled from the boundary-method oracles.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::mom::MomSolver;
use super::scene::Scene;
use super::series::{CircleScatterer, CylinderPolarization};
use crate::error::{Error, Result};
use crate::fields::{tangential_direction, Wavenumber};
use crate::geometry::{PolarizationMode, RxRole, TransceiverLayout};
use crate::CMatrix;

/// Forward model that produced a synthetic data set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForwardEngine {
    CircleSeries,
    MomTm,
}

impl ForwardEngine {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::CircleSeries => "circle-series",
            Self::MomTm => "mom-tm",
        }
    }
}

impl std::str::FromStr for ForwardEngine {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "circle-series" => Ok(Self::CircleSeries),
            "mom-tm" => Ok(Self::MomTm),
            other => Err(Error::invalid(format!("unknown forward engine `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseRecord {
    pub snr_db: f64,
    pub seed: u64,
    /// Frobenius norm of the added noise matrix.
    pub noise_norm: f64,
}

/// Scattered-field samples `Y`: one column per transmitter, one row per
/// receiver channel. Entries with `mask == false` are zero and carry no data.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    pub y: CMatrix,
    /// Column-major validity flags, same shape as `y`.
    pub mask: Vec<bool>,
    pub polarization: PolarizationMode,
    pub frequency: f64,
    pub layout: TransceiverLayout,
    pub noise: Option<NoiseRecord>,
    pub engine: Option<ForwardEngine>,
}

impl MeasurementSet {
    /// Empty (all-masked) set for `layout`.
    pub fn zeros(layout: TransceiverLayout, polarization: PolarizationMode, frequency: f64) -> Self {
        let rows = polarization.channels_per_receiver() * layout.n_rx();
        let cols = layout.n_tx();
        Self {
            y: CMatrix::zeros(rows, cols),
            mask: vec![false; rows * cols],
            polarization,
            frequency,
            layout,
            noise: None,
            engine: None,
        }
    }

    pub fn is_valid(&self, row: usize, col: usize) -> bool {
        self.mask[col * self.y.nrows() + row]
    }

    pub fn set(&mut self, row: usize, col: usize, value: Complex64, valid: bool) {
        let r = self.y.nrows();
        self.y[(row, col)] = if valid { value } else { Complex64::new(0.0, 0.0) };
        self.mask[col * r + row] = valid;
    }

    /// Frobenius norm over valid entries.
    pub fn norm(&self) -> f64 {
        self.y
            .iter()
            .zip(&self.mask)
            .filter(|(_, &m)| m)
            .map(|(v, _)| v.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Column-major `(fit, cv)` masks: valid entries on reconstruction and
    /// cross-validation receivers respectively.
    pub fn split_masks(&self) -> (Vec<bool>, Vec<bool>) {
        let rows = self.y.nrows();
        let ch = self.polarization.channels_per_receiver();
        let mut fit = self.mask.clone();
        let mut cv = vec![false; self.mask.len()];
        for (i, valid) in self.mask.iter().enumerate() {
            let q = (i % rows) / ch;
            if *valid && self.layout.rx_role[q] == RxRole::CrossValidation {
                fit[i] = false;
                cv[i] = true;
            }
        }
        (fit, cv)
    }

    pub fn valid_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Adds complex white Gaussian noise scaled so that
    /// `10 log10(|Y|^2 / |U|^2) = snr_db` over the valid entries.
    pub fn add_noise(&mut self, snr_db: f64, seed: u64) -> Result<()> {
        if !snr_db.is_finite() {
            return Err(Error::invalid(format!("SNR must be finite, got {snr_db}")));
        }
        let signal = self.norm();
        if signal == 0.0 {
            return Err(Error::Data("cannot set an SNR on an all-zero data set".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut u: Vec<Complex64> = Vec::with_capacity(self.mask.len());
        for _ in 0..self.mask.len() {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            u.push(Complex64::new(re, im));
        }
        let drawn: f64 = u.iter().zip(&self.mask).filter(|(_, &m)| m).map(|(v, _)| v.norm_sqr()).sum::<f64>().sqrt();
        let target = signal / 10f64.powf(snr_db / 20.0);
        let scale = target / drawn;
        for ((v, &m), n) in self.y.iter_mut().zip(&self.mask).zip(&u) {
            if m {
                *v += n * scale;
            }
        }
        self.noise = Some(NoiseRecord { snr_db, seed, noise_norm: target });
        Ok(())
    }
}

/// Synthetic scattered data for `scene` under `layout`.
///
/// TM scenes made only of circles use the multiple-scattering series; any
/// contour switches TM to the method of moments. TE supports circles only.
/// `snr_db = None` leaves the data noiseless.
pub fn synth_dataset(
    scene: &Scene,
    layout: &TransceiverLayout,
    pol: PolarizationMode,
    w: &Wavenumber,
    snr_db: Option<f64>,
    seed: u64,
) -> Result<MeasurementSet> {
    for t in &scene.targets {
        let (c, r) = t.bounding_circle();
        let reach = c.norm() + r;
        if layout.tx.iter().chain(&layout.rx).any(|p| p.norm() <= reach || t.contains(*p)) {
            return Err(Error::Geometry("targets must lie strictly inside the antenna orbit".into()));
        }
    }
    let mut out = MeasurementSet::zeros(layout.clone(), pol, w.frequency);
    match pol {
        PolarizationMode::Tm if scene.all_circles() => {
            let s = CircleScatterer::new(&scene.targets, CylinderPolarization::Tm, w, None)?;
            for (p, &tx) in layout.tx.iter().enumerate() {
                let wave = s.illuminate(tx)?;
                for (q, &rx) in layout.rx.iter().enumerate() {
                    if layout.is_active(q, p) {
                        out.set(q, p, wave.potential(rx)?, true);
                    }
                }
            }
            out.engine = Some(ForwardEngine::CircleSeries);
        }
        PolarizationMode::Tm => {
            let segs: Vec<usize> = scene.targets.iter().map(|t| MomSolver::segments_for(t, w, 20.0)).collect();
            let s = MomSolver::new(&scene.targets, w, &segs)?;
            for (p, &tx) in layout.tx.iter().enumerate() {
                let active: Vec<usize> = (0..layout.n_rx()).filter(|&q| layout.is_active(q, p)).collect();
                let pts: Vec<_> = active.iter().map(|&q| layout.rx[q]).collect();
                for (q, v) in active.into_iter().zip(s.scattered(tx, &pts)?) {
                    out.set(q, p, v, true);
                }
            }
            out.engine = Some(ForwardEngine::MomTm);
        }
        PolarizationMode::Te | PolarizationMode::TeTangential => {
            if !scene.all_circles() {
                return Err(Error::invalid("TE synthesis supports circular targets only"));
            }
            let s = CircleScatterer::new(&scene.targets, CylinderPolarization::Te, w, None)?;
            for (p, &tx) in layout.tx.iter().enumerate() {
                let wave = s.illuminate(tx)?;
                for (q, &rx) in layout.rx.iter().enumerate() {
                    if !layout.is_active(q, p) {
                        continue;
                    }
                    let e = wave.e_field(rx)?;
                    if pol == PolarizationMode::Te {
                        out.set(2 * q, p, e[0], true);
                        out.set(2 * q + 1, p, e[1], true);
                    } else {
                        let t = tangential_direction(rx);
                        out.set(q, p, e[0] * t.x + e[1] * t.y, true);
                    }
                }
            }
            out.engine = Some(ForwardEngine::CircleSeries);
        }
    }
    if let Some(snr) = snr_db {
        out.add_noise(snr, seed)?;
    }
    Ok(out)
}
