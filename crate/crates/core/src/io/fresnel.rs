//! Importer for the Institut Fresnel bistatic measurement files.
//!
//! Each numeric row holds one (transmitter, receiver, frequency) sample of
//! the total and the incident field. The column positions differ between
//! distributions of the archive, so they are passed in explicitly.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::forward::MeasurementSet;
use crate::geometry::{angular_distance, Point2, PolarizationMode, TransceiverLayout};

/// Published orbit radius of the emitter.
pub const FRESNEL_TX_RADIUS: f64 = 0.720;
/// Published orbit radius of the receiver.
pub const FRESNEL_RX_RADIUS: f64 = 0.760;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FresnelRecord {
    pub tx_angle_deg: f64,
    pub rx_angle_deg: f64,
    /// Hz.
    pub frequency: f64,
    pub total: Complex64,
    pub incident: Complex64,
}

impl FresnelRecord {
    pub fn scattered(&self) -> Complex64 {
        self.total - self.incident
    }
}

/// Zero-based column of each record field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ColumnMap {
    pub tx_angle: usize,
    pub rx_angle: usize,
    pub frequency: usize,
    pub total_re: usize,
    pub total_im: usize,
    pub incident_re: usize,
    pub incident_im: usize,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self { tx_angle: 0, rx_angle: 1, frequency: 2, total_re: 3, total_im: 4, incident_re: 5, incident_im: 6 }
    }
}

impl ColumnMap {
    fn width(&self) -> usize {
        [self.tx_angle, self.rx_angle, self.frequency, self.total_re, self.total_im, self.incident_re, self.incident_im]
            .into_iter()
            .max()
            .unwrap_or(0)
            + 1
    }
}

/// How the file's numbers relate to the internal conventions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FresnelConvention {
    /// Factor converting the frequency column to Hz.
    pub frequency_unit: f64,
    /// Receiver angles are measured from the emitter direction instead of
    /// from the fixed x axis.
    pub rx_relative: bool,
    /// Conjugate all fields (file written with `exp(-i w t)`).
    pub conjugate: bool,
    pub tx_radius: f64,
    pub rx_radius: f64,
    pub polarization: PolarizationMode,
}

impl Default for FresnelConvention {
    fn default() -> Self {
        Self {
            frequency_unit: 1e9,
            rx_relative: true,
            conjugate: false,
            tx_radius: FRESNEL_TX_RADIUS,
            rx_radius: FRESNEL_RX_RADIUS,
            polarization: PolarizationMode::Tm,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FresnelImport {
    pub data: MeasurementSet,
    /// Samples whose total and incident fields were both zero; stored masked.
    pub zero_samples: usize,
    /// Non-numeric lines skipped as comments.
    pub skipped_lines: usize,
    /// Distinct frequencies (Hz) found in the file.
    pub frequencies: Vec<f64>,
}

/// Reads all numeric rows; lines that do not parse as numbers are skipped.
pub fn read_fresnel_records<R: BufRead>(reader: R, columns: &ColumnMap, unit: f64, path: &Path) -> Result<(Vec<FresnelRecord>, usize)> {
    let width = columns.width();
    let mut records = Vec::new();
    let mut skipped = 0;
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| Error::Io { path: path.into(), source })?;
        let values: Option<Vec<f64>> = line.split_whitespace().map(|t| t.parse::<f64>().ok()).collect();
        let values = match values {
            Some(v) if !v.is_empty() => v,
            _ => {
                skipped += 1;
                continue;
            }
        };
        if values.len() < width {
            return Err(Error::Parse {
                path: path.into(),
                line: i + 1,
                message: format!("numeric row has {} columns, column map needs {width}", values.len()),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parse { path: path.into(), line: i + 1, message: "non-finite value".into() });
        }
        records.push(FresnelRecord {
            tx_angle_deg: values[columns.tx_angle],
            rx_angle_deg: values[columns.rx_angle],
            frequency: values[columns.frequency] * unit,
            total: Complex64::new(values[columns.total_re], values[columns.total_im]),
            incident: Complex64::new(values[columns.incident_re], values[columns.incident_im]),
        });
    }
    Ok((records, skipped))
}

pub fn import_fresnel(path: &Path, columns: &ColumnMap, convention: &FresnelConvention, frequency: f64) -> Result<FresnelImport> {
    let file = File::open(path).map_err(|source| Error::Io { path: path.into(), source })?;
    let (records, skipped) = read_fresnel_records(BufReader::new(file), columns, convention.frequency_unit, path)?;
    let mut import = records_to_dataset(&records, convention, frequency)?;
    import.skipped_lines = skipped;
    Ok(import)
}

/// Angles are snapped to this resolution (degrees) when matching positions.
const ANGLE_RESOLUTION: f64 = 1e-6;

fn angle_key(deg: f64) -> i64 {
    (deg.rem_euclid(360.0) / ANGLE_RESOLUTION).round() as i64 % (360.0 / ANGLE_RESOLUTION).round() as i64
}

/// Builds a measurement set from the rows at `frequency`.
///
/// Every transmitter must see the same number of receivers; the receiver
/// set of the layout is the union of all absolute receiver angles.
pub fn records_to_dataset(records: &[FresnelRecord], convention: &FresnelConvention, frequency: f64) -> Result<FresnelImport> {
    if !(frequency > 0.0) {
        return Err(Error::invalid(format!("frequency must be positive, got {frequency}")));
    }
    if convention.polarization == PolarizationMode::Te {
        return Err(Error::invalid("single-component files import as TM or TE-tangential"));
    }
    let mut frequencies: Vec<f64> = Vec::new();
    for r in records {
        if !frequencies.iter().any(|&f| (f - r.frequency).abs() <= 1e-9 * f) {
            frequencies.push(r.frequency);
        }
    }
    frequencies.sort_by(f64::total_cmp);
    let slice: Vec<&FresnelRecord> =
        records.iter().filter(|r| (r.frequency - frequency).abs() <= 1e-6 * frequency).collect();
    if slice.is_empty() {
        let list: Vec<String> = frequencies.iter().map(|f| format!("{f:e}")).collect();
        return Err(Error::Data(format!("frequency {frequency:e} Hz not in file (available: {})", list.join(", "))));
    }

    let mut tx_angles: BTreeMap<i64, f64> = BTreeMap::new();
    let mut rx_angles: BTreeMap<i64, f64> = BTreeMap::new();
    let mut per_tx: BTreeMap<i64, BTreeMap<i64, Complex64>> = BTreeMap::new();
    let mut zero_keys = Vec::new();
    for r in &slice {
        let abs_rx = if convention.rx_relative { r.tx_angle_deg + r.rx_angle_deg } else { r.rx_angle_deg };
        let tk = angle_key(r.tx_angle_deg);
        let rk = angle_key(abs_rx);
        tx_angles.insert(tk, r.tx_angle_deg.rem_euclid(360.0));
        rx_angles.insert(rk, abs_rx.rem_euclid(360.0));
        let v = if convention.conjugate { r.scattered().conj() } else { r.scattered() };
        if per_tx.entry(tk).or_default().insert(rk, v).is_some() {
            return Err(Error::Data(format!(
                "duplicate sample for emitter {} deg, receiver {} deg",
                r.tx_angle_deg, abs_rx
            )));
        }
        if r.total == Complex64::new(0.0, 0.0) && r.incident == Complex64::new(0.0, 0.0) {
            zero_keys.push((tk, rk));
        }
    }

    let counts: Vec<usize> = per_tx.values().map(|m| m.len()).collect();
    if counts.iter().any(|&c| c != counts[0]) {
        return Err(Error::Data(format!(
            "inconsistent angular grid: receivers per emitter range from {} to {}",
            counts.iter().min().unwrap_or(&0),
            counts.iter().max().unwrap_or(&0)
        )));
    }
    let tx_list: Vec<f64> = tx_angles.values().copied().collect();
    if tx_list.len() > 2 {
        let step = angular_distance(tx_list[1].to_radians(), tx_list[0].to_radians());
        let uniform = tx_list
            .windows(2)
            .all(|w| (angular_distance(w[1].to_radians(), w[0].to_radians()) - step).abs() < 1e-6);
        if !uniform {
            return Err(Error::Data("inconsistent angular grid: emitter angles are not equally spaced".into()));
        }
    }

    let tx_keys: Vec<i64> = tx_angles.keys().copied().collect();
    let rx_keys: Vec<i64> = rx_angles.keys().copied().collect();
    let tx_pos: Vec<Point2> = tx_list.iter().map(|a| Point2::from_polar(convention.tx_radius, a.to_radians())).collect();
    let rx_pos: Vec<Point2> =
        rx_angles.values().map(|a| Point2::from_polar(convention.rx_radius, a.to_radians())).collect();
    let mut active = Vec::with_capacity(tx_keys.len() * rx_keys.len());
    for tk in &tx_keys {
        let row = &per_tx[tk];
        active.extend(rx_keys.iter().map(|rk| row.contains_key(rk)));
    }
    let layout = TransceiverLayout::new(tx_pos, rx_pos, active)?;
    let mut data = MeasurementSet::zeros(layout, convention.polarization, frequency);
    for (p, tk) in tx_keys.iter().enumerate() {
        for (q, rk) in rx_keys.iter().enumerate() {
            if let Some(&v) = per_tx[tk].get(rk) {
                let valid = !zero_keys.contains(&(*tk, *rk));
                data.set(q, p, v, valid);
            }
        }
    }
    Ok(FresnelImport { data, zero_samples: zero_keys.len(), skipped_lines: 0, frequencies })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 36 emitters every 10 deg, receivers 60..=300 deg from the emitter in
    /// 5 deg steps, two frequencies.
    fn synthetic_file() -> String {
        let mut s = String::from("# emitter receiver freq re(Etot) im(Etot) re(Einc) im(Einc)\nheader line\n");
        for t in 0..36 {
            for r in 0..49 {
                for f in [8.0, 16.0] {
                    let (ta, ra) = (10.0 * t as f64, 60.0 + 5.0 * r as f64);
                    let tot = (t * 100 + r) as f64;
                    s.push_str(&format!("{ta} {ra} {f} {tot} {} 1.5 -0.5\n", -tot / 2.0));
                }
            }
        }
        s
    }

    fn read(text: &str) -> (Vec<FresnelRecord>, usize) {
        read_fresnel_records(text.as_bytes(), &ColumnMap::default(), 1e9, Path::new("mem")).unwrap()
    }

    #[test]
    fn full_archive_layout() {
        let (records, skipped) = read(&synthetic_file());
        assert_eq!(skipped, 2);
        let imp = records_to_dataset(&records, &FresnelConvention::default(), 16e9).unwrap();
        let d = &imp.data;
        assert_eq!(d.layout.n_tx(), 36);
        assert_eq!(d.layout.n_rx(), 72);
        for p in 0..36 {
            assert_eq!(d.layout.active_count(p), 49);
        }
        assert_eq!(imp.frequencies, vec![8e9, 16e9]);
        assert!((d.layout.tx[0].norm() - 0.720).abs() < 1e-15);
        assert!((d.layout.rx[5].norm() - 0.760).abs() < 1e-15);
        // emitter 1 at 10 deg, first receiver at 70 deg absolute
        let q = d.layout.rx.iter().position(|r| (r.angle().to_degrees() - 70.0).abs() < 1e-9).unwrap();
        assert_eq!(d.y[(q, 1)], Complex64::new(100.0 - 1.5, -50.0 + 0.5));

        let half = d.layout.select_tx(&(0..36).step_by(2).collect::<Vec<_>>()).unwrap();
        assert_eq!(half.n_tx(), 18);
        assert_eq!(half.active_count(3), 49);
    }

    #[test]
    fn zero_rows_are_flagged() {
        let text = "0 60 16 0 0 0 0\n0 65 16 1 1 0.5 0.5\n";
        let (records, _) = read(text);
        let imp = records_to_dataset(&records, &FresnelConvention::default(), 16e9).unwrap();
        assert_eq!(imp.zero_samples, 1);
        assert_eq!(imp.data.valid_count(), 1);
        assert_eq!(imp.data.y[(0, 0)], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn missing_frequency_and_ragged_grid_are_rejected() {
        let (records, _) = read(&synthetic_file());
        let e = records_to_dataset(&records, &FresnelConvention::default(), 4e9).unwrap_err();
        assert!(matches!(e, Error::Data(ref m) if m.contains("not in file")), "{e}");

        let (records, _) = read("0 60 16 1 0 0 0\n0 65 16 1 0 0 0\n10 60 16 1 0 0 0\n");
        let e = records_to_dataset(&records, &FresnelConvention::default(), 16e9).unwrap_err();
        assert!(e.to_string().contains("inconsistent"), "{e}");
    }

    #[test]
    fn conjugate_convention_flips_phase() {
        let (records, _) = read("0 60 16 1 2 0 0\n");
        let conv = FresnelConvention { conjugate: true, ..FresnelConvention::default() };
        let imp = records_to_dataset(&records, &conv, 16e9).unwrap();
        assert_eq!(imp.data.y[(0, 0)], Complex64::new(1.0, -2.0));
    }

    #[test]
    fn short_numeric_row_is_an_error() {
        let e = read_fresnel_records("0 60 16 1\n".as_bytes(), &ColumnMap::default(), 1e9, Path::new("f")).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }));
    }
}
