//! Versioned text format for measurement sets.
//!
//! ```text
//! # mmvlim-dataset v1
//! frequency = 5.0000000000000000e8
//! polarization = TM
//! n_tx = 18
//! n_rx = 72
//! engine = circle-series          (optional)
//! noise_snr_db = 3.0000000000000000e1   (optional, together with the two below)
//! noise_seed = 42
//! noise_norm = 4.7900000000000000e1
//! tx <p> <x> <y>
//! rx <q> <x> <y> <rec|cv>
//! active <p> <Q characters of 0/1>
//! data
//! <tx> <rx> <component> <re> <im> <mask>
//! ```
//!
//! Floats are written with 17 significant digits so that a save/load cycle is
//! bit-exact. Blank lines and lines starting with `#` after the version line
//! are ignored. Body rows that are absent stay zero and masked.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::forward::{ForwardEngine, MeasurementSet, NoiseRecord};
use crate::geometry::{Point2, PolarizationMode, RxRole, TransceiverLayout};

pub const DATASET_MAGIC: &str = "# mmvlim-dataset v1";

pub fn save_dataset(data: &MeasurementSet, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|source| Error::Io { path: path.into(), source })?;
    let mut out = BufWriter::new(file);
    write_dataset(data, &mut out)
        .and_then(|_| out.flush())
        .map_err(|source| Error::Io { path: path.into(), source })
}

pub fn load_dataset(path: &Path) -> Result<MeasurementSet> {
    let file = File::open(path).map_err(|source| Error::Io { path: path.into(), source })?;
    read_dataset(BufReader::new(file), path)
}

pub fn write_dataset<W: Write>(data: &MeasurementSet, out: &mut W) -> std::io::Result<()> {
    let layout = &data.layout;
    writeln!(out, "{DATASET_MAGIC}")?;
    writeln!(out, "frequency = {:.16e}", data.frequency)?;
    writeln!(out, "polarization = {}", data.polarization)?;
    writeln!(out, "n_tx = {}", layout.n_tx())?;
    writeln!(out, "n_rx = {}", layout.n_rx())?;
    if let Some(engine) = data.engine {
        writeln!(out, "engine = {}", engine.as_str())?;
    }
    if let Some(noise) = data.noise {
        writeln!(out, "noise_snr_db = {:.16e}", noise.snr_db)?;
        writeln!(out, "noise_seed = {}", noise.seed)?;
        writeln!(out, "noise_norm = {:.16e}", noise.noise_norm)?;
    }
    for (p, t) in layout.tx.iter().enumerate() {
        writeln!(out, "tx {p} {:.16e} {:.16e}", t.x, t.y)?;
    }
    for (q, r) in layout.rx.iter().enumerate() {
        writeln!(out, "rx {q} {:.16e} {:.16e} {}", r.x, r.y, layout.rx_role[q].as_str())?;
    }
    let n_rx = layout.n_rx();
    for p in 0..layout.n_tx() {
        let bits: String = (0..n_rx).map(|q| if layout.is_active(q, p) { '1' } else { '0' }).collect();
        writeln!(out, "active {p} {bits}")?;
    }
    writeln!(out, "data")?;
    let ch = data.polarization.channels_per_receiver();
    for p in 0..data.y.ncols() {
        for row in 0..data.y.nrows() {
            let v = data.y[(row, p)];
            let m = u8::from(data.is_valid(row, p));
            writeln!(out, "{p} {} {} {:.16e} {:.16e} {m}", row / ch, row % ch, v.re, v.im)?;
        }
    }
    Ok(())
}

struct LineError<'a> {
    path: &'a Path,
}

impl LineError<'_> {
    fn at(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Parse { path: self.path.into(), line, message: message.into() }
    }
}

fn parse_num<T: std::str::FromStr>(tok: &str, what: &str, line: usize, err: &LineError) -> Result<T> {
    tok.parse().map_err(|_| err.at(line, format!("cannot parse {what} from `{tok}`")))
}

/// Parses a data set. `path` only labels error messages.
pub fn read_dataset<R: BufRead>(reader: R, path: &Path) -> Result<MeasurementSet> {
    let err = LineError { path };
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));

    let (first_no, first) = match lines.next() {
        Some((n, l)) => (n, l.map_err(|source| Error::Io { path: path.into(), source })?),
        None => return Err(err.at(1, "empty file, expected version line")),
    };
    if first.trim_end() != DATASET_MAGIC {
        return Err(err.at(first_no, format!("unsupported version line `{}`, expected `{DATASET_MAGIC}`", first.trim_end())));
    }

    let mut header: HashMap<String, (usize, String)> = HashMap::new();
    let mut tx: Vec<Option<Point2>> = Vec::new();
    let mut rx: Vec<Option<(Point2, RxRole)>> = Vec::new();
    let mut active: Vec<Option<Vec<bool>>> = Vec::new();
    let mut dims: Option<(usize, usize)> = None;
    let mut last_line = first_no;
    let mut in_body = false;
    let mut data: Option<MeasurementSet> = None;
    let mut seen: HashSet<(usize, usize, usize)> = HashSet::new();

    for (no, line) in lines {
        let line = line.map_err(|source| Error::Io { path: path.into(), source })?;
        last_line = no;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        if in_body {
            let set = data.as_mut().expect("body starts after the header is complete");
            let tok: Vec<&str> = text.split_whitespace().collect();
            if tok.len() != 6 {
                return Err(err.at(no, format!("data row needs 6 fields, found {}", tok.len())));
            }
            let p: usize = parse_num(tok[0], "transmitter index", no, &err)?;
            let q: usize = parse_num(tok[1], "receiver index", no, &err)?;
            let c: usize = parse_num(tok[2], "component index", no, &err)?;
            let re: f64 = parse_num(tok[3], "real part", no, &err)?;
            let im: f64 = parse_num(tok[4], "imaginary part", no, &err)?;
            let valid = match tok[5] {
                "1" => true,
                "0" => false,
                other => return Err(err.at(no, format!("mask flag must be 0 or 1, found `{other}`"))),
            };
            let ch = set.polarization.channels_per_receiver();
            if p >= set.y.ncols() || q >= set.layout.n_rx() || c >= ch {
                return Err(err.at(no, format!("index ({p}, {q}, {c}) out of range")));
            }
            if !re.is_finite() || !im.is_finite() {
                return Err(err.at(no, "non-finite field value"));
            }
            if !seen.insert((p, q, c)) {
                return Err(err.at(no, format!("duplicate row for ({p}, {q}, {c})")));
            }
            if valid && !set.layout.is_active(q, p) {
                return Err(err.at(no, format!("valid sample on inactive receiver {q} of transmitter {p}")));
            }
            set.set(q * ch + c, p, Complex64::new(re, im), valid);
            continue;
        }

        if text == "data" {
            data = Some(assemble(&header, &tx, &rx, &active, no, &err)?);
            in_body = true;
            continue;
        }
        let tok: Vec<&str> = text.split_whitespace().collect();
        match tok[0] {
            "tx" | "rx" | "active" => {
                let (n_tx, n_rx) = match dims {
                    Some(d) => d,
                    None => {
                        let d = (
                            header_usize(&header, "n_tx", no, &err)?,
                            header_usize(&header, "n_rx", no, &err)?,
                        );
                        tx = vec![None; d.0];
                        rx = vec![None; d.1];
                        active = vec![None; d.0];
                        dims = Some(d);
                        d
                    }
                };
                let idx: usize = match tok.get(1) {
                    Some(t) => parse_num(t, "index", no, &err)?,
                    None => return Err(err.at(no, format!("`{}` line without index", tok[0]))),
                };
                match tok[0] {
                    "tx" => {
                        if tok.len() != 4 {
                            return Err(err.at(no, "tx line needs `tx <p> <x> <y>`"));
                        }
                        let slot = tx.get_mut(idx).ok_or_else(|| err.at(no, format!("transmitter {idx} >= n_tx {n_tx}")))?;
                        if slot.is_some() {
                            return Err(err.at(no, format!("duplicate transmitter {idx}")));
                        }
                        *slot = Some(Point2::new(parse_num(tok[2], "x", no, &err)?, parse_num(tok[3], "y", no, &err)?));
                    }
                    "rx" => {
                        if tok.len() != 5 {
                            return Err(err.at(no, "rx line needs `rx <q> <x> <y> <role>`"));
                        }
                        let slot = rx.get_mut(idx).ok_or_else(|| err.at(no, format!("receiver {idx} >= n_rx {n_rx}")))?;
                        if slot.is_some() {
                            return Err(err.at(no, format!("duplicate receiver {idx}")));
                        }
                        let role: RxRole = tok[4].parse().map_err(|e: Error| err.at(no, e.to_string()))?;
                        let p = Point2::new(parse_num(tok[2], "x", no, &err)?, parse_num(tok[3], "y", no, &err)?);
                        *slot = Some((p, role));
                    }
                    _ => {
                        if tok.len() != 3 || tok[2].len() != n_rx {
                            return Err(err.at(no, format!("active line needs {n_rx} flags")));
                        }
                        let slot = active.get_mut(idx).ok_or_else(|| err.at(no, format!("transmitter {idx} >= n_tx {n_tx}")))?;
                        if slot.is_some() {
                            return Err(err.at(no, format!("duplicate activity line for transmitter {idx}")));
                        }
                        let mut flags = Vec::with_capacity(n_rx);
                        for ch in tok[2].chars() {
                            flags.push(match ch {
                                '1' => true,
                                '0' => false,
                                other => return Err(err.at(no, format!("activity flag `{other}` is not 0/1"))),
                            });
                        }
                        *slot = Some(flags);
                    }
                }
            }
            _ => {
                let (key, value) = text
                    .split_once('=')
                    .ok_or_else(|| err.at(no, format!("expected `key = value`, found `{text}`")))?;
                let key = key.trim();
                if !HEADER_KEYS.contains(&key) {
                    return Err(err.at(no, format!("unknown header key `{key}`")));
                }
                if dims.is_some() && (key == "n_tx" || key == "n_rx") {
                    return Err(err.at(no, format!("`{key}` must precede the layout lines")));
                }
                if let Some((prev, _)) = header.insert(key.to_string(), (no, value.trim().to_string())) {
                    return Err(err.at(no, format!("duplicate key `{key}` (first on line {prev})")));
                }
            }
        }
    }
    data.ok_or_else(|| err.at(last_line + 1, "missing `data` section"))
}

const HEADER_KEYS: [&str; 8] =
    ["frequency", "polarization", "n_tx", "n_rx", "engine", "noise_snr_db", "noise_seed", "noise_norm"];

fn header_value<'h>(header: &'h HashMap<String, (usize, String)>, key: &str, line: usize, err: &LineError) -> Result<(usize, &'h str)> {
    header
        .get(key)
        .map(|(n, v)| (*n, v.as_str()))
        .ok_or_else(|| err.at(line, format!("missing header key `{key}`")))
}

fn header_usize(header: &HashMap<String, (usize, String)>, key: &str, line: usize, err: &LineError) -> Result<usize> {
    let (n, v) = header_value(header, key, line, err)?;
    parse_num(v, key, n, err)
}

fn assemble(
    header: &HashMap<String, (usize, String)>,
    tx: &[Option<Point2>],
    rx: &[Option<(Point2, RxRole)>],
    active: &[Option<Vec<bool>>],
    line: usize,
    err: &LineError,
) -> Result<MeasurementSet> {
    let (fl, fv) = header_value(header, "frequency", line, err)?;
    let frequency: f64 = parse_num(fv, "frequency", fl, err)?;
    if !(frequency > 0.0 && frequency.is_finite()) {
        return Err(err.at(fl, "frequency must be positive"));
    }
    let (pl, pv) = header_value(header, "polarization", line, err)?;
    let polarization: PolarizationMode = pv.parse().map_err(|e: Error| err.at(pl, e.to_string()))?;
    let n_tx = header_usize(header, "n_tx", line, err)?;
    let n_rx = header_usize(header, "n_rx", line, err)?;
    if tx.len() != n_tx || rx.len() != n_rx {
        return Err(err.at(line, "layout lines missing before `data`"));
    }
    let tx: Vec<Point2> = tx
        .iter()
        .enumerate()
        .map(|(p, t)| t.ok_or_else(|| err.at(line, format!("transmitter {p} not declared"))))
        .collect::<Result<_>>()?;
    let rx: Vec<(Point2, RxRole)> = rx
        .iter()
        .enumerate()
        .map(|(q, r)| r.ok_or_else(|| err.at(line, format!("receiver {q} not declared"))))
        .collect::<Result<_>>()?;
    let mut flags = Vec::with_capacity(n_tx * n_rx);
    for (p, a) in active.iter().enumerate() {
        flags.extend(a.as_ref().ok_or_else(|| err.at(line, format!("activity of transmitter {p} not declared")))?);
    }
    let mut layout = TransceiverLayout::new(tx, rx.iter().map(|r| r.0).collect(), flags)
        .map_err(|e| err.at(line, e.to_string()))?;
    layout.rx_role = rx.iter().map(|r| r.1).collect();

    let mut set = MeasurementSet::zeros(layout, polarization, frequency);
    if let Some((n, v)) = header.get("engine") {
        set.engine = Some(v.parse::<ForwardEngine>().map_err(|e| err.at(*n, e.to_string()))?);
    }
    let noise_keys = ["noise_snr_db", "noise_seed", "noise_norm"];
    let present = noise_keys.iter().filter(|k| header.contains_key(**k)).count();
    if present == noise_keys.len() {
        let (sl, sv) = header_value(header, "noise_snr_db", line, err)?;
        let (dl, dv) = header_value(header, "noise_seed", line, err)?;
        let (nl, nv) = header_value(header, "noise_norm", line, err)?;
        set.noise = Some(NoiseRecord {
            snr_db: parse_num(sv, "noise_snr_db", sl, err)?,
            seed: parse_num(dv, "noise_seed", dl, err)?,
            noise_norm: parse_num(nv, "noise_norm", nl, err)?,
        });
    } else if present > 0 {
        return Err(err.at(line, "noise record needs noise_snr_db, noise_seed and noise_norm together"));
    }
    Ok(set)
}
