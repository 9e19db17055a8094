//! Indicator map export.
//!
//! Text raster: a single header line followed by `ny` rows of `nx`
//! tab-separated values, first row at `y_min`:
//!
//! ```text
//! # mmvlim-map v1 nx=67 ny=67 x_min=-1e0 x_max=1e0 y_min=-4e-1 y_max=1.6e0 dx=2.98e-2 kind=mmv scale=linear
//! ```
//!
//! `scale` is `linear` or `db:<floor>`. The portable graymap is plain (P2)
//! with the top image row at `y_max`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::ImagingGrid;
use crate::imaging::{db_scale, IndicatorKind, IndicatorMap, Scale};

pub const MAP_MAGIC: &str = "# mmvlim-map v1";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.into(), source }
}

pub fn write_map<W: Write>(map: &IndicatorMap, out: &mut W) -> std::io::Result<()> {
    let g = &map.grid;
    let scale = match map.scale {
        Scale::Linear => "linear".to_string(),
        Scale::Decibel { floor } => format!("db:{floor:.16e}"),
    };
    writeln!(
        out,
        "{MAP_MAGIC} nx={} ny={} x_min={:.16e} x_max={:.16e} y_min={:.16e} y_max={:.16e} dx={:.16e} kind={} scale={scale}",
        g.nx, g.ny, g.x_min, g.x_max, g.y_min, g.y_max, g.dx, map.kind
    )?;
    for row in 0..g.ny {
        let line: Vec<String> = (0..g.nx).map(|c| format!("{:.16e}", map.values[g.index(row, c)])).collect();
        writeln!(out, "{}", line.join("\t"))?;
    }
    Ok(())
}

pub fn save_map(map: &IndicatorMap, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    write_map(map, &mut out).and_then(|_| out.flush()).map_err(io_err(path))
}

pub fn load_map(path: &Path) -> Result<IndicatorMap> {
    let file = File::open(path).map_err(io_err(path))?;
    read_map(BufReader::new(file), path)
}

pub fn read_map<R: BufRead>(reader: R, path: &Path) -> Result<IndicatorMap> {
    let perr = |line: usize, message: String| Error::Parse { path: path.into(), line, message };
    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(l) => l.map_err(io_err(path))?,
        None => return Err(perr(1, "empty file".into())),
    };
    let rest = header
        .strip_prefix(MAP_MAGIC)
        .ok_or_else(|| perr(1, format!("expected `{MAP_MAGIC}` header")))?;
    let mut fields = std::collections::HashMap::new();
    for tok in rest.split_whitespace() {
        let (k, v) = tok.split_once('=').ok_or_else(|| perr(1, format!("malformed header field `{tok}`")))?;
        if fields.insert(k, v).is_some() {
            return Err(perr(1, format!("duplicate header field `{k}`")));
        }
    }
    let get = |k: &str| fields.get(k).copied().ok_or_else(|| perr(1, format!("missing header field `{k}`")));
    let num = |k: &str| -> Result<f64> { get(k)?.parse().map_err(|_| perr(1, format!("bad number for `{k}`"))) };
    let count = |k: &str| -> Result<usize> { get(k)?.parse().map_err(|_| perr(1, format!("bad count for `{k}`"))) };
    let (nx, ny) = (count("nx")?, count("ny")?);
    let grid = ImagingGrid::new(num("x_min")?, num("x_max")?, num("y_min")?, num("y_max")?, num("dx")?)
        .map_err(|e| perr(1, e.to_string()))?;
    if grid.nx != nx || grid.ny != ny {
        return Err(perr(1, format!("bounds imply {}x{} cells, header says {nx}x{ny}", grid.nx, grid.ny)));
    }
    let kind: IndicatorKind = get("kind")?.parse().map_err(|e: Error| perr(1, e.to_string()))?;
    let scale = match get("scale")? {
        "linear" => Scale::Linear,
        s => match s.strip_prefix("db:").and_then(|f| f.parse::<f64>().ok()) {
            Some(floor) => Scale::Decibel { floor },
            None => return Err(perr(1, format!("unknown scale `{s}`"))),
        },
    };

    let mut values = Vec::with_capacity(nx * ny);
    for row in 0..ny {
        let line_no = row + 2;
        let line = match lines.next() {
            Some(l) => l.map_err(io_err(path))?,
            None => return Err(perr(line_no, format!("missing raster row {row}"))),
        };
        let before = values.len();
        for tok in line.split('\t') {
            values.push(tok.trim().parse::<f64>().map_err(|_| perr(line_no, format!("bad value `{tok}`")))?);
        }
        if values.len() - before != nx {
            return Err(perr(line_no, format!("row has {} values, expected {nx}", values.len() - before)));
        }
    }
    let mut map = match scale {
        Scale::Linear => IndicatorMap::new(values, grid, kind).map_err(|e| perr(2, e.to_string()))?,
        Scale::Decibel { .. } => {
            if values.iter().any(|v| !v.is_finite() || *v > 0.0) {
                return Err(perr(2, "dB values must be finite and at most 0".into()));
            }
            let mut m = IndicatorMap::new(vec![0.0; values.len()], grid, kind).map_err(|e| perr(2, e.to_string()))?;
            m.values = values;
            m
        }
    };
    map.scale = scale;
    Ok(map)
}

/// Plain graymap of the dB image clipped to `[db_min, db_max]`, 255 levels.
pub fn write_pgm<W: Write>(map: &IndicatorMap, db_min: f64, db_max: f64, out: &mut W) -> Result<()> {
    if !(db_max > db_min) {
        return Err(Error::invalid(format!("empty dB range [{db_min}, {db_max}]")));
    }
    let db = match map.scale {
        Scale::Decibel { .. } => map.clone(),
        Scale::Linear => db_scale(map)?,
    };
    let g = &map.grid;
    let io = |e: std::io::Error| Error::Io { path: "<pgm>".into(), source: e };
    writeln!(out, "P2\n# {} dB range [{db_min}, {db_max}]\n{} {}\n255", map.kind, g.nx, g.ny).map_err(io)?;
    for row in (0..g.ny).rev() {
        let line: Vec<String> = (0..g.nx)
            .map(|c| {
                let v = db.values[g.index(row, c)].clamp(db_min, db_max);
                (((v - db_min) / (db_max - db_min)) * 255.0).round().to_string()
            })
            .collect();
        writeln!(out, "{}", line.join(" ")).map_err(io)?;
    }
    Ok(())
}

pub fn save_pgm(map: &IndicatorMap, db_min: f64, db_max: f64, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    write_pgm(map, db_min, db_max, &mut out).map_err(|e| match e {
        Error::Io { source, .. } => Error::Io { path: path.into(), source },
        other => other,
    })?;
    out.flush().map_err(io_err(path))
}
