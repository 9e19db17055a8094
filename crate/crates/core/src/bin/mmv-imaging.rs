use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use mmv_imaging::fields::Wavenumber;
use mmv_imaging::forward::{synth_dataset, Scene};
use mmv_imaging::geometry::{build_circular_layout, split_cv, ImagingGrid, PolarizationMode};
use mmv_imaging::imaging::{corr_coeff, reconstruct_mmv, IndicatorMap};
use mmv_imaging::io::{
    import_fresnel, load_dataset, load_map, save_dataset, save_map, save_pgm, ColumnMap, FresnelConvention,
    KeySpec, Settings,
};
use mmv_imaging::lsm::{auto_radius, improved_lsm_indicator, lsm_indicator};
use mmv_imaging::solver::SolverConfig;
use mmv_imaging::{Error, Result};

#[derive(Parser)]
#[command(name = "mmv-imaging", version, about = "Shape imaging of perfectly conducting cylinders from scattered fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Settings file with `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one setting, `key=value`; may repeat.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Print every setting with its effective value and exit.
    #[arg(long, global = true)]
    dump_config: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a scattered-field data set.
    Synth {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scene: Option<String>,
        #[arg(long)]
        snr: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        polarization: Option<String>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Group-sparse contrast-source inversion.
    InvertMmv {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: Option<PathBuf>,
        /// Stop by cross-validation (no noise level needed).
        #[arg(long, conflicts_with = "sigma")]
        cv: bool,
        /// Residual target, or `noise` for the recorded noise norm.
        #[arg(long)]
        sigma: Option<String>,
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        pgm: Option<PathBuf>,
    },
    /// Linear sampling indicator.
    InvertLsm {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[arg(long)]
        pgm: Option<PathBuf>,
    },
    /// Improved linear sampling indicator (TM only).
    InvertIlsm {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: Option<PathBuf>,
        /// Covering radius in m, or `auto`.
        #[arg(long)]
        radius: Option<String>,
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[arg(long)]
        pgm: Option<PathBuf>,
    },
    /// Correlation coefficient between two indicator maps.
    Metrics {
        #[command(flatten)]
        common: Common,
        #[arg(long = "ref")]
        reference: Option<PathBuf>,
        #[arg(long)]
        img: Option<PathBuf>,
    },
    /// Convert an Institut Fresnel measurement file into a data set.
    ImportFresnel {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        frequency: Option<f64>,
        #[arg(long)]
        polarization: Option<String>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

macro_rules! key {
    ($k:literal, $d:literal, $h:literal) => {
        KeySpec { key: $k, default: $d, help: $h }
    };
}

static SYNTH_KEYS: &[KeySpec] = &[
    key!("scene", "sim1", "sim1: two circles, sim2: crescent"),
    key!("polarization", "TM", "TM, TE or TE-tangential"),
    key!("frequency", "5e8", "Hz"),
    key!("snr", "none", "dB, or none for noiseless data"),
    key!("seed", "42", "noise seed"),
    key!("n_tx", "18", "transmitters, equally spaced"),
    key!("radius", "3.0", "orbit radius of transmitters and receivers (m)"),
    key!("rx_step_deg", "5.0", "receiver ring spacing (deg)"),
    key!("dead_zone_deg", "30.0", "receivers closer than this to the transmitter are unused (deg)"),
    key!("cv_fraction", "0.2", "share of receivers held out for cross-validation"),
    key!("cv_arc", "0.4", "minimum length of one contiguous CV arc (m)"),
    key!("out", "dataset.txt", "output data set"),
];

static GRID_DEFAULTS: [KeySpec; 5] = [
    key!("x_min", "-1.0", "grid bounds (m)"),
    key!("x_max", "1.0", "grid bounds (m)"),
    key!("y_min", "-0.4", "grid bounds (m)"),
    key!("y_max", "1.6", "grid bounds (m)"),
    key!("nx", "67", "cells along x; square cells"),
];

static MMV_KEYS: &[KeySpec] = &[
    key!("data", "dataset.txt", "input data set"),
    GRID_DEFAULTS[0],
    GRID_DEFAULTS[1],
    GRID_DEFAULTS[2],
    GRID_DEFAULTS[3],
    GRID_DEFAULTS[4],
    key!("cv", "true", "stop by cross-validation"),
    key!("sigma", "none", "residual target when cv = false: a number or `noise`"),
    key!("alpha_min", "1e-16", "smallest spectral step"),
    key!("alpha_max", "1e16", "largest spectral step"),
    key!("gamma", "1e-4", "sufficient descent parameter"),
    key!("history", "3", "nonmonotone memory"),
    key!("gap_tol", "1e-6", "final duality gap, relative to |Y|"),
    key!("root_tol", "1e-5", "Pareto root tolerance, relative to |Y|"),
    key!("patience", "30", "CV patience (iterations)"),
    key!("max_iter", "600", "total SPG iteration cap"),
    key!("out", "mmv.map", "indicator raster"),
    key!("trace", "none", "residual trace (tsv) or none"),
    key!("pgm", "none", "graymap image or none"),
    key!("db_min", "-30", "graymap range (dB)"),
    key!("db_max", "0", "graymap range (dB)"),
];

static LSM_KEYS: &[KeySpec] = &[
    key!("data", "dataset.txt", "input data set"),
    GRID_DEFAULTS[0],
    GRID_DEFAULTS[1],
    GRID_DEFAULTS[2],
    GRID_DEFAULTS[3],
    GRID_DEFAULTS[4],
    key!("out", "lsm.map", "indicator raster"),
    key!("pgm", "none", "graymap image or none"),
    key!("db_min", "-30", "graymap range (dB)"),
    key!("db_max", "0", "graymap range (dB)"),
];

static ILSM_KEYS: &[KeySpec] = &[
    key!("data", "dataset.txt", "input data set"),
    GRID_DEFAULTS[0],
    GRID_DEFAULTS[1],
    GRID_DEFAULTS[2],
    GRID_DEFAULTS[3],
    GRID_DEFAULTS[4],
    key!("radius", "auto", "covering radius about the origin (m), or auto from the plain indicator"),
    key!("auto_threshold_db", "-6", "level defining the support for radius = auto"),
    key!("out", "ilsm.map", "indicator raster"),
    key!("pgm", "none", "graymap image or none"),
    key!("db_min", "-30", "graymap range (dB)"),
    key!("db_max", "0", "graymap range (dB)"),
];

static METRICS_KEYS: &[KeySpec] =
    &[key!("ref", "ref.map", "reference indicator raster"), key!("img", "img.map", "compared indicator raster")];

static FRESNEL_KEYS: &[KeySpec] = &[
    key!("input", "fresnel.txt", "measurement file"),
    key!("out", "dataset.txt", "output data set"),
    key!("frequency", "16e9", "frequency slice to keep (Hz)"),
    key!("frequency_unit", "1e9", "factor converting the frequency column to Hz"),
    key!("polarization", "TM", "TM or TE-tangential"),
    key!("rx_relative", "true", "receiver angles are measured from the emitter"),
    key!("conjugate", "false", "conjugate fields written with exp(-i w t)"),
    key!("tx_radius", "0.720", "emitter orbit radius (m)"),
    key!("rx_radius", "0.760", "receiver orbit radius (m)"),
    key!("tx_stride", "2", "keep every n-th emitter"),
    key!("cv_fraction", "0.2", "share of receivers held out for cross-validation"),
    key!("cv_arc", "0.13", "minimum length of one contiguous CV arc (m)"),
    key!("col_tx", "0", "column of the emitter angle (deg)"),
    key!("col_rx", "1", "column of the receiver angle (deg)"),
    key!("col_freq", "2", "column of the frequency"),
    key!("col_total_re", "3", "column of Re total field"),
    key!("col_total_im", "4", "column of Im total field"),
    key!("col_inc_re", "5", "column of Re incident field"),
    key!("col_inc_im", "6", "column of Im incident field"),
];

/// Applies file, `--set` and dedicated flags in that order.
fn settings(specs: &'static [KeySpec], common: &Common, flags: &[(&str, Option<String>)]) -> Result<Settings> {
    let mut s = Settings::new(specs);
    if let Some(path) = &common.config {
        s.merge_file(path)?;
    }
    for o in &common.overrides {
        s.apply_override(o)?;
    }
    for (k, v) in flags {
        if let Some(v) = v {
            s.set(k, v)?;
        }
    }
    Ok(s)
}

fn path_of(p: &Option<PathBuf>) -> Option<String> {
    p.as_ref().map(|p| p.display().to_string())
}

fn opt_path(s: &Settings, key: &str) -> Option<PathBuf> {
    match s.raw(key) {
        "" | "none" => None,
        v => Some(PathBuf::from(v)),
    }
}

fn grid_from(s: &Settings) -> Result<ImagingGrid> {
    let (x0, x1, y0, y1): (f64, f64, f64, f64) = (s.get("x_min")?, s.get("x_max")?, s.get("y_min")?, s.get("y_max")?);
    let nx: usize = s.get("nx")?;
    if nx == 0 {
        return Err(Error::InvalidArgument("nx must be positive".into()));
    }
    ImagingGrid::new(x0, x1, y0, y1, (x1 - x0) / nx as f64)
}

fn write_outputs(map: &IndicatorMap, s: &Settings) -> Result<()> {
    save_map(map, Path::new(s.raw("out")))?;
    if let Some(pgm) = opt_path(s, "pgm") {
        save_pgm(map, s.get("db_min")?, s.get("db_max")?, &pgm)?;
    }
    Ok(())
}

fn summary(pairs: &[(&str, String)]) {
    for (k, v) in pairs {
        println!("{k} = {v}");
    }
}

fn run(cli: Cli) -> Result<()> {
    let start = Instant::now();
    match cli.command {
        Command::Synth { common, scene, snr, seed, polarization, out } => {
            let s = settings(
                SYNTH_KEYS,
                &common,
                &[
                    ("scene", scene),
                    ("snr", snr.map(|v| v.to_string())),
                    ("seed", seed.map(|v| v.to_string())),
                    ("polarization", polarization),
                    ("out", path_of(&out)),
                ],
            )?;
            if common.dump_config {
                print!("{}", s.dump());
                return Ok(());
            }
            let scene = match s.raw("scene") {
                "sim1" => Scene::two_circles(),
                "sim2" => Scene::crescent(),
                other => return Err(Error::InvalidArgument(format!("unknown scene `{other}`"))),
            };
            let pol: PolarizationMode = s.get::<String>("polarization")?.parse()?;
            let w = Wavenumber::from_frequency(s.get("frequency")?)?;
            let radius: f64 = s.get("radius")?;
            let layout = build_circular_layout(radius, radius, s.get("n_tx")?, s.get("rx_step_deg")?, s.get("dead_zone_deg")?)?;
            let layout = split_cv(&layout, s.get("cv_fraction")?, s.get("cv_arc")?)?;
            let data = synth_dataset(&scene, &layout, pol, &w, s.get_opt("snr")?, s.get("seed")?)?;
            save_dataset(&data, Path::new(s.raw("out")))?;
            summary(&[
                ("command", "synth".into()),
                ("runtime_s", format!("{:.3}", start.elapsed().as_secs_f64())),
                ("engine", data.engine.map_or("none", |e| e.as_str()).into()),
                ("p", data.layout.n_tx().to_string()),
                ("q", data.layout.n_rx().to_string()),
                ("valid_samples", data.valid_count().to_string()),
                ("noise_norm", data.noise.map_or("none".into(), |n| format!("{:.6e}", n.noise_norm))),
            ]);
        }
        Command::InvertMmv { common, data, cv, sigma, out, trace, pgm } => {
            let s = settings(
                MMV_KEYS,
                &common,
                &[
                    ("data", path_of(&data)),
                    ("cv", if cv { Some("true".into()) } else if sigma.is_some() { Some("false".into()) } else { None }),
                    ("sigma", sigma),
                    ("out", path_of(&out)),
                    ("trace", path_of(&trace)),
                    ("pgm", path_of(&pgm)),
                ],
            )?;
            if common.dump_config {
                print!("{}", s.dump());
                return Ok(());
            }
            let data = load_dataset(Path::new(s.raw("data")))?;
            let grid = grid_from(&s)?;
            let w = Wavenumber::from_frequency(data.frequency)?;
            let sigma = match (s.get_bool("cv")?, s.raw("sigma")) {
                (true, "none" | "") => None,
                (true, _) => return Err(Error::InvalidArgument("sigma cannot be combined with cv = true".into())),
                (false, "none" | "") => {
                    return Err(Error::InvalidArgument("cv = false needs sigma (a number or `noise`)".into()))
                }
                (false, "noise") => Some(
                    data.noise
                        .ok_or_else(|| Error::Data("data set carries no noise record for sigma = noise".into()))?
                        .noise_norm,
                ),
                (false, _) => Some(s.get::<f64>("sigma")?),
            };
            let cfg = SolverConfig {
                alpha_min: s.get("alpha_min")?,
                alpha_max: s.get("alpha_max")?,
                gamma: s.get("gamma")?,
                history: s.get("history")?,
                gap_tol: s.get("gap_tol")?,
                root_tol: s.get("root_tol")?,
                patience: s.get("patience")?,
                max_iter: s.get("max_iter")?,
                sigma,
                ..SolverConfig::default()
            };
            let (map, result) = reconstruct_mmv(&data, &grid, &w, &cfg)?;
            write_outputs(&map, &s)?;
            if let Some(path) = opt_path(&s, "trace") {
                let file = File::create(&path).map_err(|source| Error::Io { path: path.clone(), source })?;
                result
                    .trace
                    .write_tsv(BufWriter::new(file))
                    .map_err(|source| Error::Io { path, source })?;
            }
            summary(&[
                ("command", "invert-mmv".into()),
                ("runtime_s", format!("{:.3}", start.elapsed().as_secs_f64())),
                ("iterations", result.trace.len().to_string()),
                ("n_opt", result.trace.n_opt.map_or("none".into(), |n| n.to_string())),
                ("status", format!("{:?}", result.status)),
                ("q", data.y.nrows().to_string()),
                ("n", grid.len().to_string()),
                ("p", data.y.ncols().to_string()),
                ("tau", format!("{:.6e}", result.tau)),
                ("r_rec", format!("{:.6e}", result.residual_norm())),
            ]);
        }
        Command::InvertLsm { common, data, out, pgm } => {
            let s = settings(LSM_KEYS, &common, &[("data", path_of(&data)), ("out", path_of(&out)), ("pgm", path_of(&pgm))])?;
            if common.dump_config {
                print!("{}", s.dump());
                return Ok(());
            }
            let data = load_dataset(Path::new(s.raw("data")))?;
            let grid = grid_from(&s)?;
            let map = lsm_indicator(&data, &grid, &Wavenumber::from_frequency(data.frequency)?)?;
            write_outputs(&map, &s)?;
            summary(&[
                ("command", "invert-lsm".into()),
                ("runtime_s", format!("{:.3}", start.elapsed().as_secs_f64())),
                ("q", data.y.nrows().to_string()),
                ("n", grid.len().to_string()),
                ("p", data.y.ncols().to_string()),
                ("zero_filled", map.flags.zero_filled.to_string()),
            ]);
        }
        Command::InvertIlsm { common, data, radius, out, pgm } => {
            let s = settings(
                ILSM_KEYS,
                &common,
                &[("data", path_of(&data)), ("radius", radius), ("out", path_of(&out)), ("pgm", path_of(&pgm))],
            )?;
            if common.dump_config {
                print!("{}", s.dump());
                return Ok(());
            }
            let data = load_dataset(Path::new(s.raw("data")))?;
            let grid = grid_from(&s)?;
            let w = Wavenumber::from_frequency(data.frequency)?;
            let radius = match s.raw("radius") {
                "auto" => auto_radius(&lsm_indicator(&data, &grid, &w)?, s.get("auto_threshold_db")?)?,
                _ => s.get("radius")?,
            };
            let map = improved_lsm_indicator(&data, &grid, &w, radius)?;
            write_outputs(&map, &s)?;
            summary(&[
                ("command", "invert-ilsm".into()),
                ("runtime_s", format!("{:.3}", start.elapsed().as_secs_f64())),
                ("radius", format!("{radius:.6e}")),
                ("order", mmv_imaging::lsm::ilsm_order(&w, radius)?.to_string()),
                ("q", data.y.nrows().to_string()),
                ("n", grid.len().to_string()),
                ("p", data.y.ncols().to_string()),
                ("saturated", map.flags.saturated.to_string()),
            ]);
        }
        Command::Metrics { common, reference, img } => {
            let s = settings(METRICS_KEYS, &common, &[("ref", path_of(&reference)), ("img", path_of(&img))])?;
            if common.dump_config {
                print!("{}", s.dump());
                return Ok(());
            }
            let a = load_map(Path::new(s.raw("ref")))?;
            let b = load_map(Path::new(s.raw("img")))?;
            if a.grid != b.grid {
                return Err(Error::Data("maps are on different grids".into()));
            }
            println!("{}", corr_coeff(&a.linear_values(), &b.linear_values())?);
        }
        Command::ImportFresnel { common, input, frequency, polarization, out } => {
            let s = settings(
                FRESNEL_KEYS,
                &common,
                &[
                    ("input", path_of(&input)),
                    ("frequency", frequency.map(|f| f.to_string())),
                    ("polarization", polarization),
                    ("out", path_of(&out)),
                ],
            )?;
            if common.dump_config {
                print!("{}", s.dump());
                return Ok(());
            }
            let columns = ColumnMap {
                tx_angle: s.get("col_tx")?,
                rx_angle: s.get("col_rx")?,
                frequency: s.get("col_freq")?,
                total_re: s.get("col_total_re")?,
                total_im: s.get("col_total_im")?,
                incident_re: s.get("col_inc_re")?,
                incident_im: s.get("col_inc_im")?,
            };
            let convention = FresnelConvention {
                frequency_unit: s.get("frequency_unit")?,
                rx_relative: s.get_bool("rx_relative")?,
                conjugate: s.get_bool("conjugate")?,
                tx_radius: s.get("tx_radius")?,
                rx_radius: s.get("rx_radius")?,
                polarization: s.get::<String>("polarization")?.parse()?,
            };
            let imported = import_fresnel(Path::new(s.raw("input")), &columns, &convention, s.get("frequency")?)?;
            let mut data = imported.data;
            let stride: usize = s.get("tx_stride")?;
            if stride == 0 {
                return Err(Error::InvalidArgument("tx_stride must be positive".into()));
            }
            if stride > 1 {
                let keep: Vec<usize> = (0..data.layout.n_tx()).step_by(stride).collect();
                let cols: Vec<_> = keep.iter().map(|&p| data.y.column(p).into_owned()).collect();
                let rows = data.y.nrows();
                let mask: Vec<bool> = keep.iter().flat_map(|&p| data.mask[p * rows..(p + 1) * rows].to_vec()).collect();
                data.layout = data.layout.select_tx(&keep)?;
                data.y = mmv_imaging::CMatrix::from_columns(&cols);
                data.mask = mask;
            }
            data.layout = split_cv(&data.layout, s.get("cv_fraction")?, s.get("cv_arc")?)?;
            save_dataset(&data, Path::new(s.raw("out")))?;
            summary(&[
                ("command", "import-fresnel".into()),
                ("runtime_s", format!("{:.3}", start.elapsed().as_secs_f64())),
                ("p", data.layout.n_tx().to_string()),
                ("q", data.layout.n_rx().to_string()),
                ("active_per_tx", data.layout.active_count(0).to_string()),
                ("zero_samples", imported.zero_samples.to_string()),
                ("skipped_lines", imported.skipped_lines.to_string()),
            ]);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
