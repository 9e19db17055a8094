//! Microwave imaging of highly conductive 2-D scatterers.
//!
//! Single-frequency scattered-field data from a circular transceiver array is
//! inverted with a linear multiple-measurement-vector model: the contrast
//! sources of all transmitters share the boundary support of the scatterers,
//! which is recovered by a group-sparse basis pursuit denoise solver (spectral
//! projected gradient + Newton root finding on the Pareto curve, with an
//! optional cross-validation stopping rule). Linear sampling and improved
//! linear sampling indicators are provided as baselines.
//!
//! Module map:
//! - [`geometry`]: imaging grids, circular layouts, cross-validation splits.
//! - [`fields`]: Bessel/Hankel functions, free-space dipole fields, sensing matrix.
//! - [`forward`]: synthetic data from exact circle series and a TM method of moments.
//! - [`solver`]: mixed-norm projection, SPG, Pareto Newton, CV-terminated solve.
//! - [`lsm`]: linear sampling baselines.
//! - [`imaging`]: indicator maps and comparison metrics.
//! - [`io`]: dataset format, Fresnel importer, raster and trace export.

pub mod error;
pub mod fields;
pub mod forward;
pub mod geometry;
pub mod imaging;
pub mod io;
pub mod lsm;
pub mod solver;

pub use error::{Error, Result};

/// Dense complex matrix used throughout the crate.
pub type CMatrix = nalgebra::DMatrix<num_complex::Complex64>;
pub use num_complex::Complex64;
