//! Synthetic scattering data: analytic series for PEC circles, a
//! method-of-moments solver for arbitrary TM contours, and noise injection.

mod mom;
mod scene;
mod series;
mod synth;

pub use mom::{scatter_mom_tm, MomSolver};
pub use scene::{PecTarget, Scene, MIN_CONTOUR_SEGMENTS};
pub use series::{
    incident_te, incident_tm, minimum_order, scatter_circle_te, scatter_circle_tm, CircleScatterer,
    CylinderPolarization, ScatteredWave,
};
pub use synth::{synth_dataset, ForwardEngine, MeasurementSet, NoiseRecord};
