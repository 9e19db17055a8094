//! Special functions, free-space 2-D dipole fields and the sensing matrix.

pub mod bessel;
mod dipole;
mod sensing;

pub use bessel::{bessel_jy, hankel1, hankel1_all, hankel1_neg, hankel1_neg_all, hankel2_all};
pub use dipole::{dipole_field_te, dipole_field_tm, Wavenumber, EPS0, MU0};
pub use sensing::{build_sensing_matrix, build_sensing_matrix_with_guard, tangential_direction, SensingMatrix};
