//! Spectral-statistics laboratory for non-Hermitian random band matrices.
//!
//! The crate samples block band, periodic band, general doubly stochastic and
//! product-linearized ensembles, hermitizes them, and measures how close their
//! spectra are to the circular law and to the free Dyson-equation limit of the
//! hermitized resolvent.
//!
//! Pipeline, as used by [`lab::run_experiment`]:
//!
//! ```text
//! EnsembleSpec --sample_matrix--> X --shift--> X - zI --dilate--> Y_z
//!                                  |                  |             |
//!                             eigenvalues      singular_values   stieltjes
//!                                  \__________________|_____________/
//!                                                  metrics
//! ```

pub mod dyson;
pub mod ensembles;
mod error;
pub mod formats;
pub mod hermitization;
pub mod lab;
pub mod metrics;
pub mod spectra;

pub use error::{LabError, Result};

/// Complex scalar used throughout the crate.
pub type C64 = num_complex::Complex<f64>;

/// Dense, column-major complex matrix.
pub type CMat = faer::Mat<C64>;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
