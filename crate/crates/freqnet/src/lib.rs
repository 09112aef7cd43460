//! Gaussian simulation of frequency-bin networks built from a broadband
//! squeezed-light source and a programmable frequency converter.
//!
//! The pipeline runs in five stages: sample spectral kernels on a
//! [`grid::FrequencyGrid`], factor them into modes ([`bogoliubov`]), turn
//! them into Bogoliubov transforms, compose source and converter into
//! output-mode amplitudes ([`network`]), and read out covariance-matrix
//! statistics. [`experiments`] packages the standard studies end to end.
//!
//! ```
//! use freqnet::experiments::{run_beamsplitter_demo, DemoConfig};
//!
//! let demo = run_beamsplitter_demo(&DemoConfig {
//!     grid_n: 220,
//!     mean_photons: 0.5,
//!     ..DemoConfig::default()
//! })?;
//! assert!(demo.metrics.purity_out <= 1.0 + 1e-6);
//! assert!(demo.metrics.squeezing_out_db > 0.0);
//! # Ok::<(), freqnet::Error>(())
//! ```

pub mod bogoliubov;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod network;
pub mod processes;
pub mod spectral;

pub use error::{Error, Result};
pub use grid::{make_grid, FrequencyGrid};
