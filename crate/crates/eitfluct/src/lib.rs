//! Quadrature-noise and correlation spectra of a pump and a probe field
//! propagating through a Λ-type medium under electromagnetically induced
//! transparency.
//!
//! * [`medium`]: parameters, input-noise descriptions and the parameter file.
//! * [`closed_form`]: analytic spectra, length scales and limiting forms.
//! * [`langevin`]: the linearised Heisenberg–Langevin propagator, valid at
//!   all frequencies and detunings; the oracle for the closed forms.
//! * [`doppler`]: Gaussian velocity-class averaging.
//! * [`cli`]: the batch front-end behind the `eitfluct` binary.

pub mod cli;
pub mod closed_form;
pub mod doppler;
pub mod error;
pub mod langevin;
pub mod medium;

pub use error::{Error, Result};
pub use medium::{Field, FieldConfig, InputNoise, MediumParams};
