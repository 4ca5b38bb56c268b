//! Stochastic simulator and analysis toolkit for a pulsed, resonantly driven
//! solid-state single-photon emitter with slow spectral diffusion.
//!
//! * [`emitter`]: source parameters, frequency noise, photon streams.
//! * [`instruments`]: HOM, HBT and Mach-Zehnder virtual instruments.
//! * [`spectra`]: lineshapes, Fabry-Pérot response, coherence extraction.
//! * [`fitting`]: simplex minimizer and model fits.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod emitter;
mod error;
pub mod fitting;
pub mod histogram;
pub mod instruments;
pub mod numeric;
pub mod parallel;
pub mod spectra;

pub use emitter::EmitterParams;
pub use error::{Error, Result};
pub use histogram::CoincidenceHistogram;
