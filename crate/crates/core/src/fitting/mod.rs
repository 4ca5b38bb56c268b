//! Simplex minimizer and the model fits used across the toolkit.

mod data;
mod minimize;
mod models;

pub use data::{Dataset1D, FitResult};
pub use minimize::{minimize, Bound, Minimum, DIAMETER_TOL, MAX_ITERATIONS};
pub use models::{fit_exponential, fit_lorentzian, fit_rabi, fit_visibility_decay, fit_voigt};
