//! Lineshapes, the scanning Fabry-Pérot instrument and coherence extraction.

mod coherence;
mod fabry_perot;
mod profiles;
mod spectrum;

pub use coherence::{
    coherence_delays, coherence_magnitude, coherence_time_from_spectrum, deconvolved_coherence, fit_coherence_decay,
    instrument_coherence, intrinsic_coherence_time, COHERENCE_TAU_MAX, COHERENCE_TAU_STEP, DECONVOLUTION_GUARD,
};
pub use fabry_perot::{airy_transmission, fp_instrument_profile, scan_spectrum, FabryPerotSpec};
pub use profiles::{gaussian, lorentzian, voigt, voigt_fwhm_estimate, VoigtKernel, GAUSS_FWHM_PER_SIGMA};
pub(crate) use spectrum::half_max_width;
pub use spectrum::{
    convolve, emitter_line_widths, emitter_spectrum, emitter_spectrum_on, l2_distance, uniform_grid, Grid, Spectrum,
    DEFAULT_HALF_SPAN, DEFAULT_STEP, MIN_SPAN_PER_FWHM,
};
