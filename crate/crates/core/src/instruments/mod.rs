//! Virtual measurement apparatus.

mod correlation;
mod hbt;
mod hom;
mod overlap;

pub use correlation::{peak_areas, side_peak_ratio, PeakAreas, COINCIDENCE_BIN};
pub use hbt::{g2_zero, hbt_histogram, hbt_histogram_template, HBT_SIDE_PEAKS, HBT_WINDOW_FRACTION, MIN_SIDE_PEAKS};
pub use hom::{
    correct_multiphoton, extract_visibility, hom_histogram_template, hom_monte_carlo, HomConfig, HomOutcome,
    Polarization, HOM_SIDE_PEAKS, HOM_WINDOW,
};
pub use overlap::{
    jitter_overlap_factor, mz_fringe_contrast, pair_visibility, visibility_plateau, visibility_vs_separation,
    VISIBILITY_NODES,
};
