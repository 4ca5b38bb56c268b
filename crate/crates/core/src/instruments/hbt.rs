//! Hanbury Brown-Twiss intensity correlation behind a 50:50 beam splitter.

use super::correlation::{correlate_into, side_peak_ratio, sort_times, COINCIDENCE_BIN};
use crate::emitter::{EmitterParams, PhotonChunks};
use crate::error::Result;
use crate::histogram::CoincidenceHistogram;
use crate::numeric::{chunk_rng, Domain};
use crate::parallel::map_indexed;
use rand::Rng;
use rand_distr::Exp1;

/// Side peaks kept on each side of zero delay.
pub const HBT_SIDE_PEAKS: u32 = 6;

/// Side peaks required by [`g2_zero`].
pub const MIN_SIDE_PEAKS: usize = 10;

/// Peak integration half-width as a fraction of the pulse period.
pub const HBT_WINDOW_FRACTION: f64 = 0.45;

pub fn hbt_histogram_template(params: &EmitterParams) -> Result<CoincidenceHistogram> {
    let half_bins = ((HBT_SIDE_PEAKS as f64 + 0.5) * params.pulse_period() / COINCIDENCE_BIN).round();
    CoincidenceHistogram::symmetric(half_bins * COINCIDENCE_BIN, COINCIDENCE_BIN)
}

/// Splits each photon of `source` onto detector A or B with equal
/// probability and histograms `t_A − t_B`. Detection times add an
/// exponential radiative delay to the emission time.
///
/// Pairs straddling a chunk edge are dropped, as in the HOM instrument.
pub fn hbt_histogram<S: PhotonChunks>(
    source: &S,
    params: &EmitterParams,
    seed: u64,
    workers: usize,
) -> Result<CoincidenceHistogram> {
    params.validate()?;
    let template = hbt_histogram_template(params)?;
    let t1 = params.t1;
    let parts = map_indexed(source.n_chunks(), workers, |c| {
        let mut rng = chunk_rng(seed, Domain::Hbt, c as u64);
        let mut det_a = Vec::new();
        let mut det_b = Vec::new();
        for r in source.chunk(c).iter() {
            let to_a: bool = rng.random();
            let delay: f64 = rng.sample(Exp1);
            let t = r.t_emit + t1 * delay;
            if to_a {
                det_a.push(t);
            } else {
                det_b.push(t);
            }
        }
        sort_times(&mut det_a);
        sort_times(&mut det_b);
        let mut h = template.clone();
        correlate_into(&det_a, &det_b, &mut h);
        h
    });
    let mut total = template;
    for part in &parts {
        total.merge(part)?;
    }
    Ok(total)
}

/// `g²(0)` as the zero-delay area over the mean of at least
/// [`MIN_SIDE_PEAKS`] side-peak areas, with Poisson error.
pub fn g2_zero(h: &CoincidenceHistogram, period: f64) -> Result<(f64, f64)> {
    side_peak_ratio(h, period, HBT_WINDOW_FRACTION * period, MIN_SIDE_PEAKS)
}
