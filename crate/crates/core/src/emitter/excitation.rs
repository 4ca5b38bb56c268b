use super::EmitterParams;
use crate::error::{ensure_finite, invalid, Result};
use crate::histogram::CoincidenceHistogram;
use crate::numeric::{chunk_rng, Domain};
use rand::Rng;
use rand_distr::Exp1;
use std::f64::consts::FRAC_PI_2;

/// Detected rate under pulsed resonant drive: `r_max·sin²((π/2)·√(P/P_π))`.
///
/// The pulse area scales with the field amplitude, hence with √power.
pub fn rabi_rate(pump_power: f64, p_pi: f64, r_max: f64) -> Result<f64> {
    ensure_finite("pump_power", pump_power)?;
    ensure_finite("p_pi", p_pi)?;
    if pump_power < 0.0 {
        return Err(invalid(format!("pump power must be non-negative, got {pump_power}")));
    }
    if p_pi <= 0.0 {
        return Err(invalid(format!("p_pi must be positive, got {p_pi}")));
    }
    let s = (FRAC_PI_2 * (pump_power / p_pi).sqrt()).sin();
    Ok(r_max * s * s)
}

/// Bin width of lifetime histograms (s).
pub const LIFETIME_BIN: f64 = 2e-12;

/// Histogram range in units of the mean delay; keeps overflow below 1e-10.
pub const LIFETIME_SPAN: f64 = 25.0;

pub fn lifetime_mean(params: &EmitterParams, detuned: bool) -> f64 {
    if detuned {
        params.purcell_ratio * params.t1
    } else {
        params.t1
    }
}

/// Raw emission delays behind [`lifetime_histogram`].
pub fn lifetime_draws(params: &EmitterParams, n_events: usize, detuned: bool, seed: u64) -> Result<Vec<f64>> {
    if n_events == 0 {
        return Err(invalid("n_events must be at least 1"));
    }
    params.validate()?;
    let mean = lifetime_mean(params, detuned);
    let mut rng = chunk_rng(seed, Domain::Lifetime, detuned as u64);
    Ok((0..n_events)
        .map(|_| {
            let e: f64 = rng.sample(Exp1);
            mean * e
        })
        .collect())
}

/// Time-resolved emission histogram, resonant or detuned from the cavity.
pub fn lifetime_histogram(
    params: &EmitterParams,
    n_events: usize,
    detuned: bool,
    seed: u64,
) -> Result<CoincidenceHistogram> {
    let draws = lifetime_draws(params, n_events, detuned, seed)?;
    let mean = lifetime_mean(params, detuned);
    let span = (LIFETIME_SPAN * mean / LIFETIME_BIN).ceil() * LIFETIME_BIN;
    let mut h = CoincidenceHistogram::new(0.0, span, LIFETIME_BIN)?;
    for t in draws {
        h.record(t);
    }
    h.n_events_processed = n_events as u64;
    Ok(h)
}
