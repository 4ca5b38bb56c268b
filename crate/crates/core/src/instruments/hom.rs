//! Event-driven Monte Carlo of two-photon interference in an unbalanced
//! Mach-Zehnder interferometer whose long arm delays by `k` pulse periods.
//!
//! Every photon takes the long arm with probability `splitter_ratio`. Photons
//! then meet at the output beam splitter in pulse slots: slot `s` receives
//! the short-arm photons of pulse `s` and the long-arm photons of pulse
//! `s − k`. Exactly one photon from each arm in a slot is a meeting event and
//! the pair coalesces with probability `M`; every other photon leaves through
//! an independent fair port. Slots with three or more photons route all of
//! them independently, which only occurs with two-photon emission.

use super::correlation::{correlate_into, sort_times, COINCIDENCE_BIN};
use super::overlap::pair_visibility;
use crate::emitter::{EmitterParams, PhotonChunks, PhotonRecord, CHUNK_PULSES};
use crate::error::{invalid, Error, Result};
use crate::histogram::CoincidenceHistogram;
use crate::numeric::{chunk_rng, Domain};
use crate::parallel::map_indexed;
use rand::Rng;
use rand_distr::Exp1;

/// Half-width of the zero-delay integration window (s).
pub const HOM_WINDOW: f64 = 1.5e-9;

/// Side peaks kept on each side of zero delay.
pub const HOM_SIDE_PEAKS: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarization {
    Parallel,
    Cross,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomConfig {
    pub delay_pulses: u64,
    pub splitter_ratio: f64,
    pub polarization: Polarization,
}

impl Default for HomConfig {
    fn default() -> Self {
        Self {
            delay_pulses: 1,
            splitter_ratio: 0.5,
            polarization: Polarization::Parallel,
        }
    }
}

impl HomConfig {
    pub fn validate(&self) -> Result<()> {
        if self.delay_pulses == 0 {
            return Err(invalid("delay_pulses must be at least 1"));
        }
        if !(self.splitter_ratio > 0.0 && self.splitter_ratio < 1.0) {
            return Err(invalid(format!(
                "splitter_ratio must lie in (0, 1), got {}",
                self.splitter_ratio
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomOutcome {
    pub histogram: CoincidenceHistogram,
    /// Slots holding exactly one short-arm and one long-arm photon.
    pub meeting_events: u64,
    pub coalesced: u64,
    pub photons: u64,
}

impl HomOutcome {
    /// No photon reached the interferometer.
    pub fn is_empty(&self) -> bool {
        self.photons == 0
    }
}

/// Histogram range shared by every HOM run at the given repetition rate.
pub fn hom_histogram_template(params: &EmitterParams) -> Result<CoincidenceHistogram> {
    let half_bins = ((HOM_SIDE_PEAKS as f64 + 0.5) * params.pulse_period() / COINCIDENCE_BIN).round();
    CoincidenceHistogram::symmetric(half_bins * COINCIDENCE_BIN, COINCIDENCE_BIN)
}

/// Runs the interferometer over every pulse of `source`.
///
/// Output is identical for any `workers` count. Coincidence pairs that
/// straddle a chunk edge are not recorded, a fraction of about
/// `range / chunk span` (≈ 5·10⁻⁵ at defaults) of the side-peak counts.
pub fn hom_monte_carlo<S: PhotonChunks>(
    source: &S,
    params: &EmitterParams,
    config: &HomConfig,
    seed: u64,
    workers: usize,
) -> Result<HomOutcome> {
    config.validate()?;
    params.validate()?;
    if source.n_pulses() < config.delay_pulses + 1 {
        return Err(invalid(format!(
            "stream covers {} pulses, at least delay_pulses + 1 = {} required",
            source.n_pulses(),
            config.delay_pulses + 1
        )));
    }
    let template = hom_histogram_template(params)?;
    let parts = map_indexed(source.n_chunks(), workers, |c| {
        slot_chunk(source, params, config, seed, c, &template)
    });
    let mut total = HomOutcome {
        histogram: template,
        meeting_events: 0,
        coalesced: 0,
        photons: 0,
    };
    for part in parts {
        let part = part?;
        total.histogram.merge(&part.histogram)?;
        total.meeting_events += part.meeting_events;
        total.coalesced += part.coalesced;
        total.photons += part.photons;
    }
    Ok(total)
}

/// Arm choice for every photon of input chunk `c`; `true` is the long arm.
fn routed_chunk<S: PhotonChunks>(source: &S, c: usize, seed: u64, ratio: f64) -> Vec<(PhotonRecord, bool)> {
    let mut rng = chunk_rng(seed, Domain::HomRouting, c as u64);
    source
        .chunk(c)
        .iter()
        .map(|r| {
            let u: f64 = rng.random();
            (*r, u < ratio)
        })
        .collect()
}

struct Arrival {
    slot: u64,
    long: bool,
    jitter: f64,
    omega: f64,
}

fn slot_chunk<S: PhotonChunks>(
    source: &S,
    params: &EmitterParams,
    config: &HomConfig,
    seed: u64,
    c: usize,
    template: &CoincidenceHistogram,
) -> Result<HomOutcome> {
    let k = config.delay_pulses;
    let start = c as u64 * CHUNK_PULSES;
    let end = (start + CHUNK_PULSES).min(source.n_pulses());
    let period = params.pulse_period();
    let ratio = config.splitter_ratio;
    let arrival = |r: &PhotonRecord, long: bool| Arrival {
        slot: r.pulse_index + if long { k } else { 0 },
        long,
        jitter: r.t_emit - r.pulse_time(params),
        omega: r.omega,
    };

    let own = routed_chunk(source, c, seed, ratio);
    let mut arrivals: Vec<Arrival> = own
        .iter()
        .filter(|(_, long)| !long)
        .map(|(r, l)| arrival(r, *l))
        .collect();
    let photons = own.len() as u64;
    // long-arm photons landing in this chunk's slots come from pulses [start − k, end − k)
    if end > k {
        let lo = start.saturating_sub(k);
        let hi = end - k;
        let first = (lo / CHUNK_PULSES) as usize;
        let last = ((hi - 1) / CHUNK_PULSES) as usize;
        for ic in first..=last {
            let routed = if ic == c {
                own.clone()
            } else {
                routed_chunk(source, ic, seed, ratio)
            };
            arrivals.extend(
                routed
                    .iter()
                    .filter(|(r, long)| *long && (lo..hi).contains(&r.pulse_index))
                    .map(|(r, l)| arrival(r, *l)),
            );
        }
    }
    arrivals.sort_by_key(|a| (a.slot, a.long));

    let t1 = params.t1;
    let t2 = params.t2_hom();
    let mut rng = chunk_rng(seed, Domain::HomPorts, c as u64);
    let mut det_a = Vec::with_capacity(arrivals.len() / 2 + 8);
    let mut det_b = Vec::with_capacity(arrivals.len() / 2 + 8);
    let mut meeting_events = 0;
    let mut coalesced = 0;
    let mut i = 0;
    while i < arrivals.len() {
        let mut j = i + 1;
        while j < arrivals.len() && arrivals[j].slot == arrivals[i].slot {
            j += 1;
        }
        let group = &arrivals[i..j];
        let slot_time = group[0].slot as f64 * period;
        let mut shared_port = None;
        if group.len() == 2 && group[0].long != group[1].long {
            meeting_events += 1;
            let m = match config.polarization {
                Polarization::Cross => 0.0,
                Polarization::Parallel => {
                    pair_visibility(t1, t2, group[0].omega - group[1].omega)?
                        * (-(group[0].jitter - group[1].jitter).abs() / t1).exp()
                }
            };
            let u: f64 = rng.random();
            if u < m {
                coalesced += 1;
                shared_port = Some(rng.random::<bool>());
            }
        }
        for a in group {
            let port_a = match shared_port {
                Some(p) => p,
                None => rng.random::<bool>(),
            };
            let delay: f64 = rng.sample(Exp1);
            let t = slot_time + a.jitter + t1 * delay;
            if port_a {
                det_a.push(t);
            } else {
                det_b.push(t);
            }
        }
        i = j;
    }
    sort_times(&mut det_a);
    sort_times(&mut det_b);
    let mut histogram = template.clone();
    correlate_into(&det_a, &det_b, &mut histogram);
    Ok(HomOutcome {
        histogram,
        meeting_events,
        coalesced,
        photons,
    })
}

/// `V = 1 − A∥/A⊥` over `±window` around zero delay, with its Poisson
/// standard error.
pub fn extract_visibility(
    parallel: &CoincidenceHistogram,
    cross: &CoincidenceHistogram,
    window: f64,
) -> Result<(f64, f64)> {
    if !parallel.same_binning(cross) {
        return Err(Error::GridMismatch(
            "parallel and cross histograms differ in binning".into(),
        ));
    }
    if !(window > 0.0) {
        return Err(invalid(format!("window must be positive, got {window}")));
    }
    let a = parallel.area(0.0, window) as f64;
    let c = cross.area(0.0, window) as f64;
    if c == 0.0 {
        return Err(Error::UndefinedVisibility);
    }
    let r = a / c;
    let var = a / (c * c) + a * a / (c * c * c);
    Ok((1.0 - r, var.sqrt()))
}

/// Removes the zero-delay coincidences of two-photon pulses from a raw
/// visibility, to first order in `g²(0)`: `V·(1 + 2·g²(0))`.
///
/// Two-photon pulses add coincidences to both polarizations in proportion
/// to `g²(0)` relative to the meeting events while sharing the coalescence
/// suppression only through their single-photon slots.
pub fn correct_multiphoton(visibility: (f64, f64), g2: (f64, f64)) -> (f64, f64) {
    let (v, ev) = visibility;
    let (g, eg) = g2;
    let factor = 1.0 + 2.0 * g;
    let err = ((factor * ev).powi(2) + (2.0 * v * eg).powi(2)).sqrt();
    (v * factor, err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emitter::{PhotonSource, StreamSlice};
    use crate::instruments::visibility_vs_separation;

    fn single_photon_params() -> EmitterParams {
        EmitterParams {
            p1: 1.0,
            p2: 0.0,
            ..Default::default()
        }
    }

    fn run(p: &EmitterParams, k: u64, pol: Polarization, n: u64, workers: usize) -> HomOutcome {
        let src = PhotonSource::new(p, n, 11).unwrap();
        let cfg = HomConfig {
            delay_pulses: k,
            polarization: pol,
            ..Default::default()
        };
        hom_monte_carlo(&src, p, &cfg, 5, workers).unwrap()
    }

    #[test]
    fn extract_visibility_limits() {
        let mut par = CoincidenceHistogram::symmetric(5e-9, 1e-10).unwrap();
        let mut cross = par.clone();
        for _ in 0..50 {
            par.record(0.0);
            cross.record(0.0);
        }
        assert_eq!(extract_visibility(&par, &cross, HOM_WINDOW).unwrap().0, 0.0);
        let empty = CoincidenceHistogram::symmetric(5e-9, 1e-10).unwrap();
        let (v, e) = extract_visibility(&empty, &cross, HOM_WINDOW).unwrap();
        assert_eq!((v, e), (1.0, 0.0));
        assert!(matches!(
            extract_visibility(&par, &empty, HOM_WINDOW),
            Err(Error::UndefinedVisibility)
        ));
        let other = CoincidenceHistogram::symmetric(5e-9, 2e-10).unwrap();
        assert!(extract_visibility(&par, &other, HOM_WINDOW).is_err());
    }

    #[test]
    fn config_validation() {
        let bad = HomConfig {
            delay_pulses: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = HomConfig {
            splitter_ratio: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let p = single_photon_params();
        let src = PhotonSource::new(&p, 3, 1).unwrap();
        let cfg = HomConfig {
            delay_pulses: 3,
            ..Default::default()
        };
        assert!(hom_monte_carlo(&src, &p, &cfg, 1, 1).is_err());
    }

    #[test]
    fn empty_stream_gives_flagged_empty_histogram() {
        let p = single_photon_params();
        let slice = StreamSlice {
            records: &[],
            n_pulses: 1000,
        };
        let out = hom_monte_carlo(&slice, &p, &HomConfig::default(), 1, 1).unwrap();
        assert!(out.is_empty());
        assert!(out.histogram.is_empty());
    }

    #[test]
    fn cross_polarization_splits_half_the_meetings() {
        let p = single_photon_params();
        let out = run(&p, 1, Polarization::Cross, 400_000, 1);
        let zero = out.histogram.area(0.0, HOM_WINDOW) as f64;
        let n = out.meeting_events as f64;
        assert!(n > 50_000.0);
        assert!((zero - 0.5 * n).abs() < 3.0 * (0.25 * n).sqrt(), "{zero} vs {n}/2");
        assert_eq!(out.coalesced, 0);
    }

    #[test]
    fn ideal_photons_fully_coalesce() {
        let p = EmitterParams {
            sigma_omega: 0.0,
            gamma_pd: 0.0,
            ..single_photon_params()
        };
        let out = run(&p, 1, Polarization::Parallel, 200_000, 1);
        assert_eq!(out.histogram.area(0.0, HOM_WINDOW), 0);
        assert_eq!(out.coalesced, out.meeting_events);
    }

    #[test]
    fn side_peaks_follow_independent_routing() {
        let p = single_photon_params();
        let out = run(&p, 1, Polarization::Cross, 200_000, 1);
        let period = p.pulse_period();
        let far = out.histogram.area(3.0 * period, HOM_WINDOW) as f64;
        let near = out.histogram.area(0.0, HOM_WINDOW) as f64;
        // far side peak: every pair of photons three slots apart, ports independent
        let expected_far = 200_000.0 * 0.5 * 0.5;
        assert!((far - expected_far).abs() < 4.0 * expected_far.sqrt(), "{far}");
        assert!(near < far);
    }

    #[test]
    fn monte_carlo_matches_analytic_visibility() {
        let p = single_photon_params();
        for k in [1u64, 64, 1123] {
            let par = run(&p, k, Polarization::Parallel, 500_000, 2);
            let cross = run(&p, k, Polarization::Cross, 500_000, 2);
            assert!(par.meeting_events >= 100_000);
            let (v, e) = extract_visibility(&par.histogram, &cross.histogram, HOM_WINDOW).unwrap();
            let exact = visibility_vs_separation(&p, k as f64 * p.pulse_period()).unwrap();
            assert!((v - exact).abs() < 3.0 * e, "k={k}: {v} ± {e} vs {exact}");
        }
    }

    #[test]
    fn multiphoton_correction_restores_analytic_visibility() {
        use crate::instruments::{g2_zero, hbt_histogram};
        let p = EmitterParams::default();
        let par = run(&p, 1, Polarization::Parallel, 500_000, 2);
        let cross = run(&p, 1, Polarization::Cross, 500_000, 2);
        let raw = extract_visibility(&par.histogram, &cross.histogram, HOM_WINDOW).unwrap();
        let src = PhotonSource::new(&p, 2_000_000, 3).unwrap();
        let g2 = g2_zero(&hbt_histogram(&src, &p, 4, 2).unwrap(), p.pulse_period()).unwrap();
        let (v, e) = correct_multiphoton(raw, g2);
        let exact = visibility_vs_separation(&p, p.pulse_period()).unwrap();
        assert!((v - exact).abs() < 3.0 * e, "{v} ± {e} vs {exact}");
        // first order in p2: V_raw = M·(p1 + p2)²/(μ² + 2·p2)
        let mu = p.mean_photon_number();
        let expected_raw = exact * (p.p1 + p.p2).powi(2) / (mu * mu + 2.0 * p.p2);
        assert!(
            (raw.0 - expected_raw).abs() < 3.0 * raw.1,
            "{} vs {expected_raw}",
            raw.0
        );
    }

    #[test]
    fn multiphoton_correction_limits() {
        assert_eq!(correct_multiphoton((0.9, 0.01), (0.0, 0.0)), (0.9, 0.01));
        let (v, e) = correct_multiphoton((0.9, 0.0), (0.01, 0.001));
        assert!((v - 0.918).abs() < 1e-12);
        assert!((e - 2.0 * 0.9 * 0.001).abs() < 1e-12);
    }

    #[test]
    fn worker_count_does_not_change_output() {
        let p = EmitterParams::default();
        let base = run(&p, 64, Polarization::Parallel, 150_000, 1);
        for w in [2, 8] {
            assert_eq!(run(&p, 64, Polarization::Parallel, 150_000, w), base);
        }
    }

    #[test]
    fn delay_longer_than_a_chunk() {
        let p = single_photon_params();
        let k = CHUNK_PULSES + 17;
        let out = run(&p, k, Polarization::Cross, 3 * CHUNK_PULSES, 1);
        let expected = (3 * CHUNK_PULSES - k) as f64 * 0.25;
        let n = out.meeting_events as f64;
        assert!((n - expected).abs() < 5.0 * expected.sqrt(), "{n} vs {expected}");
    }
}
