//! Per-pulse photon generation.
//!
//! Pulses are grouped into fixed chunks of [`CHUNK_PULSES`]. Each chunk draws
//! from its own generator seeded by `hash(seed, chunk)`, so output never
//! depends on how chunks are spread over workers. The frequency path is
//! pinned at chunk boundaries by a sequential pass of exact OU transitions;
//! inside a chunk it is filled in with exact bridge steps toward the next
//! boundary value, which keeps the path a faithful sample of the stationary
//! process across chunk edges.

use super::ou::{bridge_transition, transition};
use super::EmitterParams;
use crate::error::{invalid, Result};
use crate::numeric::{chunk_rng, Domain};
use crate::parallel::map_indexed;
use rand::Rng;
use rand_distr::StandardNormal;
use std::borrow::Cow;

pub const CHUNK_PULSES: u64 = 1 << 16;

/// Jitter draws are truncated to ±`JITTER_CLIP` standard deviations and
/// offset by the same amount, so emission never precedes its pulse.
pub const JITTER_CLIP: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Multiplicity {
    Single,
    PairFirst,
    PairSecond,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonRecord {
    pub pulse_index: u64,
    /// Pulse time plus the jitter draw (s). Excludes the radiative delay.
    pub t_emit: f64,
    /// Emission angular frequency offset at the time of the pulse (rad/s).
    pub omega: f64,
    pub multiplicity: Multiplicity,
}

impl PhotonRecord {
    pub fn pulse_time(&self, params: &EmitterParams) -> f64 {
        self.pulse_index as f64 / params.rep_rate
    }
}

/// Anything that can hand out the photons of pulse chunk `c`.
pub trait PhotonChunks: Sync {
    fn n_pulses(&self) -> u64;
    fn chunk(&self, index: usize) -> Cow<'_, [PhotonRecord]>;

    fn n_chunks(&self) -> usize {
        self.n_pulses().div_ceil(CHUNK_PULSES) as usize
    }
}

/// A seeded photon source covering `n_pulses` pulses.
#[derive(Debug, Clone)]
pub struct PhotonSource {
    params: EmitterParams,
    n_pulses: u64,
    seed: u64,
    losses: Option<(f64, u64)>,
    boundaries: Vec<f64>,
}

impl PhotonSource {
    pub fn new(params: &EmitterParams, n_pulses: u64, seed: u64) -> Result<Self> {
        params.validate()?;
        if n_pulses == 0 {
            return Err(invalid("n_pulses must be at least 1"));
        }
        let n_chunks = n_pulses.div_ceil(CHUNK_PULSES) as usize;
        let mut rng = chunk_rng(seed, Domain::OuBoundary, 0);
        let span = CHUNK_PULSES as f64 / params.rep_rate;
        let mut boundaries = Vec::with_capacity(n_chunks + 1);
        let z: f64 = rng.sample(StandardNormal);
        boundaries.push(params.omega_0 + params.sigma_omega * z);
        for c in 0..n_chunks {
            let z: f64 = rng.sample(StandardNormal);
            boundaries.push(transition(boundaries[c], span, params, z));
        }
        Ok(Self {
            params: params.clone(),
            n_pulses,
            seed,
            losses: None,
            boundaries,
        })
    }

    /// Thins every chunk with [`apply_losses`] using the given efficiency and seed.
    pub fn with_losses(mut self, eta: f64, seed: u64) -> Result<Self> {
        check_eta(eta)?;
        self.losses = Some((eta, seed));
        Ok(self)
    }

    pub fn params(&self) -> &EmitterParams {
        &self.params
    }

    fn raw_chunk(&self, c: usize) -> Vec<PhotonRecord> {
        let p = &self.params;
        let dt = 1.0 / p.rep_rate;
        let start = c as u64 * CHUNK_PULSES;
        let end = (start + CHUNK_PULSES).min(self.n_pulses);
        let boundary_pulse = start + CHUNK_PULSES;
        let omega_end = self.boundaries[c + 1];
        let mut rng = chunk_rng(self.seed, Domain::Stream, c as u64);
        let mut out = Vec::with_capacity(((end - start) as f64 * p.mean_photon_number() * 1.01) as usize + 8);
        let mut omega = self.boundaries[c];
        let jitter_offset = JITTER_CLIP * p.sigma_jitter;
        for pulse in start..end {
            if pulse > start {
                let z: f64 = rng.sample(StandardNormal);
                let remaining = (boundary_pulse - pulse) as f64 * dt;
                omega = bridge_transition(omega, dt, omega_end, remaining, p, z);
            }
            let u: f64 = rng.random();
            let tags: &[Multiplicity] = if u < p.p1 {
                &[Multiplicity::Single]
            } else if u < p.p1 + p.p2 {
                &[Multiplicity::PairFirst, Multiplicity::PairSecond]
            } else {
                &[]
            };
            let t_pulse = pulse as f64 / p.rep_rate;
            for &tag in tags {
                let z = clipped_normal(&mut rng);
                out.push(PhotonRecord {
                    pulse_index: pulse,
                    t_emit: t_pulse + jitter_offset + p.sigma_jitter * z,
                    omega,
                    multiplicity: tag,
                });
            }
        }
        out
    }

    /// Materializes the whole stream.
    pub fn collect(&self, workers: usize) -> Vec<PhotonRecord> {
        map_indexed(self.n_chunks(), workers, |c| self.chunk(c).into_owned())
            .into_iter()
            .flatten()
            .collect()
    }
}

impl PhotonChunks for PhotonSource {
    fn n_pulses(&self) -> u64 {
        self.n_pulses
    }

    fn chunk(&self, index: usize) -> Cow<'_, [PhotonRecord]> {
        let raw = self.raw_chunk(index);
        match self.losses {
            Some((eta, seed)) => Cow::Owned(apply_losses(&raw, eta, seed).expect("eta validated")),
            None => Cow::Owned(raw),
        }
    }
}

/// A materialized stream (sorted by pulse index) viewed chunk by chunk.
#[derive(Debug, Clone, Copy)]
pub struct StreamSlice<'a> {
    pub records: &'a [PhotonRecord],
    pub n_pulses: u64,
}

impl PhotonChunks for StreamSlice<'_> {
    fn n_pulses(&self) -> u64 {
        self.n_pulses
    }

    fn chunk(&self, index: usize) -> Cow<'_, [PhotonRecord]> {
        let lo = index as u64 * CHUNK_PULSES;
        let hi = lo + CHUNK_PULSES;
        let a = self.records.partition_point(|r| r.pulse_index < lo);
        let b = self.records.partition_point(|r| r.pulse_index < hi);
        Cow::Borrowed(&self.records[a..b])
    }
}

fn clipped_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let z: f64 = rng.sample(StandardNormal);
        if z.abs() <= JITTER_CLIP {
            return z;
        }
    }
}

/// Generates the photon stream for `n_pulses` pulses; identical for any
/// `workers` count.
pub fn generate_stream(params: &EmitterParams, n_pulses: u64, seed: u64) -> Result<Vec<PhotonRecord>> {
    generate_stream_with_workers(params, n_pulses, seed, 1)
}

pub fn generate_stream_with_workers(
    params: &EmitterParams,
    n_pulses: u64,
    seed: u64,
    workers: usize,
) -> Result<Vec<PhotonRecord>> {
    Ok(PhotonSource::new(params, n_pulses, seed)?.collect(workers))
}

fn check_eta(eta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(invalid(format!("eta must lie in [0, 1], got {eta}")));
    }
    Ok(())
}

/// Keeps each record independently with probability `eta`, preserving order.
///
/// Decisions are drawn per pulse chunk, so thinning a whole stream or its
/// chunks one at a time gives the same result.
pub fn apply_losses(stream: &[PhotonRecord], eta: f64, seed: u64) -> Result<Vec<PhotonRecord>> {
    check_eta(eta)?;
    let mut out = Vec::with_capacity((stream.len() as f64 * eta) as usize + 8);
    let mut current_chunk = u64::MAX;
    let mut rng = chunk_rng(seed, Domain::Loss, 0);
    for r in stream {
        let c = r.pulse_index / CHUNK_PULSES;
        if c != current_chunk {
            current_chunk = c;
            rng = chunk_rng(seed, Domain::Loss, c);
        }
        let u: f64 = rng.random();
        if u < eta {
            out.push(*r);
        }
    }
    Ok(out)
}
