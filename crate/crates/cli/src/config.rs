//! Run configuration: emitter parameters plus instrument and run-size keys.

use sha2::{Digest, Sha256};
use spsim::config::{parse_f64, parse_key_values, Entry};
use spsim::spectra::FabryPerotSpec;
use spsim::{EmitterParams, Error, Result};
use std::fmt::Write as _;
use std::path::Path;

/// Config keys that are not emitter parameters, in canonical order.
pub const RUN_KEYS: &[&str] = &[
    "fp_finesse",
    "fp_fsr",
    "fp_transmission",
    "splitter_ratio",
    "n_pulses_hom",
    "n_pulses_hbt",
    "n_events_lifetime",
    "rabi_p_pi",
    "rabi_points",
    "rabi_noise",
    "spectrum_noise",
    "seed",
    "workers",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub emitter: EmitterParams,
    pub fp: FabryPerotSpec,
    /// Short-arm probability of the unbalanced interferometer.
    pub splitter_ratio: f64,
    pub n_pulses_hom: u64,
    pub n_pulses_hbt: u64,
    pub n_events_lifetime: u64,
    /// Pump power of the π pulse (W).
    pub rabi_p_pi: f64,
    pub rabi_points: u64,
    /// Relative noise on synthetic Rabi count rates.
    pub rabi_noise: f64,
    /// Gaussian noise on the synthetic spectrum scan, relative to its peak.
    pub spectrum_noise: f64,
    pub seed: u64,
    /// Thread count; 0 picks the number of available cores.
    pub workers: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            emitter: EmitterParams::default(),
            fp: FabryPerotSpec::default(),
            splitter_ratio: 0.5,
            n_pulses_hom: 1_000_000,
            n_pulses_hbt: 10_000_000,
            n_events_lifetime: 1_000_000,
            rabi_p_pi: 21e-9,
            rabi_points: 41,
            rabi_noise: 0.05,
            spectrum_noise: 0.01,
            seed: 20_170_101,
            workers: 0,
        }
    }
}

fn parse_count(entry: &Entry) -> Result<u64> {
    let x = parse_f64(entry)?;
    if x < 0.0 || x.fract() != 0.0 || x > u64::MAX as f64 {
        return Err(Error::Parse {
            line: entry.line,
            message: format!("`{}` must be a non-negative integer, got `{}`", entry.key, entry.value),
        });
    }
    Ok(x as u64)
}

impl RunConfig {
    pub fn from_config_str(text: &str) -> Result<Self> {
        let entries = parse_key_values(text)?;
        let (emitter, rest) = EmitterParams::from_entries(&entries)?;
        let mut cfg = Self {
            emitter,
            ..Self::default()
        };
        for e in rest {
            match e.key.as_str() {
                "fp_finesse" => cfg.fp.finesse = parse_f64(e)?,
                "fp_fsr" => cfg.fp.fsr = parse_f64(e)?,
                "fp_transmission" => cfg.fp.peak_transmission = parse_f64(e)?,
                "splitter_ratio" => cfg.splitter_ratio = parse_f64(e)?,
                "n_pulses_hom" => cfg.n_pulses_hom = parse_count(e)?,
                "n_pulses_hbt" => cfg.n_pulses_hbt = parse_count(e)?,
                "n_events_lifetime" => cfg.n_events_lifetime = parse_count(e)?,
                "rabi_p_pi" => cfg.rabi_p_pi = parse_f64(e)?,
                "rabi_points" => cfg.rabi_points = parse_count(e)?,
                "rabi_noise" => cfg.rabi_noise = parse_f64(e)?,
                "spectrum_noise" => cfg.spectrum_noise = parse_f64(e)?,
                "seed" => cfg.seed = parse_count(e)?,
                "workers" => cfg.workers = parse_count(e)?,
                other => {
                    return Err(Error::Parse {
                        line: e.line,
                        message: format!("unknown key `{other}`"),
                    })
                }
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_config_str(&std::fs::read_to_string(path)?)
    }

    /// Every invariant violation across all fields.
    pub fn violations(&self) -> Vec<String> {
        let mut v = self.emitter.violations();
        if let Err(e) = self.fp.validate() {
            v.push(strip_prefix(e));
        }
        if !(self.splitter_ratio > 0.0 && self.splitter_ratio < 1.0) {
            v.push(format!(
                "splitter_ratio: must lie in (0, 1), got {}",
                self.splitter_ratio
            ));
        }
        for (name, n) in [
            ("n_pulses_hom", self.n_pulses_hom),
            ("n_pulses_hbt", self.n_pulses_hbt),
            ("n_events_lifetime", self.n_events_lifetime),
        ] {
            if n == 0 {
                v.push(format!("{name}: must be at least 1"));
            }
        }
        if !(self.rabi_p_pi.is_finite() && self.rabi_p_pi > 0.0) {
            v.push(format!("rabi_p_pi: must be positive, got {}", self.rabi_p_pi));
        }
        if self.rabi_points < 4 {
            v.push(format!("rabi_points: at least 4 needed, got {}", self.rabi_points));
        }
        for (name, x) in [("rabi_noise", self.rabi_noise), ("spectrum_noise", self.spectrum_noise)] {
            if !(x.is_finite() && x > 0.0 && x < 1.0) {
                v.push(format!("{name}: must lie in (0, 1), got {x}"));
            }
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations().into_iter().next() {
            None => Ok(()),
            Some(first) => Err(Error::InvalidArgument(first)),
        }
    }

    pub fn worker_count(&self) -> usize {
        match self.workers {
            0 => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            n => n as usize,
        }
    }

    /// Canonical text form of everything that affects results. The worker
    /// count is left out because outputs do not depend on it.
    pub fn canonical_string(&self) -> String {
        let mut s = self.emitter.to_config_string();
        for (k, v) in [
            ("fp_finesse", self.fp.finesse),
            ("fp_fsr", self.fp.fsr),
            ("fp_transmission", self.fp.peak_transmission),
            ("splitter_ratio", self.splitter_ratio),
            ("rabi_p_pi", self.rabi_p_pi),
            ("rabi_noise", self.rabi_noise),
            ("spectrum_noise", self.spectrum_noise),
        ] {
            let _ = writeln!(s, "{k} = {v:e}");
        }
        for (k, v) in [
            ("n_pulses_hom", self.n_pulses_hom),
            ("n_pulses_hbt", self.n_pulses_hbt),
            ("n_events_lifetime", self.n_events_lifetime),
            ("rabi_points", self.rabi_points),
            ("seed", self.seed),
        ] {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_string().as_bytes()))
    }
}

fn strip_prefix(e: Error) -> String {
    match e {
        Error::InvalidArgument(m) => m,
        other => other.to_string(),
    }
}
