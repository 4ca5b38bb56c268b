use crate::config::{parse_f64, parse_key_values, Entry};
use crate::error::{invalid, Error, Result};

/// Physical description of the pulsed resonance-fluorescence source.
///
/// All quantities are SI. The homogeneous coherence time is not stored; it
/// follows from `1/t2_hom = 1/(2·t1) + gamma_pd`, so the rate identity holds
/// by construction. A negative `gamma_pd` encodes `t2_hom > 2·t1`, which
/// [`EmitterParams::violations`] reports.
#[derive(Debug, Clone, PartialEq)]
pub struct EmitterParams {
    /// Radiative lifetime (s).
    pub t1: f64,
    /// Pure dephasing rate (1/s).
    pub gamma_pd: f64,
    /// Stationary std of the angular-frequency noise (rad/s).
    pub sigma_omega: f64,
    /// Correlation time of the frequency noise (s).
    pub tau_c: f64,
    /// Mean angular emission frequency relative to the reference (rad/s).
    pub omega_0: f64,
    /// Pulse repetition rate (Hz).
    pub rep_rate: f64,
    /// Probability per pulse of exactly one photon.
    pub p1: f64,
    /// Probability per pulse of two photons.
    pub p2: f64,
    /// Std of the emission start-time jitter (s).
    pub sigma_jitter: f64,
    /// Source brightness at the single-mode fiber output, photons per pulse.
    pub eta_fiber: f64,
    /// Post-fiber transmission times detector efficiency.
    pub eta_det: f64,
    /// Lifetime lengthening factor when the emitter is detuned from the cavity.
    pub purcell_ratio: f64,
}

pub const DEFAULT_T1: f64 = 162e-12;
pub const DEFAULT_T2_HOM: f64 = 315e-12;

impl Default for EmitterParams {
    fn default() -> Self {
        Self {
            t1: DEFAULT_T1,
            gamma_pd: 1.0 / DEFAULT_T2_HOM - 1.0 / (2.0 * DEFAULT_T1),
            sigma_omega: 2.0e9,
            tau_c: 0.88e-6,
            omega_0: 0.0,
            rep_rate: 76.4e6,
            p1: 0.9965,
            p2: 0.0035,
            sigma_jitter: 0.0,
            eta_fiber: 0.066,
            eta_det: 1.67 / 5.04,
            purcell_ratio: 3.8,
        }
    }
}

/// Config keys in canonical output order.
pub const KEYS: &[&str] = &[
    "t1",
    "gamma_pd",
    "t2_hom",
    "sigma_omega",
    "tau_c",
    "omega_0",
    "rep_rate",
    "p1",
    "p2",
    "sigma_jitter",
    "eta_fiber",
    "eta_det",
    "purcell_ratio",
];

impl EmitterParams {
    pub fn t2_hom(&self) -> f64 {
        1.0 / (1.0 / (2.0 * self.t1) + self.gamma_pd)
    }

    /// Sets the pure dephasing rate so that the homogeneous coherence time is `t2`.
    pub fn with_t2_hom(mut self, t2: f64) -> Self {
        self.gamma_pd = 1.0 / t2 - 1.0 / (2.0 * self.t1);
        self
    }

    pub fn pulse_period(&self) -> f64 {
        1.0 / self.rep_rate
    }

    /// Mean photon number per pulse before losses.
    pub fn mean_photon_number(&self) -> f64 {
        self.p1 + 2.0 * self.p2
    }

    /// Every invariant violation, as `field: message` strings.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let fields = [
            ("t1", self.t1),
            ("gamma_pd", self.gamma_pd),
            ("sigma_omega", self.sigma_omega),
            ("tau_c", self.tau_c),
            ("omega_0", self.omega_0),
            ("rep_rate", self.rep_rate),
            ("p1", self.p1),
            ("p2", self.p2),
            ("sigma_jitter", self.sigma_jitter),
            ("eta_fiber", self.eta_fiber),
            ("eta_det", self.eta_det),
            ("purcell_ratio", self.purcell_ratio),
        ];
        for (name, value) in fields {
            if !value.is_finite() {
                v.push(format!("{name}: must be finite, got {value}"));
            }
        }
        if !v.is_empty() {
            return v;
        }
        for (name, value) in [
            ("t1", self.t1),
            ("tau_c", self.tau_c),
            ("rep_rate", self.rep_rate),
            ("purcell_ratio", self.purcell_ratio),
        ] {
            if value <= 0.0 {
                v.push(format!("{name}: must be positive, got {value}"));
            }
        }
        for (name, value) in [("sigma_omega", self.sigma_omega), ("sigma_jitter", self.sigma_jitter)] {
            if value < 0.0 {
                v.push(format!("{name}: must be non-negative, got {value}"));
            }
        }
        if self.gamma_pd < 0.0 {
            v.push(format!(
                "t2_hom: {:e} s exceeds 2*t1 = {:e} s (negative pure dephasing)",
                self.t2_hom(),
                2.0 * self.t1
            ));
        }
        for (name, value) in [
            ("p1", self.p1),
            ("p2", self.p2),
            ("eta_fiber", self.eta_fiber),
            ("eta_det", self.eta_det),
        ] {
            if !(0.0..=1.0).contains(&value) {
                v.push(format!("{name}: must lie in [0, 1], got {value}"));
            }
        }
        if self.p1 + self.p2 > 1.0 {
            v.push(format!(
                "p1+p2: emission probabilities sum to {} > 1",
                self.p1 + self.p2
            ));
        }
        if self.eta_fiber > self.mean_photon_number() {
            v.push(format!(
                "eta_fiber: brightness {} exceeds mean photon number per pulse {}",
                self.eta_fiber,
                self.mean_photon_number()
            ));
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations().into_iter().next() {
            None => Ok(()),
            Some(first) => Err(invalid(first)),
        }
    }

    /// Applies one config entry. Returns `Ok(false)` when the key is not an
    /// emitter key, so callers can layer their own keys on top.
    pub fn apply_entry(&mut self, entry: &Entry) -> Result<bool> {
        if !KEYS.contains(&entry.key.as_str()) {
            return Ok(false);
        }
        let x = parse_f64(entry)?;
        match entry.key.as_str() {
            "t1" => self.t1 = x,
            "gamma_pd" => self.gamma_pd = x,
            "t2_hom" => self.gamma_pd = 1.0 / x - 1.0 / (2.0 * self.t1),
            "sigma_omega" => self.sigma_omega = x,
            "tau_c" => self.tau_c = x,
            "omega_0" => self.omega_0 = x,
            "rep_rate" => self.rep_rate = x,
            "p1" => self.p1 = x,
            "p2" => self.p2 = x,
            "sigma_jitter" => self.sigma_jitter = x,
            "eta_fiber" => self.eta_fiber = x,
            "eta_det" => self.eta_det = x,
            "purcell_ratio" => self.purcell_ratio = x,
            _ => unreachable!(),
        }
        Ok(true)
    }

    /// Builds parameters from config entries on top of the defaults.
    ///
    /// `t1` is applied before `t2_hom` regardless of line order, and giving
    /// both `t2_hom` and `gamma_pd` is rejected as ambiguous. Entries that are
    /// not emitter keys are returned untouched.
    pub fn from_entries<'a>(entries: impl IntoIterator<Item = &'a Entry>) -> Result<(Self, Vec<&'a Entry>)> {
        let mut params = Self::default();
        let mut rest = Vec::new();
        let mut coherence: Option<&Entry> = None;
        let mut ordered: Vec<&Entry> = Vec::new();
        for e in entries {
            match e.key.as_str() {
                "t2_hom" | "gamma_pd" => {
                    if let Some(prev) = coherence {
                        return Err(Error::Parse {
                            line: e.line,
                            message: format!("`{}` conflicts with `{}` on line {}", e.key, prev.key, prev.line),
                        });
                    }
                    coherence = Some(e);
                }
                k if KEYS.contains(&k) => ordered.push(e),
                _ => rest.push(e),
            }
        }
        for e in ordered {
            params.apply_entry(e)?;
        }
        if let Some(e) = coherence {
            params.apply_entry(e)?;
        }
        Ok((params, rest))
    }

    /// Parses a config that may only contain emitter keys.
    pub fn from_config_str(text: &str) -> Result<Self> {
        let entries = parse_key_values(text)?;
        let (params, rest) = Self::from_entries(&entries)?;
        if let Some(e) = rest.first() {
            return Err(Error::Parse {
                line: e.line,
                message: format!("unknown key `{}`", e.key),
            });
        }
        Ok(params)
    }

    /// Serializes to the flat config format. `gamma_pd` is written rather
    /// than `t2_hom` so that a round trip is exact.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        for (k, v) in [
            ("t1", self.t1),
            ("gamma_pd", self.gamma_pd),
            ("sigma_omega", self.sigma_omega),
            ("tau_c", self.tau_c),
            ("omega_0", self.omega_0),
            ("rep_rate", self.rep_rate),
            ("p1", self.p1),
            ("p2", self.p2),
            ("sigma_jitter", self.sigma_jitter),
            ("eta_fiber", self.eta_fiber),
            ("eta_det", self.eta_det),
            ("purcell_ratio", self.purcell_ratio),
        ] {
            s.push_str(&format!("{k} = {v:e}\n"));
        }
        s
    }
}
