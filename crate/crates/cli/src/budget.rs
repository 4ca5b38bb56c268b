//! Photon rate chain from the pulse train to the detectors.

use spsim::EmitterParams;
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    /// Laser pulses per second.
    pub pulse_rate: f64,
    /// Photons emitted per second, `rep_rate·(p1 + 2·p2)`.
    pub emitted: f64,
    /// Photons per second in the single-mode fiber, `rep_rate·eta_fiber`.
    pub fiber: f64,
    pub detected: f64,
}

impl Budget {
    pub fn new(p: &EmitterParams) -> Self {
        let fiber = p.rep_rate * p.eta_fiber;
        Self {
            pulse_rate: p.rep_rate,
            emitted: p.rep_rate * p.mean_photon_number(),
            fiber,
            detected: fiber * p.eta_det,
        }
    }

    /// Fraction of emitted photons that reach the fiber.
    pub fn collection_efficiency(&self) -> f64 {
        self.fiber / self.emitted
    }

    pub fn report(&self, p: &EmitterParams) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "pulse rate          {:>8.2e} /s", self.pulse_rate);
        let _ = writeln!(
            s,
            "emitted             {:>8.2e} /s   x (p1 + 2 p2) = {:.4}",
            self.emitted,
            p.mean_photon_number()
        );
        let _ = writeln!(
            s,
            "at fiber output     {:>8.2e} /s   brightness eta_fiber = {:.4} per pulse",
            self.fiber, p.eta_fiber
        );
        let _ = writeln!(
            s,
            "detected            {:>8.2e} /s   x eta_det = {:.4}",
            self.detected, p.eta_det
        );
        let _ = writeln!(
            s,
            "collection efficiency into fiber = {:.4}",
            self.collection_efficiency()
        );
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_chain() {
        let b = Budget::new(&EmitterParams::default());
        assert!((b.pulse_rate - 76.4e6).abs() < 1e-6);
        assert!((b.fiber - 5.0424e6).abs() < 1.0);
        assert!((b.detected - 1.67e6).abs() < 0.01e6, "{}", b.detected);
    }

    #[test]
    fn lossless_chain_keeps_pulse_rate() {
        let p = EmitterParams {
            p1: 1.0,
            p2: 0.0,
            eta_fiber: 1.0,
            eta_det: 1.0,
            ..Default::default()
        };
        let b = Budget::new(&p);
        assert_eq!(b.emitted, 76.4e6);
        assert_eq!(b.fiber, 76.4e6);
        assert_eq!(b.detected, 76.4e6);
    }
}
