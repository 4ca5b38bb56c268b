use super::spectrum::{convolve, Grid, Spectrum};
use crate::error::{ensure_finite, invalid, Result};
use std::f64::consts::PI;

/// Scanning Fabry-Pérot interferometer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FabryPerotSpec {
    pub finesse: f64,
    /// Free spectral range (Hz).
    pub fsr: f64,
    pub peak_transmission: f64,
}

impl Default for FabryPerotSpec {
    fn default() -> Self {
        Self {
            finesse: 170.0,
            fsr: 37.4e9,
            peak_transmission: 0.61,
        }
    }
}

impl FabryPerotSpec {
    pub fn validate(&self) -> Result<()> {
        ensure_finite("fp_finesse", self.finesse)?;
        ensure_finite("fp_fsr", self.fsr)?;
        ensure_finite("fp_transmission", self.peak_transmission)?;
        if self.finesse <= 1.0 {
            return Err(invalid(format!("fp_finesse must exceed 1, got {}", self.finesse)));
        }
        if self.fsr <= 0.0 {
            return Err(invalid(format!("fp_fsr must be positive, got {}", self.fsr)));
        }
        if !(self.peak_transmission > 0.0 && self.peak_transmission <= 1.0) {
            return Err(invalid(format!(
                "fp_transmission must lie in (0, 1], got {}",
                self.peak_transmission
            )));
        }
        Ok(())
    }

    /// Instrument linewidth `fsr / finesse` (Hz).
    pub fn linewidth(&self) -> f64 {
        self.fsr / self.finesse
    }
}

/// `T(ν) = T₀ / (1 + (2F/π)²·sin²(πν/fsr))`.
pub fn airy_transmission(nu: f64, fp: &FabryPerotSpec) -> f64 {
    let coeff = 2.0 * fp.finesse / PI;
    let s = (PI * nu / fp.fsr).sin();
    fp.peak_transmission / (1.0 + coeff * coeff * s * s)
}

/// One Airy peak centered at zero, cut to `|ν| ≤ fsr/2`, on `grid`.
pub fn fp_instrument_profile(fp: &FabryPerotSpec, grid: &Grid) -> Result<Spectrum> {
    fp.validate()?;
    let half = 0.5 * fp.fsr;
    Spectrum::from_fn(*grid, |nu| {
        if nu.abs() <= half {
            airy_transmission(nu, fp)
        } else {
            0.0
        }
    })
}

/// The spectrum recorded by scanning the interferometer across the line,
/// on the line's own grid. Requires the line to be narrower than a tenth of
/// the free spectral range so that neighbouring orders do not overlap.
pub fn scan_spectrum(line: &Spectrum, fp: &FabryPerotSpec) -> Result<Spectrum> {
    fp.validate()?;
    let width = line.fwhm()?;
    if width >= 0.1 * fp.fsr {
        return Err(invalid(format!(
            "line FWHM {width} Hz is not below fsr/10 = {} Hz",
            0.1 * fp.fsr
        )));
    }
    let grid = Grid::symmetric(0.0, line.grid_step(), 0.5 * fp.fsr)?;
    let instrument = fp_instrument_profile(fp, &grid)?;
    convolve(line, &instrument)?.restricted_to(line.grid())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emitter::EmitterParams;
    use crate::spectra::emitter_spectrum;

    #[test]
    fn transmission_closed_forms() {
        let fp = FabryPerotSpec::default();
        assert_eq!(airy_transmission(0.0, &fp), 0.61);
        let min = airy_transmission(0.5 * fp.fsr, &fp);
        let expected = 0.61 / (1.0 + (2.0 * 170.0 / PI).powi(2));
        assert!((min - expected).abs() < 1e-15);
        assert!((min / 0.61 - 8.54e-5).abs() < 1e-7);
        assert!((airy_transmission(fp.fsr, &fp) - 0.61).abs() < 1e-12);
    }

    #[test]
    fn instrument_linewidth_is_220_mhz() {
        let fp = FabryPerotSpec::default();
        let step = 1e6;
        let grid = Grid::symmetric(0.0, step, 0.5 * fp.fsr).unwrap();
        let profile = fp_instrument_profile(&fp, &grid).unwrap();
        let w = profile.fwhm().unwrap();
        assert!((w - 220e6).abs() <= step, "{w}");
        assert!((fp.linewidth() - 220e6).abs() < 0.001e6);
        assert!((profile.area() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_instrument() {
        let fp = FabryPerotSpec {
            finesse: 1.0,
            ..Default::default()
        };
        assert!(fp.validate().is_err());
        let grid = Grid::symmetric(0.0, 1e7, 1e9).unwrap();
        assert!(fp_instrument_profile(&fp, &grid).is_err());
    }

    #[test]
    fn scan_broadens_and_keeps_grid() {
        let line = emitter_spectrum(&EmitterParams::default()).unwrap();
        let scan = scan_spectrum(&line, &FabryPerotSpec::default()).unwrap();
        assert_eq!(scan.grid(), line.grid());
        assert!(scan.fwhm().unwrap() > line.fwhm().unwrap());
        assert!((scan.area() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn scan_rejects_overlapping_orders() {
        let line = emitter_spectrum(&EmitterParams::default()).unwrap();
        let narrow = FabryPerotSpec {
            fsr: 10e9,
            finesse: 100.0,
            ..Default::default()
        };
        assert!(scan_spectrum(&line, &narrow).is_err());
    }
}
