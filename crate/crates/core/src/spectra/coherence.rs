//! Coherence extraction from spectra through the Fourier (cosine) transform.

use super::fabry_perot::FabryPerotSpec;
use super::spectrum::Spectrum;
use crate::error::{Error, Result};
use crate::fitting::{fit_exponential, Dataset1D, FitResult};
use std::f64::consts::PI;

/// Largest delay used when fitting the coherence decay (s).
pub const COHERENCE_TAU_MAX: f64 = 600e-12;

/// Delay sampling step for coherence fits (s).
pub const COHERENCE_TAU_STEP: f64 = 10e-12;

/// Largest instrument correction accepted during deconvolution.
pub const DECONVOLUTION_GUARD: f64 = 10.0;

/// Delays `0, step, …, COHERENCE_TAU_MAX` used by every coherence fit.
pub fn coherence_delays() -> Vec<f64> {
    let n = (COHERENCE_TAU_MAX / COHERENCE_TAU_STEP).round() as usize;
    (0..=n).map(|i| i as f64 * COHERENCE_TAU_STEP).collect()
}

/// `|∫ S(ν)·e^{i2πντ} dν|` for a unit-area spectrum.
pub fn coherence_magnitude(spectrum: &Spectrum, tau: f64) -> f64 {
    let grid = spectrum.grid();
    let s = spectrum.intensity();
    let n = s.len();
    let (mut re, mut im) = (0.0, 0.0);
    // rotate about the grid center to keep phases small
    let center = 0.5 * (grid.start + grid.end());
    for (i, v) in s.iter().enumerate() {
        let w = if i == 0 || i + 1 == n { 0.5 } else { 1.0 };
        let phase = 2.0 * PI * (grid.nu(i) - center) * tau;
        re += w * v * phase.cos();
        im += w * v * phase.sin();
    }
    (re * re + im * im).sqrt() * grid.step
}

/// Fourier transform magnitude of a single-peak instrument of linewidth
/// `Δν`: `e^{−π·Δν·τ}`.
pub fn instrument_coherence(fp: &FabryPerotSpec, tau: f64) -> f64 {
    (-PI * fp.linewidth() * tau).exp()
}

/// Coherence of the source after dividing out the instrument, on the
/// delays where the correction stays below [`DECONVOLUTION_GUARD`].
pub fn deconvolved_coherence(measured: &Spectrum, fp: &FabryPerotSpec) -> Result<Vec<(f64, f64)>> {
    fp.validate()?;
    let points: Vec<(f64, f64)> = coherence_delays()
        .into_iter()
        .filter(|tau| 1.0 / instrument_coherence(fp, *tau) < DECONVOLUTION_GUARD)
        .map(|tau| (tau, coherence_magnitude(measured, tau) / instrument_coherence(fp, tau)))
        .collect();
    if points.len() < 3 {
        return Err(Error::DeconvolutionUnstable {
            guard: DECONVOLUTION_GUARD,
        });
    }
    Ok(points)
}

/// Exponential fit of a sampled coherence decay; the returned `tau` is T2.
///
/// Points carry Poisson weights, as photon counts proportional to the
/// contrast would. The samples have no noise of their own, so the standard
/// errors are scaled by the residual scatter.
pub fn fit_coherence_decay(points: &[(f64, f64)]) -> Result<FitResult> {
    let data = Dataset1D::new(
        points.iter().map(|p| p.0).collect(),
        points.iter().map(|p| p.1).collect(),
        "s",
    )?;
    let mut fit = fit_exponential(&data)?;
    let scale = fit.chi2_reduced.sqrt();
    for e in &mut fit.std_errors {
        *e *= scale;
    }
    Ok(fit)
}

/// T2 of the source behind a measured Fabry-Pérot scan.
pub fn coherence_time_from_spectrum(measured: &Spectrum, fp: &FabryPerotSpec) -> Result<f64> {
    Ok(fit_coherence_decay(&deconvolved_coherence(measured, fp)?)?.value("tau"))
}

/// T2 read directly from a spectrum with no instrument in the way.
pub fn intrinsic_coherence_time(spectrum: &Spectrum) -> Result<f64> {
    let points: Vec<(f64, f64)> = coherence_delays()
        .into_iter()
        .map(|tau| (tau, coherence_magnitude(spectrum, tau)))
        .collect();
    Ok(fit_coherence_decay(&points)?.value("tau"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emitter::EmitterParams;
    use crate::instruments::mz_fringe_contrast;
    use crate::spectra::{emitter_spectrum, l2_distance, scan_spectrum, Grid, DEFAULT_STEP};

    #[test]
    fn lorentzian_coherence_is_exponential() {
        let p = EmitterParams {
            sigma_omega: 0.0,
            ..Default::default()
        };
        let s = emitter_spectrum(&p).unwrap();
        let t2 = p.t2_hom();
        let c0 = coherence_magnitude(&s, 0.0);
        assert!((c0 - 1.0).abs() < 1e-12);
        let ratio = coherence_magnitude(&s, t2) / c0;
        // the ±25 GHz cut removes the far Lorentzian tails
        assert!((ratio - (-1.0f64).exp()).abs() < 0.02, "{ratio}");
    }

    #[test]
    fn fringe_contrast_and_spectrum_are_a_fourier_pair() {
        let p = EmitterParams::default();
        let s = emitter_spectrum(&p).unwrap();
        let grid = *s.grid();
        let center = p.omega_0 / (2.0 * PI);
        let dtau = 0.5e-12;
        let taus: Vec<f64> = (0..8000).map(|k| k as f64 * dtau).collect();
        let g: Vec<f64> = taus.iter().map(|t| mz_fringe_contrast(&p, *t).unwrap()).collect();
        let from_coherence = Spectrum::from_fn(grid, |nu| {
            let w = 2.0 * PI * (nu - center);
            let inner: f64 = taus.iter().zip(&g).map(|(t, gv)| gv * (w * t).cos()).sum::<f64>() - 0.5 * g[0];
            (2.0 * inner * dtau).max(0.0)
        })
        .unwrap();
        let d = l2_distance(&s, &from_coherence).unwrap();
        assert!(d <= 1e-4, "{d}");
    }

    #[test]
    fn instrument_free_limit_matches_direct_extraction() {
        let p = EmitterParams::default();
        let line = emitter_spectrum(&p).unwrap();
        let direct = intrinsic_coherence_time(&line).unwrap();
        let sharp = FabryPerotSpec {
            finesse: 1e5,
            ..Default::default()
        };
        let through = coherence_time_from_spectrum(&scan_spectrum(&line, &sharp).unwrap(), &sharp).unwrap();
        assert!((through / direct - 1.0).abs() < 0.01, "{through} vs {direct}");
    }

    #[test]
    fn lorentzian_round_trip() {
        for t2 in [200e-12, 315e-12] {
            let p = EmitterParams {
                sigma_omega: 0.0,
                ..Default::default()
            }
            .with_t2_hom(t2);
            let fp = FabryPerotSpec::default();
            let measured = scan_spectrum(&emitter_spectrum(&p).unwrap(), &fp).unwrap();
            let got = coherence_time_from_spectrum(&measured, &fp).unwrap();
            assert!((got / t2 - 1.0).abs() < 0.02, "{got} vs {t2}");
        }
    }

    #[test]
    fn default_pipeline_band() {
        let p = EmitterParams::default();
        let fp = FabryPerotSpec::default();
        let measured = scan_spectrum(&emitter_spectrum(&p).unwrap(), &fp).unwrap();
        let t2 = coherence_time_from_spectrum(&measured, &fp).unwrap();
        assert!((t2 - 291e-12).abs() <= 15e-12, "{t2}");
    }

    fn rms(values: impl Iterator<Item = f64>) -> f64 {
        let v: Vec<f64> = values.collect();
        (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
    }

    #[test]
    fn reconvolution_restores_measured_coherence() {
        let fp = FabryPerotSpec::default();
        let measured = scan_spectrum(&emitter_spectrum(&EmitterParams::default()).unwrap(), &fp).unwrap();
        let points = deconvolved_coherence(&measured, &fp).unwrap();
        let d = rms(points
            .iter()
            .map(|(tau, g)| g * instrument_coherence(&fp, *tau) - coherence_magnitude(&measured, *tau)));
        assert!(d <= 1e-4, "{d}");
    }

    #[test]
    fn deconvolution_recovers_source_coherence() {
        let fp = FabryPerotSpec::default();
        let line = emitter_spectrum(&EmitterParams::default()).unwrap();
        let measured = scan_spectrum(&line, &fp).unwrap();
        let points = deconvolved_coherence(&measured, &fp).unwrap();
        // limited by the Airy peak differing slightly from a Lorentzian
        let d = rms(points.iter().map(|(tau, g)| g - coherence_magnitude(&line, *tau)));
        assert!(d <= 1e-3, "{d}");
    }

    #[test]
    fn unstable_deconvolution_is_reported() {
        let fp = FabryPerotSpec {
            finesse: 1.01,
            ..Default::default()
        };
        let grid = Grid::symmetric(0.0, DEFAULT_STEP, 5e9).unwrap();
        let s = Spectrum::from_fn(grid, |nu| (-(nu / 1e9).powi(2)).exp()).unwrap();
        assert!(matches!(
            deconvolved_coherence(&s, &fp),
            Err(Error::DeconvolutionUnstable { .. })
        ));
    }
}
