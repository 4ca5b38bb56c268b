//! Area-normalized line profiles (1/Hz).

use crate::error::{ensure_finite, invalid, Result};
use std::f64::consts::PI;

/// `√(8·ln 2)`: FWHM of a unit-variance Gaussian.
pub const GAUSS_FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_3;

/// Voigt kernel step as a fraction of the narrower component width.
pub const VOIGT_STEP_FRACTION: f64 = 1.0 / 50.0;

/// Gaussian kernel support in standard deviations.
const KERNEL_SIGMAS: f64 = 6.0;

pub fn lorentzian(nu: f64, fwhm: f64) -> Result<f64> {
    check_width("fwhm", fwhm)?;
    let g = 0.5 * fwhm;
    Ok(g / (PI * (nu * nu + g * g)))
}

pub fn gaussian(nu: f64, fwhm: f64) -> Result<f64> {
    check_width("fwhm", fwhm)?;
    let s = fwhm / GAUSS_FWHM_PER_SIGMA;
    Ok((-0.5 * (nu / s).powi(2)).exp() / (s * (2.0 * PI).sqrt()))
}

fn check_width(name: &str, w: f64) -> Result<()> {
    ensure_finite(name, w)?;
    if w <= 0.0 {
        return Err(invalid(format!("{name} must be positive, got {w}")));
    }
    Ok(())
}

/// Voigt profile evaluated as a discrete convolution of the Lorentzian with
/// a sampled, renormalized Gaussian kernel.
pub fn voigt(nu: f64, fwhm_l: f64, fwhm_g: f64) -> Result<f64> {
    Ok(VoigtKernel::new(fwhm_l, fwhm_g)?.eval(nu))
}

/// Reusable Voigt evaluator; building the kernel once pays off when the
/// same widths are evaluated at many frequencies.
#[derive(Debug, Clone)]
pub struct VoigtKernel {
    half_l: f64,
    sigma_g: f64,
    /// Gaussian sample offsets and weights summing to one.
    nodes: Vec<(f64, f64)>,
}

impl VoigtKernel {
    pub fn new(fwhm_l: f64, fwhm_g: f64) -> Result<Self> {
        ensure_finite("fwhm_l", fwhm_l)?;
        ensure_finite("fwhm_g", fwhm_g)?;
        if fwhm_l < 0.0 || fwhm_g < 0.0 || fwhm_l + fwhm_g <= 0.0 {
            return Err(invalid(format!(
                "Voigt widths must be non-negative with positive total, got ({fwhm_l}, {fwhm_g})"
            )));
        }
        let sigma_g = fwhm_g / GAUSS_FWHM_PER_SIGMA;
        let nodes = if fwhm_g == 0.0 || fwhm_l == 0.0 {
            Vec::new()
        } else {
            let step = VOIGT_STEP_FRACTION * fwhm_l.min(fwhm_g);
            let half = (KERNEL_SIGMAS * sigma_g / step).ceil() as i64;
            let mut nodes: Vec<(f64, f64)> = (-half..=half)
                .map(|k| {
                    let x = k as f64 * step;
                    (x, (-0.5 * (x / sigma_g).powi(2)).exp())
                })
                .collect();
            let total: f64 = nodes.iter().map(|n| n.1).sum();
            for n in &mut nodes {
                n.1 /= total;
            }
            nodes
        };
        Ok(Self {
            half_l: 0.5 * fwhm_l,
            sigma_g,
            nodes,
        })
    }

    pub fn eval(&self, nu: f64) -> f64 {
        let g = self.half_l;
        if self.sigma_g == 0.0 {
            return g / (PI * (nu * nu + g * g));
        }
        if g == 0.0 {
            return (-0.5 * (nu / self.sigma_g).powi(2)).exp() / (self.sigma_g * (2.0 * PI).sqrt());
        }
        let g2 = g * g;
        let sum: f64 = self
            .nodes
            .iter()
            .map(|(x, w)| {
                let d = nu - x;
                w / (d * d + g2)
            })
            .sum();
        sum * g / PI
    }
}

/// Olivero-Longbothum estimate of the Voigt FWHM.
pub fn voigt_fwhm_estimate(fwhm_l: f64, fwhm_g: f64) -> f64 {
    0.5346 * fwhm_l + (0.2166 * fwhm_l * fwhm_l + fwhm_g * fwhm_g).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::trapezoid;

    fn fwhm_by_scan(f: impl Fn(f64) -> f64, guess: f64) -> f64 {
        let peak = f(0.0);
        // bisection on the right half-maximum crossing
        let (mut lo, mut hi) = (0.0, 10.0 * guess);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.5 * peak {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        2.0 * lo
    }

    #[test]
    fn closed_form_peaks_and_areas() {
        let w = 1.01e9;
        assert!((lorentzian(0.0, w).unwrap() - 2.0 / (PI * w)).abs() < 1e-24);
        let step = 1e6;
        let grid: Vec<f64> = (-20_000..=20_000).map(|k| k as f64 * step).collect();
        let g: Vec<f64> = grid.iter().map(|nu| gaussian(*nu, 0.75e9).unwrap()).collect();
        assert!((trapezoid(&g, step) - 1.0).abs() < 1e-9);
        assert!((fwhm_by_scan(|x| gaussian(x, 0.75e9).unwrap(), 0.75e9) - 0.75e9).abs() < 1.0);
        assert!(lorentzian(0.0, 0.0).is_err());
        assert!(gaussian(0.0, -1.0).is_err());
    }

    #[test]
    fn voigt_reduces_to_components() {
        for k in -400..=400 {
            let nu = k as f64 * 1e7;
            let l = lorentzian(nu, 1.01e9).unwrap();
            assert!((voigt(nu, 1.01e9, 0.0).unwrap() - l).abs() <= 1e-6 * lorentzian(0.0, 1.01e9).unwrap());
            let g = gaussian(nu, 0.75e9).unwrap();
            assert!((voigt(nu, 0.0, 0.75e9).unwrap() - g).abs() < 1e-20);
        }
        assert!(voigt(0.0, 0.0, 0.0).is_err());
        assert!(voigt(0.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn voigt_is_unit_area() {
        let step = 5e6;
        let grid: Vec<f64> = (-60_000..=60_000).map(|k| k as f64 * step).collect();
        let kernel = VoigtKernel::new(1.01e9, 0.75e9).unwrap();
        let v: Vec<f64> = grid.iter().map(|nu| kernel.eval(*nu)).collect();
        // Lorentzian tail beyond ±300 GHz holds (2/π)·(0.505/300) of the area
        let tail = 2.0 / PI * (0.505e9 / 300e9);
        assert!((trapezoid(&v, step) + tail - 1.0).abs() < 1e-5);
        assert!(v.iter().all(|x| *x >= 0.0));
    }

    #[test]
    fn voigt_width_matches_olivero_longbothum() {
        let (l, g) = (1.01e9, 0.75e9);
        let kernel = VoigtKernel::new(l, g).unwrap();
        let numeric = fwhm_by_scan(|x| kernel.eval(x), l + g);
        let estimate = voigt_fwhm_estimate(l, g);
        assert!((numeric / estimate - 1.0).abs() < 0.02, "{numeric} vs {estimate}");
        assert!((estimate - 1.425e9).abs() < 1e6);
    }
}
