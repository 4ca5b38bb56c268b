use super::profiles::{voigt_fwhm_estimate, VoigtKernel, GAUSS_FWHM_PER_SIGMA};
use crate::emitter::EmitterParams;
use crate::error::{invalid, Error, Result};
use crate::numeric::trapezoid;
use std::f64::consts::PI;
use std::fmt::Write as _;

/// Default frequency step (Hz).
pub const DEFAULT_STEP: f64 = 10e6;

/// Default half-span of emitter spectra (Hz).
pub const DEFAULT_HALF_SPAN: f64 = 25e9;

/// Minimum grid span in units of the total line FWHM.
pub const MIN_SPAN_PER_FWHM: f64 = 20.0;

/// Relative tolerance on grid-step agreement.
pub const STEP_TOLERANCE: f64 = 1e-9;

const HZ_PER_GHZ: f64 = 1e9;

/// Uniform frequency grid `start + i·step`, `i < len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl Grid {
    pub fn new(start: f64, step: f64, len: usize) -> Result<Self> {
        if !(start.is_finite() && step.is_finite() && step > 0.0) || len == 0 {
            return Err(invalid(format!("bad grid: start {start}, step {step}, {len} points")));
        }
        Ok(Self { start, step, len })
    }

    /// Odd-length grid centered on `center` reaching at least `half_span` each way.
    pub fn symmetric(center: f64, step: f64, half_span: f64) -> Result<Self> {
        if !(half_span > 0.0) {
            return Err(invalid(format!("half_span must be positive, got {half_span}")));
        }
        let half = (half_span / step - 1e-9).ceil() as usize;
        Self::new(center - half as f64 * step, step, 2 * half + 1)
    }

    pub fn nu(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.nu(i)).collect()
    }

    pub fn end(&self) -> f64 {
        self.nu(self.len - 1)
    }

    pub fn same_step(&self, other: &Grid) -> bool {
        ((self.step - other.step) / self.step).abs() <= STEP_TOLERANCE
    }

    /// Index offset of `other.start` on this grid, if the grids are aligned.
    fn offset_of(&self, other: &Grid) -> Option<i64> {
        let k = ((other.start - self.start) / self.step).round();
        let residual = (other.start - (self.start + k * self.step)).abs();
        (self.same_step(other) && residual <= 1e-6 * self.step).then_some(k as i64)
    }
}

/// A sampled spectrum on a uniform grid, area-normalized (1/Hz).
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: Grid,
    intensity: Vec<f64>,
}

impl Spectrum {
    /// Wraps samples and normalizes them to unit trapezoidal area.
    pub fn new(grid: Grid, intensity: Vec<f64>) -> Result<Self> {
        if intensity.len() != grid.len {
            return Err(Error::GridMismatch(format!(
                "{} samples for a {}-point grid",
                intensity.len(),
                grid.len
            )));
        }
        if let Some(bad) = intensity.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(invalid(format!(
                "spectral intensity must be finite and non-negative, got {bad}"
            )));
        }
        let area = trapezoid(&intensity, grid.step);
        if !(area > 0.0) {
            return Err(invalid("spectrum has zero area"));
        }
        Ok(Self {
            grid,
            intensity: intensity.into_iter().map(|v| v / area).collect(),
        })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.points().into_iter().map(f).collect())
    }

    /// Samples on an arbitrary list of frequencies, which must be uniform.
    pub fn from_samples(nu: &[f64], intensity: Vec<f64>) -> Result<Self> {
        Self::new(uniform_grid(nu)?, intensity)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn grid_step(&self) -> f64 {
        self.grid.step
    }

    pub fn nu_grid(&self) -> Vec<f64> {
        self.grid.points()
    }

    pub fn intensity(&self) -> &[f64] {
        &self.intensity
    }

    pub fn len(&self) -> usize {
        self.intensity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intensity.is_empty()
    }

    pub fn area(&self) -> f64 {
        trapezoid(&self.intensity, self.grid.step)
    }

    /// Intensity-weighted mean frequency.
    pub fn centroid(&self) -> f64 {
        let total: f64 = self.intensity.iter().sum();
        self.intensity
            .iter()
            .enumerate()
            .map(|(i, v)| self.grid.nu(i) * v)
            .sum::<f64>()
            / total
    }

    /// Full width at half maximum by linear interpolation of the crossings.
    pub fn fwhm(&self) -> Result<f64> {
        half_max_width(&self.nu_grid(), &self.intensity)
            .ok_or_else(|| invalid("half maximum not bracketed on the grid"))
    }

    /// Restriction to another grid with the same step; points outside this
    /// spectrum's support read as zero. The result is renormalized.
    pub fn restricted_to(&self, target: &Grid) -> Result<Spectrum> {
        let offset = self
            .grid
            .offset_of(target)
            .ok_or_else(|| Error::GridMismatch("grids are not aligned on a common step".into()))?;
        let values = (0..target.len)
            .map(|i| {
                let j = offset + i as i64;
                if j >= 0 && (j as usize) < self.len() {
                    self.intensity[j as usize]
                } else {
                    0.0
                }
            })
            .collect();
        Spectrum::new(*target, values)
    }

    /// `#` metadata lines followed by `nu_GHz,intensity_per_GHz` rows.
    pub fn to_csv(&self, metadata: &[(&str, String)]) -> String {
        let mut s = String::new();
        for (k, v) in metadata {
            let _ = writeln!(s, "# {k}={v}");
        }
        s.push_str("nu_GHz,intensity_per_GHz\n");
        for (i, v) in self.intensity.iter().enumerate() {
            let _ = writeln!(s, "{},{:e}", self.grid.nu(i) / HZ_PER_GHZ, v * HZ_PER_GHZ);
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Spectrum> {
        let mut nu = Vec::new();
        let mut values = Vec::new();
        let mut header_seen = false;
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !header_seen {
                if line != "nu_GHz,intensity_per_GHz" {
                    return Err(Error::Parse {
                        line: n + 1,
                        message: format!("expected header nu_GHz,intensity_per_GHz, got {line}"),
                    });
                }
                header_seen = true;
                continue;
            }
            let parse = |s: &str| {
                s.trim().parse::<f64>().map_err(|e| Error::Parse {
                    line: n + 1,
                    message: format!("{s}: {e}"),
                })
            };
            let (a, b) = line.split_once(',').ok_or_else(|| Error::Parse {
                line: n + 1,
                message: "expected two columns".into(),
            })?;
            nu.push(parse(a)? * HZ_PER_GHZ);
            values.push(parse(b)? / HZ_PER_GHZ);
        }
        if nu.len() < 2 {
            return Err(invalid("spectrum CSV needs at least two rows"));
        }
        Spectrum::from_samples(&nu, values)
    }
}

/// Checks that `nu` is uniform to [`STEP_TOLERANCE`] and returns its grid.
pub fn uniform_grid(nu: &[f64]) -> Result<Grid> {
    if nu.len() < 2 {
        return Err(invalid("a grid needs at least two points"));
    }
    let step = (nu[nu.len() - 1] - nu[0]) / (nu.len() - 1) as f64;
    if !(step > 0.0) {
        return Err(invalid("grid must be increasing"));
    }
    for (i, w) in nu.windows(2).enumerate() {
        if ((w[1] - w[0] - step) / step).abs() > STEP_TOLERANCE {
            return Err(Error::GridMismatch(format!(
                "non-uniform grid step {} at index {i}, expected {step}",
                w[1] - w[0]
            )));
        }
    }
    Grid::new(nu[0], step, nu.len())
}

/// Width at half of the maximum of `y` above zero, interpolating linearly
/// between samples. `None` when either crossing lies off the ends.
pub(crate) fn half_max_width(x: &[f64], y: &[f64]) -> Option<f64> {
    let (peak, ymax) = y.iter().copied().enumerate().max_by(|a, b| a.1.total_cmp(&b.1))?;
    let half = 0.5 * ymax;
    if !(ymax > 0.0) {
        return None;
    }
    let left = (0..peak).rev().find(|&i| y[i] <= half)?;
    let right = (peak + 1..y.len()).find(|&i| y[i] <= half)?;
    let cross = |a: usize, b: usize| x[a] + (half - y[a]) * (x[b] - x[a]) / (y[b] - y[a]);
    Some(cross(right - 1, right) - cross(left + 1, left))
}

/// Lorentzian (homogeneous) and Gaussian (inhomogeneous) widths, in Hz, of
/// the time-averaged emission line.
pub fn emitter_line_widths(params: &EmitterParams) -> (f64, f64) {
    let fwhm_l = 1.0 / (PI * params.t2_hom());
    let fwhm_g = params.sigma_omega / (2.0 * PI) * GAUSS_FWHM_PER_SIGMA;
    (fwhm_l, fwhm_g)
}

/// Time-averaged spectrum under quasi-static diffusion: a Voigt line on the
/// default grid, widened when the line needs more than ±25 GHz.
pub fn emitter_spectrum(params: &EmitterParams) -> Result<Spectrum> {
    params.validate()?;
    let (fwhm_l, fwhm_g) = emitter_line_widths(params);
    let half_span = DEFAULT_HALF_SPAN.max(0.5 * MIN_SPAN_PER_FWHM * voigt_fwhm_estimate(fwhm_l, fwhm_g));
    emitter_spectrum_on(
        params,
        Grid::symmetric(params.omega_0 / (2.0 * PI), DEFAULT_STEP, half_span)?,
    )
}

pub fn emitter_spectrum_on(params: &EmitterParams, grid: Grid) -> Result<Spectrum> {
    let (fwhm_l, fwhm_g) = emitter_line_widths(params);
    let center = params.omega_0 / (2.0 * PI);
    let kernel = VoigtKernel::new(fwhm_l, fwhm_g)?;
    Spectrum::from_fn(grid, |nu| kernel.eval(nu - center))
}

/// Linear convolution on the union support, renormalized.
pub fn convolve(a: &Spectrum, b: &Spectrum) -> Result<Spectrum> {
    if !a.grid.same_step(&b.grid) {
        return Err(Error::GridMismatch(format!(
            "grid steps differ: {} vs {} Hz",
            a.grid.step, b.grid.step
        )));
    }
    let (x, y) = (&a.intensity, &b.intensity);
    let mut out = vec![0.0; x.len() + y.len() - 1];
    for (i, xi) in x.iter().enumerate() {
        if *xi == 0.0 {
            continue;
        }
        for (o, yj) in out[i..i + y.len()].iter_mut().zip(y) {
            *o += xi * yj;
        }
    }
    let grid = Grid::new(a.grid.start + b.grid.start, a.grid.step, out.len())?;
    Spectrum::new(grid, out)
}

/// L2 distance `√∫(a − b)² dν` of two spectra on the same grid, in units
/// of GHz^(-1/2) so that line-scale spectra give values of order one.
pub fn l2_distance(a: &Spectrum, b: &Spectrum) -> Result<f64> {
    if a.grid.offset_of(&b.grid) != Some(0) || a.len() != b.len() {
        return Err(Error::GridMismatch("spectra are on different grids".into()));
    }
    let step_ghz = a.grid.step / HZ_PER_GHZ;
    let sum: f64 = a
        .intensity
        .iter()
        .zip(&b.intensity)
        .map(|(x, y)| ((x - y) * HZ_PER_GHZ).powi(2))
        .sum();
    Ok((sum * step_ghz).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::{gaussian, lorentzian};

    fn line(fwhm: f64, gauss: bool) -> Spectrum {
        let grid = Grid::symmetric(0.0, DEFAULT_STEP, 60e9).unwrap();
        Spectrum::from_fn(grid, |nu| {
            if gauss {
                gaussian(nu, fwhm).unwrap()
            } else {
                lorentzian(nu, fwhm).unwrap()
            }
        })
        .unwrap()
    }

    #[test]
    fn grid_construction() {
        let g = Grid::symmetric(1.0, 0.5, 2.0).unwrap();
        assert_eq!(g.len, 9);
        assert_eq!(g.start, -1.0);
        assert_eq!(g.end(), 3.0);
        assert!(Grid::new(0.0, 0.0, 3).is_err());
    }

    #[test]
    fn default_emitter_spectrum_widths() {
        let p = EmitterParams::default();
        let (l, g) = emitter_line_widths(&p);
        assert!((l - 1.01e9).abs() < 0.005e9, "{l}");
        assert!((g - 0.75e9).abs() < 0.005e9, "{g}");
        let s = emitter_spectrum(&p).unwrap();
        assert!((s.area() - 1.0).abs() < 1e-6);
        assert!(s.intensity().iter().all(|v| *v >= 0.0));
        let span = s.grid().end() - s.grid().start;
        assert!(span >= MIN_SPAN_PER_FWHM * s.fwhm().unwrap());
        assert!((s.grid().start + s.grid().end()).abs() < 1e-3);
    }

    #[test]
    fn transform_limited_line_is_lorentzian() {
        let p = EmitterParams {
            gamma_pd: 0.0,
            sigma_omega: 0.0,
            ..Default::default()
        };
        let s = emitter_spectrum(&p).unwrap();
        let expected = 1.0 / (2.0 * PI * p.t1);
        assert!((expected - 0.98e9).abs() < 0.005e9);
        assert!((s.fwhm().unwrap() - expected).abs() < DEFAULT_STEP);
    }

    #[test]
    fn wide_lines_get_a_wider_grid() {
        let p = EmitterParams {
            sigma_omega: 2e10,
            ..Default::default()
        };
        let s = emitter_spectrum(&p).unwrap();
        let span = s.grid().end() - s.grid().start;
        assert!(span >= MIN_SPAN_PER_FWHM * s.fwhm().unwrap());
    }

    #[test]
    fn convolution_with_delta_is_identity() {
        let x = line(1.0e9, false);
        let delta_grid = Grid::symmetric(0.0, DEFAULT_STEP, 5.0 * DEFAULT_STEP).unwrap();
        let mut d = vec![0.0; delta_grid.len];
        d[delta_grid.len / 2] = 1.0;
        let delta = Spectrum::new(delta_grid, d).unwrap();
        let y = convolve(&x, &delta).unwrap().restricted_to(x.grid()).unwrap();
        let worst = x
            .intensity()
            .iter()
            .zip(y.intensity())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-9 * x.intensity().iter().cloned().fold(0.0, f64::max));
    }

    #[test]
    fn lorentzian_widths_add() {
        let a = line(1.01e9, false);
        let b = line(0.22e9, false);
        let c = convolve(&a, &b).unwrap();
        let w = c.fwhm().unwrap();
        assert!((w / 1.23e9 - 1.0).abs() < 0.01, "{w}");
    }

    #[test]
    fn gaussian_variances_add() {
        let a = line(0.75e9, true);
        let b = line(0.5e9, true);
        let c = convolve(&a, &b).unwrap();
        let var = |s: &Spectrum| {
            let m = s.centroid();
            s.nu_grid()
                .iter()
                .zip(s.intensity())
                .map(|(nu, v)| (nu - m).powi(2) * v)
                .sum::<f64>()
                * s.grid_step()
        };
        let expected = var(&a) + var(&b);
        assert!((var(&c) / expected - 1.0).abs() < 0.01);
    }

    #[test]
    fn convolution_commutes_and_associates() {
        let grid = Grid::symmetric(0.0, 20e6, 4e9).unwrap();
        let a = Spectrum::from_fn(grid, |nu| lorentzian(nu - 1e8, 0.5e9).unwrap()).unwrap();
        let b = Spectrum::from_fn(grid, |nu| gaussian(nu, 0.3e9).unwrap()).unwrap();
        let c = Spectrum::from_fn(grid, |nu| lorentzian(nu + 2e8, 0.2e9).unwrap()).unwrap();
        let ab = convolve(&a, &b).unwrap();
        let ba = convolve(&b, &a).unwrap();
        assert!(l2_distance(&ab, &ba).unwrap() < 1e-6);
        let left = convolve(&ab, &c).unwrap();
        let right = convolve(&a, &convolve(&b, &c).unwrap()).unwrap();
        assert!(l2_distance(&left, &right).unwrap() < 1e-6);
    }

    #[test]
    fn mismatched_steps_are_rejected() {
        let a = Spectrum::from_fn(Grid::new(0.0, 1.0, 5).unwrap(), |_| 1.0).unwrap();
        let b = Spectrum::from_fn(Grid::new(0.0, 2.0, 5).unwrap(), |_| 1.0).unwrap();
        assert!(matches!(convolve(&a, &b), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn csv_round_trip() {
        let s = emitter_spectrum(&EmitterParams::default()).unwrap();
        let text = s.to_csv(&[("source", "test".into())]);
        assert!(text.starts_with("# source=test\nnu_GHz,intensity_per_GHz\n"));
        let back = Spectrum::from_csv(&text).unwrap();
        assert_eq!(back.len(), s.len());
        assert!(l2_distance(&back, &s).unwrap() < 1e-9);
    }

    #[test]
    fn csv_reader_rejects_non_uniform_grid() {
        let text = "nu_GHz,intensity_per_GHz\n0.0,1\n0.01,1\n0.0200001,1\n0.03,1\n";
        assert!(Spectrum::from_csv(text).is_err());
        assert!(Spectrum::from_csv("nu,i\n0,1\n").is_err());
    }
}
