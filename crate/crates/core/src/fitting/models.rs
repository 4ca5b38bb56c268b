//! Model fits built on the shared simplex minimizer.
//!
//! Every fit minimizes the weighted residual sum of squares from three
//! deterministic starts (the heuristic start and two rescalings of its
//! shape parameters), then restarts the simplex once from the best point.

use super::data::{Dataset1D, FitResult};
use super::minimize::{minimize, Bound, Minimum};
use crate::error::{invalid, Result};
use crate::spectra::{half_max_width, VoigtKernel};
use std::f64::consts::FRAC_PI_2;

struct Model<'a> {
    name: &'static str,
    params: &'static [&'static str],
    eval: &'a dyn Fn(&[f64], f64) -> f64,
}

/// Reweighting passes applied to Poisson-weighted data.
const POISSON_REWEIGHTS: usize = 2;

fn chi2_with<'a>(model: &'a Model<'_>, data: &'a Dataset1D, sigma: &'a [f64]) -> impl Fn(&[f64]) -> f64 + 'a {
    move |p: &[f64]| -> f64 {
        data.x
            .iter()
            .zip(&data.y)
            .zip(sigma)
            .map(|((x, y), s)| ((y - (model.eval)(p, *x)) / s).powi(2))
            .sum()
    }
}

fn weighted_fit(
    model: Model<'_>,
    data: &Dataset1D,
    init: Vec<f64>,
    bounds: Vec<Bound>,
    shape: &[usize],
    factors: [f64; 2],
) -> Result<FitResult> {
    let mut sigma = data.sigmas();
    let mut starts = vec![init.clone()];
    for f in factors {
        let mut s = init.clone();
        for &i in shape {
            s[i] = (s[i] * f).clamp(bounds[i].lo, bounds[i].hi);
        }
        starts.push(s);
    }
    let mut best: Option<Minimum> = None;
    let mut iterations = 0;
    for s in &starts {
        let m = minimize(chi2_with(&model, data, &sigma), s, &bounds)?;
        iterations += m.n_iterations;
        if best.as_ref().is_none_or(|b| m.value < b.value) {
            best = Some(m);
        }
    }
    let mut polished = minimize(
        chi2_with(&model, data, &sigma),
        &best.expect("at least one start").point,
        &bounds,
    )?;
    iterations += polished.n_iterations;
    // observed counts as weights pull the fit below sparse tails, so
    // Poisson-weighted fits are repeated with the model as variance
    if data.y_err.is_none() {
        let floor = data.poisson_floor();
        for _ in 0..POISSON_REWEIGHTS {
            sigma = data
                .x
                .iter()
                .map(|x| (model.eval)(&polished.point, *x).max(floor).sqrt())
                .collect();
            polished = minimize(chi2_with(&model, data, &sigma), &polished.point, &bounds)?;
            iterations += polished.n_iterations;
        }
    }
    let residuals: Vec<f64> = data
        .x
        .iter()
        .zip(&data.y)
        .map(|(x, y)| y - (model.eval)(&polished.point, *x))
        .collect();
    let dof = data.len().saturating_sub(model.params.len()).max(1);
    Ok(FitResult {
        model: model.name.to_string(),
        param_names: model.params.iter().map(|s| s.to_string()).collect(),
        values: polished.point,
        std_errors: polished.std_errors,
        chi2_reduced: polished.value / dof as f64,
        residuals,
        converged: polished.converged,
        n_iterations: iterations,
        flat_curvature: polished.flat_curvature,
    })
}

fn require_points(data: &Dataset1D, n: usize, model: &str) -> Result<()> {
    if data.len() < n {
        return Err(invalid(format!(
            "{model} fit needs at least {n} points, got {}",
            data.len()
        )));
    }
    Ok(())
}

/// Points sorted by abscissa.
fn sorted(data: &Dataset1D) -> (Vec<f64>, Vec<f64>) {
    let mut idx: Vec<usize> = (0..data.len()).collect();
    idx.sort_by(|a, b| data.x[*a].total_cmp(&data.x[*b]));
    (
        idx.iter().map(|i| data.x[*i]).collect(),
        idx.iter().map(|i| data.y[*i]).collect(),
    )
}

/// Abscissa where `y` first falls to `level`, interpolated.
fn first_crossing(x: &[f64], y: &[f64], level: f64) -> Option<f64> {
    let k = y.iter().position(|v| *v <= level)?;
    if k == 0 {
        return Some(x[0]);
    }
    let (x0, x1, y0, y1) = (x[k - 1], x[k], y[k - 1], y[k]);
    Some(if y1 == y0 {
        x1
    } else {
        x0 + (level - y0) * (x1 - x0) / (y1 - y0)
    })
}

/// `a·e^{−t/τ} + b`. Parameters `a`, `tau`, `b`.
pub fn fit_exponential(data: &Dataset1D) -> Result<FitResult> {
    require_points(data, 4, "exponential")?;
    let (x, y) = sorted(data);
    let (x_lo, x_hi) = (x[0], x[x.len() - 1]);
    let span = x_hi - x_lo;
    if !(span > 0.0) {
        return Err(invalid("exponential fit needs distinct abscissae"));
    }
    let tail = (y.len() / 10).max(1);
    let b0 = y[y.len() - tail..].iter().sum::<f64>() / tail as f64;
    let head = y[0] - b0;
    let y_scale = y.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let tau0 = if head > 0.0 {
        first_crossing(&x, &y, b0 + head / std::f64::consts::E).map_or(span / 3.0, |t| t - x_lo)
    } else {
        span / 3.0
    }
    .clamp(span * 1e-3, span * 10.0);
    let a0 = (head.max(1e-3 * y_scale)) * (x_lo / tau0).exp();
    let eval = |p: &[f64], t: f64| p[0] * (-t / p[1]).exp() + p[2];
    weighted_fit(
        Model {
            name: "exponential",
            params: &["a", "tau", "b"],
            eval: &eval,
        },
        data,
        vec![a0, tau0, b0],
        vec![
            Bound::at_least(0.0),
            Bound::new(span * 1e-6, span * 1e3),
            Bound::new(-y_scale, y_scale),
        ],
        &[1],
        [0.5, 2.0],
    )
}

/// `r_max·sin²((π/2)·√(P/P_π))`. Parameters `r_max`, `p_pi`.
pub fn fit_rabi(data: &Dataset1D) -> Result<FitResult> {
    require_points(data, 3, "rabi")?;
    if data.x.iter().any(|p| *p < 0.0) {
        return Err(invalid("pump powers must be non-negative"));
    }
    let (x, y) = sorted(data);
    let (peak, r0) = y
        .iter()
        .copied()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty");
    let x_hi = x[x.len() - 1];
    if !(r0 > 0.0 && x_hi > 0.0) {
        return Err(invalid("rabi fit needs a positive signal at positive power"));
    }
    let p_pi0 = if x[peak] > 0.0 { x[peak] } else { x_hi };
    let eval = |p: &[f64], power: f64| {
        let s = (FRAC_PI_2 * (power / p[1]).sqrt()).sin();
        p[0] * s * s
    };
    weighted_fit(
        Model {
            name: "rabi",
            params: &["r_max", "p_pi"],
            eval: &eval,
        },
        data,
        vec![r0, p_pi0],
        vec![Bound::new(0.0, 10.0 * r0), Bound::new(1e-6 * x_hi, 100.0 * x_hi)],
        &[1],
        [0.7, 1.4],
    )
}

struct PeakGuess {
    center: f64,
    width: f64,
    area: f64,
    baseline: f64,
    x_lo: f64,
    x_hi: f64,
    y_scale: f64,
}

fn peak_guess(data: &Dataset1D) -> Result<PeakGuess> {
    let (x, y) = sorted(data);
    let edge = (y.len() / 20).max(1);
    let baseline = (y[..edge].iter().sum::<f64>() + y[y.len() - edge..].iter().sum::<f64>()) / (2 * edge) as f64;
    let lifted: Vec<f64> = y.iter().map(|v| v - baseline).collect();
    let width = half_max_width(&x, &lifted).ok_or_else(|| invalid("no resolved peak in the data"))?;
    let (peak, _) = lifted
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty");
    let area = x
        .windows(2)
        .zip(lifted.windows(2))
        .map(|(xw, yw)| 0.5 * (xw[1] - xw[0]) * (yw[0] + yw[1]))
        .sum::<f64>()
        .max(f64::MIN_POSITIVE);
    let y_scale = y.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    Ok(PeakGuess {
        center: x[peak],
        width,
        area,
        baseline,
        x_lo: x[0],
        x_hi: x[x.len() - 1],
        y_scale,
    })
}

/// `amplitude·L(ν − ν₀; fwhm) + baseline` with `L` area-normalized.
pub fn fit_lorentzian(data: &Dataset1D) -> Result<FitResult> {
    require_points(data, 5, "lorentzian")?;
    let g = peak_guess(data)?;
    let eval = |p: &[f64], nu: f64| {
        let h = 0.5 * p[2];
        p[0] * h / (std::f64::consts::PI * ((nu - p[1]).powi(2) + h * h)) + p[3]
    };
    weighted_fit(
        Model {
            name: "lorentzian",
            params: &["amplitude", "nu0", "fwhm", "baseline"],
            eval: &eval,
        },
        data,
        vec![g.area, g.center, g.width, g.baseline],
        vec![
            Bound::at_least(0.0),
            Bound::new(g.x_lo, g.x_hi),
            Bound::new(1e-3 * g.width, 10.0 * g.width),
            Bound::new(-g.y_scale, g.y_scale),
        ],
        &[2],
        [0.7, 1.4],
    )
}

/// `amplitude·V(ν − ν₀; fwhm_l + instrument_fwhm_l, fwhm_g) + baseline`.
///
/// `fwhm_l` is the intrinsic Lorentzian width: the instrument's Lorentzian
/// width is added inside the model, since Lorentzian widths add under
/// convolution.
pub fn fit_voigt(data: &Dataset1D, instrument_fwhm_l: f64) -> Result<FitResult> {
    require_points(data, 6, "voigt")?;
    if !(instrument_fwhm_l >= 0.0 && instrument_fwhm_l.is_finite()) {
        return Err(invalid(format!(
            "instrument width must be finite and non-negative, got {instrument_fwhm_l}"
        )));
    }
    let g = peak_guess(data)?;
    let floor = 1e-3 * g.width;
    let eval = |p: &[f64], nu: f64| -> f64 {
        // rebuilding the kernel per point would dominate; cache by widths
        thread_local! {
            static CACHE: std::cell::RefCell<Option<((f64, f64), VoigtKernel)>> = const { std::cell::RefCell::new(None) };
        }
        let widths = ((p[2] + instrument_fwhm_l).max(floor), p[3]);
        CACHE.with(|c| {
            let mut c = c.borrow_mut();
            if c.as_ref().is_none_or(|(w, _)| *w != widths) {
                *c = Some((widths, VoigtKernel::new(widths.0, widths.1).expect("bounded widths")));
            }
            p[0] * c.as_ref().expect("filled").1.eval(nu - p[1]) + p[4]
        })
    };
    let half = 0.5 * g.width;
    weighted_fit(
        Model {
            name: "voigt",
            params: &["amplitude", "nu0", "fwhm_l", "fwhm_g", "baseline"],
            eval: &eval,
        },
        data,
        vec![
            g.area,
            g.center,
            (half - instrument_fwhm_l).max(0.1 * half),
            half,
            g.baseline,
        ],
        vec![
            Bound::at_least(0.0),
            Bound::new(g.x_lo, g.x_hi),
            Bound::new(0.0, 10.0 * g.width),
            Bound::new(0.0, 10.0 * g.width),
            Bound::new(-g.y_scale, g.y_scale),
        ],
        &[2, 3],
        [0.7, 1.4],
    )
}

/// `V(Δ) = V∞ + (V₀ − V∞)·e^{−Δ/τ_d}`. Parameters `v_inf`, `v0`, `tau_d`.
pub fn fit_visibility_decay(data: &Dataset1D) -> Result<FitResult> {
    require_points(data, 4, "visibility decay")?;
    let (x, y) = sorted(data);
    let (x_lo, x_hi) = (x[0], x[x.len() - 1]);
    if !(x_hi > x_lo) {
        return Err(invalid("visibility decay fit needs distinct separations"));
    }
    let (v0, v_inf) = (y[0], y[y.len() - 1]);
    let mid = 0.5 * (v0 + v_inf);
    let tau0 = if v0 > v_inf { first_crossing(&x, &y, mid) } else { None }
        .map_or(0.5 * (x_lo + x_hi), |t| t.max(1e-3 * x_hi))
        .clamp(1e-3 * x_hi, 10.0 * x_hi);
    let eval = |p: &[f64], d: f64| p[0] + (p[1] - p[0]) * (-d / p[2]).exp();
    weighted_fit(
        Model {
            name: "visibility_decay",
            params: &["v_inf", "v0", "tau_d"],
            eval: &eval,
        },
        data,
        vec![v_inf, v0, tau0],
        vec![
            Bound::new(-1.0, 2.0),
            Bound::new(-1.0, 2.0),
            Bound::new(1e-6 * x_hi, 1e3 * x_hi),
        ],
        &[2],
        [0.5, 2.0],
    )
}
