//! Closed-form two-photon overlaps and the Mach-Zehnder coherence envelope.

use crate::emitter::{detuning_variance, EmitterParams};
use crate::error::{ensure_finite, invalid, Result};
use crate::numeric::{erfcx, gaussian_expectation};

/// Gauss-Hermite nodes used to average over the detuning distribution.
pub const VISIBILITY_NODES: usize = 96;

/// Relative slack on `t2_hom ≤ 2·t1`, absorbing rounding in `1/(1/(2t1) + 0)`.
const TRANSFORM_LIMIT_SLACK: f64 = 1e-12;

/// Mean wave-packet overlap of two exponentially decaying photons with pure
/// dephasing whose center frequencies differ by `delta_omega` (rad/s):
/// `(t2/2t1) / (1 + (δ·t2/2)²)`.
pub fn pair_visibility(t1: f64, t2_hom: f64, delta_omega: f64) -> Result<f64> {
    let ratio = coherence_ratio(t1, t2_hom)?;
    ensure_finite("delta_omega", delta_omega)?;
    let x = 0.5 * delta_omega * t2_hom;
    Ok(ratio / (1.0 + x * x))
}

fn coherence_ratio(t1: f64, t2_hom: f64) -> Result<f64> {
    ensure_finite("t1", t1)?;
    ensure_finite("t2_hom", t2_hom)?;
    if t1 <= 0.0 || t2_hom <= 0.0 {
        return Err(invalid(format!("t1 and t2_hom must be positive, got {t1}, {t2_hom}")));
    }
    let ratio = t2_hom / (2.0 * t1);
    if ratio > 1.0 + TRANSFORM_LIMIT_SLACK {
        return Err(invalid(format!(
            "t2_hom: {t2_hom} s exceeds the transform limit 2·t1 = {} s",
            2.0 * t1
        )));
    }
    Ok(ratio.min(1.0))
}

/// `E[e^{−|Δt|/t1}]` for `Δt ~ Normal(0, 2σ²)`, which equals `erfcx(σ/t1)`.
pub fn jitter_overlap_factor(t1: f64, sigma_jitter: f64) -> Result<f64> {
    ensure_finite("sigma_jitter", sigma_jitter)?;
    if sigma_jitter < 0.0 {
        return Err(invalid(format!(
            "sigma_jitter must be non-negative, got {sigma_jitter}"
        )));
    }
    if !(t1 > 0.0) {
        return Err(invalid(format!("t1 must be positive, got {t1}")));
    }
    Ok(erfcx(sigma_jitter / t1))
}

/// HOM visibility for photons emitted `delta_t` apart: the pair overlap
/// averaged over the Gaussian detuning accumulated by spectral diffusion,
/// times the jitter factor.
pub fn visibility_vs_separation(params: &EmitterParams, delta_t: f64) -> Result<f64> {
    visibility_with_nodes(params, delta_t, VISIBILITY_NODES)
}

pub(crate) fn visibility_with_nodes(params: &EmitterParams, delta_t: f64, nodes: usize) -> Result<f64> {
    params.validate()?;
    let variance = detuning_variance(delta_t, params)?;
    Ok(detuning_average(params, variance, nodes)? * jitter_overlap_factor(params.t1, params.sigma_jitter)?)
}

/// Long-separation limit, where the detuning variance saturates at `2σ²`.
pub fn visibility_plateau(params: &EmitterParams) -> Result<f64> {
    params.validate()?;
    let variance = 2.0 * params.sigma_omega * params.sigma_omega;
    Ok(detuning_average(params, variance, VISIBILITY_NODES)? * jitter_overlap_factor(params.t1, params.sigma_jitter)?)
}

fn detuning_average(params: &EmitterParams, variance: f64, nodes: usize) -> Result<f64> {
    let t1 = params.t1;
    let t2 = params.t2_hom();
    let ratio = coherence_ratio(t1, t2)?;
    let half = 0.5 * t2;
    Ok(ratio * gaussian_expectation(variance.sqrt(), nodes, |d| 1.0 / (1.0 + (half * d).powi(2))))
}

/// First-order coherence magnitude seen by an unbalanced Mach-Zehnder with
/// path delay `tau`, in the quasi-static limit:
/// `e^{−τ/t2} · e^{−σ²τ²/2}`.
pub fn mz_fringe_contrast(params: &EmitterParams, tau: f64) -> Result<f64> {
    ensure_finite("tau", tau)?;
    if tau < 0.0 {
        return Err(invalid(format!("tau must be non-negative, got {tau}")));
    }
    let s = params.sigma_omega * tau;
    Ok((-tau / params.t2_hom() - 0.5 * s * s).exp())
}
