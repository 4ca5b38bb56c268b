//! Slow spectral diffusion as a stationary Ornstein-Uhlenbeck process on the
//! emission frequency, sampled with its exact transition kernel.

use super::EmitterParams;
use crate::error::{ensure_finite, invalid, Result};
use rand::Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuState {
    /// Current angular-frequency offset (rad/s).
    pub omega_current: f64,
    /// Time of the last update (s).
    pub t_last: f64,
    pub rng_stream_id: u64,
}

impl OuState {
    /// A state drawn from the stationary law `Normal(omega_0, sigma_omega²)`.
    pub fn stationary<R: Rng + ?Sized>(params: &EmitterParams, t: f64, stream: u64, rng: &mut R) -> Self {
        let z: f64 = rng.sample(StandardNormal);
        Self {
            omega_current: params.omega_0 + params.sigma_omega * z,
            t_last: t,
            rng_stream_id: stream,
        }
    }
}

/// Advances the process by `dt`:
/// `ω' = ω₀ + (ω − ω₀)·e^{−dt/τ} + σ·√(1 − e^{−2dt/τ})·z`.
pub fn ou_step<R: Rng + ?Sized>(state: &OuState, dt: f64, params: &EmitterParams, rng: &mut R) -> Result<OuState> {
    ensure_finite("dt", dt)?;
    if dt < 0.0 {
        return Err(invalid(format!("dt must be non-negative, got {dt}")));
    }
    if dt == 0.0 {
        return Ok(*state);
    }
    let z: f64 = rng.sample(StandardNormal);
    Ok(OuState {
        omega_current: transition(state.omega_current, dt, params, z),
        t_last: state.t_last + dt,
        rng_stream_id: state.rng_stream_id,
    })
}

pub(crate) fn transition(omega: f64, dt: f64, params: &EmitterParams, z: f64) -> f64 {
    let decay = (-dt / params.tau_c).exp();
    let spread = (-(-2.0 * dt / params.tau_c).exp_m1()).sqrt();
    params.omega_0 + (omega - params.omega_0) * decay + params.sigma_omega * spread * z
}

/// One step of the process conditioned on its value `omega_end` a further
/// `remaining` seconds after the step. Reduces to the free transition as
/// `remaining → ∞`.
pub(crate) fn bridge_transition(
    omega: f64,
    dt: f64,
    omega_end: f64,
    remaining: f64,
    params: &EmitterParams,
    z: f64,
) -> f64 {
    let tau = params.tau_c;
    let a = (-dt / tau).exp();
    let b = (-remaining / tau).exp();
    let one_minus_a2 = -(-2.0 * dt / tau).exp_m1();
    let one_minus_b2 = -(-2.0 * remaining / tau).exp_m1();
    let denom = 1.0 - a * a * b * b;
    let x = omega - params.omega_0;
    let xe = omega_end - params.omega_0;
    let mean = (one_minus_b2 * a * x + one_minus_a2 * b * xe) / denom;
    let var = (one_minus_a2 * one_minus_b2 / denom).max(0.0);
    params.omega_0 + mean + params.sigma_omega * var.sqrt() * z
}

/// Variance of `ω(t+Δ) − ω(t)` under the stationary process:
/// `2σ²(1 − e^{−Δ/τ})`.
pub fn detuning_variance(delta_t: f64, params: &EmitterParams) -> Result<f64> {
    ensure_finite("delta_t", delta_t)?;
    if delta_t < 0.0 {
        return Err(invalid(format!("delta_t must be non-negative, got {delta_t}")));
    }
    let s2 = params.sigma_omega * params.sigma_omega;
    Ok(-2.0 * s2 * (-delta_t / params.tau_c).exp_m1())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mean_var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, v)
    }

    #[test]
    fn zero_step_is_identity() {
        let p = EmitterParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = OuState {
            omega_current: 1.234e9,
            t_last: 0.5,
            rng_stream_id: 9,
        };
        assert_eq!(ou_step(&s, 0.0, &p, &mut rng).unwrap(), s);
    }

    #[test]
    fn rejects_bad_dt() {
        let p = EmitterParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = OuState {
            omega_current: 0.0,
            t_last: 0.0,
            rng_stream_id: 0,
        };
        assert!(ou_step(&s, f64::NAN, &p, &mut rng).is_err());
        assert!(ou_step(&s, f64::INFINITY, &p, &mut rng).is_err());
        assert!(ou_step(&s, -1e-9, &p, &mut rng).is_err());
    }

    #[test]
    fn long_step_reaches_stationary_law() {
        let p = EmitterParams {
            omega_0: 3e8,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let start = OuState {
            omega_current: 5e10,
            t_last: 0.0,
            rng_stream_id: 0,
        };
        let n = 100_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| ou_step(&start, 1e3 * p.tau_c, &p, &mut rng).unwrap().omega_current)
            .collect();
        let (m, v) = mean_var(&xs);
        let s2 = p.sigma_omega.powi(2);
        let se_mean = (s2 / n as f64).sqrt();
        assert!((m - p.omega_0).abs() < 3.0 * se_mean, "mean {m}");
        // var of sample variance ≈ 2σ⁴/n
        assert!((v - s2).abs() < 3.0 * s2 * (2.0 / n as f64).sqrt(), "var {v}");
    }

    #[test]
    fn path_autocovariance_matches_closed_form() {
        let p = EmitterParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let dt = p.tau_c / 10.0;
        let lag = 10;
        let n = 400_000;
        let mut s = OuState::stationary(&p, 0.0, 0, &mut rng);
        let mut path = Vec::with_capacity(n);
        for _ in 0..n {
            path.push(s.omega_current);
            s = ou_step(&s, dt, &p, &mut rng).unwrap();
        }
        let cov: f64 = path.iter().zip(&path[lag..]).map(|(a, b)| a * b).sum::<f64>() / (n - lag) as f64;
        let expected = p.sigma_omega.powi(2) * (-1.0f64).exp();
        assert!((cov - expected).abs() / expected < 0.05, "cov {cov} vs {expected}");
    }

    #[test]
    fn step_splitting_preserves_moments() {
        let p = EmitterParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let (dt1, dt2) = (0.3 * p.tau_c, 0.9 * p.tau_c);
        let start = OuState {
            omega_current: 4e9,
            t_last: 0.0,
            rng_stream_id: 0,
        };
        let n = 100_000;
        let split: Vec<f64> = (0..n)
            .map(|_| {
                let a = ou_step(&start, dt1, &p, &mut rng).unwrap();
                ou_step(&a, dt2, &p, &mut rng).unwrap().omega_current
            })
            .collect();
        let whole: Vec<f64> = (0..n)
            .map(|_| ou_step(&start, dt1 + dt2, &p, &mut rng).unwrap().omega_current)
            .collect();
        let (m1, v1) = mean_var(&split);
        let (m2, v2) = mean_var(&whole);
        // exact moments of the single step
        let decay = (-(dt1 + dt2) / p.tau_c).exp();
        let mean = 4e9 * decay;
        let var = p.sigma_omega.powi(2) * (1.0 - decay * decay);
        let se_m = (var / n as f64).sqrt();
        let se_v = var * (2.0 / n as f64).sqrt();
        for (m, v) in [(m1, v1), (m2, v2)] {
            assert!((m - mean).abs() < 3.0 * se_m);
            assert!((v - var).abs() < 3.0 * se_v);
        }
        assert!((m1 - m2).abs() < 3.0 * se_m * 2f64.sqrt());
    }

    #[test]
    fn detuning_variance_limits() {
        let p = EmitterParams::default();
        assert_eq!(detuning_variance(0.0, &p).unwrap(), 0.0);
        let s2 = p.sigma_omega.powi(2);
        assert!((detuning_variance(1.0, &p).unwrap() - 2.0 * s2).abs() < 1e-9 * s2);
        assert!(detuning_variance(-1.0, &p).is_err());
        assert!(detuning_variance(f64::NAN, &p).is_err());
    }

    #[test]
    fn detuning_variance_matches_paired_sampling() {
        let p = EmitterParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let n = 100_000;
        let diffs: Vec<f64> = (0..n)
            .map(|_| {
                let a = OuState::stationary(&p, 0.0, 0, &mut rng);
                let b = ou_step(&a, p.tau_c, &p, &mut rng).unwrap();
                b.omega_current - a.omega_current
            })
            .collect();
        let (_, v) = mean_var(&diffs);
        let expected = 2.0 * p.sigma_omega.powi(2) * (1.0 - (-1.0f64).exp());
        assert!((detuning_variance(p.tau_c, &p).unwrap() - expected).abs() < 1e-6 * expected);
        assert!((v - expected).abs() < 3.0 * expected * (2.0 / n as f64).sqrt());
    }

    #[test]
    fn bridge_has_correct_conditional_moments() {
        // Brute-force oracle: sample (x_mid, x_end) jointly from the free
        // process and keep pairs whose endpoint lands near a target.
        let p = EmitterParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let (dt, rem) = (0.4 * p.tau_c, 0.6 * p.tau_c);
        let x0 = 1e9;
        let target = -1e9;
        let tol = 0.02 * p.sigma_omega;
        let mut kept = Vec::new();
        while kept.len() < 20_000 {
            let z1: f64 = rng.sample(StandardNormal);
            let z2: f64 = rng.sample(StandardNormal);
            let mid = transition(x0, dt, &p, z1);
            let end = transition(mid, rem, &p, z2);
            if (end - target).abs() < tol {
                kept.push(mid);
            }
        }
        let (m_mc, v_mc) = mean_var(&kept);
        let bridged: Vec<f64> = (0..200_000)
            .map(|_| bridge_transition(x0, dt, target, rem, &p, rng.sample(StandardNormal)))
            .collect();
        let (m_b, v_b) = mean_var(&bridged);
        let sd = v_b.sqrt();
        assert!((m_mc - m_b).abs() < 0.05 * sd, "{m_mc} vs {m_b}");
        assert!((v_mc / v_b - 1.0).abs() < 0.05, "{v_mc} vs {v_b}");
    }
}
