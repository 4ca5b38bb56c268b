//! Small numerical kernels shared by the physics modules.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// Scaled complementary error function `exp(x²)·erfc(x)`.
pub fn erfcx(x: f64) -> f64 {
    if x < 0.0 {
        return 2.0 * (x * x).exp() - erfcx(-x);
    }
    if x < 5.0 {
        return (x * x).exp() * libm::erfc(x);
    }
    // continued fraction, evaluated bottom-up
    let mut f = x;
    for k in (1..=60).rev() {
        f = x + 0.5 * k as f64 / f;
    }
    1.0 / (PI.sqrt() * f)
}

/// Gauss-Hermite nodes and weights for the weight function `exp(-x²)`.
///
/// Nodes start as eigenvalues of the Jacobi matrix and are polished by
/// Newton steps on the orthonormal polynomials, rescaled on the fly so
/// large orders do not overflow. Nodes are returned in descending order.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one node");
    let jacobi = nalgebra::DMatrix::from_fn(n, n, |i, j| {
        if i.abs_diff(j) == 1 {
            (i.max(j) as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let mut guess: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
    guess.sort_by(|a, b| b.total_cmp(a));

    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = guess[i];
        let (mut deriv, mut log_scale) = (1.0, 0.0);
        for _ in 0..8 {
            let (value, d, ls) = hermite_recurrence(n, z);
            (deriv, log_scale) = (d, ls);
            let step = value / d;
            z -= step;
            if step.abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        if n % 2 == 1 && i == n / 2 {
            z = 0.0;
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = (std::f64::consts::LN_2 - 2.0 * (deriv.abs().ln() + log_scale)).exp();
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Orthonormal Hermite polynomial `p_n(z)` and `√(2n)·p_{n-1}(z)`, both
/// divided by `e^{log_scale}` to stay inside floating-point range.
///
/// At a root of `p_n` the second value equals `p_n'`.
fn hermite_recurrence(n: usize, z: f64) -> (f64, f64, f64) {
    const PIM4: f64 = 0.751_125_544_464_942_5;
    let mut p1 = PIM4;
    let mut p2 = 0.0;
    let mut log_scale = 0.0;
    for j in 1..=n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
        if p1.abs() > 1e100 {
            p1 *= 1e-100;
            p2 *= 1e-100;
            log_scale += 100.0 * std::f64::consts::LN_10;
        }
    }
    (p1, (2.0 * n as f64).sqrt() * p2, log_scale)
}

/// `E[f(X)]` for `X ~ Normal(0, sigma²)` by `n`-node Gauss-Hermite quadrature.
pub fn gaussian_expectation(sigma: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    if sigma == 0.0 {
        return f(0.0);
    }
    let (x, w) = gauss_hermite(n);
    let scale = std::f64::consts::SQRT_2 * sigma;
    let sum: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * f(scale * xi)).sum();
    sum / PI.sqrt()
}

/// Composite trapezoid rule on a uniform grid.
pub fn trapezoid(y: &[f64], step: f64) -> f64 {
    match y.len() {
        0 | 1 => 0.0,
        n => step * (y.iter().sum::<f64>() - 0.5 * (y[0] + y[n - 1])),
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Domain tags keep the random streams of different consumers disjoint.
#[derive(Debug, Clone, Copy)]
#[repr(u64)]
pub(crate) enum Domain {
    OuBoundary = 1,
    Stream = 2,
    Loss = 3,
    Lifetime = 4,
    HomRouting = 5,
    HomPorts = 6,
    Hbt = 7,
}

/// Deterministic per-chunk generator: `hash(seed, domain, index)`.
pub(crate) fn chunk_rng(seed: u64, domain: Domain, index: u64) -> ChaCha8Rng {
    let h = splitmix64(splitmix64(seed ^ splitmix64(domain as u64)) ^ index);
    ChaCha8Rng::seed_from_u64(h)
}
