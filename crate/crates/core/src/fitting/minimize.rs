//! Bounded Nelder-Mead simplex search with curvature-based uncertainties.
//!
//! The search runs in normalized coordinates: a parameter with a finite box
//! maps its interval onto [0, 1], any other parameter is measured in units
//! of its starting magnitude. Rescaling a parameter together with its
//! bounds and start therefore leaves the iterates unchanged.

use crate::error::{invalid, Error, Result};

/// Simplex diameter (normalized units) below which the search stops.
pub const DIAMETER_TOL: f64 = 1e-9;

/// Iteration cap; reaching it returns the best point with `converged = false`.
pub const MAX_ITERATIONS: usize = 10_000;

/// Relative eigenvalue cutoff below which curvature counts as flat.
const FLAT_CURVATURE: f64 = 1e-12;

/// Closed interval for one parameter; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bound {
    pub lo: f64,
    pub hi: f64,
}

impl Bound {
    pub const FREE: Bound = Bound {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn at_least(lo: f64) -> Self {
        Self { lo, hi: f64::INFINITY }
    }

    fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub point: Vec<f64>,
    pub value: f64,
    /// `√diag(2·H⁻¹)`; infinite along directions of flat curvature.
    pub std_errors: Vec<f64>,
    /// The Hessian at the optimum had a (numerically) zero or negative eigenvalue.
    pub flat_curvature: bool,
    pub converged: bool,
    pub n_iterations: usize,
    pub n_evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Axis {
    origin: f64,
    scale: f64,
    bound: Bound,
}

impl Axis {
    fn new(x0: f64, bound: Bound) -> Self {
        if bound.is_finite() && bound.hi > bound.lo {
            Axis {
                origin: bound.lo,
                scale: bound.hi - bound.lo,
                bound,
            }
        } else {
            Axis {
                origin: 0.0,
                scale: if x0 != 0.0 { x0.abs() } else { 1.0 },
                bound,
            }
        }
    }

    fn to_x(self, u: f64) -> f64 {
        (self.origin + u * self.scale).clamp(self.bound.lo, self.bound.hi)
    }

    fn to_u(self, x: f64) -> f64 {
        (x - self.origin) / self.scale
    }

    fn u_range(&self) -> (f64, f64) {
        (self.to_u(self.bound.lo), self.to_u(self.bound.hi))
    }

    fn clamp_u(&self, u: f64) -> f64 {
        let (lo, hi) = self.u_range();
        u.clamp(lo, hi)
    }
}

struct Counted<F> {
    f: F,
    evaluations: usize,
}

impl<F: Fn(&[f64]) -> f64> Counted<F> {
    fn eval(&mut self, x: &[f64]) -> Result<f64> {
        self.evaluations += 1;
        let v = (self.f)(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFiniteObjective { point: x.to_vec() })
        }
    }
}

/// Minimizes `objective` inside `bounds` starting from `init`.
///
/// Uncertainties assume `objective` is a chi-square: the covariance is
/// `2·H⁻¹` at the optimum.
pub fn minimize<F>(objective: F, init: &[f64], bounds: &[Bound]) -> Result<Minimum>
where
    F: Fn(&[f64]) -> f64,
{
    let n = init.len();
    if n == 0 {
        return Err(invalid("need at least one parameter"));
    }
    if bounds.len() != n {
        return Err(invalid(format!("{} bounds for {} parameters", bounds.len(), n)));
    }
    for (i, (x, b)) in init.iter().zip(bounds).enumerate() {
        if !x.is_finite() || !(b.lo <= b.hi) || !b.contains(*x) {
            return Err(invalid(format!(
                "parameter {i}: start {x} outside bounds [{}, {}]",
                b.lo, b.hi
            )));
        }
    }
    let axes: Vec<Axis> = init.iter().zip(bounds).map(|(x, b)| Axis::new(*x, *b)).collect();
    let to_x = |u: &[f64]| -> Vec<f64> { u.iter().zip(&axes).map(|(u, a)| a.to_x(*u)).collect() };
    let mut f = Counted {
        f: objective,
        evaluations: 0,
    };

    let u0: Vec<f64> = init.iter().zip(&axes).map(|(x, a)| a.to_u(*x)).collect();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((u0.clone(), f.eval(&to_x(&u0))?));
    for i in 0..n {
        let mut u = u0.clone();
        let step = if axes[i].bound.is_finite() { 0.05 } else { 0.1 };
        let (lo, hi) = axes[i].u_range();
        u[i] = if u0[i] + step <= hi {
            u0[i] + step
        } else {
            (u0[i] - step).max(lo)
        };
        simplex.push((u.clone(), f.eval(&to_x(&u))?));
    }

    let clamp = |u: Vec<f64>| -> Vec<f64> { u.iter().zip(&axes).map(|(u, a)| a.clamp_u(*u)).collect() };
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITERATIONS {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = &simplex[0].0;
        let scale = best.iter().fold(1.0_f64, |m, u| m.max(u.abs()));
        let diameter = simplex[1..]
            .iter()
            .map(|(u, _)| u.iter().zip(best).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())))
            .fold(0.0, f64::max);
        if diameter < DIAMETER_TOL * scale {
            converged = true;
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(u, _)| u[j]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].clone();
        let along =
            |t: f64| -> Vec<f64> { clamp(centroid.iter().zip(&worst.0).map(|(c, w)| c + t * (c - w)).collect()) };

        let reflected = along(1.0);
        let f_r = f.eval(&to_x(&reflected))?;
        if f_r < simplex[0].1 {
            let expanded = along(2.0);
            let f_e = f.eval(&to_x(&expanded))?;
            simplex[n] = if f_e < f_r { (expanded, f_e) } else { (reflected, f_r) };
            continue;
        }
        if f_r < simplex[n - 1].1 {
            simplex[n] = (reflected, f_r);
            continue;
        }
        let (contracted, f_c) = if f_r < worst.1 {
            let c = along(0.5);
            let v = f.eval(&to_x(&c))?;
            (c, v)
        } else {
            let c = along(-0.5);
            let v = f.eval(&to_x(&c))?;
            (c, v)
        };
        if f_c < worst.1.min(f_r) {
            simplex[n] = (contracted, f_c);
            continue;
        }
        let anchor = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let u: Vec<f64> = vertex.0.iter().zip(&anchor).map(|(v, a)| a + 0.5 * (v - a)).collect();
            let value = f.eval(&to_x(&u))?;
            *vertex = (u, value);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (u_best, value) = simplex.swap_remove(0);
    let point = to_x(&u_best);
    let (std_errors, flat_curvature) = curvature_errors(&mut f, &point, &axes)?;
    Ok(Minimum {
        point,
        value,
        std_errors,
        flat_curvature,
        converged,
        n_iterations: iterations,
        n_evaluations: f.evaluations,
    })
}

/// Relative finite-difference step of the curvature estimate.
const CURVATURE_STEP: f64 = 1e-4;

/// Central-difference Hessian on per-axis steps of `CURVATURE_STEP` times
/// the parameter magnitude (floored at a thousandth of a finite bound range
/// or the start magnitude), inverted through its eigen-decomposition so flat
/// directions surface as infinite errors.
fn curvature_errors<F: Fn(&[f64]) -> f64>(
    f: &mut Counted<F>,
    point: &[f64],
    axes: &[Axis],
) -> Result<(Vec<f64>, bool)> {
    let n = point.len();
    let steps: Vec<f64> = point
        .iter()
        .zip(axes)
        .map(|(x, a)| {
            let floor = if a.bound.is_finite() { 1e-3 * a.scale } else { a.scale };
            CURVATURE_STEP * x.abs().max(floor)
        })
        .collect();
    // keep every stencil point inside the box
    let center: Vec<f64> = point
        .iter()
        .zip(axes)
        .zip(&steps)
        .map(|((x, a), d)| {
            let (lo, hi) = (a.bound.lo, a.bound.hi);
            if hi - lo > 2.0 * d {
                x.clamp(lo + d, hi - d)
            } else {
                *x
            }
        })
        .collect();
    let f0 = f.eval(&center)?;
    let mut hess = nalgebra::DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let mut up = center.clone();
        up[i] += steps[i];
        let mut dn = center.clone();
        dn[i] -= steps[i];
        hess[(i, i)] = f.eval(&up)? - 2.0 * f0 + f.eval(&dn)?;
        for j in 0..i {
            let mut corner = |si: f64, sj: f64| -> Result<f64> {
                let mut x = center.clone();
                x[i] += si * steps[i];
                x[j] += sj * steps[j];
                f.eval(&x)
            };
            let v = (corner(1.0, 1.0)? - corner(1.0, -1.0)? - corner(-1.0, 1.0)? + corner(-1.0, -1.0)?) / 4.0;
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    let eig = hess.symmetric_eigen();
    let lambda_max = eig.eigenvalues.iter().fold(0.0_f64, |m, l| m.max(l.abs()));
    let mut variance = vec![0.0; n];
    let mut flat = lambda_max == 0.0;
    for k in 0..n {
        let lambda = eig.eigenvalues[k];
        let v = eig.eigenvectors.column(k);
        if lambda <= FLAT_CURVATURE * lambda_max || lambda_max == 0.0 {
            flat = true;
            for i in 0..n {
                if v[i].abs() > 1e-6 {
                    variance[i] = f64::INFINITY;
                }
            }
        } else {
            for i in 0..n {
                variance[i] += 2.0 * v[i] * v[i] / lambda;
            }
        }
    }
    let errors = variance.iter().zip(&steps).map(|(var, d)| var.sqrt() * d).collect();
    Ok((errors, flat))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn quadratic_from_origin() {
        let m = minimize(|x| (x[0] - 3.0).powi(2), &[0.0], &[Bound::FREE]).unwrap();
        assert!(m.converged);
        assert!((m.point[0] - 3.0).abs() < 1e-6, "{:?}", m.point);
        // chi-square curvature 2 gives unit error
        assert!((m.std_errors[0] - 1.0).abs() < 1e-4);
        assert!(!m.flat_curvature);
    }

    #[test]
    fn rosenbrock_from_standard_start() {
        let rosen = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let m = minimize(rosen, &[-1.2, 1.0], &[Bound::FREE, Bound::FREE]).unwrap();
        assert!(m.converged);
        assert!(
            (m.point[0] - 1.0).abs() < 1e-4 && (m.point[1] - 1.0).abs() < 1e-4,
            "{:?}",
            m.point
        );
    }

    #[test]
    fn constant_objective_stays_at_start() {
        let m = minimize(|_| 4.0, &[0.3, -2.0], &[Bound::new(0.0, 1.0), Bound::FREE]).unwrap();
        assert!(m.converged);
        assert_eq!(m.point, vec![0.3, -2.0]);
        assert!(m.flat_curvature);
        assert!(m.std_errors.iter().all(|e| e.is_infinite()));
    }

    #[test]
    fn respects_bounds() {
        let m = minimize(|x| (x[0] + 5.0).powi(2), &[1.0], &[Bound::new(0.0, 2.0)]).unwrap();
        assert!(m.point[0].abs() < 1e-9);
        assert!(m.converged);
    }

    #[test]
    fn rejects_bad_start() {
        assert!(minimize(|x| x[0], &[3.0], &[Bound::new(0.0, 1.0)]).is_err());
        assert!(minimize(|x| x[0], &[], &[]).is_err());
        assert!(matches!(
            minimize(|_| f64::NAN, &[0.5], &[Bound::FREE]),
            Err(Error::NonFiniteObjective { .. })
        ));
    }

    #[test]
    fn nan_during_search_aborts_with_point() {
        let r = minimize(|x| if x[0] > 1.5 { f64::NAN } else { -x[0] }, &[1.0], &[Bound::FREE]);
        match r {
            Err(Error::NonFiniteObjective { point }) => assert!(point[0] > 1.5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        // a valley too narrow to resolve before the cap
        let f = |x: &[f64]| x[0].abs().sqrt() + 1e-3 * x[1] * x[1] + (x[2] - x[0]).abs() * 1e6;
        let m = minimize(f, &[5.0, 5.0, -5.0], &[Bound::FREE; 3]).unwrap();
        assert!(m.n_iterations <= MAX_ITERATIONS);
        if !m.converged {
            assert_eq!(m.n_iterations, MAX_ITERATIONS);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn rescaling_leaves_optimum_value(c0 in 1e-3f64..1e3, c1 in 1e-3f64..1e3) {
            let f = |x: &[f64]| (x[0] - 0.7).powi(2) + 3.0 * (x[1] + 1.3).powi(2) + (x[0] * x[1] - 0.2).powi(2);
            let bounds = [Bound::new(-2.0, 2.0), Bound::new(-3.0, 1.0)];
            let base = minimize(f, &[0.1, 0.1], &bounds).unwrap();
            let g = |y: &[f64]| f(&[y[0] * c0, y[1] * c1]);
            let scaled_bounds = [Bound::new(-2.0 / c0, 2.0 / c0), Bound::new(-3.0 / c1, 1.0 / c1)];
            let scaled = minimize(g, &[0.1 / c0, 0.1 / c1], &scaled_bounds).unwrap();
            prop_assert!((base.value - scaled.value).abs() < 1e-8);
        }
    }
}
