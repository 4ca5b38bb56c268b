use crate::error::{invalid, Result};
use std::fmt::Write as _;

/// A one-dimensional data set with optional per-point standard deviations.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset1D {
    pub x: Vec<f64>,
    pub x_unit: String,
    pub y: Vec<f64>,
    pub y_err: Option<Vec<f64>>,
}

impl Dataset1D {
    pub fn new(x: Vec<f64>, y: Vec<f64>, x_unit: impl Into<String>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(invalid(format!("x has {} points, y has {}", x.len(), y.len())));
        }
        if x.is_empty() {
            return Err(invalid("data set is empty"));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(invalid("data contain non-finite values"));
        }
        Ok(Self {
            x,
            x_unit: x_unit.into(),
            y,
            y_err: None,
        })
    }

    pub fn with_errors(mut self, y_err: Vec<f64>) -> Result<Self> {
        if y_err.len() != self.y.len() {
            return Err(invalid(format!("{} errors for {} points", y_err.len(), self.y.len())));
        }
        if let Some(bad) = y_err.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
            return Err(invalid(format!("y_err must be positive and finite, got {bad}")));
        }
        self.y_err = Some(y_err);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Standard deviation per point: `y_err` when given, otherwise the
    /// Poisson estimate `√y` floored at the smallest positive `y`.
    pub fn sigmas(&self) -> Vec<f64> {
        if let Some(e) = &self.y_err {
            return e.clone();
        }
        let floor = self.poisson_floor();
        self.y.iter().map(|v| v.max(floor).sqrt()).collect()
    }

    /// Smallest positive `y`, or 1 when there is none.
    pub fn poisson_floor(&self) -> f64 {
        let floor = self
            .y
            .iter()
            .copied()
            .filter(|v| *v > 0.0)
            .fold(f64::INFINITY, f64::min);
        if floor.is_finite() {
            floor
        } else {
            1.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: String,
    pub param_names: Vec<String>,
    pub values: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub chi2_reduced: f64,
    pub residuals: Vec<f64>,
    pub converged: bool,
    pub n_iterations: usize,
    /// Curvature at the optimum was flat in some direction.
    pub flat_curvature: bool,
}

impl FitResult {
    pub fn get(&self, name: &str) -> Option<(f64, f64)> {
        let i = self.param_names.iter().position(|n| n == name)?;
        Some((self.values[i], self.std_errors[i]))
    }

    /// Value of a named parameter; panics on unknown names.
    pub fn value(&self, name: &str) -> f64 {
        self.get(name)
            .unwrap_or_else(|| panic!("no parameter {name} in {} fit", self.model))
            .0
    }

    pub fn to_text_block(&self) -> String {
        let width = self.param_names.iter().map(|n| n.len()).max().unwrap_or(0);
        let mut s = format!("fit: {}\n", self.model);
        for ((name, v), e) in self.param_names.iter().zip(&self.values).zip(&self.std_errors) {
            let _ = writeln!(s, "  {name:<width$} = {v:.6e} ± {e:.2e}");
        }
        let _ = writeln!(s, "  chi2_reduced = {:.4}", self.chi2_reduced);
        let _ = writeln!(
            s,
            "  converged = {} after {} iterations",
            self.converged, self.n_iterations
        );
        if self.flat_curvature {
            let _ = writeln!(s, "  warning: flat curvature, some parameters unconstrained");
        }
        s
    }

    pub fn csv_header(&self) -> String {
        let mut cols = vec![
            "model".to_string(),
            "converged".into(),
            "n_iterations".into(),
            "chi2_reduced".into(),
        ];
        for n in &self.param_names {
            cols.push(n.clone());
            cols.push(format!("{n}_err"));
        }
        cols.join(",")
    }

    pub fn csv_row(&self) -> String {
        let mut cols = vec![
            self.model.clone(),
            self.converged.to_string(),
            self.n_iterations.to_string(),
            format!("{:e}", self.chi2_reduced),
        ];
        for (v, e) in self.values.iter().zip(&self.std_errors) {
            cols.push(format!("{v:e}"));
            cols.push(format!("{e:e}"));
        }
        cols.join(",")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(Dataset1D::new(vec![1.0], vec![], "s").is_err());
        assert!(Dataset1D::new(vec![], vec![], "s").is_err());
        assert!(Dataset1D::new(vec![f64::NAN], vec![1.0], "s").is_err());
        let d = Dataset1D::new(vec![1.0, 2.0], vec![3.0, 4.0], "s").unwrap();
        assert!(d.clone().with_errors(vec![1.0]).is_err());
        assert!(d.clone().with_errors(vec![1.0, 0.0]).is_err());
        assert!(d.with_errors(vec![1.0, 2.0]).is_ok());
    }

    #[test]
    fn poisson_sigmas_floor_empty_bins() {
        let d = Dataset1D::new(vec![0.0, 1.0, 2.0], vec![9.0, 0.0, 4.0], "s").unwrap();
        assert_eq!(d.sigmas(), vec![3.0, 2.0, 2.0]);
    }

    #[test]
    fn serializations_carry_every_field() {
        let r = FitResult {
            model: "exponential".into(),
            param_names: vec!["a".into(), "tau".into()],
            values: vec![1.5, 2e-10],
            std_errors: vec![0.1, 3e-12],
            chi2_reduced: 1.02,
            residuals: vec![0.0; 4],
            converged: true,
            n_iterations: 42,
            flat_curvature: false,
        };
        let text = r.to_text_block();
        for needle in ["exponential", "tau", "chi2_reduced", "converged = true", "42"] {
            assert!(text.contains(needle), "{text}");
        }
        let header: Vec<_> = r.csv_header().split(',').map(String::from).collect();
        let row: Vec<_> = r.csv_row().split(',').map(String::from).collect();
        assert_eq!(header.len(), row.len());
        assert_eq!(header[5], "a_err");
        assert_eq!(row[6].parse::<f64>().unwrap(), 2e-10);
    }
}
