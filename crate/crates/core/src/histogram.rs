//! Binned two-detector coincidence counts.

use crate::error::{invalid, Error, Result};
use std::fmt::Write as _;

/// Seconds to picoseconds; exact for the CSV conversion.
pub const PS_PER_S: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct CoincidenceHistogram {
    pub bin_width: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub counts: Vec<u64>,
    pub n_events_processed: u64,
}

impl CoincidenceHistogram {
    pub fn new(t_min: f64, t_max: f64, bin_width: f64) -> Result<Self> {
        if !(t_min.is_finite() && t_max.is_finite() && bin_width.is_finite()) {
            return Err(invalid("histogram bounds must be finite"));
        }
        if t_max <= t_min || bin_width <= 0.0 {
            return Err(invalid(format!(
                "bad binning: [{t_min}, {t_max}) with width {bin_width}"
            )));
        }
        let n = ((t_max - t_min) / bin_width).round() as usize;
        if n == 0 {
            return Err(invalid("histogram needs at least one bin"));
        }
        Ok(Self {
            bin_width,
            t_min,
            t_max,
            counts: vec![0; n],
            n_events_processed: 0,
        })
    }

    /// Symmetric range `[-half_range, half_range)`.
    pub fn symmetric(half_range: f64, bin_width: f64) -> Result<Self> {
        Self::new(-half_range, half_range, bin_width)
    }

    pub fn n_bins(&self) -> usize {
        self.counts.len()
    }

    pub fn bin_index(&self, t: f64) -> Option<usize> {
        if !(t >= self.t_min) {
            return None;
        }
        let i = ((t - self.t_min) / self.bin_width).floor() as usize;
        (i < self.counts.len()).then_some(i)
    }

    /// Records a value; out-of-range values are dropped.
    pub fn record(&mut self, t: f64) -> bool {
        match self.bin_index(t) {
            Some(i) => {
                self.counts[i] += 1;
                true
            }
            None => false,
        }
    }

    pub fn bin_center(&self, i: usize) -> f64 {
        self.t_min + (i as f64 + 0.5) * self.bin_width
    }

    pub fn same_binning(&self, other: &Self) -> bool {
        self.bin_width == other.bin_width && self.t_min == other.t_min && self.counts.len() == other.counts.len()
    }

    /// Adds another histogram with identical binning.
    pub fn merge(&mut self, other: &Self) -> Result<()> {
        if !self.same_binning(other) {
            return Err(Error::GridMismatch("histogram binning differs".into()));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.n_events_processed += other.n_events_processed;
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }

    /// Counts in bins whose centers lie within `center ± half_width`.
    pub fn area(&self, center: f64, half_width: f64) -> u64 {
        self.counts
            .iter()
            .enumerate()
            .filter(|(i, _)| (self.bin_center(*i) - center).abs() <= half_width)
            .map(|(_, c)| *c)
            .sum()
    }

    /// Count-weighted mean of the bin centers.
    pub fn mean(&self) -> f64 {
        let total = self.total() as f64;
        self.counts
            .iter()
            .enumerate()
            .map(|(i, c)| self.bin_center(i) * *c as f64)
            .sum::<f64>()
            / total
    }

    /// CSV with `#` metadata lines and a `bin_center_ps,counts` table.
    pub fn to_csv(&self, metadata: &[(&str, String)]) -> String {
        let mut s = String::new();
        for (k, v) in metadata {
            let _ = writeln!(s, "# {k}={v}");
        }
        let _ = writeln!(s, "# t_min_ps={}", self.t_min * PS_PER_S);
        let _ = writeln!(s, "# t_max_ps={}", self.t_max * PS_PER_S);
        let _ = writeln!(s, "# bin_width_ps={}", self.bin_width * PS_PER_S);
        let _ = writeln!(s, "# n_events_processed={}", self.n_events_processed);
        s.push_str("bin_center_ps,counts\n");
        for (i, c) in self.counts.iter().enumerate() {
            let _ = writeln!(s, "{:.4},{}", self.bin_center(i) * PS_PER_S, c);
        }
        s
    }

    /// Reads the format written by [`CoincidenceHistogram::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut meta = std::collections::HashMap::new();
        let mut counts = Vec::new();
        let mut header_seen = false;
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.trim();
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.trim().split_once('=') {
                    meta.insert(k.trim().to_string(), v.trim().to_string());
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            if !header_seen {
                if line != "bin_center_ps,counts" {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("unexpected header `{line}`"),
                    });
                }
                header_seen = true;
                continue;
            }
            let (_, c) = line.split_once(',').ok_or_else(|| Error::Parse {
                line: line_no,
                message: "expected two columns".into(),
            })?;
            counts.push(c.trim().parse::<u64>().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("bad count `{c}`"),
            })?);
        }
        let get = |k: &str| -> Result<f64> {
            meta.get(k)
                .and_then(|v| v.parse::<f64>().ok())
                .ok_or_else(|| Error::Parse {
                    line: 0,
                    message: format!("missing metadata `{k}`"),
                })
        };
        let mut h = Self::new(
            get("t_min_ps")? / PS_PER_S,
            get("t_max_ps")? / PS_PER_S,
            get("bin_width_ps")? / PS_PER_S,
        )?;
        if h.counts.len() != counts.len() {
            return Err(Error::Parse {
                line: 0,
                message: format!("{} rows for {} bins", counts.len(), h.counts.len()),
            });
        }
        h.counts = counts;
        h.n_events_processed = get("n_events_processed")? as u64;
        Ok(h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bin_count_rounds_range_over_width() {
        let h = CoincidenceHistogram::new(0.0, 1.0, 0.3).unwrap();
        assert_eq!(h.n_bins(), 3);
        assert!(CoincidenceHistogram::new(1.0, 0.0, 0.1).is_err());
        assert!(CoincidenceHistogram::new(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn record_area_and_merge() {
        let mut a = CoincidenceHistogram::symmetric(10.0, 1.0).unwrap();
        for t in [-0.5, 0.2, 0.7, 3.3, 9.99, 10.0, -11.0] {
            a.record(t);
        }
        assert_eq!(a.total(), 5);
        assert_eq!(a.area(0.0, 1.0), 3);
        let mut b = a.clone();
        b.merge(&a).unwrap();
        assert_eq!(b.total(), 10);
        let other = CoincidenceHistogram::symmetric(10.0, 0.5).unwrap();
        assert!(b.merge(&other).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let mut h = CoincidenceHistogram::symmetric(2e-9, 0.1e-9).unwrap();
        for i in 0..100 {
            h.record(-2e-9 + i as f64 * 0.037e-9);
        }
        h.n_events_processed = 77;
        let text = h.to_csv(&[("seed", "5".into())]);
        assert!(text.contains("bin_center_ps,counts"));
        assert!(text.starts_with("# seed=5"));
        let back = CoincidenceHistogram::from_csv(&text).unwrap();
        assert_eq!(back.counts, h.counts);
        assert_eq!(back.n_events_processed, 77);
        assert!((back.bin_width - h.bin_width).abs() < 1e-24);
    }
}
