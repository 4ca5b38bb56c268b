//! Start-stop correlation of two detector time lists and peak-area helpers.

use crate::error::{invalid, Error, Result};
use crate::histogram::CoincidenceHistogram;

/// Histogram bin width for two-detector correlations (s).
pub const COINCIDENCE_BIN: f64 = 20e-12;

/// Adds every difference `a_i − b_j` that falls inside the histogram range.
/// Both lists must be sorted. Returns the number of pairs recorded.
pub(crate) fn correlate_into(a: &[f64], b: &[f64], h: &mut CoincidenceHistogram) -> u64 {
    let mut lo = 0usize;
    let mut pairs = 0;
    for &ta in a {
        // b_j must lie in (ta − t_max, ta − t_min]
        while lo < b.len() && b[lo] <= ta - h.t_max {
            lo += 1;
        }
        let mut j = lo;
        while j < b.len() && b[j] <= ta - h.t_min {
            if h.record(ta - b[j]) {
                pairs += 1;
            }
            j += 1;
        }
    }
    h.n_events_processed += pairs;
    pairs
}

pub(crate) fn sort_times(v: &mut [f64]) {
    v.sort_unstable_by(|x, y| x.total_cmp(y));
}

/// Areas of the zero-delay peak and of every side peak at `n·period` that
/// fits entirely inside the histogram.
#[derive(Debug, Clone, PartialEq)]
pub struct PeakAreas {
    pub central: u64,
    pub side: Vec<u64>,
}

impl PeakAreas {
    pub fn side_mean(&self) -> f64 {
        self.side.iter().sum::<u64>() as f64 / self.side.len() as f64
    }
}

pub fn peak_areas(h: &CoincidenceHistogram, period: f64, half_width: f64) -> Result<PeakAreas> {
    if !(period > 0.0) || !(half_width > 0.0) || half_width > 0.5 * period {
        return Err(invalid(format!(
            "peak window ±{half_width} s must be positive and at most half the period {period} s"
        )));
    }
    let central = h.area(0.0, half_width);
    let mut side = Vec::new();
    let n_max = ((h.t_max.abs().max(h.t_min.abs())) / period).ceil() as i64 + 1;
    for n in -n_max..=n_max {
        if n == 0 {
            continue;
        }
        let c = n as f64 * period;
        if c - half_width >= h.t_min && c + half_width <= h.t_max {
            side.push(h.area(c, half_width));
        }
    }
    Ok(PeakAreas { central, side })
}

/// Central area over mean side-peak area, with Poisson errors.
pub fn side_peak_ratio(h: &CoincidenceHistogram, period: f64, half_width: f64, min_side: usize) -> Result<(f64, f64)> {
    let areas = peak_areas(h, period, half_width)?;
    if areas.side.len() < min_side {
        return Err(Error::InsufficientRange {
            found: areas.side.len(),
            required: min_side,
        });
    }
    let s = areas.side_mean();
    if s == 0.0 {
        return Err(invalid("side peaks are empty"));
    }
    let c = areas.central as f64;
    let n = areas.side.len() as f64;
    // an empty central peak still carries a one-count uncertainty
    let var = c.max(1.0) / (s * s) + c * c / (n * s * s * s);
    Ok((c / s, var.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(a: &[f64], b: &[f64], h: &mut CoincidenceHistogram) {
        for x in a {
            for y in b {
                h.record(x - y);
            }
        }
    }

    #[test]
    fn matches_brute_force() {
        let a: Vec<f64> = (0..300).map(|i| i as f64 * 0.37 + (i % 7) as f64 * 0.011).collect();
        let b: Vec<f64> = (0..250).map(|i| i as f64 * 0.43 + (i % 5) as f64 * 0.017).collect();
        let mut fast = CoincidenceHistogram::symmetric(3.0, 0.05).unwrap();
        let mut slow = fast.clone();
        let mut a_sorted = a.clone();
        let mut b_sorted = b.clone();
        sort_times(&mut a_sorted);
        sort_times(&mut b_sorted);
        let pairs = correlate_into(&a_sorted, &b_sorted, &mut fast);
        brute(&a, &b, &mut slow);
        assert_eq!(fast.counts, slow.counts);
        assert_eq!(pairs, fast.total());
    }

    #[test]
    fn peak_bookkeeping() {
        let mut h = CoincidenceHistogram::symmetric(5.5, 0.1).unwrap();
        for n in -5..=5 {
            let k = if n == 0 { 1 } else { 10 };
            for _ in 0..k {
                h.record(n as f64 + 0.01);
            }
        }
        let areas = peak_areas(&h, 1.0, 0.4).unwrap();
        assert_eq!(areas.central, 1);
        assert_eq!(areas.side.len(), 10);
        let (r, e) = side_peak_ratio(&h, 1.0, 0.4, 10).unwrap();
        assert!((r - 0.1).abs() < 1e-12);
        assert!(e > 0.0);
        assert!(matches!(
            side_peak_ratio(&h, 1.0, 0.4, 11),
            Err(Error::InsufficientRange {
                found: 10,
                required: 11
            })
        ));
    }
}
