//! One-parameter sweeps over emitter fields.

use crate::config::RunConfig;
use crate::figures::{fringe_fit, g2_measurement};
use spsim::config::Entry;
use spsim::emitter::KEYS;
use spsim::instruments::visibility_vs_separation;
use spsim::{EmitterParams, Error, Result};
use std::fmt::{self, Write as _};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    /// Analytic HOM visibility at a fixed separation.
    Visibility,
    /// Monte Carlo `g²(0)` with the run's HBT settings.
    G2,
    /// Exponential time constant of the fringe contrast.
    T2Eff,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Visibility => "visibility",
            Metric::G2 => "g2",
            Metric::T2Eff => "t2_eff",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "visibility" => Ok(Metric::Visibility),
            "g2" => Ok(Metric::G2),
            "t2_eff" => Ok(Metric::T2Eff),
            _ => Err(format!("unknown metric `{s}`, expected visibility, g2 or t2_eff")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub metric: f64,
    pub error: f64,
}

/// Checks the parameter name and values before any work is done.
pub fn check_request(param: &str, values: &[f64]) -> std::result::Result<(), String> {
    if !KEYS.contains(&param) {
        return Err(format!(
            "unknown parameter `{param}`, expected one of {}",
            KEYS.join(", ")
        ));
    }
    if values.is_empty() {
        return Err("no sweep values given".into());
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(format!("sweep value {v} is not finite"));
    }
    Ok(())
}

fn with_value(base: &EmitterParams, param: &str, value: f64) -> Result<EmitterParams> {
    let mut p = base.clone();
    let entry = Entry {
        key: param.to_string(),
        value: format!("{value:e}"),
        line: 0,
    };
    if !p.apply_entry(&entry)? {
        return Err(Error::InvalidArgument(format!("unknown parameter `{param}`")));
    }
    p.validate()?;
    Ok(p)
}

/// Evaluates `metric` at every value. Each row reuses the run seed, so a
/// single-value sweep reproduces the direct computation exactly.
pub fn sweep(cfg: &RunConfig, param: &str, values: &[f64], metric: Metric, delta: f64) -> Result<Vec<SweepRow>> {
    check_request(param, values).map_err(Error::InvalidArgument)?;
    cfg.validate()?;
    values
        .iter()
        .map(|&value| {
            let p = with_value(&cfg.emitter, param, value)?;
            let (metric, error) = match metric {
                Metric::Visibility => (visibility_vs_separation(&p, delta)?, 0.0),
                Metric::G2 => g2_measurement(cfg, &p)?.0,
                Metric::T2Eff => fringe_fit(&p)?.1.get("tau").expect("tau"),
            };
            Ok(SweepRow { value, metric, error })
        })
        .collect()
}

pub fn to_csv(cfg: &RunConfig, param: &str, metric: Metric, delta: f64, rows: &[SweepRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# config_sha256={}", cfg.hash());
    let _ = writeln!(s, "# seed={}", cfg.seed);
    let _ = writeln!(s, "# metric={metric}");
    if metric == Metric::Visibility {
        let _ = writeln!(s, "# separation_s={delta:e}");
    }
    let _ = writeln!(s, "{param},{metric},{metric}_err");
    for r in rows {
        let _ = writeln!(s, "{:e},{:e},{:e}", r.value, r.metric, r.error);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use spsim::instruments::jitter_overlap_factor;

    #[test]
    fn jitter_sweep_follows_overlap_factor() {
        let cfg = RunConfig::default();
        let t1 = cfg.emitter.t1;
        let values: Vec<f64> = [0.0, 0.5, 1.0, 2.0].iter().map(|f| f * t1).collect();
        let rows = sweep(&cfg, "sigma_jitter", &values, Metric::Visibility, 13.09e-9).unwrap();
        let base = rows[0].metric;
        for (r, sj) in rows.iter().zip(&values) {
            let expected = base * jitter_overlap_factor(t1, *sj).unwrap();
            assert!((r.metric - expected).abs() < 1e-9, "{} vs {expected}", r.metric);
        }
        assert!(rows.windows(2).all(|w| w[1].metric < w[0].metric));
    }

    #[test]
    fn longer_correlation_time_raises_visibility() {
        let cfg = RunConfig::default();
        let rows = sweep(&cfg, "tau_c", &[0.07e-6, 0.7e-6, 7e-6], Metric::Visibility, 1e-6).unwrap();
        assert!(rows.windows(2).all(|w| w[1].metric > w[0].metric), "{rows:?}");
    }

    #[test]
    fn single_value_matches_direct_fit() {
        let cfg = RunConfig::default();
        let rows = sweep(&cfg, "t1", &[cfg.emitter.t1], Metric::T2Eff, 0.0).unwrap();
        let direct = fringe_fit(&cfg.emitter).unwrap().1.value("tau");
        assert_eq!(rows[0].metric, direct);
    }

    #[test]
    fn rejects_unknown_parameter_and_bad_values() {
        assert!(check_request("colour", &[1.0]).is_err());
        assert!(check_request("t1", &[]).is_err());
        assert!(check_request("t1", &[f64::NAN]).is_err());
        assert!(check_request("t1", &[1e-10]).is_ok());
        assert!("speed".parse::<Metric>().is_err());
    }

    #[test]
    fn invalid_swept_value_is_reported() {
        let cfg = RunConfig::default();
        assert!(sweep(&cfg, "p2", &[0.5], Metric::Visibility, 1e-8).is_err());
    }
}
