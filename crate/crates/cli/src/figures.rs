//! End-to-end pipelines behind `spsim reproduce <figure>`.

use crate::config::RunConfig;
use crate::output::OutputSet;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use spsim::emitter::{lifetime_histogram, lifetime_mean, rabi_rate, PhotonSource};
use spsim::fitting::{
    fit_exponential, fit_lorentzian, fit_rabi, fit_visibility_decay, fit_voigt, Dataset1D, FitResult,
};
use spsim::instruments::{
    correct_multiphoton, extract_visibility, g2_zero, hbt_histogram, hom_monte_carlo, mz_fringe_contrast,
    visibility_plateau, visibility_vs_separation, HomConfig, Polarization, HOM_WINDOW,
};
use spsim::spectra::{
    coherence_delays, coherence_magnitude, deconvolved_coherence, emitter_line_widths, emitter_spectrum,
    fit_coherence_decay, instrument_coherence, scan_spectrum, voigt, Spectrum,
};
use spsim::{CoincidenceHistogram, EmitterParams, Error, Result};
use std::fmt::{self, Write as _};
use std::str::FromStr;

/// Separations of the visibility-versus-separation study (s).
pub const SEPARATIONS: [f64; 6] = [13.09e-9, 289e-9, 0.83e-6, 1.67e-6, 5.11e-6, 14.7e-6];

/// Long-separation HOM setting (s).
pub const LONG_SEPARATION: f64 = 14.7e-6;

/// Half-width of the spectrum window handed to the lineshape fits (Hz).
pub const SPECTRUM_FIT_HALF_SPAN: f64 = 10e9;

/// Only every n-th scan point enters the lineshape fits.
pub const SPECTRUM_FIT_STRIDE: usize = 4;

const ACCUMULATION_NOTE: &str = "counts follow from the simulated pulse number; the 5 minute \
experimental accumulation time is not reproduced in wall-clock terms, only the statistics";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureId {
    Rabi1c,
    G2_1d,
    Hom2a,
    Hom2b,
    Separation2c,
    Lifetime3a,
    Fringe3b,
    Spectrum3c,
}

impl FigureId {
    pub const ALL: [FigureId; 8] = [
        FigureId::Rabi1c,
        FigureId::G2_1d,
        FigureId::Hom2a,
        FigureId::Hom2b,
        FigureId::Separation2c,
        FigureId::Lifetime3a,
        FigureId::Fringe3b,
        FigureId::Spectrum3c,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FigureId::Rabi1c => "1c",
            FigureId::G2_1d => "1d",
            FigureId::Hom2a => "2a",
            FigureId::Hom2b => "2b",
            FigureId::Separation2c => "2c",
            FigureId::Lifetime3a => "3a",
            FigureId::Fringe3b => "3b",
            FigureId::Spectrum3c => "3c",
        }
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FigureId {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        FigureId::ALL.into_iter().find(|f| f.as_str() == s).ok_or_else(|| {
            let known: Vec<&str> = FigureId::ALL.iter().map(|f| f.as_str()).collect();
            format!("unknown figure `{s}`, expected one of {}", known.join(", "))
        })
    }
}

/// One headline number of a figure.
#[derive(Debug, Clone, PartialEq)]
pub struct Scalar {
    pub name: &'static str,
    pub value: f64,
    pub error: Option<f64>,
    pub unit: &'static str,
}

#[derive(Debug, Clone)]
pub struct Figure {
    pub id: FigureId,
    pub scalars: Vec<Scalar>,
    pub notes: Vec<String>,
    pub outputs: OutputSet,
}

impl Figure {
    fn new(id: FigureId) -> Self {
        Self {
            id,
            scalars: Vec::new(),
            notes: Vec::new(),
            outputs: OutputSet::new(),
        }
    }

    fn push(&mut self, name: &'static str, value: f64, error: Option<f64>, unit: &'static str) {
        self.scalars.push(Scalar {
            name,
            value,
            error,
            unit,
        });
    }

    pub fn scalar(&self, name: &str) -> Option<&Scalar> {
        self.scalars.iter().find(|s| s.name == name)
    }

    /// Value of a named headline scalar; panics on unknown names.
    pub fn value(&self, name: &str) -> f64 {
        self.scalar(name)
            .unwrap_or_else(|| panic!("figure {} has no scalar {name}", self.id))
            .value
    }

    pub fn summary(&self, cfg: &RunConfig) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "figure = {}", self.id);
        let _ = writeln!(s, "config_sha256 = {}", cfg.hash());
        let _ = writeln!(s, "seed = {}", cfg.seed);
        for sc in &self.scalars {
            match sc.error {
                Some(e) => {
                    let _ = writeln!(s, "{} = {:.6e} ± {:.2e} {}", sc.name, sc.value, e, sc.unit);
                }
                None => {
                    let _ = writeln!(s, "{} = {:.6e} {}", sc.name, sc.value, sc.unit);
                }
            }
        }
        for n in &self.notes {
            let _ = writeln!(s, "note: {n}");
        }
        s
    }

    /// Data files plus `summary.txt`.
    pub fn into_outputs(self, cfg: &RunConfig) -> OutputSet {
        let summary = self.summary(cfg);
        let mut out = self.outputs;
        out.add("summary.txt", summary);
        out
    }
}

/// Independent 64-bit seed for one consumer of the run seed.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.next_u64()
}

mod streams {
    pub const RABI: u64 = 1;
    pub const HBT_SOURCE: u64 = 2;
    pub const HBT_SPLIT: u64 = 3;
    pub const HOM_PARALLEL_SOURCE: u64 = 4;
    pub const HOM_CROSS_SOURCE: u64 = 5;
    pub const HOM_PARALLEL: u64 = 6;
    pub const HOM_CROSS: u64 = 7;
    pub const LIFETIME: u64 = 8;
    pub const SPECTRUM: u64 = 9;
}

pub fn reproduce(id: FigureId, cfg: &RunConfig) -> Result<Figure> {
    cfg.validate()?;
    match id {
        FigureId::Rabi1c => rabi(cfg),
        FigureId::G2_1d => g2(cfg),
        FigureId::Hom2a => hom_figure(cfg, FigureId::Hom2a, 1),
        FigureId::Hom2b => {
            let k = delay_pulses(&cfg.emitter, LONG_SEPARATION);
            hom_figure(cfg, FigureId::Hom2b, k)
        }
        FigureId::Separation2c => separation(cfg),
        FigureId::Lifetime3a => lifetime(cfg),
        FigureId::Fringe3b => fringe(cfg),
        FigureId::Spectrum3c => spectrum(cfg),
    }
}

/// Nearest whole number of pulse periods to `delta_t`, at least one.
pub fn delay_pulses(params: &EmitterParams, delta_t: f64) -> u64 {
    ((delta_t * params.rep_rate).round() as u64).max(1)
}

/// Detected single-photon rate at the π pulse (1/s).
pub fn detected_rate(params: &EmitterParams) -> f64 {
    params.rep_rate * params.eta_fiber * params.eta_det
}

fn fmt_row(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(",")
}

fn meta_block(cfg: &RunConfig, id: FigureId) -> String {
    format!("# figure={id}\n# config_sha256={}\n# seed={}\n", cfg.hash(), cfg.seed)
}

fn fit_table(cfg: &RunConfig, id: FigureId, rows: &[(&str, &FitResult)]) -> String {
    let mut s = meta_block(cfg, id);
    if let Some((_, first)) = rows.first() {
        let _ = writeln!(s, "data,{}", first.csv_header());
    }
    for (label, r) in rows {
        let _ = writeln!(s, "{label},{}", r.csv_row());
    }
    s
}

fn rabi(cfg: &RunConfig) -> Result<Figure> {
    let id = FigureId::Rabi1c;
    let r_max = detected_rate(&cfg.emitter);
    let p_pi = cfg.rabi_p_pi;
    let n = cfg.rabi_points;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, streams::RABI));
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut powers = Vec::new();
    let mut rates = Vec::new();
    let mut errors = Vec::new();
    for i in 1..=n {
        let p = 5.0 * p_pi * i as f64 / n as f64;
        let model = rabi_rate(p, p_pi, r_max)?;
        // relative noise with a floor near the Rabi minima
        let sigma = cfg.rabi_noise * model.max(0.01 * r_max);
        powers.push(p);
        rates.push(model + sigma * normal.sample(&mut rng));
        errors.push(sigma);
    }
    let data = Dataset1D::new(powers.clone(), rates.clone(), "W")?.with_errors(errors.clone())?;
    let fit = fit_rabi(&data)?;

    let mut fig = Figure::new(id);
    let mut csv = meta_block(cfg, id);
    csv.push_str("pump_power_w,counts_per_s,counts_err,fit_counts_per_s\n");
    for i in 0..powers.len() {
        let f = rabi_rate(powers[i], fit.value("p_pi"), fit.value("r_max"))?;
        let _ = writeln!(csv, "{}", fmt_row(&[powers[i], rates[i], errors[i], f]));
    }
    fig.outputs.add("rabi.csv", csv);
    fig.outputs
        .add("rabi_fit.csv", fit_table(cfg, id, &[("synthetic", &fit)]));
    let (pp, pp_err) = fit.get("p_pi").expect("p_pi");
    let (rm, rm_err) = fit.get("r_max").expect("r_max");
    fig.push("p_pi", pp, Some(pp_err), "W");
    fig.push("r_max", rm, Some(rm_err), "1/s");
    fig.push("p_pi_input", p_pi, None, "W");
    fig.notes.push(format!(
        "synthetic count rates with {}% relative noise over 0 < P <= 5 P_pi",
        100.0 * cfg.rabi_noise
    ));
    Ok(fig)
}

/// `g²(0)` of the emitted stream for one parameter set, with the run's seeds.
pub fn g2_measurement(cfg: &RunConfig, params: &EmitterParams) -> Result<((f64, f64), CoincidenceHistogram)> {
    let source = PhotonSource::new(params, cfg.n_pulses_hbt, derive_seed(cfg.seed, streams::HBT_SOURCE))?;
    let h = hbt_histogram(
        &source,
        params,
        derive_seed(cfg.seed, streams::HBT_SPLIT),
        cfg.worker_count(),
    )?;
    Ok((g2_zero(&h, params.pulse_period())?, h))
}

fn g2(cfg: &RunConfig) -> Result<Figure> {
    let id = FigureId::G2_1d;
    let p = &cfg.emitter;
    let ((g, err), h) = g2_measurement(cfg, p)?;
    let mu = p.mean_photon_number();
    let mut fig = Figure::new(id);
    fig.outputs.add(
        "hbt_histogram.csv",
        h.to_csv(&[
            ("figure", id.to_string()),
            ("config_sha256", cfg.hash()),
            ("seed", cfg.seed.to_string()),
            ("n_pulses", cfg.n_pulses_hbt.to_string()),
        ]),
    );
    fig.push("g2_zero", g, Some(err), "");
    fig.push("g2_small_p2_relation", 2.0 * p.p2 / (mu * mu), None, "");
    fig.push("n_pulses", cfg.n_pulses_hbt as f64, None, "");
    fig.notes.push("reference: measured g2(0) = 0.007(1)".into());
    fig.notes.push(ACCUMULATION_NOTE.into());
    fig.notes.push(
        "detector losses thin both arms equally and leave g2(0) unchanged, so the emitted stream is correlated".into(),
    );
    Ok(fig)
}

/// Monte Carlo HOM visibility at a delay of `k` pulses.
#[derive(Debug, Clone)]
pub struct HomRun {
    pub delay_pulses: u64,
    /// Raw `1 − A∥/A⊥`.
    pub raw: f64,
    pub raw_error: f64,
    /// Raw value corrected for two-photon pulses with the measured `g²(0)`.
    pub visibility: f64,
    pub error: f64,
    pub model: f64,
    pub parallel: CoincidenceHistogram,
    pub cross: CoincidenceHistogram,
}

pub fn hom_run(cfg: &RunConfig, k: u64, g2: (f64, f64)) -> Result<HomRun> {
    let p = &cfg.emitter;
    let workers = cfg.worker_count();
    let mut hist = Vec::new();
    for (pol, src_stream, hom_stream) in [
        (
            Polarization::Parallel,
            streams::HOM_PARALLEL_SOURCE,
            streams::HOM_PARALLEL,
        ),
        (Polarization::Cross, streams::HOM_CROSS_SOURCE, streams::HOM_CROSS),
    ] {
        let source = PhotonSource::new(p, cfg.n_pulses_hom, derive_seed(cfg.seed, src_stream))?;
        let hc = HomConfig {
            delay_pulses: k,
            splitter_ratio: cfg.splitter_ratio,
            polarization: pol,
        };
        let out = hom_monte_carlo(&source, p, &hc, derive_seed(cfg.seed ^ k, hom_stream), workers)?;
        if out.is_empty() {
            return Err(Error::InvalidArgument("no photons reached the interferometer".into()));
        }
        hist.push(out.histogram);
    }
    let cross = hist.pop().expect("cross");
    let parallel = hist.pop().expect("parallel");
    let raw = extract_visibility(&parallel, &cross, HOM_WINDOW)?;
    let (v, e) = correct_multiphoton(raw, g2);
    Ok(HomRun {
        delay_pulses: k,
        raw: raw.0,
        raw_error: raw.1,
        visibility: v,
        error: e,
        model: visibility_vs_separation(p, k as f64 / p.rep_rate)?,
        parallel,
        cross,
    })
}

fn hom_figure(cfg: &RunConfig, id: FigureId, k: u64) -> Result<Figure> {
    let g2 = g2_measurement(cfg, &cfg.emitter)?.0;
    let run = hom_run(cfg, k, g2)?;
    let delta = k as f64 / cfg.emitter.rep_rate;
    let mut fig = Figure::new(id);
    let mut csv = meta_block(cfg, id);
    let _ = writeln!(
        csv,
        "# delay_pulses={k}\n# separation_s={delta:e}\n# n_pulses={}",
        cfg.n_pulses_hom
    );
    csv.push_str("delay_ps,parallel_counts,cross_counts\n");
    for i in 0..run.parallel.n_bins() {
        let _ = writeln!(
            csv,
            "{:.4},{},{}",
            run.parallel.bin_center(i) * 1e12,
            run.parallel.counts[i],
            run.cross.counts[i]
        );
    }
    fig.outputs.add(format!("hom_{id}.csv"), csv);
    fig.push("separation", delta, None, "s");
    fig.push("visibility_mc_raw", run.raw, Some(run.raw_error), "");
    fig.push("g2_zero", g2.0, Some(g2.1), "");
    fig.push("visibility_mc", run.visibility, Some(run.error), "");
    fig.push("visibility_model", run.model, None, "");
    fig.push("n_pulses", cfg.n_pulses_hom as f64, None, "");
    if id == FigureId::Hom2a {
        fig.notes
            .push("reference: measured indistinguishability 0.959(2) at 13 ns".into());
    } else {
        fig.notes.push(
            "reference: measured indistinguishability 0.921(5) at 14.7 us; model-level wave-packet overlap 0.90(2)"
                .into(),
        );
    }
    fig.notes
        .push("visibility_mc is the raw value times (1 + 2 g2(0)), removing two-photon pulses to first order".into());
    fig.notes.push(ACCUMULATION_NOTE.into());
    Ok(fig)
}

/// Analytic visibility curve at [`SEPARATIONS`] and its decay fit.
pub fn separation_model_fit(params: &EmitterParams) -> Result<(Vec<f64>, FitResult)> {
    let v = SEPARATIONS
        .iter()
        .map(|dt| visibility_vs_separation(params, *dt))
        .collect::<Result<Vec<_>>>()?;
    let data = Dataset1D::new(SEPARATIONS.to_vec(), v.clone(), "s")?;
    Ok((v, fit_visibility_decay(&data)?))
}

fn separation(cfg: &RunConfig) -> Result<Figure> {
    let id = FigureId::Separation2c;
    let p = &cfg.emitter;
    let (model, model_fit) = separation_model_fit(p)?;
    let g2 = g2_measurement(cfg, p)?.0;
    let runs = SEPARATIONS
        .iter()
        .map(|dt| hom_run(cfg, delay_pulses(p, *dt), g2))
        .collect::<Result<Vec<_>>>()?;
    let mc = Dataset1D::new(
        runs.iter().map(|r| r.delay_pulses as f64 / p.rep_rate).collect(),
        runs.iter().map(|r| r.visibility).collect(),
        "s",
    )?
    .with_errors(runs.iter().map(|r| r.error.max(1e-6)).collect())?;
    let mc_fit = fit_visibility_decay(&mc)?;

    let mut fig = Figure::new(id);
    let mut csv = meta_block(cfg, id);
    let _ = writeln!(csv, "# n_pulses={}", cfg.n_pulses_hom);
    let _ = writeln!(csv, "# g2_zero={:e}", g2.0);
    csv.push_str("separation_s,delay_pulses,visibility_mc,visibility_mc_err,visibility_mc_raw,visibility_model\n");
    for (r, m) in runs.iter().zip(&model) {
        let _ = writeln!(
            csv,
            "{:e},{},{:e},{:e},{:e},{:e}",
            r.delay_pulses as f64 / p.rep_rate,
            r.delay_pulses,
            r.visibility,
            r.error,
            r.raw,
            m
        );
    }
    fig.outputs.add("visibility_vs_separation.csv", csv);
    fig.outputs.add(
        "decay_fit.csv",
        fit_table(cfg, id, &[("model_curve", &model_fit), ("monte_carlo", &mc_fit)]),
    );
    let plateau = visibility_plateau(p)?;
    fig.push("plateau_model", plateau, None, "");
    fig.push("visibility_model_14.7us", *model.last().expect("six rows"), None, "");
    let last = runs.last().expect("six rows");
    fig.push("visibility_mc_14.7us", last.visibility, Some(last.error), "");
    let (tau, tau_err) = model_fit.get("tau_d").expect("tau_d");
    fig.push("tau_d_model", tau, Some(tau_err), "s");
    fig.push("v_inf_model", model_fit.value("v_inf"), None, "");
    let (tau_mc, tau_mc_err) = mc_fit.get("tau_d").expect("tau_d");
    fig.push("tau_d_mc", tau_mc, Some(tau_mc_err), "s");
    fig.notes.push(
        "reference: measured plateau 0.921(5); model-level wave-packet overlap 0.90(2); decay timescale about 0.7 us"
            .into(),
    );
    fig.notes.push(ACCUMULATION_NOTE.into());
    Ok(fig)
}

/// Exponential fit of a lifetime histogram with Poisson weights.
pub fn fit_lifetime(h: &CoincidenceHistogram) -> Result<FitResult> {
    let x: Vec<f64> = (0..h.n_bins()).map(|i| h.bin_center(i)).collect();
    let y: Vec<f64> = h.counts.iter().map(|c| *c as f64).collect();
    fit_exponential(&Dataset1D::new(x, y, "s")?)
}

fn lifetime(cfg: &RunConfig) -> Result<Figure> {
    let id = FigureId::Lifetime3a;
    let p = &cfg.emitter;
    let n = usize::try_from(cfg.n_events_lifetime)
        .map_err(|_| Error::InvalidArgument("n_events_lifetime too large".into()))?;
    let seed = derive_seed(cfg.seed, streams::LIFETIME);
    let mut fig = Figure::new(id);
    let mut fits = Vec::new();
    for (detuned, label) in [(false, "resonant"), (true, "detuned")] {
        let h = lifetime_histogram(p, n, detuned, seed)?;
        let fit = fit_lifetime(&h)?;
        fig.outputs.add(
            format!("lifetime_{label}.csv"),
            h.to_csv(&[
                ("figure", id.to_string()),
                ("config_sha256", cfg.hash()),
                ("seed", cfg.seed.to_string()),
                ("mean_delay_s", format!("{:e}", lifetime_mean(p, detuned))),
            ]),
        );
        fits.push((label, fit));
    }
    let rows: Vec<(&str, &FitResult)> = fits.iter().map(|(l, f)| (*l, f)).collect();
    fig.outputs.add("lifetime_fit.csv", fit_table(cfg, id, &rows));
    let (t_res, e_res) = fits[0].1.get("tau").expect("tau");
    let (t_det, e_det) = fits[1].1.get("tau").expect("tau");
    fig.push("t1_resonant", t_res, Some(e_res), "s");
    fig.push("t1_detuned", t_det, Some(e_det), "s");
    let ratio_err = t_det / t_res * ((e_res / t_res).powi(2) + (e_det / t_det).powi(2)).sqrt();
    fig.push("lifetime_ratio", t_det / t_res, Some(ratio_err), "");
    fig.notes
        .push("reference: 162(5) ps at resonance, lengthened 3.8x when detuned".into());
    Ok(fig)
}

/// Fringe contrast sampled on the coherence delays and its exponential fit.
pub fn fringe_fit(params: &EmitterParams) -> Result<(Vec<(f64, f64)>, FitResult)> {
    let points = coherence_delays()
        .into_iter()
        .map(|tau| Ok((tau, mz_fringe_contrast(params, tau)?)))
        .collect::<Result<Vec<_>>>()?;
    let fit = fit_coherence_decay(&points)?;
    Ok((points, fit))
}

fn fringe(cfg: &RunConfig) -> Result<Figure> {
    let id = FigureId::Fringe3b;
    let p = &cfg.emitter;
    let (points, fit) = fringe_fit(p)?;
    let mut fig = Figure::new(id);
    let mut csv = meta_block(cfg, id);
    csv.push_str("delay_ps,fringe_contrast,fit\n");
    let (a, tau, b) = (fit.value("a"), fit.value("tau"), fit.value("b"));
    for (t, g) in &points {
        let _ = writeln!(csv, "{:.1},{:e},{:e}", t * 1e12, g, a * (-t / tau).exp() + b);
    }
    fig.outputs.add("fringe_contrast.csv", csv);
    fig.outputs
        .add("fringe_fit.csv", fit_table(cfg, id, &[("fringe_contrast", &fit)]));
    let (t2, t2_err) = fit.get("tau").expect("tau");
    fig.push("t2_eff", t2, Some(t2_err), "s");
    fig.push("t2_over_2t1", t2 / (2.0 * p.t1), Some(t2_err / (2.0 * p.t1)), "");
    fig.notes.push("reference: T2/2T1 = 0.91(5)".into());
    Ok(fig)
}

/// Noisy samples of a measured scan: every [`SPECTRUM_FIT_STRIDE`]-th grid
/// point within ±[`SPECTRUM_FIT_HALF_SPAN`], Gaussian noise of `noise`
/// times the peak height.
pub fn sample_scan(measured: &Spectrum, noise: f64, seed: u64) -> Result<Dataset1D> {
    let peak = measured.intensity().iter().cloned().fold(0.0, f64::max);
    let normal = Normal::new(0.0, noise * peak).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (x, y): (Vec<f64>, Vec<f64>) = measured
        .nu_grid()
        .into_iter()
        .zip(measured.intensity().iter().copied())
        .filter(|(nu, _)| nu.abs() <= SPECTRUM_FIT_HALF_SPAN)
        .step_by(SPECTRUM_FIT_STRIDE)
        .map(|(nu, v)| (nu, v + normal.sample(&mut rng)))
        .unzip();
    let n = x.len();
    Dataset1D::new(x, y, "Hz")?.with_errors(vec![noise * peak; n])
}

/// Results of the spectral pipeline.
#[derive(Debug, Clone)]
pub struct SpectrumAnalysis {
    pub line: Spectrum,
    pub measured: Spectrum,
    pub samples: Dataset1D,
    pub voigt: FitResult,
    pub lorentzian: FitResult,
    pub deconvolved: Vec<(f64, f64)>,
    pub coherence_fit: FitResult,
}

pub fn analyze_spectrum(cfg: &RunConfig) -> Result<SpectrumAnalysis> {
    let line = emitter_spectrum(&cfg.emitter)?;
    let measured = scan_spectrum(&line, &cfg.fp)?;
    let samples = sample_scan(&measured, cfg.spectrum_noise, derive_seed(cfg.seed, streams::SPECTRUM))?;
    let voigt = fit_voigt(&samples, cfg.fp.linewidth())?;
    let lorentzian = fit_lorentzian(&samples)?;
    let deconvolved = deconvolved_coherence(&measured, &cfg.fp)?;
    let coherence_fit = fit_coherence_decay(&deconvolved)?;
    Ok(SpectrumAnalysis {
        line,
        measured,
        samples,
        voigt,
        lorentzian,
        deconvolved,
        coherence_fit,
    })
}

fn spectrum(cfg: &RunConfig) -> Result<Figure> {
    let id = FigureId::Spectrum3c;
    let a = analyze_spectrum(cfg)?;
    let (_, fringe) = fringe_fit(&cfg.emitter)?;
    let mut fig = Figure::new(id);

    let mut csv = meta_block(cfg, id);
    csv.push_str("nu_GHz,intrinsic_per_GHz,measured_per_GHz\n");
    for (i, nu) in a.measured.nu_grid().iter().enumerate() {
        let _ = writeln!(
            csv,
            "{},{:e},{:e}",
            nu / 1e9,
            a.line.intensity()[i] * 1e9,
            a.measured.intensity()[i] * 1e9
        );
    }
    fig.outputs.add("spectrum.csv", csv);

    let v = &a.voigt;
    let l = &a.lorentzian;
    let inst = cfg.fp.linewidth();
    let mut csv = meta_block(cfg, id);
    let _ = writeln!(csv, "# noise_fraction_of_peak={}", cfg.spectrum_noise);
    csv.push_str("nu_GHz,sample_per_GHz,sample_err_per_GHz,voigt_fit_per_GHz,lorentzian_fit_per_GHz\n");
    let errors = a.samples.sigmas();
    for ((&nu, &y), &err) in a.samples.x.iter().zip(&a.samples.y).zip(&errors) {
        let vf = v.value("amplitude") * voigt(nu - v.value("nu0"), v.value("fwhm_l") + inst, v.value("fwhm_g"))?
            + v.value("baseline");
        let lw = l.value("fwhm");
        let ld = nu - l.value("nu0");
        let lf = l.value("amplitude") * (0.5 * lw) / (std::f64::consts::PI * (ld * ld + 0.25 * lw * lw))
            + l.value("baseline");
        let _ = writeln!(csv, "{}", fmt_row(&[nu / 1e9, y * 1e9, err * 1e9, vf * 1e9, lf * 1e9]));
    }
    fig.outputs.add("spectrum_samples.csv", csv);
    fig.outputs
        .add("voigt_fit.csv", fit_table(cfg, id, &[("spectrum_samples", v)]));
    fig.outputs
        .add("lorentzian_fit.csv", fit_table(cfg, id, &[("spectrum_samples", l)]));

    let mut csv = meta_block(cfg, id);
    csv.push_str("delay_ps,measured_coherence,instrument_coherence,deconvolved_coherence\n");
    for (tau, g) in &a.deconvolved {
        let _ = writeln!(
            csv,
            "{:.1},{:e},{:e},{:e}",
            tau * 1e12,
            coherence_magnitude(&a.measured, *tau),
            instrument_coherence(&cfg.fp, *tau),
            g
        );
    }
    fig.outputs.add("coherence_deconvolved.csv", csv);

    let (wl, wl_err) = v.get("fwhm_l").expect("fwhm_l");
    let (wg, wg_err) = v.get("fwhm_g").expect("fwhm_g");
    let (lw_true, gw_true) = emitter_line_widths(&cfg.emitter);
    fig.push("fwhm_lorentzian", wl, Some(wl_err), "Hz");
    fig.push("fwhm_gaussian", wg, Some(wg_err), "Hz");
    fig.push("fwhm_lorentzian_input", lw_true, None, "Hz");
    fig.push("fwhm_gaussian_input", gw_true, None, "Hz");
    fig.push("chi2_reduced_voigt", v.chi2_reduced, None, "");
    fig.push("chi2_reduced_lorentzian", l.chi2_reduced, None, "");
    let (t2, t2_err) = a.coherence_fit.get("tau").expect("tau");
    fig.push("t2_deconvolved", t2, Some(t2_err), "s");
    let t2_fringe = fringe.value("tau");
    fig.push("t2_fringe", t2_fringe, None, "s");
    fig.push("t2_relative_difference", (t2 - t2_fringe).abs() / t2_fringe, None, "");
    fig.notes
        .push("reference: homogeneous 1.01(4) GHz, inhomogeneous 0.75(5) GHz, coherence time 291(8) ps".into());
    fig.notes
        .push("the coherence time is read from the noiseless scan; the lineshape fits use the noisy samples".into());
    Ok(fig)
}
