use crate::budget::Budget;
use crate::config::RunConfig;
use crate::figures::{reproduce, FigureId};
use crate::output::OutputSet;
use crate::sweep::{check_request, sweep, to_csv, Metric};
use clap::{Parser, Subcommand};
use spsim::emitter::{Multiplicity, PhotonSource};
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "spsim", version, about = "Pulsed single-photon source simulator")]
struct Cli {
    /// Flat `key = value` config file; defaults apply to missing keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads; 0 uses every available core.
    #[arg(long, global = true)]
    workers: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Runs one figure pipeline and writes its CSVs and summary.txt.
    Reproduce {
        /// One of 1c, 1d, 2a, 2b, 2c, 3a, 3b, 3c.
        figure: FigureId,
    },
    /// Prints the photon rate chain.
    Budget,
    /// Evaluates a metric while varying one emitter parameter.
    Sweep {
        #[arg(long)]
        param: String,
        /// Comma-separated values in SI units.
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        values: Vec<f64>,
        /// visibility, g2 or t2_eff.
        #[arg(long)]
        metric: Metric,
        /// Photon separation for the visibility metric (s).
        #[arg(long, default_value_t = 13.09e-9)]
        delta: f64,
    },
    /// Checks the config and lists every violation.
    Validate,
    /// Dumps the raw photon stream as CSV.
    Simulate {
        #[arg(long, default_value_t = 10_000)]
        pulses: u64,
        /// Thin the stream by eta_fiber·eta_det.
        #[arg(long)]
        losses: bool,
    },
}

enum Failure {
    Usage(String),
    Invalid(Vec<String>),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Invalid(_) => EXIT_INVALID,
            Failure::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

fn numerical(e: impl std::fmt::Display) -> Failure {
    Failure::Numerical(e.to_string())
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            match &f {
                Failure::Usage(m) => eprintln!("usage error: {m}"),
                Failure::Invalid(v) => {
                    for m in v {
                        eprintln!("invalid config: {m}");
                    }
                }
                Failure::Numerical(m) => eprintln!("numerical failure: {m}"),
            }
            f.code()
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match &cli.config {
        None => RunConfig::default(),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
            RunConfig::from_config_str(&text).map_err(|e| Failure::Invalid(vec![e.to_string()]))?
        }
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    Ok(cfg)
}

fn require_valid(cfg: &RunConfig) -> Result<(), Failure> {
    let v = cfg.violations();
    if v.is_empty() {
        Ok(())
    } else {
        Err(Failure::Invalid(v))
    }
}

fn commit(out: &OutputSet, cli: &Cli) -> Result<(), Failure> {
    let written = out
        .commit(&cli.out)
        .map_err(|e| Failure::Numerical(format!("writing to {}: {e}", cli.out.display())))?;
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<(), Failure> {
    if let Command::Sweep { param, values, .. } = &cli.command {
        check_request(param, values).map_err(Failure::Usage)?;
    }
    let cfg = load_config(&cli)?;
    match &cli.command {
        Command::Validate => {
            require_valid(&cfg)?;
            println!("config valid, sha256 {}", cfg.hash());
            Ok(())
        }
        Command::Budget => {
            require_valid(&cfg)?;
            print!("{}", Budget::new(&cfg.emitter).report(&cfg.emitter));
            Ok(())
        }
        Command::Reproduce { figure } => {
            require_valid(&cfg)?;
            let fig = reproduce(*figure, &cfg).map_err(numerical)?;
            print!("{}", fig.summary(&cfg));
            commit(&fig.into_outputs(&cfg), &cli)
        }
        Command::Sweep {
            param,
            values,
            metric,
            delta,
        } => {
            require_valid(&cfg)?;
            if !(delta.is_finite() && *delta >= 0.0) {
                return Err(Failure::Usage(format!(
                    "--delta must be a non-negative time, got {delta}"
                )));
            }
            let rows = sweep(&cfg, param, values, *metric, *delta).map_err(numerical)?;
            let mut out = OutputSet::new();
            out.add(
                format!("sweep_{param}_{metric}.csv"),
                to_csv(&cfg, param, *metric, *delta, &rows),
            );
            commit(&out, &cli)
        }
        Command::Simulate { pulses, losses } => {
            require_valid(&cfg)?;
            if *pulses == 0 {
                return Err(Failure::Usage("--pulses must be at least 1".into()));
            }
            let p = &cfg.emitter;
            let mut source = PhotonSource::new(p, *pulses, cfg.seed).map_err(numerical)?;
            if *losses {
                source = source
                    .with_losses(p.eta_fiber * p.eta_det, cfg.seed.wrapping_add(1))
                    .map_err(numerical)?;
            }
            let records = source.collect(cfg.worker_count());
            let mut csv = format!(
                "# config_sha256={}\n# seed={}\n# n_pulses={pulses}\n",
                cfg.hash(),
                cfg.seed
            );
            csv.push_str("pulse_index,t_emit_s,omega_rad_per_s,multiplicity\n");
            for r in &records {
                let tag = match r.multiplicity {
                    Multiplicity::Single => "single",
                    Multiplicity::PairFirst => "pair-first",
                    Multiplicity::PairSecond => "pair-second",
                };
                let _ = writeln!(csv, "{},{:e},{:e},{tag}", r.pulse_index, r.t_emit, r.omega);
            }
            let mut out = OutputSet::new();
            out.add("stream.csv", csv);
            commit(&out, &cli)
        }
    }
}
