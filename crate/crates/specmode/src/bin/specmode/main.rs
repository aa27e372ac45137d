//! Command-line front end: configure grids, pulses and sources from a TOML
//! file, run experiments and sweeps, and emit structured CSV or JSON.
//!
//! Exit codes: 0 on success, 2 on configuration or validation errors, 3 when
//! a numerical budget (tensor size, photon truncation) is exceeded.

mod config;
mod output;
mod runs;

use std::path::PathBuf;
use std::process;

use clap::{Parser, Subcommand};
use specmode::{Error, Result};

use crate::config::{parse_sweep, RunConfig, SweepRange};
use crate::output::{resolve_target, write_text, Format, Outcome};

const LONG_ABOUT: &str = "\
Simulates interference, filtering, heralding and homodyne observation of \
pulsed multi-photon states with structured spectra.

All parameters carry built-in defaults; a TOML file given with --config \
overrides them section by section (see config.example.toml), and \
per-subcommand flags override the file. Sweep flags take START:STOP:STEPS. \
Sweeps render as CSV, single runs as JSON, unless --format says otherwise. \
Without --out (or [output].path) results go to standard output; relative \
output paths land under $SPECMODE_OUT_DIR when that variable is set.

Exit codes: 0 success, 2 configuration/validation error, 3 numerical budget \
exceeded.";

#[derive(Parser)]
#[command(name = "specmode", version, about = "Pulsed multi-photon spectral-state experiments", long_about = LONG_ABOUT)]
struct Cli {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output file (default: the configured path, else standard output).
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Output format; sweeps default to csv, single reports to json.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Worker threads for sweep points; 0 uses all cores.
    #[arg(long, global = true, default_value_t = 0, value_name = "N")]
    jobs: usize,

    /// Experiment to run; defaults to [experiment].name from the config.
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Hong–Ou–Mandel coincidence of two delayed copies of the pulse.
    Hom {
        /// Single relative delay between the two arms.
        #[arg(long, conflicts_with = "delay_sweep")]
        delay: Option<f64>,
        /// Delay sweep START:STOP:STEPS (default 0:5:51).
        #[arg(long, value_name = "RANGE", value_parser = parse_sweep)]
        delay_sweep: Option<SweepRange>,
        /// Override the pulse width.
        #[arg(long)]
        width: Option<f64>,
    },
    /// Coincidence for the correlated two-photon source.
    HomEntangled {
        /// Single source correlation in [0, 1).
        #[arg(long, conflicts_with = "correlation_sweep")]
        correlation: Option<f64>,
        /// Correlation sweep START:STOP:STEPS.
        #[arg(long, value_name = "RANGE", value_parser = parse_sweep)]
        correlation_sweep: Option<SweepRange>,
        /// Override the eigenmode basis size.
        #[arg(long)]
        basis_size: Option<usize>,
    },
    /// Two pairs on a balanced beamsplitter, all four photons at one port.
    FourPhoton {
        /// Single pairwise overlap γ in [0, 1].
        #[arg(long, conflicts_with = "gamma_sweep")]
        gamma: Option<f64>,
        /// Overlap sweep START:STOP:STEPS (default 0:1:11).
        #[arg(long, value_name = "RANGE", value_parser = parse_sweep)]
        gamma_sweep: Option<SweepRange>,
    },
    /// Photon-number statistics of an n-photon pulse behind a spectral
    /// filter (the reference mode).
    Filter {
        /// Photon number of the input state.
        #[arg(long)]
        photons: Option<usize>,
        /// Override the filter-mode width.
        #[arg(long)]
        filter_width: Option<f64>,
    },
    /// Density matrix a homodyne probe (the reference mode) observes for an
    /// n-photon pulse.
    Homodyne {
        /// Photon number of the input state.
        #[arg(long)]
        photons: Option<usize>,
        /// Override the probe width.
        #[arg(long)]
        probe_width: Option<f64>,
    },
    /// Heralded odd-photon preparation from a tapped degenerate source; the
    /// reference mode is the herald detector.
    Kitten {
        /// Single tap reflectivity in [0, 1].
        #[arg(long, conflicts_with = "reflectivity_sweep")]
        reflectivity: Option<f64>,
        /// Reflectivity sweep START:STOP:STEPS.
        #[arg(long, value_name = "RANGE", value_parser = parse_sweep)]
        reflectivity_sweep: Option<SweepRange>,
        /// Override the source correlation.
        #[arg(long)]
        correlation: Option<f64>,
        /// Override the pair-creation amplitude |λ|.
        #[arg(long)]
        coupling: Option<f64>,
        /// Override the pair-number cutoff.
        #[arg(long)]
        n_max: Option<usize>,
        /// Override the herald-detector width.
        #[arg(long)]
        detector_width: Option<f64>,
        /// Override the eigenmode basis size.
        #[arg(long)]
        basis_size: Option<usize>,
    },
    /// Conditional m-photon preparation from a two-mode source heralded by
    /// the reference-mode detector.
    CondFock {
        /// Heralded photon count.
        #[arg(long)]
        m: Option<usize>,
        /// Override the source correlation.
        #[arg(long)]
        correlation: Option<f64>,
        /// Override the pair-creation amplitude |λ|.
        #[arg(long)]
        coupling: Option<f64>,
        /// Override the pair-number cutoff.
        #[arg(long)]
        n_max: Option<usize>,
        /// Override the eigenmode basis size.
        #[arg(long)]
        basis_size: Option<usize>,
    },
    /// Exchange-symmetry normalization factor of a product of pulse copies.
    Normalization {
        /// Copies of the pulse.
        #[arg(long)]
        n1: Option<usize>,
        /// Copies of the reference mode.
        #[arg(long)]
        n2: Option<usize>,
    },
    /// Eigenmode coefficient table and Schmidt spectrum of the two-photon
    /// source amplitude.
    Decompose {
        /// Override the source correlation.
        #[arg(long)]
        correlation: Option<f64>,
        /// Override the eigenmode basis size.
        #[arg(long)]
        basis_size: Option<usize>,
    },
}

fn command_from_name(name: &str) -> Result<Command> {
    Ok(match name {
        "hom" => Command::Hom { delay: None, delay_sweep: None, width: None },
        "hom-entangled" => {
            Command::HomEntangled { correlation: None, correlation_sweep: None, basis_size: None }
        }
        "four-photon" => Command::FourPhoton { gamma: None, gamma_sweep: None },
        "filter" => Command::Filter { photons: None, filter_width: None },
        "homodyne" => Command::Homodyne { photons: None, probe_width: None },
        "kitten" => Command::Kitten {
            reflectivity: None,
            reflectivity_sweep: None,
            correlation: None,
            coupling: None,
            n_max: None,
            detector_width: None,
            basis_size: None,
        },
        "cond-fock" => Command::CondFock {
            m: None,
            correlation: None,
            coupling: None,
            n_max: None,
            basis_size: None,
        },
        "normalization" => Command::Normalization { n1: None, n2: None },
        "decompose" => Command::Decompose { correlation: None, basis_size: None },
        other => return Err(Error::Config(format!("unknown experiment {other:?}"))),
    })
}

fn dispatch(command: &Command, cfg: &RunConfig) -> Result<Outcome> {
    match command {
        Command::Hom { delay, delay_sweep, width } => {
            let mut cfg = cfg.clone();
            if let Some(w) = width {
                cfg.pulse.width = *w;
            }
            runs::hom(&cfg, *delay, *delay_sweep)
        }
        Command::HomEntangled { correlation, correlation_sweep, basis_size } => {
            let mut cfg = cfg.clone();
            if let Some(d) = basis_size {
                cfg.basis.size = *d;
            }
            runs::hom_entangled_run(&cfg, *correlation, *correlation_sweep)
        }
        Command::FourPhoton { gamma, gamma_sweep } => runs::four_photon(cfg, *gamma, *gamma_sweep),
        Command::Filter { photons, filter_width } => {
            let mut cfg = cfg.clone();
            if let Some(w) = filter_width {
                cfg.reference.width = *w;
            }
            runs::filter(&cfg, *photons)
        }
        Command::Homodyne { photons, probe_width } => {
            let mut cfg = cfg.clone();
            if let Some(w) = probe_width {
                cfg.reference.width = *w;
            }
            runs::homodyne(&cfg, *photons)
        }
        Command::Kitten {
            reflectivity,
            reflectivity_sweep,
            correlation,
            coupling,
            n_max,
            detector_width,
            basis_size,
        } => {
            let mut cfg = cfg.clone();
            if let Some(c) = correlation {
                cfg.source.correlation = *c;
            }
            if let Some(g) = coupling {
                cfg.source.coupling = *g;
            }
            if let Some(n) = n_max {
                cfg.source.n_max = *n;
            }
            if let Some(w) = detector_width {
                cfg.reference.width = *w;
            }
            if let Some(d) = basis_size {
                cfg.basis.size = *d;
            }
            runs::kitten(&cfg, *reflectivity, *reflectivity_sweep)
        }
        Command::CondFock { m, correlation, coupling, n_max, basis_size } => {
            let mut cfg = cfg.clone();
            if let Some(c) = correlation {
                cfg.source.correlation = *c;
            }
            if let Some(g) = coupling {
                cfg.source.coupling = *g;
            }
            if let Some(n) = n_max {
                cfg.source.n_max = *n;
            }
            if let Some(d) = basis_size {
                cfg.basis.size = *d;
            }
            runs::cond_fock(&cfg, *m)
        }
        Command::Normalization { n1, n2 } => runs::normalization(cfg, *n1, *n2),
        Command::Decompose { correlation, basis_size } => {
            let mut cfg = cfg.clone();
            if let Some(c) = correlation {
                cfg.source.correlation = *c;
            }
            if let Some(d) = basis_size {
                cfg.basis.size = *d;
            }
            runs::decompose_run(&cfg)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let config = RunConfig::load(cli.config.as_deref())?;
    let command = match cli.command {
        Some(command) => command,
        None => command_from_name(&config.experiment.name)?,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
    let outcome = pool.install(|| dispatch(&command, &config))?;
    let text = outcome.render(cli.format.or(config.output.format))?;
    let target = resolve_target(cli.out.as_deref(), &config.output.path);
    write_text(&text, target.as_deref())?;
    if let Some(path) = target {
        log::info!("wrote {}", path.display());
    }
    Ok(())
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Budget(_) | Error::Truncation { .. } => 3,
        _ => 2,
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        process::exit(exit_code(&err));
    }
}
