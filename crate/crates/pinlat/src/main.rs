//! `pinlat`: standing waves, pinning intervals, the spectral pinning
//! invariant, and direction-dependent depinning thresholds for bistable
//! lattice equations, from one JSON config.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 numerical
//! failure; error exits put a machine-readable JSON object on stderr.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;

use commands::Failure;
use config::{InitKind, ProbeModeKind, RunConfig, SideKind};

/// Version stamp embedded in every artifact so published outputs can be
/// traced to the binary and schema that produced them.
pub const ARTIFACT_VERSION: &str = concat!("pinlat/", env!("CARGO_PKG_VERSION"), "+schema.1");

#[derive(Parser, Debug)]
#[command(
    name = "pinlat",
    version,
    about = "Pinning analysis for bistable lattice fronts",
    arg_required_else_help = true
)]
struct Cli {
    /// JSON run configuration; schema defaults apply when omitted
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Directory for JSON/CSV artifacts (overrides the config)
    #[arg(long, global = true, value_name = "DIR")]
    output_dir: Option<PathBuf>,

    /// Truncation half-width N (overrides the config)
    #[arg(long, global = true)]
    n: Option<usize>,

    /// Suppress per-stage summary lines
    #[arg(long, global = true)]
    quiet: bool,

    /// Cap worker threads for direction sweeps
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the family descriptor against the structural assumptions
    Validate {
        #[arg(long)]
        n_u: Option<usize>,
        #[arg(long)]
        n_a: Option<usize>,
    },
    /// Solve one standing-wave profile by damped Newton
    StandingWave {
        /// Detuning parameter a
        #[arg(long)]
        a: Option<f64>,
        #[arg(long, value_enum)]
        init: Option<InitKind>,
    },
    /// Locate both folds bounding the pinning interval by continuation
    PinningInterval,
    /// Top eigenvalue and eigenvector of the linearization about a wave
    Spectral {
        /// Detuning parameter a
        #[arg(long)]
        a: Option<f64>,
        /// Analyze at the upper fold instead of at a
        #[arg(long)]
        at_fold: bool,
    },
    /// Evaluate the pinning invariant B from the kernel mode at a fold
    ConditionB {
        #[arg(long, value_enum)]
        side: Option<SideKind>,
    },
    /// Iterate the reduced quadratic recurrence and check its ordering
    ReducedMap {
        #[arg(long)]
        b: Option<f64>,
        #[arg(long)]
        eta0: Option<f64>,
        #[arg(long)]
        omega0: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        window_start: Option<usize>,
        #[arg(long)]
        m_coeff: Option<f64>,
    },
    /// One strip simulation: front track and fitted speed
    Simulate {
        /// Detuning parameter a
        #[arg(long)]
        a: Option<f64>,
        #[arg(long)]
        sigma_num: Option<u32>,
        #[arg(long)]
        sigma_den: Option<u32>,
        #[arg(long)]
        width: Option<usize>,
        #[arg(long)]
        t_end: Option<f64>,
    },
    /// Depinning threshold in one direction by bisection on simulations
    EstimateAPlus {
        #[arg(long)]
        sigma_num: Option<u32>,
        #[arg(long)]
        sigma_den: Option<u32>,
        #[arg(long)]
        bracket_lo: Option<f64>,
        #[arg(long)]
        bracket_hi: Option<f64>,
    },
    /// Depinning thresholds over a list of directions
    SweepTheta {
        #[arg(long)]
        bracket_lo: Option<f64>,
        #[arg(long)]
        bracket_hi: Option<f64>,
    },
    /// Slow-speed scaling probe near the depinning transition
    ProbeEpsilon {
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, value_enum)]
        mode: Option<ProbeModeKind>,
    },
    /// Chain validate, pinning-interval, spectral at fold, condition-b and
    /// sweep-theta into one consolidated verdict
    FullReport,
}

fn apply_overrides(cfg: &mut RunConfig, cli: &Cli) {
    if let Some(dir) = &cli.output_dir {
        cfg.output_dir = dir.clone();
    }
    if let Some(n) = cli.n {
        cfg.n = n;
    }
    match &cli.command {
        Command::Validate { n_u, n_a } => {
            if let Some(v) = n_u {
                cfg.validate.n_u = *v;
            }
            if let Some(v) = n_a {
                cfg.validate.n_a = *v;
            }
        }
        Command::StandingWave { a, init } => {
            if let Some(v) = a {
                cfg.standing_wave.a = *v;
            }
            if let Some(v) = init {
                cfg.standing_wave.init = *v;
            }
        }
        Command::PinningInterval | Command::FullReport => {}
        Command::Spectral { a, at_fold } => {
            if let Some(v) = a {
                cfg.spectral.a = *v;
            }
            if *at_fold {
                cfg.spectral.at_fold = true;
            }
        }
        Command::ConditionB { side } => {
            if let Some(v) = side {
                cfg.condition_b.side = *v;
            }
        }
        Command::ReducedMap { b, eta0, omega0, steps, window_start, m_coeff } => {
            if let Some(v) = b {
                cfg.reduced_map.b = *v;
            }
            if let Some(v) = eta0 {
                cfg.reduced_map.eta0 = *v;
            }
            if let Some(v) = omega0 {
                cfg.reduced_map.omega0 = *v;
            }
            if let Some(v) = steps {
                cfg.reduced_map.steps = *v;
            }
            if let Some(v) = window_start {
                cfg.reduced_map.window_start = *v;
            }
            if let Some(v) = m_coeff {
                cfg.reduced_map.m_coeff = *v;
            }
        }
        Command::Simulate { a, sigma_num, sigma_den, width, t_end } => {
            if let Some(v) = a {
                cfg.simulate.a = *v;
            }
            if let Some(v) = sigma_num {
                cfg.simulate.sigma_num = *v;
            }
            if let Some(v) = sigma_den {
                cfg.simulate.sigma_den = *v;
            }
            if let Some(v) = width {
                cfg.simulate.width = *v;
            }
            if let Some(v) = t_end {
                cfg.simulate.t_end = *v;
            }
        }
        Command::EstimateAPlus { sigma_num, sigma_den, bracket_lo, bracket_hi } => {
            if let Some(v) = sigma_num {
                cfg.estimate_a_plus.sigma_num = *v;
            }
            if let Some(v) = sigma_den {
                cfg.estimate_a_plus.sigma_den = *v;
            }
            if let Some(v) = bracket_lo {
                cfg.estimate_a_plus.bracket_lo = *v;
            }
            if let Some(v) = bracket_hi {
                cfg.estimate_a_plus.bracket_hi = *v;
            }
        }
        Command::SweepTheta { bracket_lo, bracket_hi } => {
            if let Some(v) = bracket_lo {
                cfg.sweep_theta.bracket_lo = *v;
            }
            if let Some(v) = bracket_hi {
                cfg.sweep_theta.bracket_hi = *v;
            }
        }
        Command::ProbeEpsilon { eps, mode } => {
            if let Some(v) = eps {
                cfg.probe_epsilon.eps = *v;
            }
            if let Some(v) = mode {
                cfg.probe_epsilon.mode = *v;
            }
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let mut cfg = config::load(cli.config.as_ref())?;
    apply_overrides(&mut cfg, cli);
    config::check(&cfg)?;
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(Failure::Usage("--threads must be at least 1".to_string()));
        }
        // a pool may already be installed when commands run back to back in
        // one process (tests); the cap is best-effort then
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    let quiet = cli.quiet;
    match &cli.command {
        Command::Validate { .. } => commands::validate(&cfg, quiet),
        Command::StandingWave { .. } => commands::standing_wave(&cfg, quiet),
        Command::PinningInterval => commands::pinning_interval_cmd(&cfg, quiet),
        Command::Spectral { .. } => commands::spectral(&cfg, quiet),
        Command::ConditionB { .. } => commands::condition_b(&cfg, quiet),
        Command::ReducedMap { .. } => commands::reduced_map(&cfg, quiet),
        Command::Simulate { .. } => commands::simulate(&cfg, quiet),
        Command::EstimateAPlus { .. } => commands::estimate_a_plus_cmd(&cfg, quiet),
        Command::SweepTheta { .. } => commands::sweep_theta_cmd(&cfg, quiet),
        Command::ProbeEpsilon { .. } => commands::probe_epsilon(&cfg, quiet),
        Command::FullReport => commands::full_report(&cfg, quiet),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let failure = Failure::Usage(e.to_string());
                eprintln!("{}", failure.to_stderr_json());
                return ExitCode::from(1);
            }
            // --help / --version render on stdout and exit cleanly
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("{}", failure.to_stderr_json());
            ExitCode::from(failure.exit_code())
        }
    }
}
