//! Command-line harness over the crossing experiments for the benchmark
//! system.

use clap::{Args, Parser, Subcommand, ValueEnum};
use slowfast_core::integrate::IntegratorConfig;
use slowfast_core::model::{benchmark_system, benchmark_system_scaled, PhaseState};
use slowfast_experiments::analysis::resonance_analysis;
use slowfast_experiments::emit::{
    json_string, record_csv, table_csv, write_record, write_table, write_uniformity, EmitFormat,
};
use slowfast_experiments::sweep::{
    initial_action_for_invariant, run_single, run_table1, SweepConfig,
};
use slowfast_experiments::uniformity::{run_uniformity, UniformityConfig, UniformityMode};
use slowfast_experiments::ExperimentError;
use std::path::PathBuf;
use std::process::ExitCode;

/// Resonance-crossing pseudophase experiments on a slow-fast benchmark system.
#[derive(Parser)]
#[command(name = "slowfast", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trajectory to its crossing and compare with the prediction.
    Single(SingleArgs),
    /// Phase-ensemble accuracy table over a ladder of perturbation strengths.
    #[command(name = "table1")]
    Table1(Table1Args),
    /// Distribution test of the crossing pseudophase over a random ensemble.
    Uniformity(UniformityArgs),
    /// Static analysis of the resonance surface.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for EmitFormat {
    fn from(f: Format) -> EmitFormat {
        match f {
            Format::Csv => EmitFormat::Csv,
            Format::Json => EmitFormat::Json,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum I0Mode {
    /// Correct the initial action so the improved invariant equals --j0.
    FixJ0,
    /// Use --j0 literally as the initial action.
    FixI0,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Ensemble,
    EpsilonSweep,
}

#[derive(Args)]
struct SingleArgs {
    /// Perturbation strength.
    #[arg(long)]
    epsilon: f64,
    /// Improved invariant (fix-j0 mode) or literal initial action (fix-i0).
    #[arg(long, default_value_t = 1.0)]
    j0: f64,
    /// Initial fast phase in radians.
    #[arg(long, default_value_t = 0.0)]
    phi0: f64,
    /// How the initial action is chosen.
    #[arg(long, value_enum, default_value_t = I0Mode::FixJ0)]
    i0_mode: I0Mode,
    /// Relative tolerance override for the integrator.
    #[arg(long)]
    rtol: Option<f64>,
    /// Slow-time budget for the crossing search.
    #[arg(long, default_value_t = 10.0)]
    horizon: f64,
    /// Write the record here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Serialization format.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct Table1Args {
    /// First rung of the perturbation ladder eps = 0.001 * 0.5^k.
    #[arg(long, default_value_t = 1)]
    k_min: u32,
    /// Last rung of the ladder.
    #[arg(long, default_value_t = 10)]
    k_max: u32,
    /// Number of equispaced initial phases per strength.
    #[arg(long, default_value_t = 250)]
    phases: usize,
    /// Improved invariant shared by the whole ensemble.
    #[arg(long, default_value_t = 1.0)]
    j0: f64,
    /// Write the table (plus a -loglog.dat companion) here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Serialization format.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct UniformityArgs {
    /// Sampling mode.
    #[arg(long, value_enum)]
    mode: ModeArg,
    /// Number of samples.
    #[arg(long)]
    n: usize,
    /// RNG seed; each sample draws from its own derived stream.
    #[arg(long)]
    seed: u64,
    /// Fixed perturbation strength (ensemble mode).
    #[arg(long, default_value_t = 1e-4)]
    epsilon: f64,
    /// Perturbation ceiling (epsilon-sweep mode).
    #[arg(long, default_value_t = 1e-4)]
    epsilon0: f64,
    /// Lower end of the reference interval.
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    /// Upper end of the reference interval.
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Radius of the sampling ball around the standard start (ensemble mode).
    #[arg(long, default_value_t = 0.05)]
    ball_radius: f64,
    /// Write the samples (plus an -ecdf.dat companion) here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Serialization format for --out.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Analyze where the averaged flow crosses, not the given point itself.
    #[arg(long)]
    at_resonance: bool,
    /// Initial action for the averaged flow (used with --at-resonance).
    #[arg(long, default_value_t = 1.0)]
    j0: f64,
    /// Slow momentum coordinate.
    #[arg(long, default_value_t = 0.0)]
    y0: f64,
    /// Slow position coordinate.
    #[arg(long, default_value_t = 0.0)]
    x0: f64,
    /// Scale factor on the benchmark perturbation amplitude.
    #[arg(long, default_value_t = 1.0)]
    h1_scale: f64,
    /// Perturbation strength for band widths and clearance floors.
    #[arg(long, default_value_t = 1e-3)]
    epsilon: f64,
    /// Exclusion-band width coefficient.
    #[arg(long, default_value_t = 1.0)]
    c_a: f64,
}

fn require_positive(flag: &str, v: f64) -> Result<(), ExperimentError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ExperimentError::Config(format!("{flag} must be finite and positive, got {v}")))
    }
}

fn require_finite(flag: &str, v: f64) -> Result<(), ExperimentError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(ExperimentError::Config(format!("{flag} must be finite, got {v}")))
    }
}

fn cmd_single(args: SingleArgs) -> Result<(), ExperimentError> {
    require_positive("--epsilon", args.epsilon)?;
    require_finite("--j0", args.j0)?;
    require_finite("--phi0", args.phi0)?;
    require_positive("--horizon", args.horizon)?;
    if let Some(r) = args.rtol {
        require_positive("--rtol", r)?;
    }
    let sys = benchmark_system();
    let i0 = match args.i0_mode {
        I0Mode::FixJ0 => {
            initial_action_for_invariant(&sys, args.j0, args.phi0, &[0.0], &[0.0], args.epsilon)?
        }
        I0Mode::FixI0 => args.j0,
    };
    let state0 = PhaseState::new(i0, args.phi0, vec![0.0], vec![0.0], args.epsilon);
    let mut config = IntegratorConfig::default();
    if let Some(r) = args.rtol {
        config.rel_tol = r;
    }
    let record = run_single(&sys, &state0, args.horizon, &config)?;
    match &args.out {
        Some(path) => {
            write_record(&record, path, args.format.into())?;
            println!("wrote {}", path.display());
        }
        None => match args.format {
            Format::Csv => print!("{}", record_csv(&record)),
            Format::Json => println!("{}", json_string(&record)),
        },
    }
    Ok(())
}

fn cmd_table1(args: Table1Args) -> Result<(), ExperimentError> {
    if args.k_min < 1 || args.k_min > args.k_max {
        return Err(ExperimentError::Config(format!(
            "ladder rungs must satisfy 1 <= k-min <= k-max, got {}..{}",
            args.k_min, args.k_max
        )));
    }
    require_finite("--j0", args.j0)?;
    let sys = benchmark_system();
    let cfg = SweepConfig {
        j0: args.j0,
        phi0_count: args.phases,
        epsilon_list: (args.k_min..=args.k_max).map(|k| 1e-3 * 0.5_f64.powi(k as i32)).collect(),
        ..SweepConfig::default()
    };
    let table = run_table1(&sys, &cfg)?;
    match &args.out {
        Some(path) => {
            write_table(&table, path, args.format.into())?;
            println!("wrote {}", path.display());
        }
        None => match args.format {
            Format::Csv => {
                print!("{}", table_csv(&table));
                if let Some(fit) = &table.fit {
                    println!("# fit: slope={:.7} intercept={:.7}", fit.slope, fit.intercept);
                }
            }
            Format::Json => println!("{}", json_string(&table)),
        },
    }
    Ok(())
}

fn cmd_uniformity(args: UniformityArgs) -> Result<(), ExperimentError> {
    require_positive("--epsilon", args.epsilon)?;
    require_positive("--epsilon0", args.epsilon0)?;
    let mode = match args.mode {
        ModeArg::Ensemble => UniformityMode::Ensemble,
        ModeArg::EpsilonSweep => UniformityMode::EpsilonSweep,
    };
    let sys = benchmark_system();
    let cfg = UniformityConfig {
        mode,
        n: args.n,
        seed: args.seed,
        center: PhaseState::new(1.0, 0.0, vec![0.0], vec![0.0], args.epsilon),
        ball_radius: args.ball_radius,
        epsilon0: args.epsilon0,
        interval: (args.alpha, args.beta),
        ..UniformityConfig::default()
    };
    let report = run_uniformity(&sys, &cfg)?;
    if let Some(path) = &args.out {
        write_uniformity(&report, path, args.format.into())?;
        println!("wrote {}", path.display());
    }
    println!(
        "n={} used={} dropped={} ks={:.6} fraction({:.3},{:.3})={:.6} expected={:.6}",
        report.n_requested,
        report.n_used,
        report.dropped,
        report.ks_statistic,
        report.interval.0,
        report.interval.1,
        report.fraction_in_interval,
        report.expected_fraction
    );
    Ok(())
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<(), ExperimentError> {
    require_finite("--j0", args.j0)?;
    require_finite("--y0", args.y0)?;
    require_finite("--x0", args.x0)?;
    require_finite("--h1-scale", args.h1_scale)?;
    let sys = benchmark_system_scaled(args.h1_scale);
    let report = resonance_analysis(
        &sys,
        args.j0,
        &[args.y0],
        &[args.x0],
        args.at_resonance,
        args.epsilon,
        args.c_a,
    )?;
    println!("{report}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Single(args) => cmd_single(args),
        Command::Table1(args) => cmd_table1(args),
        Command::Uniformity(args) => cmd_uniformity(args),
        Command::Analyze(args) => cmd_analyze(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                ExperimentError::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
