use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use neuralchain::pinn::ProblemKind;
use neuralchain::stencil::{Boundary, StencilParams};
use neuralchain_cli::commands::{self, ChainInputs, SolveRefArgs};
use neuralchain_cli::{CliError, CliResult};

/// Environment variable selecting log verbosity (error, warn, info, debug, trace).
const LOG_ENV: &str = "NCHAIN_LOG";

#[derive(Parser)]
#[command(name = "nchain", version, about = "Neural chains, physics-informed networks and reference solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProblemArg {
    ViscousBurgers,
    InviscidBurgers,
    Eikonal,
}

impl From<ProblemArg> for ProblemKind {
    fn from(p: ProblemArg) -> Self {
        match p {
            ProblemArg::ViscousBurgers => ProblemKind::ViscousBurgers,
            ProblemArg::InviscidBurgers => ProblemKind::InviscidBurgers,
            ProblemArg::Eikonal => ProblemKind::Eikonal,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundaryArg {
    Periodic,
    Dirichlet,
}

#[derive(Subcommand)]
enum Command {
    /// Train a network from a TOML run configuration.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Overrides output_dir from the configuration.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides both the initialization and the training seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate a trained network on a uniform x-grid at one time.
    Predict {
        #[arg(long)]
        weights: PathBuf,
        #[arg(long, default_value_t = 256)]
        grid: usize,
        #[arg(long, default_value_t = 0.3)]
        time: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a weight file as a relaxation chain.
    ChainRun {
        #[arg(long)]
        weights: PathBuf,
        /// CSV with a header and one input vector per row.
        #[arg(long, conflicts_with = "grid", required_unless_present = "grid")]
        inputs: Option<PathBuf>,
        /// Uniform x-grid size (two-input networks only).
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long, default_value_t = 0.3)]
        time: f64,
        #[arg(long, default_value_t = 1.0)]
        omega: f64,
        /// Write per-layer activations (layer,neuron,input,value).
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve a reference problem and write snapshot CSVs.
    SolveRef {
        #[arg(long, value_enum)]
        problem: ProblemArg,
        #[arg(long, default_value_t = 2041)]
        n: usize,
        #[arg(long, value_delimiter = ',', default_value = "0.3")]
        times: Vec<f64>,
        /// Viscous solver time step (derived from the stability bounds if absent).
        #[arg(long)]
        dt: Option<f64>,
        /// Courant number of the Godunov solver.
        #[arg(long, default_value_t = 0.9)]
        cfl: f64,
        /// Use the exact Riemann solution for the inviscid problem.
        #[arg(long)]
        exact: bool,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Error norms of a profile CSV against a reference CSV.
    Compare {
        #[arg(long)]
        u: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
    },
    /// Generalized-normal fits and histograms of a weight file.
    AnalyzeWeights {
        #[arg(long)]
        weights: PathBuf,
        #[arg(long, default_value_t = 30)]
        bins: usize,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Build an advection–diffusion stencil chain.
    BuildStencil {
        #[arg(long = "d", allow_hyphen_values = true)]
        diffusion: f64,
        #[arg(long = "u", allow_hyphen_values = true)]
        advection: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        steps: usize,
        #[arg(long, value_enum, default_value = "periodic")]
        boundary: BoundaryArg,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Train { config, out, seed } => {
            let o = commands::cmd_train(&config, out.as_deref(), seed)?;
            println!("wrote {}", o.output_dir.display());
            print!("{}", o.report.to_record());
        }
        Command::Predict { weights, grid, time, out } => {
            commands::cmd_predict(&weights, grid, time, &out)?;
        }
        Command::ChainRun {
            weights,
            inputs,
            grid,
            time,
            omega,
            trace,
            out,
        } => {
            let inputs = match (&inputs, grid) {
                (Some(p), _) => ChainInputs::File(p),
                (None, Some(n)) => ChainInputs::Grid { n, t: time },
                (None, None) => return Err(CliError::config("either --inputs or --grid is required")),
            };
            commands::cmd_chain_run(&weights, inputs, omega, trace.as_deref(), &out)?;
        }
        Command::SolveRef {
            problem,
            n,
            times,
            dt,
            cfl,
            exact,
            out_dir,
        } => {
            let args = SolveRefArgs {
                problem: problem.into(),
                n,
                times,
                dt,
                cfl,
                exact,
            };
            for p in commands::cmd_solve_ref(&args, &out_dir)? {
                println!("wrote {}", p.display());
            }
        }
        Command::Compare { u, reference } => {
            print!("{}", commands::cmd_compare(&u, &reference)?.to_record());
        }
        Command::AnalyzeWeights { weights, bins, out_dir } => {
            commands::cmd_analyze_weights(&weights, bins, &out_dir)?;
        }
        Command::BuildStencil {
            diffusion,
            advection,
            n,
            steps,
            boundary,
            out,
        } => {
            let boundary = match boundary {
                BoundaryArg::Periodic => Boundary::Periodic,
                BoundaryArg::Dirichlet => Boundary::Dirichlet,
            };
            let params = StencilParams::new(diffusion, advection, n, boundary)?;
            let o = commands::cmd_build_stencil(&params, steps, &out)?;
            println!(
                "moments W0={:?} W1={:?} W2={:?}; positivity={} diffusion_number_ok={}",
                o.interior_moments[0], o.interior_moments[1], o.interior_moments[2], o.stability.positivity, o.stability.diffusion_number_ok
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
