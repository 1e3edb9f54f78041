//! Command-line front end: per-stage subcommands, the full pipeline, and
//! plot-data emission.
//!
//! Exit codes: 0 success, 2 configuration error, 3 stage non-convergence,
//! 4 hypothesis-check failure.

mod pipeline;
mod plots;
mod schema;
mod stages;

use clap::{Args, Parser, Subcommand};
use micropteron_core::Error as CoreError;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "micropteron",
    about = "Traveling-wave solvers for the diatomic FPUT lattice near the equal mass limit",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Wave speed given either directly or through the near-sonic parameter.
#[derive(Args, Clone, Debug)]
struct SpeedArgs {
    /// Wave speed, |c| > 1 (mutually exclusive with --epsilon)
    #[arg(long)]
    c: Option<f64>,
    /// Near-sonic parameter, c = sqrt(1 + epsilon^2/24)
    #[arg(long)]
    epsilon: Option<f64>,
}

impl SpeedArgs {
    fn resolve(&self, mu: f64) -> anyhow::Result<micropteron_core::WaveParameters> {
        match (self.c, self.epsilon) {
            (Some(_), Some(_)) => Err(CoreError::InvalidParameter(
                "--c and --epsilon are mutually exclusive".into(),
            )
            .into()),
            (Some(c), None) => Ok(micropteron_core::WaveParameters::from_speed(c, mu)?),
            (None, Some(eps)) => Ok(micropteron_core::WaveParameters::from_epsilon(eps, mu)?),
            (None, None) => Err(CoreError::InvalidParameter(
                "one of --c or --epsilon is required".into(),
            )
            .into()),
        }
    }
}

#[derive(Args, Clone, Debug)]
struct OutArgs {
    /// Output directory (default: $MICROPTERON_OUT or ./out)
    #[arg(long)]
    out: Option<PathBuf>,
}

impl OutArgs {
    fn resolve(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| {
            std::env::var_os("MICROPTERON_OUT")
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("out"))
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Dispersion symbols, critical frequencies and eigencurve plot data
    Dispersion {
        #[command(flatten)]
        speed: SpeedArgs,
        /// Mass detuning mu = 1/m - 1
        #[arg(long, default_value_t = 0.0)]
        mu: f64,
        /// Samples per plotted curve
        #[arg(long, default_value_t = 512)]
        samples: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Monatomic solitary wave by Petviashvili iteration
    Solitary {
        #[command(flatten)]
        speed: SpeedArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// One member of the periodic wave family
    Periodic {
        #[command(flatten)]
        speed: SpeedArgs,
        #[arg(long, default_value_t = 0.0)]
        mu: f64,
        /// Amplitude parameter
        #[arg(long)]
        a: f64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Jost solution, phase shift and solvability diagnostics
    Jost {
        #[command(flatten)]
        speed: SpeedArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Localized correctors and ripple amplitude at one or more detunings
    Micropteron {
        #[command(flatten)]
        speed: SpeedArgs,
        #[arg(long, default_value_t = 0.0)]
        mu: f64,
        /// Comma-separated detuning sweep (overrides --mu)
        #[arg(long, value_delimiter = ',')]
        mu_sweep: Option<Vec<f64>>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Integrate a saved traveling wave on the finite chain
    Simulate {
        /// Directory holding a solution manifest written by `micropteron`
        /// or `solitary`
        #[arg(long)]
        profiles: PathBuf,
        #[arg(long, default_value_t = 50.0)]
        t_final: f64,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        /// Chain length (default: sized from the profile support)
        #[arg(long)]
        sites: Option<usize>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// All stages in dependency order with a diagnostics record
    Pipeline {
        #[command(flatten)]
        speed: SpeedArgs,
        #[arg(long, default_value_t = 0.0)]
        mu: f64,
        /// Comma-separated detuning sweep for the corrector stage
        #[arg(long, value_delimiter = ',')]
        mu_sweep: Option<Vec<f64>>,
        #[arg(long, default_value_t = 50.0)]
        t_final: f64,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        #[command(flatten)]
        out: OutArgs,
    },
}

fn exit_code_for(err: &anyhow::Error) -> ExitCode {
    if let Some(core) = err.downcast_ref::<CoreError>() {
        match core {
            CoreError::InvalidParameter(_) | CoreError::Format(_) => ExitCode::from(2),
            CoreError::Hypothesis(_) => ExitCode::from(4),
            _ => ExitCode::from(3),
        }
    } else {
        ExitCode::from(3)
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Dispersion {
            speed,
            mu,
            samples,
            out,
        } => {
            let params = speed.resolve(mu)?;
            let record = stages::run_dispersion(&params, samples, &out.resolve())?;
            println!("{}", serde_json::to_string_pretty(&record)?);
        }
        Command::Solitary { speed, out } => {
            let params = speed.resolve(0.0)?;
            let (record, _) = stages::run_solitary(&params, &out.resolve())?;
            println!("{}", serde_json::to_string_pretty(&record)?);
        }
        Command::Periodic { speed, mu, a, out } => {
            let params = speed.resolve(mu)?;
            let record = stages::run_periodic(&params, a, &out.resolve())?;
            println!("{}", serde_json::to_string_pretty(&record)?);
        }
        Command::Jost { speed, out } => {
            let params = speed.resolve(0.0)?;
            let dir = out.resolve();
            let (_, solitary) = stages::run_solitary(&params, &dir)?;
            let (record, _) = stages::run_jost(&params, &solitary, &dir)?;
            println!("{}", serde_json::to_string_pretty(&record)?);
        }
        Command::Micropteron {
            speed,
            mu,
            mu_sweep,
            out,
        } => {
            let params = speed.resolve(mu)?;
            let dir = out.resolve();
            let (_, solitary) = stages::run_solitary(&params, &dir)?;
            let (_, jost) = stages::run_jost(&params, &solitary, &dir)?;
            let mus = mu_sweep.unwrap_or_else(|| vec![mu]);
            let records = stages::run_micropteron_sweep(&params, &mus, &solitary, &jost, &dir)?;
            println!("{}", serde_json::to_string_pretty(&records)?);
        }
        Command::Simulate {
            profiles,
            t_final,
            dt,
            sites,
            out,
        } => {
            let record = stages::run_simulate(&profiles, t_final, dt, sites, &out.resolve())?;
            println!("{}", serde_json::to_string_pretty(&record)?);
        }
        Command::Pipeline {
            speed,
            mu,
            mu_sweep,
            t_final,
            dt,
            out,
        } => {
            let params = speed.resolve(mu)?;
            let config = pipeline::RunConfig {
                c: params.c,
                epsilon: params.epsilon,
                mu,
                mu_sweep,
                t_final,
                dt,
                out: out.resolve(),
            };
            let record = pipeline::run_pipeline(&config)?;
            println!("{}", serde_json::to_string_pretty(&record)?);
            if !record.hypotheses_all_passed() {
                return Err(CoreError::Hypothesis(
                    "one or more hypothesis checks failed; see diagnostics.json".into(),
                )
                .into());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            exit_code_for(&err)
        }
    }
}
