use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;
mod plot;

use commands::{Outcome, Settings};

#[derive(Parser, Debug)]
#[command(name = "apdiv", version, about = "Chern classes and realizability of almost periodic divisors")]
struct Cli {
    /// Seed for base-point retries and auxiliary frequency search.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Target relative accuracy of sigma evaluations.
    #[arg(long, global = true, default_value_t = 1e-12)]
    accuracy: f64,
    /// Winding cross-check of algebraic classes; automatic for small N when absent.
    #[arg(long, global = true, value_enum)]
    cross_check: Option<Toggle>,
    /// Write plot samples as CSV.
    #[arg(long, global = true)]
    plot: Option<PathBuf>,
    /// Base points tried per winding entry.
    #[arg(long, global = true, default_value_t = 50)]
    max_retries: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Toggle {
    On,
    Off,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Chern class algebra.
    #[command(subcommand)]
    Chern(ChernCmd),
    /// Realizability of a divisor.
    #[command(subcommand)]
    Realize(RealizeCmd),
    /// Divisors of holomorphic maps into projective space.
    #[command(subcommand)]
    Map(MapCmd),
    /// Winding numbers of periodic functions.
    #[command(subcommand)]
    Winding(WindingCmd),
    /// Weierstrass sigma function of the square lattice.
    #[command(subcommand)]
    Sigma(SigmaCmd),
    /// Spectrum and Bohr means of an exponential sum.
    Spectrum { file: PathBuf },
    /// Solver for the dbar equation on a strip.
    #[command(subcommand)]
    Dbar(DbarCmd),
}

#[derive(Subcommand, Debug)]
enum ChernCmd {
    /// Canonical class of a class, pair list or divisor.
    Compute { file: PathBuf },
    /// Wedge decomposition of the class.
    Decompose { file: PathBuf },
    /// Pairs cancelling the class.
    Complete {
        file: PathBuf,
        /// Allow R-dependent pairs even when the dimension is at least 2.
        #[arg(long)]
        allow_r_dependent: bool,
    },
}

#[derive(Subcommand, Debug)]
enum RealizeCmd {
    Check { file: PathBuf },
}

#[derive(Subcommand, Debug)]
enum MapCmd {
    Check {
        file: PathBuf,
    },
    /// Emit the shifted family whose common class is nonzero.
    Counterexample {
        #[arg(long, default_value_t = 2)]
        k: usize,
    },
}

#[derive(Subcommand, Debug)]
enum WindingCmd {
    Entry { file: PathBuf },
}

#[derive(Subcommand, Debug)]
enum SigmaCmd {
    Eval { file: PathBuf },
}

#[derive(Subcommand, Debug)]
enum DbarCmd {
    Verify { file: PathBuf },
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    let settings = Settings {
        seed: cli.seed,
        accuracy: cli.accuracy,
        cross_check: cli.cross_check.map(|t| t == Toggle::On),
        plot: cli.plot.is_some(),
        max_retries: cli.max_retries,
    };
    let outcome = match cli.command {
        Command::Chern(ChernCmd::Compute { file }) => commands::chern_compute(&settings, &commands::load(&file)?)?,
        Command::Chern(ChernCmd::Decompose { file }) => commands::chern_decompose(&settings, &commands::load(&file)?)?,
        Command::Chern(ChernCmd::Complete { file, allow_r_dependent }) => {
            commands::chern_complete(&settings, &commands::load(&file)?, allow_r_dependent)?
        }
        Command::Realize(RealizeCmd::Check { file }) => commands::realize_check(&settings, &commands::load(&file)?)?,
        Command::Map(MapCmd::Check { file }) => commands::map_check(&settings, &commands::load(&file)?)?,
        Command::Map(MapCmd::Counterexample { k }) => commands::map_counterexample(&settings, k)?,
        Command::Winding(WindingCmd::Entry { file }) => commands::winding_entry(&settings, &commands::load(&file)?)?,
        Command::Sigma(SigmaCmd::Eval { file }) => commands::sigma_eval(&settings, &commands::load(&file)?)?,
        Command::Spectrum { file } => commands::spectrum(&settings, &commands::load(&file)?)?,
        Command::Dbar(DbarCmd::Verify { file }) => commands::dbar_verify(&settings, &commands::load(&file)?)?,
    };
    if let Some(path) = &cli.plot {
        plot::write(path, &outcome.plot)?;
    }
    Ok(outcome)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(outcome) => {
            match serde_json::to_string_pretty(&outcome.output) {
                Ok(text) => {
                    // a closed pipe downstream is not an error of ours
                    let _ = writeln!(std::io::stdout().lock(), "{text}");
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            }
            if outcome.negative {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
