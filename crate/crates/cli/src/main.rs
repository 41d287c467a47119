//! `dsrank`: batch ranking of requirements sources from CSV round files,
//! round comparison, and the workshop HTTP server.

mod compare;
mod rank;
mod serve;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dsrank_core::{MethodConfig, MissingValuePolicy, Normalization, VoteThreshold};

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (session schema 1)");

/// Process exit status with a message for stderr.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub const VALIDATION: u8 = 2;
    pub const DEGENERATE: u8 = 3;
    pub const ENVIRONMENT: u8 = 4;

    pub fn validation(message: impl Into<String>) -> Self {
        Self { code: Self::VALIDATION, message: message.into() }
    }

    pub fn degenerate(message: impl Into<String>) -> Self {
        Self { code: Self::DEGENERATE, message: message.into() }
    }

    pub fn environment(message: impl Into<String>) -> Self {
        Self { code: Self::ENVIRONMENT, message: message.into() }
    }

    pub fn from_engine(e: dsrank_core::EngineError) -> Self {
        if e.is_degenerate() {
            Self::degenerate(e.to_string())
        } else {
            Self::validation(e.to_string())
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "dsrank", version = VERSION, about = "Rank requirements sources from a panel of analysts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Rank the sources of one round directory and report disagreement.
    Rank(RankArgs),
    /// Apply a vote threshold to a votes CSV.
    Shortlist(ShortlistArgs),
    /// Run the workshop HTTP API.
    Serve(ServeArgs),
    /// Show how analyst disagreement changed across rounds.
    CompareRounds(CompareArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum NormalizationArg {
    Sum,
    Max,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MissingArg {
    /// Fill a missing cell with the mean of the other analysts' scores.
    Impute,
    /// Treat any missing cell as an error.
    Reject,
}

pub fn parse_threshold(s: &str) -> Result<VoteThreshold, String> {
    match s {
        "strict" => Ok(VoteThreshold::StrictMajority),
        "all" => Ok(VoteThreshold::AcceptAll),
        _ => {
            let t = s
                .strip_prefix("atleast:")
                .or_else(|| s.strip_prefix("at-least:"))
                .ok_or_else(|| format!("expected strict, all or atleast:<t>, got {s:?}"))?;
            t.parse().map(VoteThreshold::AtLeast).map_err(|_| format!("invalid vote count {t:?}"))
        }
    }
}

#[derive(Debug, Args)]
struct MethodArgs {
    #[arg(long, value_enum, default_value = "sum")]
    normalization: NormalizationArg,
    /// strict, all, or atleast:<t>
    #[arg(long, default_value = "strict", value_parser = parse_threshold)]
    threshold: VoteThreshold,
    /// Divide the group ranking by its maximum (default).
    #[arg(long, overrides_with = "no_scale")]
    scale: bool,
    #[arg(long)]
    no_scale: bool,
    #[arg(long, value_enum, default_value = "impute")]
    missing: MissingArg,
}

impl MethodArgs {
    fn config(&self) -> MethodConfig {
        MethodConfig {
            normalization: match self.normalization {
                NormalizationArg::Sum => Normalization::Sum,
                NormalizationArg::Max => Normalization::Max,
            },
            vote_threshold: self.threshold,
            scale_final: !self.no_scale,
            missing_value_policy: match self.missing {
                MissingArg::Impute => MissingValuePolicy::ImputeAnalystAverage,
                MissingArg::Reject => MissingValuePolicy::Reject,
            },
        }
    }
}

#[derive(Debug, Args)]
struct RankArgs {
    /// Round directory with criteria_votes.csv, criteria_scores.csv and matrix_<analyst>.csv files.
    #[arg(long = "in", value_name = "DIR")]
    input: PathBuf,
    #[command(flatten)]
    method: MethodArgs,
    /// Write result.json, discrepancies.json and charts.json here.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ShortlistArgs {
    /// Votes CSV: header `criterion,<analyst>...`, cells 0 or 1.
    #[arg(long, value_name = "FILE")]
    votes: PathBuf,
    #[arg(long, default_value = "strict", value_parser = parse_threshold)]
    threshold: VoteThreshold,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long, env = "DSRANK_LISTEN", default_value = "127.0.0.1:8080")]
    listen: SocketAddr,
    /// Created if absent.
    #[arg(long, env = "DSRANK_DATA_DIR", default_value = "./dsrank-data")]
    data_dir: PathBuf,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// One stored session file (or bundle .zip), or several round directories in order.
    #[arg(required = true, value_name = "PATH")]
    paths: Vec<PathBuf>,
    /// Method settings used when comparing round directories.
    #[command(flatten)]
    method: MethodArgs,
    /// Write the series as JSON.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Rank(a) => rank::run_rank(&a.input, &a.method.config(), a.out.as_deref()),
        Command::Shortlist(a) => rank::run_shortlist(&a.votes, a.threshold),
        Command::Serve(a) => serve::run(a.listen, &a.data_dir),
        Command::CompareRounds(a) => compare::run(&a.paths, &a.method.config(), a.out.as_deref()),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
