//! `patternforge`: check, find and annotate design patterns in models.
//!
//! Exit codes: 0 satisfied / ok, 1 not satisfied, violations found or
//! inconclusive beyond the bound, 2 usage or input error.

mod commands;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use patternforge::dsl::OutputFormat;
use patternforge::solver::DEFAULT_BOUND;

#[derive(Debug, Parser)]
#[command(name = "patternforge", version, about = "Match design patterns with variability against class and collaboration models")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct Global {
    /// Largest replica count tried per variable part, and the solver bound.
    #[arg(long, global = true, default_value_t = DEFAULT_BOUND, value_parser = clap::value_parser!(u64).range(1..))]
    bound: u64,
    /// Directory of `.pat` files to use instead of the built-in catalog
    /// (default: $PATTERNFORGE_CATALOG).
    #[arg(long, global = true, value_name = "DIR")]
    catalog: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Worker threads for per-pattern runs (default: one per core).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => OutputFormat::Json,
            Format::Table => OutputFormat::Table,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decide whether a model satisfies a pattern and print a witness.
    Check {
        model: PathBuf,
        /// Catalog name, title or `.pat` file.
        #[arg(long, short)]
        pattern: String,
        /// Collaboration model to synchronize with; repeat for several.
        #[arg(long = "with-collab", value_name = "MODEL")]
        with_collab: Vec<PathBuf>,
    },
    /// List the occurrences of a pattern in a model.
    Find {
        model: PathBuf,
        #[arg(long, short)]
        pattern: String,
        /// Keep only occurrences not contained in a larger one.
        #[arg(long)]
        maximal: bool,
        /// Stop after this many occurrences.
        #[arg(long, value_name = "N")]
        limit: Option<usize>,
    },
    /// Annotate a model with the roles of every occurrence of the given
    /// patterns.
    Annotate {
        model: PathBuf,
        /// `all` or a comma-separated list of names.
        #[arg(long, default_value = "all")]
        patterns: String,
        /// Write the annotation JSON here and print a summary instead.
        #[arg(long, short, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Build the expansion of a pattern for given replica counts.
    Expand {
        #[arg(long, short)]
        pattern: String,
        /// Replica count per variable part, e.g. `leaves=2,operations=1`
        /// (default: the first minimal solution).
        #[arg(long, value_name = "K=V,...")]
        counts: Option<String>,
        /// Write the expansion as a model here, with provenance in a
        /// `.prov.json` file next to it.
        #[arg(long, short, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// List the replica assignments satisfying a pattern's equations.
    Solve {
        #[arg(long, short)]
        pattern: String,
        /// Only the minimal solutions.
        #[arg(long)]
        minimal: bool,
    },
    /// Check that a `.pat` or `.model` file is well formed.
    Lint { file: PathBuf },
    /// Inspect the pattern catalog.
    Catalog {
        #[command(subcommand)]
        command: CatalogCommand,
    },
}

#[derive(Debug, Subcommand)]
enum CatalogCommand {
    /// One line per pattern: name, heading and equations.
    List,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("patternforge: error: {e}");
            return ExitCode::from(2);
        }
    }
    let outcome = commands::run(&cli.global, cli.command);
    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(outcome.stdout.as_bytes());
    let _ = stdout.flush();
    if !outcome.stderr.is_empty() {
        let _ = std::io::stderr().lock().write_all(outcome.stderr.as_bytes());
    }
    ExitCode::from(outcome.code)
}
