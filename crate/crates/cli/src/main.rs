use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fheat_cli::{list_catalog, render_report, run, RunOptions};

#[derive(Parser)]
#[command(name = "fheat", version, about = "Verification campaigns for the nonlinear weighted heat equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every experiment of a campaign config; exit 0 iff all checks pass.
    Run {
        config: PathBuf,
        /// Worker threads (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
        /// Override the campaign seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: the config's `out`, else ./fheat-out).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List model spaces and weight profiles.
    Catalog,
    /// Re-render a written report as a table.
    Report { dir: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, jobs, seed, out } => {
            run(&config, &RunOptions { jobs, seed, out }).map(|(report, dir)| {
                match render_report(&dir) {
                    Ok(table) => print!("{table}"),
                    Err(e) => eprintln!("warning: could not render report: {e}"),
                }
                println!("report written to {}", dir.display());
                report.all_passed
            })
        }
        Command::Catalog => {
            print!("{}", list_catalog());
            Ok(true)
        }
        Command::Report { dir } => render_report(&dir).map(|table| {
            print!("{table}");
            true
        }),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
