use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod config;
mod error;
mod heatmap;
mod simulate;

use error::CliError;

#[derive(Parser)]
#[command(name = "fastsim", version, about = "Operating characteristics of seamless Phase II/III trials")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the timing grid for every scenario in a config file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Replicates per grid cell, overriding the config.
        #[arg(long)]
        replicates: Option<u64>,
        /// Base seed, overriding the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, env = "FAST_TRIALS_THREADS", value_parser = clap::value_parser!(u16).range(1..))]
        threads: Option<u16>,
        /// Also write one trace CSV per scenario with every replicate.
        #[arg(long)]
        trace: bool,
    },
    /// Render results.csv as SVG heatmaps.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        svg: PathBuf,
    },
}

fn report(input: &PathBuf, svg: &PathBuf) -> Result<(), CliError> {
    let file = std::fs::File::open(input).map_err(CliError::io("cannot open", input))?;
    let rows = fastsim_core::report::read_results(file)
        .map_err(|source| CliError::Results { path: input.clone(), source })?;
    if rows.is_empty() {
        return Err(CliError::Results {
            path: input.clone(),
            source: fastsim_core::report::ReportError::BadValue {
                row: 0,
                column: "scenario_id".into(),
                reason: "file has a header but no rows".into(),
            },
        });
    }
    let text = heatmap::render(&rows);
    std::fs::write(svg, text).map_err(CliError::io("cannot write", svg))?;
    eprintln!("wrote {} ({} rows)", svg.display(), rows.len());
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { config, out, replicates, seed, threads, trace } => {
            let args = simulate::SimulateArgs {
                config,
                out,
                replicates,
                seed,
                threads: threads.map(usize::from),
                trace,
            };
            let manifest = simulate::run(&args)?;
            eprintln!(
                "wrote {} ({} scenario(s), {} effective replicates, {} failed)",
                args.out.join("results.csv").display(),
                manifest.scenarios.len(),
                manifest.n_effective,
                manifest.n_failed
            );
            Ok(())
        }
        Command::Report { input, svg } => report(&input, &svg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
