use std::path::PathBuf;
use std::process::ExitCode;

use aeafem::io::{check_summary, mesh_summary, run, RunConfig, RunOverrides};
use clap::{Parser, Subcommand};

/// Adaptive finite elements for acoustic-elastic scattering.
#[derive(Parser)]
#[command(name = "aeafem", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the adaptive loop and write convergence.csv and report.json.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Output directory, overriding the configuration.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write fields_NNNN.vtk for every iteration.
        #[arg(long)]
        write_fields: bool,
        /// Suppress per-iteration progress lines.
        #[arg(long)]
        quiet: bool,
    },
    /// Print mesh counts, region volumes and face tags.
    MeshInfo {
        #[arg(long)]
        config: PathBuf,
    },
    /// Check parameter compatibility and print PML diagnostics.
    Check {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve {
            config,
            out,
            write_fields,
            quiet,
        } => run(
            &config,
            &RunOverrides {
                out_dir: out,
                write_fields,
                quiet,
            },
        )
        .map(|o| {
            println!(
                "finished after {} solves ({:?}); results in {}",
                o.history.records.len(),
                o.stop,
                o.out_dir.display()
            )
        }),
        Command::MeshInfo { config } => RunConfig::load(&config)
            .and_then(|c| c.build_mesh())
            .map(|m| print!("{}", mesh_summary(&m))),
        Command::Check { config } => RunConfig::load(&config).map(|c| print!("{}", check_summary(&c))),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
