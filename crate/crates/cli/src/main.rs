//! Batch driver for tetrahedral SDF reconstruction from normal maps.

mod commands;
mod config;
mod error;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::CliError;

#[derive(Parser)]
#[command(name = "tetsdf", version, about = "Fit signed distance fields on tetrahedral meshes to normal maps")]
struct Cli {
    /// Directory every relative path is resolved against.
    #[arg(long, global = true, default_value = ".")]
    workdir: PathBuf,
    /// Worker threads; 1 gives bitwise-reproducible output. Defaults to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the band tet mesh and exact template SDF of a scene.
    Template(commands::TemplateArgs),
    /// Render a field's zero level set to normal and depth PNGs.
    Render(commands::RenderArgs),
    /// Fit a field to the target normal maps of a scene.
    Fit(commands::FitArgs),
    /// Compare predicted and target normal (and depth) maps.
    Eval(commands::EvalArgs),
    /// Check the analytic objective gradient against central differences.
    Gradcheck(commands::GradcheckArgs),
    /// Refine per-view cameras by aligning per-view meshes to a reference view.
    IcpRefine(commands::IcpArgs),
    /// Drop triangles whose rendered normals disagree with a target map.
    Prune(commands::PruneArgs),
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Validation("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Validation(format!("cannot start thread pool: {e}")))?;
    }
    let wd = &cli.workdir;
    match cli.command {
        Command::Template(a) => commands::template(wd, a),
        Command::Render(a) => commands::render(wd, a),
        Command::Fit(a) => commands::fit(wd, a),
        Command::Eval(a) => commands::eval(wd, a),
        Command::Gradcheck(a) => commands::gradcheck(wd, a),
        Command::IcpRefine(a) => commands::icp_refine(wd, a),
        Command::Prune(a) => commands::prune(wd, a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
