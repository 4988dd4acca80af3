use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use poro_cli::config::{resolve_output_dir, OUTPUT_DIR_ENV};
use poro_cli::drivers::{convergence_study, run_case, timing_compare};
use poro_cli::{parse_config, CliResult, RunConfig};

#[derive(Parser)]
#[command(name = "poro", version, about = "Multirate poroelasticity solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single run: trajectory.csv and optional VTK snapshots.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Convergence study over a list of meshes.
    Study {
        #[arg(long)]
        config: PathBuf,
    },
    /// Wall-time comparison over a list of m.
    Bench {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load(path: &Path) -> CliResult<RunConfig> {
    let mut cfg = parse_config(path)?;
    let env = std::env::var(OUTPUT_DIR_ENV).ok();
    cfg.output_dir = resolve_output_dir(&cfg.output_dir, env.as_deref());
    Ok(cfg)
}

fn execute(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run { config } => {
            let out = run_case(&load(&config)?)?;
            println!("wrote {}", out.trajectory_csv.display());
            if !out.vtk_files.is_empty() {
                println!("wrote {} VTK files", out.vtk_files.len());
            }
            if let Some(r) = out.conservation.max_eta_residual() {
                println!("max eta conservation residual {r:.3e}");
            }
        }
        Command::Study { config } => {
            for (m, table, path) in convergence_study(&load(&config)?)?.tables {
                println!("m = {m}: {} rows -> {}", table.rows.len(), path.display());
            }
        }
        Command::Bench { config } => {
            for row in timing_compare(&load(&config)?)? {
                println!("m = {}: {:.3}s (speedup {:.2})", row.m, row.wall_seconds, row.speedup);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
