use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use griffith::commands;
use griffith::config::RunConfig;

/// Triangular-lattice fracture experiments.
///
/// Set FRACTURE_THREADS to bound the number of worker threads.
#[derive(Parser)]
#[command(name = "griffith", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides output.dir.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Tabulate γ, v_γ and a_crit over φ ∈ [0, π/3).
    GammaScan {
        #[arg(long, default_value_t = 61)]
        phi_steps: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, default_value_t = 1.0)]
        l: f64,
    },
    /// Discrete energies against the limit minimum over solve.eps_list.
    Cleavage(Common),
    /// Multistart minimization at lattice.eps.
    Minimize(Common),
    /// Sample the elastic or cracked limit minimizer on the lattice.
    Recovery(Common),
    /// Crack polyline of a displacement table.
    CrackExtract {
        #[command(flatten)]
        common: Common,
        #[arg(long = "in")]
        input: PathBuf,
    },
    MagnetDemo(Common),
    NoneqDemo(Common),
    /// Write the lattice points.
    Mesh(Common),
}

fn run(cli: Cli) -> Result<Vec<PathBuf>> {
    let load = |c: &Common| -> Result<(RunConfig, PathBuf)> {
        let cfg = RunConfig::load(&c.config)?;
        let dir = commands::output_dir(&cfg, c.out.as_deref())?;
        Ok((cfg, dir))
    };
    match cli.cmd {
        Cmd::GammaScan { phi_steps, out, alpha, beta, l } => commands::cmd_gamma_scan(phi_steps, &out, alpha, beta, l),
        Cmd::Cleavage(c) => {
            let (cfg, dir) = load(&c)?;
            commands::cmd_cleavage(&cfg, &dir)
        }
        Cmd::Minimize(c) => {
            let (cfg, dir) = load(&c)?;
            commands::cmd_minimize(&cfg, &dir)
        }
        Cmd::Recovery(c) => {
            let (cfg, dir) = load(&c)?;
            commands::cmd_recovery(&cfg, &dir)
        }
        Cmd::CrackExtract { common, input } => {
            let (cfg, dir) = load(&common)?;
            commands::cmd_crack_extract(&cfg, &input, &dir)
        }
        Cmd::MagnetDemo(c) => {
            let (cfg, dir) = load(&c)?;
            commands::cmd_magnet_demo(&cfg, &dir)
        }
        Cmd::NoneqDemo(c) => {
            let (cfg, dir) = load(&c)?;
            commands::cmd_noneq_demo(&cfg, &dir)
        }
        Cmd::Mesh(c) => {
            let (cfg, dir) = load(&c)?;
            commands::cmd_mesh(&cfg, &dir)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
