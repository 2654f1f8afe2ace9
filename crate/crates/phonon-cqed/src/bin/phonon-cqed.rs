use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use phonon_cqed::run::{execute, list_presets, resolve_workers, RunConfig, RunOptions, WORKERS_ENV};
use phonon_cqed::Error;

#[derive(Parser)]
#[command(version, about = "Cavity-QED emitter with a phonon bath: spectra, indistinguishability, efficiency")]
struct Cli {
    /// Worker threads for sweeps (default: logical cores, or the
    /// PHONON_CQED_WORKERS environment variable)
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory, overriding [output] directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Refine dt and the SVD cutoff until the task observable settles
    #[arg(long, global = true)]
    converge: bool,
    /// No effect; runs use no random numbers
    #[arg(long, global = true)]
    seedless: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a run file
    Run { config: PathBuf },
    /// List the built-in material presets
    Presets,
    /// Check a run file and print it with defaults applied
    Validate { config: PathBuf },
}

fn exit_for(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        Error::Validation(_) => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Presets => {
            println!("{:<22} {:>10} {:>10} {:>8}  {:<9} source", "name", "g (meV)", "xi (meV)", "2g/xi", "regime");
            for p in list_presets() {
                println!(
                    "{:<22} {:>10} {:>10} {:>8.3}  {:<9} {}",
                    p.name,
                    p.hbar_g_mev,
                    p.hbar_xi_mev,
                    p.splitting_over_cutoff(),
                    if p.decoupled() { "decoupled" } else { "coupled" },
                    p.source
                );
            }
            ExitCode::SUCCESS
        }
        Command::Validate { config } => match RunConfig::from_path(&config) {
            Ok(cfg) => {
                print!("{}", cfg.echo());
                println!("# config hash {}", cfg.hash());
                ExitCode::SUCCESS
            }
            Err(e) => exit_for(&e),
        },
        Command::Run { config } => {
            let cfg = match RunConfig::from_path(&config) {
                Ok(c) => c,
                Err(e) => return exit_for(&e),
            };
            if let Err(e) = resolve_workers(cli.workers) {
                eprintln!("({WORKERS_ENV} or --workers)");
                return exit_for(&e);
            }
            let opts = RunOptions {
                workers: cli.workers,
                out: cli.out,
                converge: cli.converge,
                seedless: cli.seedless,
            };
            match execute(&cfg, &opts) {
                Ok(report) => {
                    for f in &report.files {
                        println!("{}", f.display());
                    }
                    let failed = report.failed();
                    if failed > 0 {
                        eprintln!("{failed} of {} points failed; see manifest.json", report.points.len());
                        ExitCode::from(3)
                    } else {
                        ExitCode::SUCCESS
                    }
                }
                Err(e) => exit_for(&e),
            }
        }
    }
}
