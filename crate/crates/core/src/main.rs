use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wavelab::error::Error;
use wavelab::experiments::{list_experiments, Experiment};

/// Microlocal wave-interaction experiments.
#[derive(Parser)]
#[command(name = "wavelab", version)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a key = value config file.
    Run {
        config: PathBuf,
        /// Print the full JSON report instead of the summary.
        #[arg(long)]
        json: bool,
    },
    /// List experiment kinds and their config keys.
    List,
}

// 0 all checks pass, 1 a check failed or the computation errored, 2 bad input
fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(n) = std::env::var("WAVELAB_THREADS") {
        match n.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: WAVELAB_THREADS must be a positive integer, got `{n}`");
                return ExitCode::from(2);
            }
        }
    }
    match cli.command {
        None | Some(Command::List) => {
            print!("{}", list_experiments());
            ExitCode::SUCCESS
        }
        Some(Command::Run { config, json }) => {
            let exp = match Experiment::from_path(&config) {
                Ok(e) => e,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            match exp.run() {
                Ok(rep) => {
                    if json {
                        println!("{}", rep.to_json());
                    } else {
                        println!("{}: {}", rep.experiment, if rep.pass { "PASS" } else { "FAIL" });
                        for c in &rep.criteria {
                            println!("  [{}] {}: {}", if c.pass { "pass" } else { "FAIL" }, c.name, c.detail);
                        }
                        for n in &rep.notes {
                            println!("  note: {n}");
                        }
                        if let Some(p) = rep.artifacts.last() {
                            println!("report: {p}");
                        }
                    }
                    if rep.pass {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    }
                }
                Err(e @ (Error::Config(_) | Error::Parse(_))) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
    }
}
