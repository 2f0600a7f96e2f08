mod checks;
mod config;
mod simulate;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dcl_core::newton::NewtonOptions;

use crate::checks::{run_suite, Settings, Suite};
use crate::config::Scenario;

/// Discrete constrained Lagrangian mechanics on Lie groupoids.
#[derive(Parser)]
#[command(name = "dcl", version)]
struct Cli {
    /// Random seed for sampling (overrides the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Newton residual tolerance (overrides the config file).
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a configured system and write the trajectory as CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a verification suite.
    Check {
        #[arg(value_enum)]
        suite: Suite,
    },
}

const NUMERICAL: u8 = 1;
const USAGE: u8 = 2;

fn simulate(cli: &Cli, config: &Path, out: &Path) -> ExitCode {
    let text = match std::fs::read_to_string(config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", config.display());
            return ExitCode::from(USAGE);
        }
    };
    let mut sc = match Scenario::from_str(&text) {
        Ok(sc) => sc,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(USAGE);
        }
    };
    if let Some(seed) = cli.seed {
        sc.seed = seed;
    }
    if let Some(tol) = cli.tol {
        sc.opts.tol = tol;
    }
    let traj = match simulate::integrate(&sc) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(NUMERICAL);
        }
    };
    match simulate::write_csv(&sc, &traj, out) {
        Ok(summary) => {
            println!("system: {} (seed {})", sc.system.name(), sc.seed);
            println!("{summary}");
            println!("wrote {}", out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(NUMERICAL)
        }
    }
}

fn check(cli: &Cli, suite: Suite) -> ExitCode {
    let mut opts = NewtonOptions::default();
    if let Some(tol) = cli.tol {
        opts.tol = tol;
    }
    let settings = Settings { seed: cli.seed.unwrap_or(0), opts };
    let suites: Vec<Suite> = if suite == Suite::All { Suite::EACH.to_vec() } else { vec![suite] };
    let results: Vec<_> = std::thread::scope(|scope| {
        let handles: Vec<_> = suites.iter().map(|&s| scope.spawn(move || run_suite(s, &settings))).collect();
        handles.into_iter().map(|h| h.join().expect("check suite panicked")).collect()
    });

    let mut ok = true;
    for (s, res) in suites.iter().zip(results) {
        match res {
            Ok(lines) => {
                for l in &lines {
                    ok &= l.passed();
                    println!("{}", l.render(s.name()));
                }
            }
            Err(e) => {
                ok = false;
                println!("FAIL [{}] error: {e:#}", s.name());
            }
        }
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(NUMERICAL)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(tol) = cli.tol {
        if !(tol > 0.0 && tol.is_finite()) {
            eprintln!("error: --tol must be a positive number");
            return ExitCode::from(USAGE);
        }
    }
    match &cli.command {
        Command::Simulate { config, out } => simulate(&cli, config, out),
        Command::Check { suite } => check(&cli, *suite),
    }
}
