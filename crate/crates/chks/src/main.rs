use std::path::PathBuf;
use std::process::ExitCode;

use chks::run::{run_optimize, run_simulate, run_verify, ExitStatus, Outcome};
use chks::verify::Suite;
use chks::{load_config, AppResult};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "chks", version, about = "Tumor growth simulation, adjoint gradients and optimal control")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Configuration file (TOML).
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Treat potential clamp events as failures.
    #[arg(long)]
    strict: bool,
    /// Override the configuration's seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Forward solve from the initial control.
    Simulate(Common),
    /// Projected-gradient optimization of the control.
    Optimize(Common),
    /// Run verification suites.
    Verify {
        #[command(flatten)]
        common: Common,
        /// gradcheck, taylor, duality, invariants, lipschitz or all.
        #[arg(long, default_value = "all")]
        suite: Suite,
    },
}

fn report(outcome: &Outcome) {
    for m in &outcome.metrics {
        println!("{:<12} {:<36} {:>14.6e}  {:?}", m.suite, m.metric, m.value, m.status);
    }
    for m in outcome.failures() {
        eprintln!("check failed: {}/{} = {:e} (threshold {:e})", m.suite, m.metric, m.value, m.threshold);
    }
}

fn execute(cli: Cli) -> AppResult<Outcome> {
    match cli.command {
        Command::Simulate(c) => {
            let cfg = load_config(&c.config, c.seed)?;
            run_simulate(&cfg, &c.out, c.strict)
        }
        Command::Optimize(c) => {
            let cfg = load_config(&c.config, c.seed)?;
            let (outcome, res) = run_optimize(&cfg, &c.out, c.strict)?;
            println!("termination: {:?} after {} iterations", res.termination, res.iterations);
            Ok(outcome)
        }
        Command::Verify { common: c, suite } => {
            let cfg = load_config(&c.config, c.seed)?;
            run_verify(&cfg, suite, &c.out)
        }
    }
}

fn main() -> ExitCode {
    let status = match execute(Cli::parse()) {
        Ok(outcome) => {
            report(&outcome);
            outcome.status()
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitStatus::Error
        }
    };
    ExitCode::from(status as u8)
}
