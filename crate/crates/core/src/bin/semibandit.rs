//! Command-line front end for the semi-bandit simulator.
//!
//!   semibandit run --config cfg.json [--out DIR] [--threads N]
//!   semibandit sweep --config cfg.json --param m --values 10,20,30 --out DIR
//!   semibandit check-bounds --config cfg.json
//!
//! Exit codes: 0 success, 1 I/O failure or bound violation, 2 config
//! error, 3 numerical error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use semibandit::harness::{
    check_bounds, emit_results, emit_sweep, run_experiment, sweep, ExperimentConfig, SweepParam,
};
use semibandit::Error;

#[derive(Parser)]
#[command(name = "semibandit", version, about = "Combinatorial semi-bandit regret simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its result files.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to the config's `output`, then `results`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; overrides the config's `parallelism`.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Vary one parameter, holding the rest of the config fixed.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Check every run's confidence-width ledger against the worst-case bound.
    CheckBounds {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn load(path: &Path, threads: Option<usize>) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::from_json_file(path)?;
    if let Some(t) = threads {
        cfg.parallelism = t;
        cfg.validate()?;
    }
    Ok(cfg)
}

fn exec(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Run { config, out, threads } => {
            let cfg = load(&config, threads)?;
            let dir = out
                .or_else(|| cfg.output.clone())
                .unwrap_or_else(|| PathBuf::from("results"));
            let table = run_experiment(&cfg)?;
            emit_results(&table, &dir)?;
            println!(
                "R({}) = {:.6e} ± {:.3e} over {} runs ({:.1}s) -> {}",
                cfg.n,
                table.estimate.cum_regret,
                table.estimate.se_cum_regret,
                cfg.runs,
                table.wall_clock_secs,
                dir.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep {
            config,
            param,
            values,
            out,
            threads,
        } => {
            let cfg = load(&config, threads)?;
            let param: SweepParam = param.parse().map_err(|e: Error| Error::Config(e.to_string()))?;
            let result = sweep(&cfg, param, &values)?;
            emit_sweep(&result, &out)?;
            println!("{:>12}  {:>14}  {:>12}", param.name(), "cum_regret", "se");
            for row in &result.summary {
                println!("{:>12}  {:>14.6e}  {:>12.3e}", row.value, row.cum_regret, row.se_cum_regret);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::CheckBounds { config, threads } => {
            let cfg = load(&config, threads)?;
            let report = check_bounds(&cfg)?;
            for (run, ledger, bound) in &report.rows {
                let status = if ledger <= bound { "ok" } else { "VIOLATION" };
                println!("run {run:>4}: ledger {ledger:.6e} <= bound {bound:.6e}  {status}");
            }
            println!("{} runs, {} violations", report.rows.len(), report.violations);
            Ok(if report.violations == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match exec(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("semibandit: {err}");
            ExitCode::from(match err {
                Error::Config(_) | Error::Parameter(_) | Error::Input(_) => 2,
                Error::Numerical(_) => 3,
                Error::Io { .. } => 1,
            })
        }
    }
}
