use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mmwave_mac_sim::cli::{self, RunPlan, ScenarioSource};
use mmwave_mac_sim::sched::Policy;
use mmwave_mac_sim::SimError;

#[derive(Parser)]
#[command(
    name = "mmwave-mac-sim",
    version,
    about = "Subframe-level simulator of a single-cell mmWave TDD downlink MAC"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write packet and summary reports.
    Run(RunArgs),
    /// Run several schedulers on the same scenario and rank them.
    Compare(CompareArgs),
    /// Parse and validate a scenario without running it.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct RunArgs {
    /// `case1`, `case2`, or a path to a scenario TOML file.
    #[arg(long, default_value = "case1")]
    scenario: String,
    /// Schedulers to run (comma separated). Defaults to the scenario's own.
    #[arg(long = "scheduler", value_enum, value_delimiter = ',')]
    schedulers: Vec<Policy>,
    /// Seeds to run (comma separated); each seed is an independent replica.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    seeds: Vec<u64>,
    /// Override the scenario duration, milliseconds.
    #[arg(long)]
    duration_ms: Option<u64>,
    /// Output directory for the report files.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Also write the per-subframe grant trace (grants.csv).
    #[arg(long)]
    trace: bool,
}

#[derive(Args)]
struct CompareArgs {
    /// `case1`, `case2`, or a path to a scenario TOML file.
    #[arg(long, default_value = "case2")]
    scenario: String,
    /// Schedulers to compare (comma separated). Defaults to all five.
    #[arg(long = "scheduler", value_enum, value_delimiter = ',')]
    schedulers: Vec<Policy>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    seeds: Vec<u64>,
    /// Override the scenario duration, milliseconds.
    #[arg(long)]
    duration_ms: Option<u64>,
    /// Output directory for the report files.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    /// `case1`, `case2`, or a path to a scenario TOML file.
    #[arg(long)]
    scenario: String,
    /// Seed used to resolve randomized sections.
    #[arg(long, default_value = "1")]
    seed: u64,
}

fn dispatch(cmd: Command) -> mmwave_mac_sim::Result<()> {
    match cmd {
        Command::Run(a) => {
            let plan = RunPlan {
                source: ScenarioSource::parse(&a.scenario),
                policies: a.schedulers,
                seeds: a.seeds,
                duration_us: a.duration_ms.map(|ms| ms * 1000),
                trace_grants: a.trace,
            };
            let runs = cli::execute(&plan)?;
            cli::write_reports(&runs, &a.out)?;
            print!("{}", cli::format_run_lines(&runs));
            println!("reports written to {}", a.out.display());
            Ok(())
        }
        Command::Compare(a) => {
            let policies = if a.schedulers.is_empty() {
                Policy::ALL.to_vec()
            } else {
                a.schedulers
            };
            let plan = RunPlan {
                source: ScenarioSource::parse(&a.scenario),
                policies,
                seeds: a.seeds,
                duration_us: a.duration_ms.map(|ms| ms * 1000),
                trace_grants: false,
            };
            let runs = cli::execute(&plan)?;
            cli::write_reports(&runs, &a.out)?;
            let aggs = cli::aggregate_by_policy(&runs)?;
            let path = a.out.join("compare.csv");
            std::fs::write(&path, cli::compare_csv(&aggs))?;
            print!("{}", cli::compare_table(&aggs));
            println!("reports written to {}", a.out.display());
            Ok(())
        }
        Command::Validate(a) => {
            let sc = cli::load_scenario(&ScenarioSource::parse(&a.scenario), a.seed)?;
            println!(
                "ok: label={} ues={} obstacles={} duration={} ms policy={}",
                sc.label,
                sc.ues.len(),
                sc.obstacles.len(),
                sc.duration_us / 1000,
                sc.policy
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                SimError::Config(_) => ExitCode::from(2),
                SimError::Runtime(_) | SimError::Io(_) => ExitCode::from(3),
            }
        }
    }
}
