use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ncsched::analytic::{erlang_rows, leader_rows};
use ncsched::output::{csv_bytes, LEADER_COLUMNS, RESULT_COLUMNS};
use ncsched::presets::preset;
use ncsched::selftest::run_selftest;
use ncsched::{run_scenario, HarnessError, ScenarioDocument};
use ncsched_core::analytics::StorageKind;

#[derive(Parser)]
#[command(
    name = "ncsched",
    version,
    about = "Leader-based scheduling simulator for coded and uncoded storage"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario document or a preset and write CSV results.
    Simulate(SimulateArgs),
    /// Print closed-form curves as CSV.
    #[command(subcommand)]
    Analytic(AnalyticCommand),
    /// Run the quick invariant suite.
    Selftest,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    #[arg(long, value_parser = ["fig3", "fig4", "fig5"])]
    preset: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reps: Option<u64>,
    /// Slots per replication (warmup stays at 20% unless set in the document).
    #[arg(long)]
    slots: Option<u64>,
    #[arg(long, value_parser = ["spread", "random", "first"])]
    policy: Option<String>,
    #[arg(long)]
    threads: Option<usize>,
    /// Replace the sweep values, e.g. `1..32` or `1,2,4,8`.
    #[arg(long)]
    sweep_values: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Coded,
    Uncoded,
}

#[derive(Subcommand)]
enum AnalyticCommand {
    /// External blocking of a throughput-optimal server versus N.
    Erlang {
        #[arg(long)]
        lambda: f64,
        #[arg(long = "T")]
        t: usize,
        #[arg(long = "N", default_value = "1..32")]
        n: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// True-leader internal blocking versus rank.
    Leader {
        #[arg(long)]
        pbd: f64,
        #[arg(long = "W")]
        w: usize,
        #[arg(long = "T")]
        t: usize,
        #[arg(long)]
        s: usize,
        #[arg(long, value_enum)]
        mode: Kind,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses `a..b` (inclusive) or a comma-separated list.
fn parse_values(spec: &str) -> Result<Vec<f64>, HarnessError> {
    let bad = || HarnessError::Config(format!("cannot parse value list `{spec}`"));
    if let Some((a, b)) = spec.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).map(|v| v as f64).collect());
    }
    spec.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| bad()))
        .collect()
}

fn emit(out: Option<&PathBuf>, bytes: &[u8]) -> Result<(), HarnessError> {
    match out {
        Some(p) => fs::write(p, bytes).map_err(|e| HarnessError::io(p, e)),
        None => {
            print!("{}", String::from_utf8_lossy(bytes));
            Ok(())
        }
    }
}

fn simulate(args: SimulateArgs) -> Result<(), HarnessError> {
    let mut doc = match (&args.config, &args.preset) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
            ScenarioDocument::from_json(&text)?
        }
        (None, Some(name)) => preset(name)?,
        (None, None) => return Err(HarnessError::Config("need --config or --preset".into())),
    };
    if let Some(seed) = args.seed {
        doc.set("master_seed", seed.into())?;
    }
    if let Some(reps) = args.reps {
        doc.set("replications", reps.into())?;
    }
    if let Some(slots) = args.slots {
        doc.set("horizon", slots.into())?;
    }
    if let Some(policy) = &args.policy {
        doc.set("policy", policy.as_str().into())?;
    }
    if let Some(spec) = &args.sweep_values {
        doc.set_sweep_values(parse_values(spec)?)?;
    }
    let (dir, cells) = run_scenario(&doc, args.out.as_deref(), args.threads)?;
    eprintln!("{} cells written to {}", cells.len(), dir.display());
    Ok(())
}

fn analytic(cmd: AnalyticCommand) -> Result<(), HarnessError> {
    match cmd {
        AnalyticCommand::Erlang { lambda, t, n, out } => {
            let ns: Vec<usize> = parse_values(&n)?.into_iter().map(|v| v as usize).collect();
            let rows = erlang_rows(lambda, t, &ns)?;
            emit(
                out.as_ref(),
                &csv_bytes(&RESULT_COLUMNS, rows.iter().map(|r| r.record())),
            )
        }
        AnalyticCommand::Leader {
            pbd,
            w,
            t,
            s,
            mode,
            out,
        } => {
            let kind = match mode {
                Kind::Coded => StorageKind::Coded,
                Kind::Uncoded => StorageKind::Uncoded,
            };
            let rows = leader_rows(kind, pbd, w, t, s)?;
            emit(
                out.as_ref(),
                &csv_bytes(&LEADER_COLUMNS, rows.iter().map(|r| r.record())),
            )
        }
    }
}

fn selftest() -> ExitCode {
    let checks = run_selftest();
    for c in &checks {
        println!(
            "{} {:<26} {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    if checks.iter().all(|c| c.passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Analytic(cmd) => analytic(cmd),
        Command::Selftest => return selftest(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
