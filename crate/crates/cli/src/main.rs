//! Command-line harness: norm summaries, fuzz campaigns, decoupling runs and
//! single-trial replay.
//!
//! Exit codes: 0 success, 1 a verified property failed, 2 usage or input
//! error.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qdbound::campaign::{run_campaign, run_trial_detailed, write_reports, CampaignConfig, Status, Suite};
use qdbound::cdd::{write_cdd_csv, CddRunConfig};
use qdbound::linalg::ComplexMatrix;
use qdbound::norms::summarize;

#[derive(Parser)]
#[command(name = "qdbound", version, about = "Distance bounds for open-system quantum dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print trace, Frobenius, operator and Ky Fan norms of a matrix file.
    Norms { matrix: PathBuf },
    /// Run a seeded fuzz campaign and write campaign.json and summary.csv.
    Verify {
        config: PathBuf,
        /// Corrupt the distance bound so the harness must report failures.
        #[arg(long)]
        mutate: bool,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Run a concatenated decoupling experiment and write its CSV.
    Cdd {
        config: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Rerun one campaign trial and print every intermediate value.
    Replay {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        suite: Suite,
        #[arg(long)]
        trial: usize,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
}

/// A failure that maps onto an exit code.
enum Failure {
    Input(String),
    Property,
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Input(e.to_string())
    }
}

/// Writes one line to stdout; a closed pipe ends output quietly.
fn emit(line: &str) -> Result<(), Failure> {
    match writeln!(io::stdout().lock(), "{line}") {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn cmd_norms(path: &Path) -> Result<(), Failure> {
    let m: ComplexMatrix = serde_json::from_str(&read(path)?)?;
    emit(&serde_json::to_string(&summarize(&m))?)?;
    Ok(())
}

fn load_campaign(path: &Path) -> Result<CampaignConfig, Failure> {
    CampaignConfig::from_json(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn cmd_verify(config: &Path, mutate: bool, output_dir: Option<PathBuf>) -> Result<(), Failure> {
    let mut cfg = load_campaign(config)?;
    cfg.mutate |= mutate;
    if let Some(dir) = output_dir {
        cfg.output_dir = dir;
    }
    let report = run_campaign(&cfg)?;
    write_reports(&report, &cfg.output_dir)?;
    for s in &report.summaries {
        emit(&format!(
            "{:<14} trials={} passed={} failed={} skipped={} worst_slack={:.3e}",
            s.suite.name(),
            s.trials,
            s.passed,
            s.failed,
            s.skipped,
            s.worst_slack
        ))?;
    }
    let mut failed = false;
    for f in report.failures() {
        failed = true;
        eprintln!(
            "FAIL suite={} trial={} seed={} {} (replay: qdbound replay --config {} --suite {} --trial {})",
            f.suite,
            f.trial,
            cfg.seed,
            f.note.as_deref().unwrap_or(""),
            config.display(),
            f.suite,
            f.trial
        );
    }
    if failed {
        Err(Failure::Property)
    } else {
        Ok(())
    }
}

fn cmd_cdd(config: &Path, output: &Path) -> Result<(), Failure> {
    let cfg =
        CddRunConfig::from_json(&read(config)?).map_err(|e| Failure::Input(format!("{}: {e}", config.display())))?;
    let rows = cfg.run()?;
    if let Some(parent) = output.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    write_cdd_csv(&rows, fs::File::create(output)?)?;
    let mut failed = false;
    for r in &rows {
        emit(&format!(
            "level={} N={} T={} measured_D={:.3e} TdOmega={:.3e} phi={:.3e} valid={} asserted={} review={}",
            r.level, r.n, r.t, r.measured_d, r.measured_t_domega, r.phi_cdd_bound, r.valid, r.asserted, r.needs_review
        ))?;
        if !r.passed() {
            failed = true;
            eprintln!("FAIL level={}: measured_D exceeds the decoupling distance bound", r.level);
        }
    }
    if failed {
        Err(Failure::Property)
    } else {
        Ok(())
    }
}

fn cmd_replay(config: &Path, suite: Suite, trial: usize, seed: Option<u64>) -> Result<(), Failure> {
    let mut cfg = load_campaign(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let (outcome, detail) = run_trial_detailed(&cfg, suite, trial);
    let out = serde_json::json!({ "seed": cfg.seed, "outcome": outcome, "detail": detail });
    emit(&serde_json::to_string_pretty(&out)?)?;
    if outcome.status == Status::Fail {
        Err(Failure::Property)
    } else {
        Ok(())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Norms { matrix } => cmd_norms(&matrix),
        Command::Verify { config, mutate, output_dir } => cmd_verify(&config, mutate, output_dir),
        Command::Cdd { config, output } => cmd_cdd(&config, &output),
        Command::Replay { config, suite, trial, seed } => cmd_replay(&config, suite, trial, seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Property) => ExitCode::from(1),
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
