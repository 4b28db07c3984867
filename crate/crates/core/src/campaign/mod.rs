//! Seeded fuzz campaigns over every property suite, with deterministic
//! report files.

mod suites;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{SubsystemDims, RNG_NAME};

pub use suites::run_trial_detailed;

/// Bumped whenever the report layout changes.
pub const REPORT_FORMAT_VERSION: u32 = 1;
/// Caps the worker threads used for trial-level parallelism.
pub const THREADS_ENV: &str = "QDBOUND_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Norms,
    Duality,
    PartialTrace,
    Dynamics,
    Bounds,
    Dyson,
    Cdd,
}

impl Suite {
    pub const ALL: [Suite; 7] =
        [Suite::Norms, Suite::Duality, Suite::PartialTrace, Suite::Dynamics, Suite::Bounds, Suite::Dyson, Suite::Cdd];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Norms => "norms",
            Suite::Duality => "duality",
            Suite::PartialTrace => "partial-trace",
            Suite::Dynamics => "dynamics",
            Suite::Bounds => "bounds",
            Suite::Dyson => "dyson",
            Suite::Cdd => "cdd",
        }
    }

    /// RNG stream of one trial; suites never share streams.
    pub fn stream(&self, trial: usize) -> u64 {
        let idx = Suite::ALL.iter().position(|s| s == self).expect("listed") as u64;
        ((idx + 1) << 40) | trial as u64
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown suite '{s}'")))
    }
}

fn default_time_scale() -> f64 {
    1.0
}

fn default_output_dir() -> PathBuf {
    PathBuf::from(".")
}

fn default_ot_samples() -> usize {
    8
}

fn default_ot_iters() -> usize {
    50
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    pub seed: u64,
    pub trials: usize,
    pub dims: SubsystemDims,
    #[serde(default = "default_time_scale")]
    pub time_scale: f64,
    pub suites: Vec<Suite>,
    // Output location is not part of the reproducible record.
    #[serde(default = "default_output_dir", skip_serializing)]
    pub output_dir: PathBuf,
    /// Harness self-test: replaces the distance bound with a corrupted one
    /// so that the bounds and cdd suites must report failures.
    #[serde(default)]
    pub mutate: bool,
    /// Restarts of the O-T estimator in the bounds and dyson suites.
    #[serde(default = "default_ot_samples")]
    pub ot_samples: usize,
    #[serde(default = "default_ot_iters")]
    pub ot_iters: usize,
}

impl CampaignConfig {
    pub fn new(seed: u64, trials: usize, dims: SubsystemDims, suites: Vec<Suite>) -> Self {
        Self {
            seed,
            trials,
            dims,
            time_scale: default_time_scale(),
            suites,
            output_dir: default_output_dir(),
            mutate: false,
            ot_samples: default_ot_samples(),
            ot_iters: default_ot_iters(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be at least 1".into()));
        }
        if self.suites.is_empty() {
            return Err(Error::InvalidArgument("at least one suite is required".into()));
        }
        SubsystemDims::new(self.dims.ds, self.dims.db)?;
        if self.dims.joint() > 16 {
            return Err(Error::InvalidArgument("joint dimension above 16 is not supported".into()));
        }
        if !(self.time_scale.is_finite() && self.time_scale > 0.0) {
            return Err(Error::InvalidArgument(format!("time_scale must be positive, got {}", self.time_scale)));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// Precondition not met (e.g. the branch guard); not a violation.
    Skip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub suite: Suite,
    pub trial: usize,
    pub stream: u64,
    pub status: Status,
    /// Smallest slack over the trial's inequalities; negative is a violation.
    pub worst_slack: f64,
    pub metrics: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub suite: Suite,
    pub trials: usize,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
    pub worst_slack: f64,
    pub first_failure: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportHeader {
    pub format_version: u32,
    pub tool_version: String,
    pub rng: String,
}

impl ReportHeader {
    pub fn current() -> Self {
        Self {
            format_version: REPORT_FORMAT_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            rng: RNG_NAME.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub header: ReportHeader,
    pub config: CampaignConfig,
    pub summaries: Vec<SuiteSummary>,
    pub trials: Vec<TrialOutcome>,
}

impl CampaignReport {
    pub fn failures(&self) -> impl Iterator<Item = &TrialOutcome> {
        self.trials.iter().filter(|t| t.status == Status::Fail)
    }

    pub fn passed(&self) -> bool {
        self.failures().next().is_none()
    }

    /// 0 when every trial passed or was skipped, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }
}

/// Outcome of one trial without the verbose detail.
pub fn run_trial(cfg: &CampaignConfig, suite: Suite, trial: usize) -> TrialOutcome {
    run_trial_detailed(cfg, suite, trial).0
}

fn summarize(suite: Suite, outcomes: &[TrialOutcome]) -> SuiteSummary {
    let count = |s: Status| outcomes.iter().filter(|o| o.status == s).count();
    SuiteSummary {
        suite,
        trials: outcomes.len(),
        passed: count(Status::Pass),
        failed: count(Status::Fail),
        skipped: count(Status::Skip),
        worst_slack: outcomes
            .iter()
            .filter(|o| o.status != Status::Skip)
            .map(|o| o.worst_slack)
            .fold(f64::INFINITY, f64::min),
        first_failure: outcomes.iter().find(|o| o.status == Status::Fail).map(|o| o.trial),
    }
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("{THREADS_ENV} must be a positive integer, got '{v}'")))?;
        builder = builder.num_threads(n.max(1));
    }
    builder.build().map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))
}

/// Trials of one suite, in trial order regardless of scheduling.
pub fn run_suite(cfg: &CampaignConfig, suite: Suite) -> Result<Vec<TrialOutcome>> {
    cfg.validate()?;
    let pool = thread_pool()?;
    Ok(pool.install(|| (0..cfg.trials).into_par_iter().map(|k| run_trial(cfg, suite, k)).collect()))
}

pub fn run_campaign(cfg: &CampaignConfig) -> Result<CampaignReport> {
    cfg.validate()?;
    let mut summaries = Vec::new();
    let mut trials = Vec::new();
    let mut seen = Vec::new();
    for &suite in &cfg.suites {
        if seen.contains(&suite) {
            continue;
        }
        seen.push(suite);
        let outcomes = run_suite(cfg, suite)?;
        summaries.push(summarize(suite, &outcomes));
        trials.extend(outcomes);
    }
    Ok(CampaignReport { header: ReportHeader::current(), config: cfg.clone(), summaries, trials })
}

pub const SUMMARY_CSV_HEADER: &str = "suite,trials,passed,failed,skipped,worst_slack,first_failure";

/// Writes `campaign.json` and `summary.csv` into `dir`.
pub fn write_reports(report: &CampaignReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut json = serde_json::to_string_pretty(report)?;
    json.push('\n');
    std::fs::write(dir.join("campaign.json"), json)?;

    let mut w = csv::Writer::from_path(dir.join("summary.csv"))?;
    w.write_record(SUMMARY_CSV_HEADER.split(','))?;
    for s in &report.summaries {
        w.write_record([
            s.suite.name().to_string(),
            s.trials.to_string(),
            s.passed.to_string(),
            s.failed.to_string(),
            s.skipped.to_string(),
            s.worst_slack.to_string(),
            s.first_failure.map(|t| t.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(suites: Vec<Suite>, trials: usize) -> CampaignConfig {
        CampaignConfig::new(42, trials, SubsystemDims::new(2, 2).unwrap(), suites)
    }

    #[test]
    fn suite_names_roundtrip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
            assert_eq!(serde_json::to_string(&s).unwrap(), format!("\"{}\"", s.name()));
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn streams_are_distinct() {
        let mut all: Vec<u64> = Suite::ALL.iter().flat_map(|s| (0..100).map(|k| s.stream(k))).collect();
        all.sort();
        all.dedup();
        assert_eq!(all.len(), 700);
    }

    #[test]
    fn config_validation() {
        assert!(cfg(vec![], 1).validate().is_err());
        assert!(cfg(vec![Suite::Norms], 0).validate().is_err());
        let text = r#"{"seed": 1, "trials": 2, "dims": {"ds": 2, "db": 2}, "suites": ["norms", "partial-trace"]}"#;
        let c = CampaignConfig::from_json(text).unwrap();
        assert_eq!(c.suites, vec![Suite::Norms, Suite::PartialTrace]);
        assert_eq!(c.time_scale, 1.0);
        assert!(CampaignConfig::from_json(r#"{"seed": 1}"#).is_err());
        assert!(CampaignConfig::from_json(&text.replace("norms", "bogus")).is_err());
    }

    #[test]
    fn every_suite_passes_a_few_trials() {
        let report = run_campaign(&cfg(Suite::ALL.to_vec(), 3)).unwrap();
        for s in &report.summaries {
            assert_eq!(s.failed, 0, "{s:?}");
        }
        assert_eq!(report.trials.len(), 21);
        assert_eq!(report.exit_code(), 0);
    }

    #[test]
    fn repeated_runs_are_identical() {
        let c = cfg(vec![Suite::Norms, Suite::Bounds], 4);
        let a = serde_json::to_string(&run_campaign(&c).unwrap()).unwrap();
        let b = serde_json::to_string(&run_campaign(&c).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mutation_mode_is_caught() {
        let mut c = cfg(vec![Suite::Bounds], 5);
        c.mutate = true;
        let report = run_campaign(&c).unwrap();
        assert!(report.summaries[0].failed > 0);
        assert_eq!(report.exit_code(), 1);
    }
}
