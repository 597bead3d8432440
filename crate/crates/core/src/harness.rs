//! Monte Carlo runner: single trials, aggregated experiments and sweeps.
//!
//! Trial `i` of an experiment draws every random number from streams keyed
//! by `(master_seed, i)`, so results do not depend on how trials are spread
//! over threads. Aggregation runs in trial-index order.

use rayon::prelude::*;
use serde::Serialize;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use crate::algorithms::{build_policy, Diagnostic, Elimination, PolicyKind, Status};
use crate::bandit::{SeedSpec, Stream, TrialEnvironment};
use crate::config::ExperimentConfig;
use crate::error::{arg, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub trial_index: u64,
    /// Total number of pulls.
    pub tau: u64,
    pub recommended: usize,
    pub correct: bool,
    pub truncated: bool,
    /// Pull count of every arm at the end of the trial.
    pub counts: Vec<u64>,
    pub eliminations: Vec<Elimination>,
    pub wall_time: Duration,
}

/// The JSON-lines view of a trial.
#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub tau: u64,
    pub recommended: usize,
    pub correct: bool,
    pub truncated: bool,
}

impl TrialResult {
    pub fn record(&self) -> TrialRecord {
        TrialRecord {
            trial: self.trial_index,
            tau: self.tau,
            recommended: self.recommended,
            correct: self.correct,
            truncated: self.truncated,
        }
    }
}

/// One round of a traced trial.
#[derive(Debug, Clone, Serialize)]
pub struct RoundTrace {
    pub t: u64,
    pub arm: usize,
    pub reward: f64,
    /// Hidden corruption flag; diagnostics only.
    pub contaminated: bool,
    #[serde(flatten)]
    pub diagnostic: TraceDiagnostic,
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceDiagnostic {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub overlap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub active: Option<usize>,
}

impl From<Diagnostic> for TraceDiagnostic {
    fn from(d: Diagnostic) -> Self {
        match d {
            Diagnostic::Overlap(o) => Self {
                overlap: o,
                active: None,
            },
            Diagnostic::ActiveArms(n) => Self {
                overlap: None,
                active: Some(n),
            },
        }
    }
}

/// Runs trial `trial_index` to its stopping time or the pull cap.
pub fn run_trial(config: &ExperimentConfig, trial_index: u64) -> Result<TrialResult> {
    run_trial_traced(config, trial_index, |_| {})
}

/// As [`run_trial`], calling `on_round` after every pull.
pub fn run_trial_traced(
    config: &ExperimentConfig,
    trial_index: u64,
    mut on_round: impl FnMut(&RoundTrace),
) -> Result<TrialResult> {
    let started = Instant::now();
    let master = config.master_seed();
    let env = TrialEnvironment::new(&config.instance, &config.contamination, master, trial_index)?;
    let seeds = SeedSpec::new(master, trial_index, Stream::PolicyChoice);
    let mut policy = build_policy(&config.policy, config.instance.num_arms(), seeds)?;
    while policy.status() == Status::Running {
        let arm = policy.select_arm()?;
        let t = policy.pulls() + 1;
        let draw = env.sample(arm, t)?;
        policy.observe(arm, draw.reward)?;
        on_round(&RoundTrace {
            t,
            arm,
            reward: draw.reward,
            contaminated: draw.contaminated,
            diagnostic: policy.diagnostic().into(),
        });
    }
    let (recommended, truncated) = match policy.status() {
        Status::Stopped { recommended } => (recommended, false),
        Status::Truncated { recommended } => (recommended, true),
        Status::Running => unreachable!(),
    };
    Ok(TrialResult {
        trial_index,
        tau: policy.pulls(),
        recommended,
        correct: recommended == config.instance.best_arm(),
        truncated,
        counts: policy.counts(),
        eliminations: policy.eliminations().to_vec(),
        wall_time: started.elapsed(),
    })
}

/// Summary statistics over the trials of one experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Aggregate {
    pub n_trials: usize,
    pub mean_tau: f64,
    /// Sample standard deviation (n - 1 denominator); 0 for a single trial.
    pub std_tau: f64,
    pub stderr_tau: f64,
    /// False when `n_trials == 1` and the spread is undefined.
    pub stderr_defined: bool,
    pub error_rate: f64,
    /// Wilson score interval (95%) on the error rate.
    pub error_ci: (f64, f64),
    pub truncated: usize,
}

/// Welford accumulator for the stopping times.
#[derive(Debug, Clone, Copy, Default)]
struct Welford {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }
}

pub fn wilson_interval(errors: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n);
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Aggregates trials in the order given.
pub fn aggregate(trials: &[TrialResult]) -> Aggregate {
    let mut w = Welford::default();
    let mut errors = 0;
    let mut truncated = 0;
    for t in trials {
        w.push(t.tau as f64);
        errors += usize::from(!t.correct);
        truncated += usize::from(t.truncated);
    }
    let n = trials.len();
    let (std_tau, stderr_tau) = if n > 1 {
        let sd = (w.m2 / (n - 1) as f64).sqrt();
        (sd, sd / (n as f64).sqrt())
    } else {
        (0.0, 0.0)
    };
    Aggregate {
        n_trials: n,
        mean_tau: w.mean,
        std_tau,
        stderr_tau,
        stderr_defined: n > 1,
        error_rate: if n > 0 { errors as f64 / n as f64 } else { 0.0 },
        error_ci: wilson_interval(errors, n, 1.96),
        truncated,
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub aggregate: Aggregate,
    pub trials: Vec<TrialResult>,
}

impl ExperimentReport {
    /// JSON lines, one object per trial, in trial order.
    pub fn trace_jsonl(&self) -> String {
        let mut out = String::new();
        for t in &self.trials {
            out.push_str(&serde_json::to_string(&t.record()).unwrap());
            out.push('\n');
        }
        out
    }
}

/// Runs `n_trials` independent trials, in parallel, and aggregates them.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let n = config.n_trials() as u64;
    let run = || -> Result<Vec<TrialResult>> {
        (0..n)
            .into_par_iter()
            .map(|i| run_trial(config, i))
            .collect()
    };
    let trials = match config.spec.run.workers {
        Some(w) if w > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| crate::error::CbaiError::Config(format!("thread pool: {e}")))?
            .install(run)?,
        _ => run()?,
    };
    Ok(ExperimentReport {
        aggregate: aggregate(&trials),
        trials,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Delta,
    Epsilon,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            Self::Delta => "delta",
            Self::Epsilon => "epsilon",
        }
    }
}

impl std::str::FromStr for SweepParam {
    type Err = crate::error::CbaiError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "delta" => Ok(Self::Delta),
            "epsilon" => Ok(Self::Epsilon),
            _ => arg(format!("cannot sweep over {s:?}; use delta or epsilon")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub policy: PolicyKind,
    pub aggregate: Aggregate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub param: SweepParam,
    pub rows: Vec<SweepRow>,
}

pub const CSV_HEADER: &str =
    "param,policy,mean_tau,std_tau,stderr_tau,error_rate,n_trials,truncated";

/// `printf("%.6g")`.
pub fn format_g6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if !(-4..6).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (5 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// One CSV line (no newline) for an aggregate.
pub fn csv_row(param: f64, policy: PolicyKind, a: &Aggregate) -> String {
    format!(
        "{},{},{},{},{},{},{},{}",
        format_g6(param),
        policy.name(),
        format_g6(a.mean_tau),
        format_g6(a.std_tau),
        format_g6(a.stderr_tau),
        format_g6(a.error_rate),
        a.n_trials,
        a.truncated
    )
}

impl SweepTable {
    /// CSV with an optional `#`-prefixed preamble.
    pub fn to_csv(&self, preamble: &str) -> String {
        let mut out = String::new();
        for line in preamble.lines() {
            let _ = writeln!(out, "# {line}");
        }
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&csv_row(r.value, r.policy, &r.aggregate));
            out.push('\n');
        }
        out
    }
}

/// One experiment per grid value; rows sorted by the swept value.
pub fn sweep(config: &ExperimentConfig, param: SweepParam, grid: &[f64]) -> Result<SweepTable> {
    if grid.is_empty() {
        return arg("sweep grid is empty");
    }
    let mut grid = grid.to_vec();
    if grid.iter().any(|v| !v.is_finite()) {
        return arg("sweep grid values must be finite");
    }
    grid.sort_by(f64::total_cmp);
    let configs = grid
        .iter()
        .map(|&v| match param {
            SweepParam::Delta => config.with_delta(v),
            SweepParam::Epsilon => config.with_epsilon(v),
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(grid.len());
    for (value, c) in grid.into_iter().zip(&configs) {
        let report = run_experiment(c)?;
        rows.push(SweepRow {
            value,
            policy: c.policy.kind,
            aggregate: report.aggregate,
        });
    }
    Ok(SweepTable { param, rows })
}
