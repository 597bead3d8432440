//! `cbai`: run contaminated best-arm identification experiments from TOML
//! configuration files.
//!
//! Exit codes: 0 success, 1 internal or output error, 2 unreadable input
//! file, 3 invalid configuration, 4 infeasible instance, 5 malformed dataset,
//! 64 bad command line.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cbai_core::confidence::{
    exploration_floor, lower_bound_report, problem_complexity, upper_bound_report, RadiusParams,
};
use cbai_core::config::{ContaminationSpec, InstanceSpec, PolicySpec, RunSpec};
use cbai_core::harness::{csv_row, format_g6, run_trial_traced, CSV_HEADER};
use cbai_core::ingest::{ingest_pkis2, ingest_ratings, parse_pairs};
use cbai_core::{
    run_experiment, sweep, Aggregate, CbaiError, ConfigFile, ExperimentConfig, PolicyKind,
    RadiusMode, SweepParam,
};

#[derive(Parser)]
#[command(
    name = "cbai",
    version,
    about = "Best-arm identification under reward contamination"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and print its CSV summary row.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        /// Per-trial JSON-lines file.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run one experiment per grid value of delta or epsilon.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        param: SweepParam,
        /// Comma-separated grid, e.g. 0.01,0.05,0.1
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<f64>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Turn a two-column CSV export into a gaussian instance config.
    Ingest {
        #[arg(long, value_enum)]
        kind: IngestKind,
        input: PathBuf,
        /// Noise standard deviation of every arm.
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print gaps, complexity and sample-complexity bounds of an instance.
    Complexity {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Print every round of a single trial as JSON lines.
    TrialTrace {
        config: PathBuf,
        /// Trial index within the experiment.
        #[arg(long, default_value_t = 0)]
        trial: u64,
        #[command(flatten)]
        overrides: Overrides,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum IngestKind {
    /// (item_id, rating) rows; arm mean is the average rating.
    Ratings,
    /// (compound_id, percent_inhibition) rows; arm mean is the log percentage control.
    Pkis2,
}

#[derive(Args, Default)]
struct Overrides {
    #[arg(long)]
    delta: Option<f64>,
    /// Contamination level; the assumed level follows it.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    policy: Option<PolicyKind>,
    #[arg(long)]
    radius_mode: Option<RadiusMode>,
    /// Worker threads; never changes results.
    #[arg(long)]
    workers: Option<usize>,
    /// Also write the output to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Overrides {
    fn apply(&self, spec: &mut ConfigFile) {
        if let Some(d) = self.delta {
            spec.policy.delta = d;
        }
        if let Some(e) = self.epsilon {
            spec.contamination.epsilon = e;
            spec.contamination.epsilon_assumed = None;
        }
        if let Some(n) = self.trials {
            spec.run.n_trials = n;
        }
        if let Some(s) = self.seed {
            spec.run.master_seed = s;
        }
        if let Some(p) = self.policy {
            spec.policy.name = p;
        }
        if let Some(m) = self.radius_mode {
            spec.policy.radius_mode = m;
        }
        if let Some(w) = self.workers {
            spec.run.workers = Some(w);
        }
        if let Some(out) = &self.out {
            spec.run.output = Some(out.display().to_string());
        }
    }
}

struct CliError {
    code: u8,
    kind: &'static str,
    msg: String,
}

impl CliError {
    fn new(code: u8, kind: &'static str, msg: impl Into<String>) -> Self {
        Self {
            code,
            kind,
            msg: msg.into(),
        }
    }
}

impl From<CbaiError> for CliError {
    fn from(e: CbaiError) -> Self {
        let (code, kind) = match &e {
            CbaiError::Io { .. } => (2, "io"),
            CbaiError::Config(_) | CbaiError::Argument(_) | CbaiError::Precondition { .. } => {
                (3, "config")
            }
            CbaiError::Infeasible(_) => (4, "infeasible"),
            CbaiError::Ingest(_) => (5, "ingest"),
            CbaiError::State(_) => (1, "internal"),
        };
        Self::new(code, kind, e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn load_spec(path: &Path, overrides: &Overrides) -> CliResult<ConfigFile> {
    let mut spec = ConfigFile::load(path)?;
    overrides.apply(&mut spec);
    Ok(spec)
}

/// The resolved configuration as `#` comment lines. Settings that cannot
/// change results (threads, file paths) are left out so outputs compare
/// byte for byte.
fn header(title: &str, spec: &ConfigFile) -> String {
    let mut spec = spec.clone();
    spec.run.workers = None;
    spec.run.output = None;
    spec.run.trace = None;
    let mut out = format!("# {title}\n");
    for line in spec.to_toml().lines() {
        if line.is_empty() {
            out.push_str("#\n");
        } else {
            let _ = writeln!(out, "# {line}");
        }
    }
    out
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text)
        .map_err(|e| CliError::new(1, "io", format!("cannot write {}: {e}", path.display())))
}

/// Prints `text` and, when `out` is set, writes it there too.
fn emit(text: &str, out: Option<&str>) -> CliResult<()> {
    print!("{text}");
    match out {
        Some(path) => write_file(Path::new(path), text),
        None => Ok(()),
    }
}

fn warn_truncated(agg: &Aggregate, max_rounds: u64, label: &str) {
    if agg.truncated > 0 {
        eprintln!(
            "warning: {label}{} of {} trials hit max_rounds={max_rounds} and were truncated",
            agg.truncated, agg.n_trials
        );
    }
}

fn cmd_run(config: &Path, overrides: &Overrides, trace: Option<&Path>) -> CliResult<()> {
    let spec = load_spec(config, overrides)?;
    let exp = ExperimentConfig::from_spec(spec.clone())?;
    let report = run_experiment(&exp)?;
    let agg = &report.aggregate;
    let mut text = header("cbai run", &spec);
    let _ = writeln!(text, "{CSV_HEADER}");
    let _ = writeln!(text, "{}", csv_row(spec.policy.delta, exp.policy.kind, agg));
    emit(&text, spec.run.output.as_deref())?;
    eprintln!(
        "error rate {} (95% CI {} to {}), mean tau {}",
        format_g6(agg.error_rate),
        format_g6(agg.error_ci.0),
        format_g6(agg.error_ci.1),
        format_g6(agg.mean_tau)
    );
    warn_truncated(agg, spec.run.max_rounds, "");
    let trace = trace
        .map(Path::to_path_buf)
        .or_else(|| spec.run.trace.as_ref().map(PathBuf::from));
    if let Some(path) = trace {
        write_file(&path, &report.trace_jsonl())?;
    }
    Ok(())
}

fn cmd_sweep(
    config: &Path,
    param: SweepParam,
    grid: &[f64],
    overrides: &Overrides,
) -> CliResult<()> {
    let spec = load_spec(config, overrides)?;
    let exp = ExperimentConfig::from_spec(spec.clone())?;
    let table = sweep(&exp, param, grid)?;
    let mut preamble = format!("cbai sweep param={} grid=", param.name());
    let values: Vec<String> = table.rows.iter().map(|r| format_g6(r.value)).collect();
    preamble.push_str(&values.join(","));
    let mut text = header(&preamble, &spec);
    let csv = table.to_csv("");
    text.push_str(&csv);
    emit(&text, spec.run.output.as_deref())?;
    for row in &table.rows {
        let label = format!("{}={}: ", param.name(), format_g6(row.value));
        warn_truncated(&row.aggregate, spec.run.max_rounds, &label);
    }
    Ok(())
}

fn cmd_ingest(kind: IngestKind, input: &Path, sigma: f64, out: Option<&Path>) -> CliResult<()> {
    let text = std::fs::read_to_string(input).map_err(|source| CbaiError::Io {
        path: input.display().to_string(),
        source,
    })?;
    let rows = parse_pairs(&text)?;
    let ingested = match kind {
        IngestKind::Ratings => ingest_ratings(&rows, sigma)?,
        IngestKind::Pkis2 => ingest_pkis2(&rows, sigma)?,
    };
    let spec = ConfigFile {
        instance: InstanceSpec::gaussian(ingested.instance.true_means(), sigma),
        contamination: ContaminationSpec::default(),
        policy: PolicySpec {
            name: PolicyKind::Gcbai,
            radius_mode: RadiusMode::default(),
            delta: 0.1,
            alpha: None,
            beta_exp: 2.0,
            c1_uncertainty: 1.0,
        },
        run: RunSpec::default(),
    };
    let kind_name = match kind {
        IngestKind::Ratings => "ratings",
        IngestKind::Pkis2 => "pkis2",
    };
    let mut doc = format!(
        "# cbai ingest kind={kind_name} input={} sigma={}\n",
        input.display(),
        format_g6(sigma)
    );
    for (i, name) in ingested.names.iter().enumerate() {
        let _ = writeln!(doc, "# arm {i}: {name}");
    }
    doc.push_str(&spec.to_toml());
    print!("{doc}");
    if let Some(path) = out {
        write_file(path, &doc)?;
    }
    Ok(())
}

fn cmd_complexity(config: &Path, overrides: &Overrides) -> CliResult<()> {
    let spec = load_spec(config, overrides)?;
    // An unseparated best arm is an infeasible instance here, not a bad config.
    let instance = spec.instance.build().map_err(|e| match e {
        CbaiError::Precondition { .. } => CliError::new(4, "infeasible", e.to_string()),
        other => other.into(),
    })?;
    spec.contamination.build()?;
    let p = &spec.policy;
    let eps = spec.contamination.assumed();
    let sigma = instance.sigma_proxy();
    let k = instance.num_arms();
    let params = RadiusParams::with_constants(sigma, eps, k, p.delta, p.beta_exp, p.c1_uncertainty)
        .map_err(|e| CliError::new(3, "config", e.to_string()))?;
    let means = instance.true_means();
    let u = instance.uncertainty();
    let h = problem_complexity(&means, u, sigma)?;
    let gaps = cbai_core::bandit::true_gaps(&means, u)?;
    let best = instance.best_arm();
    let upper = upper_bound_report(&params, &means, u, h)?;
    let lower = lower_bound_report(h, p.delta, eps, sigma, &means, p.c1_uncertainty);
    let alpha = p.alpha.unwrap_or(eps / 2.0);
    let floor = exploration_floor(alpha, p.delta)?;

    let g = format_g6;
    let mut text = header("cbai complexity", &spec);
    let runner_up = (0..k)
        .filter(|&i| i != best)
        .map(|i| gaps[i])
        .fold(f64::INFINITY, f64::min);
    let _ = writeln!(text, "arm,mean,uncertainty,gap,effective_gap,best");
    for i in 0..k {
        let _ = writeln!(
            text,
            "{i},{},{},{},{},{}",
            g(means[i]),
            g(u[i]),
            g(gaps[i]),
            g(gaps[i].max(runner_up)),
            i == best
        );
    }
    let _ = writeln!(text, "K = {k}");
    let _ = writeln!(text, "sigma = {}", g(sigma));
    let _ = writeln!(text, "epsilon = {}", g(eps));
    let _ = writeln!(text, "delta = {}", g(p.delta));
    let _ = writeln!(text, "beta = {}", g(p.beta_exp));
    let _ = writeln!(
        text,
        "H = sum_i (sqrt(2) sigma / max(Delta_i, Delta_b*))^2 = {}",
        g(h)
    );
    let _ = writeln!(text, "lower_slope = H = {}", g(h));
    let infeasible = match &lower {
        Ok(l) => {
            let _ = writeln!(
                text,
                "lower_slope_contaminated = sum_i (sqrt(2) sigma / (max(Delta_i, Delta_b*) - c1 sigma eps sqrt(ln(1/eps))))^2 = {}",
                g(l.asymptotic_slope_cbai)
            );
            None
        }
        Err(e) => {
            let _ = writeln!(text, "lower_slope_contaminated = infeasible ({e})");
            Some(e.to_string())
        }
    };
    let _ = writeln!(
        text,
        "exploration_floor T(alpha, delta) = (2/alpha^2) ln(1/delta) = {} (alpha = {})",
        g(floor),
        g(alpha)
    );
    let _ = writeln!(
        text,
        "gcbai_upper_slope = max{{8K/eps^2, 64 beta H}} = {}",
        g(upper.gap_slope)
    );
    let _ = writeln!(
        text,
        "gcbai_upper_slope_unabsorbed = max{{8K/eps^2, 16 beta H / (1-eps)^2}} = {}",
        g(upper.gap_slope_unabsorbed)
    );
    let _ = writeln!(
        text,
        "gcbai_upper_slope_contaminated = max{{8K/eps^2, 64 beta sum_i (sqrt(2) sigma / (max(Delta_i, Delta_b*) - 2 c1 sigma eps sqrt(ln(1/eps))))^2}} = {}",
        upper.gap_slope_contaminated.map_or("infeasible".to_string(), g)
    );
    let _ = writeln!(
        text,
        "secbai_upper = max{{(8K/eps^2) ln(1/delta), sum_{{i != a*}} ln(K/(delta Delta_i)) / Delta_i^2}} = {}",
        g(upper.elimination_bound)
    );
    let _ = writeln!(
        text,
        "secbai_upper_gap_term = {}",
        g(upper.elimination_gap_term)
    );
    let _ = writeln!(
        text,
        "secbai_upper_constant = unspecified (bound holds up to a universal constant)"
    );
    if eps <= 0.0 {
        let _ = writeln!(
            text,
            "note: the upper bounds are only valid for eps > 0; their 8K/eps^2 term diverges at eps = 0"
        );
    }
    emit(&text, spec.run.output.as_deref())?;
    match infeasible {
        Some(msg) => Err(CliError::new(4, "infeasible", msg)),
        None => Ok(()),
    }
}

fn cmd_trial_trace(config: &Path, trial: u64, overrides: &Overrides) -> CliResult<()> {
    let spec = load_spec(config, overrides)?;
    let exp = ExperimentConfig::from_spec(spec.clone())?;
    let mut text = header(&format!("cbai trial-trace trial={trial}"), &spec);
    let result = run_trial_traced(&exp, trial, |round| {
        text.push_str(&serde_json::to_string(round).expect("trace rows serialise"));
        text.push('\n');
    })?;
    let summary = serde_json::to_string(&result.record()).expect("records serialise");
    let _ = writeln!(text, "# result {summary}");
    emit(&text, spec.run.output.as_deref())?;
    if result.truncated {
        eprintln!(
            "warning: trial {trial} hit max_rounds={} and was truncated",
            spec.run.max_rounds
        );
    }
    Ok(())
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run {
            config,
            overrides,
            trace,
        } => cmd_run(&config, &overrides, trace.as_deref()),
        Command::Sweep {
            config,
            param,
            grid,
            overrides,
        } => cmd_sweep(&config, param, &grid, &overrides),
        Command::Ingest {
            kind,
            input,
            sigma,
            out,
        } => cmd_ingest(kind, &input, sigma, out.as_deref()),
        Command::Complexity { config, overrides } => cmd_complexity(&config, &overrides),
        Command::TrialTrace {
            config,
            trial,
            overrides,
        } => cmd_trial_trace(&config, trial, &overrides),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            let first = e.to_string();
            let first = first
                .lines()
                .next()
                .unwrap_or("")
                .trim_start_matches("error: ");
            eprintln!("error: code=64 kind=usage msg={first:?}");
            return ExitCode::from(64);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: code={} kind={} msg={:?}", e.code, e.kind, e.msg);
            ExitCode::from(e.code)
        }
    }
}
