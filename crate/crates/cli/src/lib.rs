//! `hrtm` command-line front end: train, evaluate, plot and compare runs.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime failure.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use hrtm_core::envs::Scenario;
use hrtm_core::harness::{
    fmt_f64, load_run_config, mean, run_evaluation, run_training_with, trailing_mean, EvalReport, ExperimentConfig,
    MetricsTable, CONFIG_FILE, EVAL_JSON, FINAL_CHECKPOINT, METRICS_CSV, MOVING_WINDOW,
};
use hrtm_core::marl::Algorithm;

pub mod svg;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "hrtm", version, about = "Multi-agent actor-critic experiments on particle worlds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train a learner set and write metrics and checkpoints.
    Train(TrainArgs),
    /// Evaluate a run's checkpoint (or the random policy) without noise.
    Eval(EvalArgs),
    /// Render smoothed reward curves as a standalone SVG.
    Plot(PlotArgs),
    /// Tabulate per-agent mean returns across runs of one scenario.
    Compare(CompareArgs),
}

#[derive(Args, Debug, Default)]
pub struct ConfigFlags {
    /// Base config file (key = value lines).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub scenario: Option<String>,
    /// maddpg, rmaddpg or hrtmaddpg.
    #[arg(long)]
    pub algo: Option<String>,
    /// Transformer blocks in the critic encoder (hrtmaddpg only).
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Training episodes.
    #[arg(long)]
    pub episodes: Option<usize>,
    #[arg(long = "eval-episodes")]
    pub eval_episodes: Option<usize>,
    /// Any config key, as key=value; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub flags: ConfigFlags,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Suppress progress lines.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Run directory holding config.txt and checkpoint.bin.
    #[arg(long)]
    pub out: PathBuf,
    /// Checkpoint to load instead of the run's final one.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Evaluate the uniform-random policy instead of a checkpoint.
    #[arg(long)]
    pub random: bool,
    #[arg(long = "eval-episodes")]
    pub eval_episodes: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct PlotArgs {
    /// Metrics CSV files or run directories.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Trailing-mean window in episodes.
    #[arg(long, default_value_t = MOVING_WINDOW)]
    pub smooth: usize,
    /// Comma-separated series labels, in input order.
    #[arg(long, value_delimiter = ',')]
    pub labels: Vec<String>,
    /// Output SVG path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    /// Run directories.
    pub runs: Vec<PathBuf>,
    /// Episodes averaged for the train-final table.
    #[arg(long, default_value_t = MOVING_WINDOW)]
    pub smooth: usize,
    /// Emit the tables as csv or json instead of aligned text.
    #[arg(long)]
    pub format: Option<String>,
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn usage(m: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: m.into() }
    }
    pub fn runtime(m: impl Into<String>) -> Self {
        Self { code: EXIT_RUNTIME, message: m.into() }
    }
}

impl From<hrtm_core::Error> for Failure {
    fn from(e: hrtm_core::Error) -> Self {
        match e {
            hrtm_core::Error::Config(_) | hrtm_core::Error::UnknownScenario(_) => Failure::usage(e.to_string()),
            _ => Failure::runtime(e.to_string()),
        }
    }
}

type CmdResult = std::result::Result<(), Failure>;

/// Parses `args` (including the program name) and runs the command,
/// writing normal output to `out`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let result = match cli.command {
        Command::Train(a) => cmd_train(&a, out),
        Command::Eval(a) => cmd_eval(&a, out),
        Command::Plot(a) => cmd_plot(&a, out),
        Command::Compare(a) => cmd_compare(&a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

/// Resolves config file, named flags and `--set` overrides, in that order.
pub fn resolve_config(flags: &ConfigFlags, out: Option<&Path>) -> std::result::Result<ExperimentConfig, Failure> {
    let mut cfg = match &flags.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Failure::usage(format!("cannot read config {}: {e}", p.display())))?;
            let mut c = ExperimentConfig::default();
            c.apply_text(&text)?;
            c
        }
        None => ExperimentConfig::default(),
    };
    let mut pairs: Vec<(String, String)> = Vec::new();
    if let Some(v) = &flags.scenario {
        pairs.push(("scenario".into(), v.clone()));
    }
    if let Some(v) = &flags.algo {
        pairs.push(("algorithm".into(), v.clone()));
    }
    if let Some(v) = flags.depth {
        pairs.push(("depth".into(), v.to_string()));
    }
    if let Some(v) = flags.seed {
        pairs.push(("seed".into(), v.to_string()));
    }
    if let Some(v) = flags.episodes {
        pairs.push(("train_episodes".into(), v.to_string()));
    }
    if let Some(v) = flags.eval_episodes {
        pairs.push(("eval_episodes".into(), v.to_string()));
    }
    if let Some(p) = out {
        pairs.push(("out_dir".into(), p.display().to_string()));
    }
    for kv in &flags.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| Failure::usage(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        pairs.push((k.trim().into(), v.trim().into()));
    }
    for (k, v) in pairs {
        cfg.set(&k, &v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn cmd_train(a: &TrainArgs, out: &mut dyn Write) -> CmdResult {
    let cfg = resolve_config(&a.flags, a.out.as_deref())?;
    let quiet = a.quiet;
    let outcome = run_training_with(&cfg, |ep, m| {
        if !quiet && ep % 100 == 0 {
            let _ = writeln!(out, "episode {ep} mean_return {}", m.moving_mean[ep - 1]);
        }
    })?;
    if !quiet {
        let _ = writeln!(
            out,
            "wrote {} episodes, {} updates to {}",
            outcome.metrics.episodes(),
            outcome.updates,
            cfg.out_dir.display()
        );
    }
    Ok(())
}

/// Aligned per-agent `mean ± std` table of an evaluation report.
pub fn eval_table(r: &EvalReport) -> String {
    let mut s = String::new();
    let title = r.scenario.parse::<Scenario>().map(|s| s.title()).unwrap_or("unknown scenario");
    let _ = writeln!(s, "{title}: {} policy, {} evaluation episodes", r.policy, r.episodes());
    let _ = writeln!(s, "{:<8} {:>24} {:>24}", "agent", "mean", "std");
    for (i, (m, sd)) in r.mean.iter().zip(&r.std).enumerate() {
        let _ = writeln!(s, "{:<8} {:>24} {:>24}", format!("agent{i}"), fmt_f64(*m), fmt_f64(*sd));
    }
    let _ = writeln!(s, "{:<8} {:>24} {:>24}", "team", fmt_f64(r.team_mean), fmt_f64(r.team_std));
    s
}

pub fn cmd_eval(a: &EvalArgs, out: &mut dyn Write) -> CmdResult {
    let cfg_path = a.out.join(CONFIG_FILE);
    if !cfg_path.exists() {
        return Err(Failure::runtime(format!("run config not found: {}", cfg_path.display())));
    }
    let mut cfg = load_run_config(&a.out)?;
    if let Some(n) = a.eval_episodes {
        cfg.eval_episodes = n;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let report = if a.random {
        run_evaluation(&cfg, None)?
    } else {
        let ck = a.checkpoint.clone().unwrap_or_else(|| a.out.join(FINAL_CHECKPOINT));
        if !ck.exists() {
            return Err(Failure::runtime(format!("checkpoint not found: {}", ck.display())));
        }
        run_evaluation(&cfg, Some(&ck))?
    };
    report.write(&a.out)?;
    let _ = write!(out, "{}", eval_table(&report));
    Ok(())
}

fn metrics_path(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join(METRICS_CSV)
    } else {
        p.to_path_buf()
    }
}

/// `T{depth}-HRTMADDPG`, `RMADDPG` or `MADDPG`, the tables' row names.
pub fn run_label(cfg: &ExperimentConfig) -> String {
    match cfg.algorithm() {
        Algorithm::Hrtmaddpg => format!("T{}-HRTMADDPG", cfg.resolved_depth()),
        a => a.as_str().to_uppercase(),
    }
}

fn default_label(input: &Path) -> String {
    let dir = if input.is_dir() { Some(input) } else { input.parent() };
    if let Some(cfg) = dir.and_then(|d| load_run_config(d).ok()) {
        return format!("{} seed {}", run_label(&cfg), cfg.seed);
    }
    input.file_stem().map_or_else(|| input.display().to_string(), |s| s.to_string_lossy().into_owned())
}

pub fn cmd_plot(a: &PlotArgs, out: &mut dyn Write) -> CmdResult {
    if a.smooth == 0 {
        return Err(Failure::usage("--smooth must be at least 1"));
    }
    if !a.labels.is_empty() && a.labels.len() != a.inputs.len() {
        return Err(Failure::usage(format!("{} labels for {} inputs", a.labels.len(), a.inputs.len())));
    }
    let mut series = Vec::with_capacity(a.inputs.len());
    for (i, input) in a.inputs.iter().enumerate() {
        let path = metrics_path(input);
        let table = MetricsTable::load(&path).map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))?;
        let episodes = table.column("episode").ok_or_else(|| Failure::runtime(format!("{}: no episode column", path.display())))?;
        let team = table.column("team_mean").ok_or_else(|| Failure::runtime(format!("{}: no team_mean column", path.display())))?;
        let label = a.labels.get(i).cloned().unwrap_or_else(|| default_label(input));
        series.push(svg::Series { label, points: episodes.into_iter().zip(trailing_mean(&team, a.smooth)).collect() });
    }
    let doc = svg::render(&series, &format!("trailing mean over {} episodes", a.smooth));
    std::fs::write(&a.out, doc).map_err(|e| Failure::runtime(format!("cannot write {}: {e}", a.out.display())))?;
    let _ = writeln!(out, "wrote {}", a.out.display());
    Ok(())
}

/// One row of the comparison tables.
#[derive(Clone, Debug, PartialEq)]
pub struct CompareRow {
    pub label: String,
    pub train_final: Vec<f64>,
    pub test: Option<Vec<f64>>,
}

/// Scenario and per-run rows for `runs`; errors on mixed scenarios.
pub fn compare_rows(runs: &[PathBuf], smooth: usize) -> std::result::Result<(Scenario, Vec<CompareRow>), Failure> {
    let mut scenario = None;
    let mut rows = Vec::new();
    for dir in runs {
        let cfg = load_run_config(dir).map_err(|e| Failure::runtime(format!("{}: {e}", dir.display())))?;
        match scenario {
            None => scenario = Some(cfg.scenario),
            Some(s) if s != cfg.scenario => {
                return Err(Failure::runtime(format!(
                    "mixed scenarios: {} is {} but earlier runs are {}",
                    dir.display(),
                    cfg.scenario,
                    s
                )))
            }
            _ => {}
        }
        let table = MetricsTable::load(&dir.join(METRICS_CSV)).map_err(|e| Failure::runtime(format!("{}: {e}", dir.display())))?;
        if table.rows.is_empty() {
            return Err(Failure::runtime(format!("{}: no training episodes", dir.display())));
        }
        let tail = table.rows.len().saturating_sub(smooth.max(1));
        let train_final = table
            .agent_columns()
            .iter()
            .map(|c| mean(&table.column(c).expect("listed column")[tail..]))
            .collect();
        let eval_path = dir.join(EVAL_JSON);
        let test = if eval_path.exists() {
            let text = std::fs::read_to_string(&eval_path).map_err(|e| Failure::runtime(format!("{}: {e}", eval_path.display())))?;
            Some(EvalReport::parse_json(&text)?.mean)
        } else {
            None
        };
        rows.push(CompareRow { label: run_label(&cfg), train_final, test });
    }
    Ok((scenario.expect("at least one run"), rows))
}

fn text_table(title: &str, rows: &[(String, Vec<f64>)]) -> String {
    let mut s = String::new();
    let n = rows.iter().map(|r| r.1.len()).max().unwrap_or(0);
    let width = rows.iter().map(|r| r.0.len()).max().unwrap_or(0).max(9);
    let _ = writeln!(s, "{title}");
    let _ = write!(s, "{:<width$}", "algorithm");
    for i in 0..n {
        let _ = write!(s, " {:>24}", format!("agent{}", i + 1));
    }
    s.push('\n');
    for (label, vals) in rows {
        let _ = write!(s, "{label:<width$}");
        for v in vals {
            let _ = write!(s, " {:>24}", fmt_f64(*v));
        }
        s.push('\n');
    }
    s
}

pub fn cmd_compare(a: &CompareArgs, out: &mut dyn Write) -> CmdResult {
    if a.runs.len() < 2 {
        return Err(Failure::usage("compare needs at least two run directories"));
    }
    let (scenario, rows) = compare_rows(&a.runs, a.smooth)?;
    let train: Vec<(String, Vec<f64>)> = rows.iter().map(|r| (r.label.clone(), r.train_final.clone())).collect();
    let test: Vec<(String, Vec<f64>)> = rows.iter().filter_map(|r| r.test.clone().map(|t| (r.label.clone(), t))).collect();
    let text = match a.format.as_deref() {
        None => {
            let mut s = format!("{}\n\n", scenario.title());
            s += &text_table(&format!("train-final (mean of last {} training episodes)", a.smooth), &train);
            if !test.is_empty() {
                s += "\n";
                s += &text_table("test (noise-free evaluation)", &test);
            }
            s
        }
        Some("csv") => {
            let mut s = String::from("scenario,phase,algorithm,agent,mean_return\n");
            for (phase, tab) in [("train-final", &train), ("test", &test)] {
                for (label, vals) in tab {
                    for (i, v) in vals.iter().enumerate() {
                        let _ = writeln!(s, "{},{phase},{label},agent{},{}", scenario, i + 1, fmt_f64(*v));
                    }
                }
            }
            s
        }
        Some("json") => {
            let block = |tab: &[(String, Vec<f64>)]| {
                tab.iter()
                    .map(|(l, v)| format!("{{\"algorithm\": \"{l}\", \"mean\": [{}]}}", v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(", ")))
                    .collect::<Vec<_>>()
                    .join(", ")
            };
            format!(
                "{{\"scenario\": \"{}\", \"title\": \"{}\", \"train_final\": [{}], \"test\": [{}]}}\n",
                scenario,
                scenario.title(),
                block(&train),
                block(&test)
            )
        }
        Some(other) => return Err(Failure::usage(format!("unknown format `{other}` (csv or json)"))),
    };
    let _ = write!(out, "{text}");
    Ok(())
}

