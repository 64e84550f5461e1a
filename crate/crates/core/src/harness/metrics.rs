//! Per-episode return series and their CSV/JSON forms.
//!
//! Both formats share one column order:
//! `episode, agent0 … agent{n−1}, team_mean, moving_mean`. Episodes are
//! numbered from 1, `team_mean` averages the agents' returns and
//! `moving_mean` is the trailing mean of `team_mean` over the last
//! `smoothing` episodes. Floats carry 17 significant digits.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::envs::Scenario;
use crate::marl::Algorithm;
use crate::{Error, Result};

/// Trailing-mean window of the `moving_mean` column.
pub const MOVING_WINDOW: usize = 100;

/// Seventeen significant digits, round-trips every `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetricsFormat {
    Csv,
    Json,
}

impl std::str::FromStr for MetricsFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(MetricsFormat::Csv),
            "json" => Ok(MetricsFormat::Json),
            other => Err(Error::Config(format!("unknown format `{other}` (csv or json)"))),
        }
    }
}

/// Training record of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunMetrics {
    pub scenario: Scenario,
    pub algorithm: Algorithm,
    pub depth: usize,
    pub seed: u64,
    pub num_agents: usize,
    /// `[episode][agent]` undiscounted returns.
    pub returns: Vec<Vec<f64>>,
    pub team_mean: Vec<f64>,
    pub moving_mean: Vec<f64>,
    pub wall_clock_secs: f64,
    pub config_text: String,
}

/// Trailing mean over the last `window` entries ending at each index.
pub fn trailing_mean(xs: &[f64], window: usize) -> Vec<f64> {
    let w = window.max(1);
    (0..xs.len())
        .map(|i| {
            let lo = (i + 1).saturating_sub(w);
            xs[lo..=i].iter().sum::<f64>() / (i + 1 - lo) as f64
        })
        .collect()
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

impl RunMetrics {
    pub fn new(scenario: Scenario, algorithm: Algorithm, depth: usize, seed: u64, num_agents: usize, config_text: String) -> Self {
        Self {
            scenario,
            algorithm,
            depth,
            seed,
            num_agents,
            returns: Vec::new(),
            team_mean: Vec::new(),
            moving_mean: Vec::new(),
            wall_clock_secs: 0.0,
            config_text,
        }
    }

    pub fn episodes(&self) -> usize {
        self.returns.len()
    }

    pub fn push(&mut self, returns: Vec<f64>) {
        self.team_mean.push(mean(&returns));
        let last = trailing_mean(&self.team_mean[self.team_mean.len().saturating_sub(MOVING_WINDOW)..], MOVING_WINDOW);
        self.moving_mean.push(*last.last().expect("non-empty"));
        self.returns.push(returns);
    }

    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["episode".to_string()];
        h.extend((0..self.num_agents).map(|i| format!("agent{i}")));
        h.push("team_mean".into());
        h.push("moving_mean".into());
        h
    }

    fn row_values(&self, e: usize) -> Vec<String> {
        let mut r = vec![(e + 1).to_string()];
        r.extend(self.returns[e].iter().map(|&v| fmt_f64(v)));
        r.push(fmt_f64(self.team_mean[e]));
        r.push(fmt_f64(self.moving_mean[e]));
        r
    }

    pub fn csv_row(&self, e: usize) -> String {
        self.row_values(e).join(",")
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header().join(",");
        s.push('\n');
        for e in 0..self.episodes() {
            s.push_str(&self.csv_row(e));
            s.push('\n');
        }
        s
    }

    pub fn to_json(&self) -> String {
        let mut s = String::new();
        let cols: Vec<String> = self.header().iter().map(|c| format!("\"{c}\"")).collect();
        let _ = write!(
            s,
            "{{\n  \"scenario\": \"{}\",\n  \"algorithm\": \"{}\",\n  \"depth\": {},\n  \"seed\": {},\n  \"num_agents\": {},\n  \"smoothing\": {},\n  \"columns\": [{}],\n  \"rows\": [",
            self.scenario,
            self.algorithm,
            self.depth,
            self.seed,
            self.num_agents,
            MOVING_WINDOW,
            cols.join(", ")
        );
        for e in 0..self.episodes() {
            let sep = if e == 0 { "\n" } else { ",\n" };
            let _ = write!(s, "{sep}    [{}]", self.row_values(e).join(", "));
        }
        s.push_str(if self.episodes() == 0 { "]\n}\n" } else { "\n  ]\n}\n" });
        s
    }
}

/// Writes `m` to `path` in the requested format.
pub fn export_metrics(m: &RunMetrics, path: &Path, format: MetricsFormat) -> Result<()> {
    let text = match format {
        MetricsFormat::Csv => m.to_csv(),
        MetricsFormat::Json => m.to_json(),
    };
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Appends CSV rows as episodes finish, flushing each one.
pub struct MetricsWriter {
    out: BufWriter<File>,
    path: std::path::PathBuf,
}

impl MetricsWriter {
    pub fn create(path: &Path, header: &[String]) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = Self { out: BufWriter::new(file), path: path.to_path_buf() };
        w.line(&header.join(","))?;
        Ok(w)
    }

    pub fn line(&mut self, line: &str) -> Result<()> {
        writeln!(self.out, "{line}").and_then(|_| self.out.flush()).map_err(|e| Error::io(&self.path, e))
    }
}

/// A parsed metrics or evaluation table: header plus numeric rows.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl MetricsTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    /// Names of the `agentN` columns, in order.
    pub fn agent_columns(&self) -> Vec<String> {
        self.columns.iter().filter(|c| c.starts_with("agent")).cloned().collect()
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty metrics file".into()))?;
        let columns: Vec<String> = header.split(',').map(|c| c.trim().to_string()).collect();
        let mut rows = Vec::new();
        for (n, line) in lines.enumerate() {
            let row = line
                .split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|_| Error::Parse(format!("row {}: bad number `{v}`", n + 1))))
                .collect::<Result<Vec<_>>>()?;
            if row.len() != columns.len() {
                return Err(Error::Parse(format!("row {} has {} fields, header has {}", n + 1, row.len(), columns.len())));
            }
            rows.push(row);
        }
        Ok(Self { columns, rows })
    }

    pub fn parse_json(text: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let columns = v["columns"]
            .as_array()
            .ok_or_else(|| Error::Parse("missing `columns`".into()))?
            .iter()
            .map(|c| c.as_str().map(str::to_string).ok_or_else(|| Error::Parse("non-string column".into())))
            .collect::<Result<Vec<_>>>()?;
        let rows = v["rows"]
            .as_array()
            .ok_or_else(|| Error::Parse("missing `rows`".into()))?
            .iter()
            .map(|r| {
                let r = r.as_array().ok_or_else(|| Error::Parse("row is not an array".into()))?;
                r.iter().map(|x| x.as_f64().ok_or_else(|| Error::Parse("non-numeric cell".into()))).collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { columns, rows })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        if path.extension().is_some_and(|e| e == "json") {
            Self::parse_json(&text)
        } else {
            Self::parse_csv(&text)
        }
    }
}
