use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::run::Summary;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResultFormat {
    /// Summary with embedded spec and metadata.
    Json,
    /// Per-trial `trial,metric,value` table.
    Csv,
}

impl ResultFormat {
    /// `.csv` means CSV; anything else JSON.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => ResultFormat::Csv,
            _ => ResultFormat::Json,
        }
    }
}

pub const TRIAL_CSV_HEADER: &str = "trial,metric,value";

/// Per-trial table. Values use the shortest decimal text that parses back
/// to the same `f64`.
pub fn format_trial_csv(trials: &[BTreeMap<String, f64>]) -> String {
    let mut out = String::from(TRIAL_CSV_HEADER);
    out.push('\n');
    for (i, metrics) in trials.iter().enumerate() {
        for (name, value) in metrics {
            writeln!(out, "{i},{name},{value:?}").expect("writing to a String");
        }
    }
    out
}

pub fn parse_trial_csv(text: &str) -> Result<Vec<BTreeMap<String, f64>>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == TRIAL_CSV_HEADER => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header {TRIAL_CSV_HEADER:?}"),
            })
        }
    }
    let mut trials: Vec<BTreeMap<String, f64>> = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| Error::Parse { line: i + 1, message };
        let mut parts = line.splitn(3, ',');
        let (Some(t), Some(name), Some(v)) = (parts.next(), parts.next(), parts.next()) else {
            return Err(bad("expected three fields".into()));
        };
        let t: usize = t.parse().map_err(|e| bad(format!("trial index: {e}")))?;
        let v: f64 = v.parse().map_err(|e| bad(format!("value: {e}")))?;
        if t >= trials.len() {
            trials.resize_with(t + 1, BTreeMap::new);
        }
        trials[t].insert(name.to_string(), v);
    }
    Ok(trials)
}

pub fn write_results(summary: &Summary, path: &Path, format: ResultFormat) -> Result<()> {
    let text = match format {
        ResultFormat::Json => serde_json::to_string_pretty(summary).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })?,
        ResultFormat::Csv => format_trial_csv(&summary.trials),
    };
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_summary(path: &Path) -> Result<Summary> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })
}

pub fn read_trial_csv(path: &Path) -> Result<Vec<BTreeMap<String, f64>>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trial_csv(&text)
}
