//! Forecast scoring against held-out counts.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use epiassim_core::observation::EpidemicSeries;
use serde::{Deserialize, Serialize};

use crate::artifacts::{Observable, FORECAST_HEADER};
use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForecastRow {
    pub date: NaiveDate,
    pub observable: Observable,
    /// q05, q25, q50, q75, q95.
    pub q: [f64; 5],
}

pub fn read_forecast_csv(path: &Path) -> Result<Vec<ForecastRow>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| CliError::io(path, e.into()))?;
    let perr = |line: u64, message: String| CliError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let header = rdr.headers().map_err(|e| perr(1, e.to_string()))?;
    if header.iter().ne(FORECAST_HEADER) {
        return Err(perr(1, format!("expected header `{}`", FORECAST_HEADER.join(","))));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| perr(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let date = NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d").map_err(|e| perr(line, format!("bad date: {e}")))?;
        let observable = Observable::parse(&rec[1]).ok_or_else(|| perr(line, format!("unknown observable {:?}", &rec[1])))?;
        let mut q = [0.0; 5];
        for (i, v) in q.iter_mut().enumerate() {
            *v = rec[i + 2].parse().map_err(|_| perr(line, format!("bad quantile {:?}", &rec[i + 2])))?;
        }
        rows.push(ForecastRow { date, observable, q });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreStats {
    /// Scored (date, observable) pairs.
    pub n: usize,
    pub coverage50: f64,
    pub coverage90: f64,
    pub mae_median: f64,
    pub mean_width90: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Accumulator {
    n: usize,
    in50: usize,
    in90: usize,
    abs_err: f64,
    width: f64,
}

impl Accumulator {
    fn add(&mut self, q: &[f64; 5], y: f64) {
        self.n += 1;
        self.in50 += (q[1] <= y && y <= q[3]) as usize;
        self.in90 += (q[0] <= y && y <= q[4]) as usize;
        self.abs_err += (q[2] - y).abs();
        self.width += q[4] - q[0];
    }

    fn merge(&mut self, o: &Accumulator) {
        self.n += o.n;
        self.in50 += o.in50;
        self.in90 += o.in90;
        self.abs_err += o.abs_err;
        self.width += o.width;
    }

    fn stats(&self) -> ScoreStats {
        let n = self.n as f64;
        ScoreStats {
            n: self.n,
            coverage50: self.in50 as f64 / n,
            coverage90: self.in90 as f64 / n,
            mae_median: self.abs_err / n,
            mean_width90: self.width / n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowScore {
    pub window: usize,
    pub stats: ScoreStats,
    pub by_observable: BTreeMap<Observable, ScoreStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub windows: Vec<WindowScore>,
    /// Windows whose forecast dates fall outside the held-out series.
    pub unscored_windows: Vec<usize>,
    pub aggregate: ScoreStats,
}

/// Scores each window's rows against `series`, skipping dates the series lacks.
pub fn score_forecasts(forecasts: &[(usize, Vec<ForecastRow>)], series: &EpidemicSeries) -> Result<ScoreReport> {
    let mut total = Accumulator::default();
    let mut windows = Vec::new();
    let mut unscored = Vec::new();
    for (k, rows) in forecasts {
        let mut acc = Accumulator::default();
        let mut per: BTreeMap<Observable, Accumulator> = BTreeMap::new();
        for r in rows {
            let offset = (r.date - series.start_date).num_days();
            if offset < 0 || offset as usize >= series.len() {
                continue;
            }
            let y = r.observable.counts(series)[offset as usize] as f64;
            acc.add(&r.q, y);
            per.entry(r.observable).or_default().add(&r.q, y);
        }
        if acc.n == 0 {
            unscored.push(*k);
            continue;
        }
        total.merge(&acc);
        windows.push(WindowScore {
            window: *k,
            stats: acc.stats(),
            by_observable: per.into_iter().map(|(o, a)| (o, a.stats())).collect(),
        });
    }
    if total.n == 0 {
        return Err(CliError::Score("no forecast date overlaps the held-out series".into()));
    }
    Ok(ScoreReport {
        windows,
        unscored_windows: unscored,
        aggregate: total.stats(),
    })
}

/// `forecast_<k>.csv` files in `dir`, ordered by `k`.
pub fn forecast_files(dir: &Path) -> Result<Vec<(usize, PathBuf)>> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut found = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| CliError::io(dir, e))?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        if let Some(k) = name.strip_prefix("forecast_").and_then(|r| r.strip_suffix(".csv")).and_then(|k| k.parse().ok()) {
            found.push((k, path));
        }
    }
    found.sort();
    if found.is_empty() {
        return Err(CliError::Score(format!("no forecast_<k>.csv files in {}", dir.display())));
    }
    Ok(found)
}

pub fn score_dir(dir: &Path, series: &EpidemicSeries) -> Result<ScoreReport> {
    let forecasts = forecast_files(dir)?
        .into_iter()
        .map(|(k, p)| Ok((k, read_forecast_csv(&p)?)))
        .collect::<Result<Vec<_>>>()?;
    score_forecasts(&forecasts, series)
}
