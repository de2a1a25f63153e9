//! Per-window output files and the run summary.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use epiassim_core::assimilation::{ForecastDay, ParamSummary, Quantiles, WindowOutcome};
use epiassim_core::epimodel::{InferenceVector, INFERENCE_DIM};
use epiassim_core::observation::EpidemicSeries;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

pub const FORECAST_HEADER: [&str; 7] = ["date", "observable", "q05", "q25", "q50", "q75", "q95"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Observable {
    Cases,
    Deaths,
}

impl Observable {
    pub const ALL: [Observable; 2] = [Observable::Cases, Observable::Deaths];

    pub fn as_str(self) -> &'static str {
        match self {
            Observable::Cases => "cases",
            Observable::Deaths => "deaths",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|o| o.as_str() == s)
    }

    pub fn quantiles(self, day: &ForecastDay) -> Quantiles {
        match self {
            Observable::Cases => day.cases,
            Observable::Deaths => day.deaths,
        }
    }

    pub fn counts(self, series: &EpidemicSeries) -> &[u64] {
        match self {
            Observable::Cases => series.cases(),
            Observable::Deaths => series.deaths(),
        }
    }
}

pub fn forecast_path(dir: &Path, k: usize) -> PathBuf {
    dir.join(format!("forecast_{k}.csv"))
}

pub fn posterior_path(dir: &Path, k: usize) -> PathBuf {
    dir.join(format!("posterior_{k}.csv"))
}

pub fn plot_path(dir: &Path, k: usize, obs: Observable) -> PathBuf {
    dir.join(format!("forecast_{k}_{}.svg", obs.as_str()))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file))
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    CliError::io(path, e.into())
}

/// One row per forecast day and observable, cases first.
pub fn write_forecast_csv(path: &Path, window: &WindowOutcome, start_date: NaiveDate) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(FORECAST_HEADER).map_err(|e| csv_err(path, e))?;
    for day in &window.forecast.days {
        let date = start_date + chrono::Days::new(day.day as u64);
        for obs in Observable::ALL {
            let q = obs.quantiles(day);
            if !q.is_monotone() {
                return Err(CliError::NonMonotone {
                    date,
                    observable: obs.as_str().into(),
                });
            }
            let mut rec = vec![date.to_string(), obs.as_str().to_string()];
            rec.extend(q.as_array().iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(|e| csv_err(path, e))?;
        }
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Retained draws, one column per inferred coordinate.
pub fn write_posterior_csv(path: &Path, window: &WindowOutcome) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(InferenceVector::NAMES).map_err(|e| csv_err(path, e))?;
    for d in &window.posterior.draws {
        w.write_record(d.iter().map(|v| v.to_string())).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedSummary {
    pub name: String,
    #[serde(flatten)]
    pub summary: ParamSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedIat {
    pub name: String,
    /// `None` when the chain for this coordinate did not move.
    pub iat: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSummary {
    pub window: usize,
    pub learning_start: NaiveDate,
    /// Last day whose counts enter the likelihood.
    pub learning_last: NaiveDate,
    pub forecast_start: NaiveDate,
    pub forecast_last: NaiveDate,
    /// Posterior medians and 90% intervals, in the fixed coordinate order.
    pub parameters: Vec<NamedSummary>,
    pub acceptance_rate: f64,
    pub iat: Vec<NamedIat>,
    pub draws: usize,
    pub forecast_dropped_draws: usize,
    pub propagation_dropped_draws: usize,
}

impl WindowSummary {
    pub fn new(w: &WindowOutcome, start_date: NaiveDate) -> Self {
        let date = |day: usize| start_date + chrono::Days::new(day as u64);
        let b = w.bounds;
        Self {
            window: b.window,
            learning_start: date(b.learning.start),
            learning_last: date(b.learning.end - 1),
            forecast_start: date(b.forecast.start),
            forecast_last: date(b.forecast.end - 1),
            parameters: (0..INFERENCE_DIM)
                .map(|j| NamedSummary {
                    name: InferenceVector::NAMES[j].into(),
                    summary: ParamSummary::from_samples(&w.posterior.column(j)),
                })
                .collect(),
            acceptance_rate: w.posterior.acceptance_rate,
            iat: (0..INFERENCE_DIM)
                .map(|j| NamedIat {
                    name: InferenceVector::NAMES[j].into(),
                    iat: w.posterior.iat[j],
                })
                .collect(),
            draws: w.posterior.len(),
            forecast_dropped_draws: w.forecast.dropped_draws,
            propagation_dropped_draws: w.propagation_dropped,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub locality: String,
    pub seed: u64,
    pub series_start: NaiveDate,
    pub series_days: usize,
    pub windows_planned: usize,
    pub completed: bool,
    pub windows: Vec<WindowSummary>,
    pub error: Option<serde_json::Value>,
    pub config: RunConfig,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut file = File::create(path).map_err(|e| CliError::io(path, e))?;
    serde_json::to_writer_pretty(&mut file, value)?;
    file.write_all(b"\n").map_err(|e| CliError::io(path, e))
}
