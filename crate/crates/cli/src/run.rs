use std::fs;
use std::path::PathBuf;

use epiassim_core::assimilation::run_sequential;

use crate::artifacts::{
    forecast_path, plot_path, posterior_path, write_forecast_csv, write_json, write_posterior_csv, Observable, RunSummary,
    WindowSummary,
};
use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::io::load_series;
use crate::plot::forecast_svg;

#[derive(Debug)]
pub struct RunOutcome {
    pub summary: RunSummary,
    /// Window artifacts in write order; `summary.json` comes last.
    pub files: Vec<PathBuf>,
    pub failure: Option<CliError>,
}

impl RunOutcome {
    pub fn completed(&self) -> bool {
        self.failure.is_none()
    }
}

/// Runs every window and writes artifacts for those that completed. Errors
/// raised before any window starts are returned directly.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let series = load_series(&cfg.data)?;
    fs::create_dir_all(&cfg.out).map_err(|e| CliError::io(&cfg.out, e))?;
    let seq = run_sequential(&series, &cfg.window_config(), &cfg.options())?;

    let mut files = Vec::new();
    for w in &seq.windows {
        let k = w.bounds.window;
        let fp = forecast_path(&cfg.out, k);
        write_forecast_csv(&fp, w, series.start_date)?;
        files.push(fp);
        let pp = posterior_path(&cfg.out, k);
        write_posterior_csv(&pp, w)?;
        files.push(pp);
        for obs in Observable::ALL {
            let path = plot_path(&cfg.out, k, obs);
            fs::write(&path, forecast_svg(&series, w, obs, &cfg.locality)).map_err(|e| CliError::io(&path, e))?;
            files.push(path);
        }
    }

    let failure = seq.failure.map(CliError::Core);
    let summary = RunSummary {
        locality: cfg.locality.clone(),
        seed: cfg.seed,
        series_start: series.start_date,
        series_days: series.len(),
        windows_planned: seq.planned,
        completed: failure.is_none(),
        windows: seq.windows.iter().map(|w| WindowSummary::new(w, series.start_date)).collect(),
        error: failure.as_ref().map(|e| e.to_json()["error"].clone()),
        config: cfg.clone(),
    };
    let sp = cfg.out.join("summary.json");
    write_json(&sp, &summary)?;
    files.push(sp);
    Ok(RunOutcome {
        summary,
        files,
        failure,
    })
}
