//! Command-line configuration.

use std::path::PathBuf;

use chrono::NaiveDate;
use clap::Args;
use epiassim_core::assimilation::{AssimilationOptions, PredictiveNoise, WindowConfig};
use epiassim_core::epimodel::{FixedParams, InitialConditions};
use epiassim_core::observation::ObsConfig;
use epiassim_core::odeint::DEFAULT_STEP;
use epiassim_core::sampler::{McmcSettings, TWalkConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::simulate::{ChangePoint, SyntheticSpec};

pub const DEFAULT_RUN_SEED: u64 = 1;

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct RunConfig {
    /// Input series, `date,cases,deaths` CSV.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "unnamed")]
    pub locality: String,
    /// Census population N.
    #[arg(long)]
    pub population: f64,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,

    /// First learning-period day, as a 0-based series index.
    #[arg(long, default_value_t = 0)]
    pub t0: usize,
    #[arg(long, default_value_t = 28)]
    pub learning: usize,
    #[arg(long, default_value_t = 7)]
    pub delay: usize,
    #[arg(long, default_value_t = 14)]
    pub horizon: usize,
    #[arg(long, default_value_t = 7)]
    pub advance: usize,
    #[arg(long)]
    pub max_windows: Option<usize>,

    #[arg(long, default_value_t = 1.0)]
    pub p_report: f64,
    /// Quadratic over-dispersion of the count model.
    #[arg(long, default_value_t = 0.01)]
    pub nb_theta: f64,
    /// Linear over-dispersion of the count model.
    #[arg(long, default_value_t = 2.0)]
    pub nb_omega: f64,

    #[arg(long, default_value_t = 0.8)]
    pub f: f64,
    #[arg(long, default_value_t = 1.0)]
    pub k_obs: f64,
    #[arg(long, default_value_t = 1.0 / 5.0)]
    pub sigma1: f64,
    #[arg(long, default_value_t = 1.0 / 14.0)]
    pub sigma2: f64,
    #[arg(long, default_value_t = 1.0 / 7.0)]
    pub gamma: f64,

    #[arg(long, default_value_t = 150_000)]
    pub iters: usize,
    #[arg(long, default_value_t = 50_000)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 100)]
    pub thin: usize,
    #[arg(long, default_value_t = DEFAULT_RUN_SEED)]
    pub seed: u64,

    /// Standard-deviation inflation for the contact-rate and population priors.
    #[arg(long, default_value_t = 1.5)]
    pub inflation: f64,
    /// RK4 step in days; its reciprocal must be an integer.
    #[arg(long, default_value_t = DEFAULT_STEP)]
    pub step: f64,
    /// Report forecast bands of model means, without count noise.
    #[arg(long)]
    pub no_noise: bool,
}

impl RunConfig {
    pub fn window_config(&self) -> WindowConfig {
        WindowConfig {
            t0: self.t0,
            learning: self.learning,
            delay: self.delay,
            horizon: self.horizon,
            advance: self.advance,
            max_windows: self.max_windows,
        }
    }

    pub fn options(&self) -> AssimilationOptions {
        AssimilationOptions {
            fixed: FixedParams {
                f: self.f,
                k_obs: self.k_obs,
                sigma1: self.sigma1,
                sigma2: self.sigma2,
                gamma: self.gamma,
                population: self.population,
            },
            obs: ObsConfig {
                p_report: self.p_report,
                theta_over: self.nb_theta,
                omega_over: self.nb_omega,
            },
            mcmc: McmcSettings {
                iters: self.iters,
                burn_in: self.burn_in,
                thin: self.thin,
                twalk: TWalkConfig::default(),
            },
            step: self.step,
            inflation: self.inflation,
            seed: self.seed,
            noise: if self.no_noise {
                PredictiveNoise::None
            } else {
                PredictiveNoise::NegativeBinomial
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.data.is_file() {
            return Err(CliError::Config(format!("data file {} not found", self.data.display())));
        }
        if self.out.exists() && !self.out.is_dir() {
            return Err(CliError::Config(format!("{} exists and is not a directory", self.out.display())));
        }
        self.window_config().validate()?;
        self.options().validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Truth sidecar path; defaults to the output path with a `.truth.json` suffix.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, default_value_t = 60)]
    pub days: usize,
    #[arg(long, default_value = "2020-03-01")]
    pub start_date: NaiveDate,
    #[arg(long, default_value_t = 1e6)]
    pub population: f64,
    #[arg(long, default_value_t = 0.8)]
    pub beta: f64,
    #[arg(long, default_value_t = 0.3)]
    pub omega: f64,
    #[arg(long, default_value_t = 0.05)]
    pub g: f64,
    #[arg(long, default_value_t = 0.8)]
    pub f: f64,
    #[arg(long, default_value_t = 10.0)]
    pub e0: f64,
    #[arg(long, default_value_t = 10.0)]
    pub o0: f64,
    #[arg(long, default_value_t = 10.0)]
    pub u0: f64,
    #[arg(long, default_value_t = 1.0)]
    pub r0: f64,
    #[arg(long, default_value_t = 1.0)]
    pub d0: f64,
    /// Contact-rate change as `DAY:BETA`; repeatable.
    #[arg(long = "change", value_parser = parse_change_point)]
    pub change_points: Vec<ChangePoint>,
    #[arg(long, default_value_t = 1.0)]
    pub p_report: f64,
    #[arg(long, default_value_t = 0.01)]
    pub nb_theta: f64,
    #[arg(long, default_value_t = 2.0)]
    pub nb_omega: f64,
    /// Emit rounded means instead of negative-binomial draws.
    #[arg(long)]
    pub no_noise: bool,
}

impl SimulateArgs {
    pub fn spec(&self) -> SyntheticSpec {
        let fixed = FixedParams {
            f: self.f,
            ..FixedParams::new(self.population)
        };
        SyntheticSpec {
            params: fixed.with_inferred(self.beta, self.omega, self.g),
            initial: InitialConditions {
                e0: self.e0,
                o0: self.o0,
                u0: self.u0,
                r0: self.r0,
                d0: self.d0,
            },
            change_points: self.change_points.clone(),
            days: self.days,
            start_date: self.start_date,
            obs: ObsConfig {
                p_report: self.p_report,
                theta_over: self.nb_theta,
                omega_over: self.nb_omega,
            },
            noise: !self.no_noise,
        }
    }

    pub fn truth_path(&self) -> PathBuf {
        self.truth.clone().unwrap_or_else(|| {
            let mut s = self.out.clone().into_os_string();
            s.push(".truth.json");
            s.into()
        })
    }
}

pub fn parse_change_point(s: &str) -> std::result::Result<ChangePoint, String> {
    let (day, beta) = s.split_once(':').ok_or_else(|| format!("expected DAY:BETA, got {s:?}"))?;
    Ok(ChangePoint {
        day: day.trim().parse().map_err(|e| format!("bad day {day:?}: {e}"))?,
        beta: beta.trim().parse().map_err(|e| format!("bad beta {beta:?}: {e}"))?,
    })
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct ScoreArgs {
    /// Directory holding `forecast_<k>.csv` files.
    #[arg(long)]
    pub forecasts: PathBuf,
    /// Held-out series to score against.
    #[arg(long)]
    pub data: PathBuf,
    /// Also write the report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
}
