//! Synthetic series from known parameters, for verification runs.

use chrono::NaiveDate;
use epiassim_core::epimodel::{assemble_initial_state, EpiParams, InitialConditions};
use epiassim_core::observation::{expected_counts, nb_sample, EpidemicSeries, ObsConfig};
use epiassim_core::odeint::{integrate_with, DEFAULT_STEP};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// From series day `day` onward the contact rate is `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChangePoint {
    pub day: usize,
    pub beta: f64,
}

/// Generating parameters of a synthetic series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub params: EpiParams,
    pub initial: InitialConditions,
    #[serde(default)]
    pub change_points: Vec<ChangePoint>,
    pub days: usize,
    pub start_date: NaiveDate,
    pub obs: ObsConfig,
    /// When false, counts are the rounded observation means.
    pub noise: bool,
}

/// Truth sidecar written next to a synthetic series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    #[serde(flatten)]
    pub spec: SyntheticSpec,
    pub seed: u64,
    /// Observation means `p * mu_c` per day.
    pub expected_cases: Vec<f64>,
    /// Observation means `p * mu_D` per day.
    pub expected_deaths: Vec<f64>,
    /// Aggregate `(E, O, U, R, D)` at each day boundary, `days + 1` rows.
    pub states: Vec<[f64; 5]>,
}

impl TruthRecord {
    /// Contact rate in force on series day `day`.
    pub fn beta_on(&self, day: usize) -> f64 {
        beta_on(&self.spec, day)
    }
}

fn beta_on(spec: &SyntheticSpec, day: usize) -> f64 {
    spec.change_points
        .iter()
        .filter(|c| c.day <= day)
        .max_by_key(|c| c.day)
        .map_or(spec.params.beta, |c| c.beta)
}

pub fn simulate_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<(EpidemicSeries, TruthRecord)> {
    spec.params.validate()?;
    spec.obs.validate()?;
    if spec.days == 0 {
        return Err(CliError::Config("days must be >= 1".into()));
    }
    let segments: Vec<EpiParams> = (0..spec.days)
        .map(|d| EpiParams {
            beta: beta_on(spec, d),
            ..spec.params
        })
        .collect();
    for p in &segments {
        p.validate()?;
    }
    let x0 = assemble_initial_state(&spec.initial, &spec.params)?;
    let traj = integrate_with(&x0, |d| &segments[d], 0.0, spec.days as f64, DEFAULT_STEP)?;
    let (mc, md) = expected_counts(&traj, &spec.params);
    let p = spec.obs.p_report;
    let expected_cases: Vec<f64> = mc.iter().map(|m| p * m).collect();
    let expected_deaths: Vec<f64> = md.iter().map(|m| p * m).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = Vec::with_capacity(spec.days);
    let mut deaths = Vec::with_capacity(spec.days);
    for d in 0..spec.days {
        if spec.noise {
            cases.push(nb_sample(mc[d], &spec.obs, &mut rng));
            deaths.push(nb_sample(md[d], &spec.obs, &mut rng));
        } else {
            cases.push(expected_cases[d].round() as u64);
            deaths.push(expected_deaths[d].round() as u64);
        }
    }
    let series = EpidemicSeries::new(spec.start_date, cases, deaths)?;
    let states = traj
        .states()
        .iter()
        .map(|x| [x.exposed(), x.observed(), x.unobserved(), x.r, x.d])
        .collect();
    let truth = TruthRecord {
        spec: spec.clone(),
        seed,
        expected_cases,
        expected_deaths,
        states,
    };
    Ok((series, truth))
}
