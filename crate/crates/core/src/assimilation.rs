//! Sliding-window sequential assimilation.
//!
//! Window `k` starts at `t_k = t0 + n k` and splits into a learning period
//! `[t_k, t_k + L]`, a delay period `[t_k + L, t_k + L + D]` whose data are not
//! used, and a forecasting period `[t_k + L + D, t_k + L + D + F]`.
//!
//! The first window uses [`default_prior`]. Later windows build their prior
//! from the previous posterior: initial states are pushed forward `n` days
//! through the dynamics and moment-fitted, and `(beta, omega, g)` get a
//! variance-inflated moment fit centred on their previous marginals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::epimodel::{assemble_initial_state, FixedParams, InferenceVector, INFERENCE_DIM};
use crate::observation::{expected_counts, log_likelihood, nb_sample, EpidemicSeries, ObsConfig, Observations};
use crate::odeint::{integrate, DEFAULT_STEP};
use crate::priors::{default_prior, fit_moments, prior_log_density, Distribution1D, Family, PriorSpec};
use crate::sampler::{draw_start_pair, run_mcmc, LogDensity, McmcSettings, PosteriorSamples};
use crate::stats::{self, quantile_sorted};
use crate::{Error, Result};

/// Fraction of diverged forecast draws tolerated before giving up.
pub const MAX_DROPPED_FRACTION: f64 = 0.01;

/// Prior redraws allowed when looking for a finite MCMC start.
pub const MAX_INIT_ATTEMPTS: usize = 1000;

/// Window geometry, in days.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowConfig {
    /// Series day at which the first learning period starts.
    pub t0: usize,
    /// Learning-period length `L`.
    pub learning: usize,
    /// Delay-period length `D`.
    pub delay: usize,
    /// Forecast horizon `F`.
    pub horizon: usize,
    /// Window advance `n`.
    pub advance: usize,
    /// Optional cap on the number of windows.
    pub max_windows: Option<usize>,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            t0: 0,
            learning: 28,
            delay: 7,
            horizon: 14,
            advance: 7,
            max_windows: None,
        }
    }
}

impl WindowConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning == 0 || self.delay == 0 || self.horizon == 0 || self.advance == 0 {
            return Err(Error::InvalidConfig("learning, delay, horizon and advance must be >= 1".into()));
        }
        if self.advance > self.learning {
            return Err(Error::InvalidConfig(format!(
                "advance ({}) must not exceed the learning period ({})",
                self.advance, self.learning
            )));
        }
        Ok(())
    }

    /// Number of windows whose learning period fits inside `series_len` days.
    pub fn window_count(&self, series_len: usize) -> usize {
        let fits = if self.t0 + self.learning > series_len {
            0
        } else {
            (series_len - self.t0 - self.learning) / self.advance + 1
        };
        self.max_windows.map_or(fits, |m| fits.min(m))
    }
}

/// Closed day interval `[start, end]`; holds `end - start` daily observations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DayInterval {
    pub start: usize,
    pub end: usize,
}

impl DayInterval {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowBounds {
    pub window: usize,
    pub learning: DayInterval,
    pub delay: DayInterval,
    pub forecast: DayInterval,
}

impl WindowBounds {
    pub fn start(&self) -> usize {
        self.learning.start
    }

    /// The forecasting day `t_k + L + D`.
    pub fn forecast_day(&self) -> usize {
        self.forecast.start
    }
}

pub fn window_bounds(cfg: &WindowConfig, k: usize) -> WindowBounds {
    let tk = cfg.t0 + cfg.advance * k;
    let learn_end = tk + cfg.learning;
    let delay_end = learn_end + cfg.delay;
    WindowBounds {
        window: k,
        learning: DayInterval { start: tk, end: learn_end },
        delay: DayInterval { start: learn_end, end: delay_end },
        forecast: DayInterval {
            start: delay_end,
            end: delay_end + cfg.horizon,
        },
    }
}

/// Whether forecasts include observation noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictiveNoise {
    /// One negative-binomial draw per posterior draw and day.
    #[default]
    NegativeBinomial,
    /// Model means only.
    None,
}

/// Everything besides window geometry that a run needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssimilationOptions {
    pub fixed: FixedParams,
    pub obs: ObsConfig,
    pub mcmc: McmcSettings,
    /// RK4 step, in days.
    pub step: f64,
    /// Standard-deviation inflation `kappa` for the `(beta, omega, g)` prior.
    pub inflation: f64,
    pub seed: u64,
    pub noise: PredictiveNoise,
}

impl AssimilationOptions {
    pub fn new(population: f64, seed: u64) -> Self {
        Self {
            fixed: FixedParams::new(population),
            obs: ObsConfig::default(),
            mcmc: McmcSettings::default(),
            step: DEFAULT_STEP,
            inflation: 1.5,
            seed,
            noise: PredictiveNoise::NegativeBinomial,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.fixed.validate()?;
        self.obs.validate()?;
        self.mcmc.validate()?;
        crate::odeint::steps_per_day(self.step)?;
        if !(self.inflation.is_finite() && self.inflation >= 1.0) {
            return Err(Error::InvalidConfig(format!("inflation must be >= 1, got {}", self.inflation)));
        }
        Ok(())
    }

    fn window_rng(&self, window: usize, purpose: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(2 * window as u64 + purpose);
        rng
    }
}

/// Unnormalised log posterior for one learning period. Time runs from 0 at
/// the window start.
pub struct WindowPosterior<'a> {
    pub prior: &'a PriorSpec,
    pub data: Observations<'a>,
    pub fixed: FixedParams,
    pub obs: ObsConfig,
    pub step: f64,
}

impl LogDensity for WindowPosterior<'_> {
    fn dim(&self) -> usize {
        INFERENCE_DIM
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        let Some(v) = InferenceVector::from_slice(x) else {
            return f64::NEG_INFINITY;
        };
        let lp = prior_log_density(self.prior, &v, &self.fixed);
        if !lp.is_finite() || self.data.is_empty() {
            return lp;
        }
        let p = v.params(&self.fixed);
        let Ok(x0) = assemble_initial_state(&v.initial_conditions(), &p) else {
            return f64::NEG_INFINITY;
        };
        let Ok(traj) = integrate(&x0, &p, 0.0, self.data.len() as f64, self.step) else {
            return f64::NEG_INFINITY;
        };
        match log_likelihood(self.data, &traj, &p, &self.obs) {
            Ok(ll) if ll.is_finite() => lp + ll,
            _ => f64::NEG_INFINITY,
        }
    }
}

/// Samples the posterior for one learning period, starting the t-walk from two
/// prior draws with finite posterior density.
pub fn assimilate_window<R: Rng + ?Sized>(
    data: Observations<'_>,
    prior: &PriorSpec,
    opts: &AssimilationOptions,
    rng: &mut R,
) -> Result<PosteriorSamples> {
    if data.is_empty() {
        return Err(Error::InvalidConfig("learning period holds no observations".into()));
    }
    let target = WindowPosterior {
        prior,
        data,
        fixed: opts.fixed,
        obs: opts.obs,
        step: opts.step,
    };
    let (a, b) = draw_start_pair(&target, |r: &mut R| prior.sample(r).0.to_vec(), MAX_INIT_ATTEMPTS, rng)?;
    run_mcmc(&target, &a, &b, &opts.mcmc, rng)
}

/// Gamma priors for `(E0, O0, U0, R0, D0)` at `t_k + advance`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatePropagation {
    pub priors: [Distribution1D; 5],
    /// Sample means of the propagated aggregates.
    pub means: [f64; 5],
    /// Sample variances of the propagated aggregates.
    pub variances: [f64; 5],
    /// Draws discarded for divergence or an infeasible `S`.
    pub dropped: usize,
}

/// Pushes each posterior draw `advance` days through the dynamics and
/// moment-fits a Gamma to each aggregate compartment.
pub fn propagate_state_prior(post: &PosteriorSamples, advance: usize, opts: &AssimilationOptions) -> Result<StatePropagation> {
    let fixed = opts.fixed;
    let step = opts.step;
    let propagated: Vec<Option<[f64; 5]>> = post
        .draws
        .par_iter()
        .map(|d| {
            let v = InferenceVector::from_slice(d)?;
            let p = v.params(&fixed);
            if p.validate().is_err() {
                return None;
            }
            let x0 = assemble_initial_state(&v.initial_conditions(), &p).ok()?;
            let x = if advance == 0 {
                x0
            } else {
                *integrate(&x0, &p, 0.0, advance as f64, step).ok()?.final_state()
            };
            let agg = [x.exposed(), x.observed(), x.unobserved(), x.r, x.d];
            // the next window rebuilds S from omega * N, which must stay non-negative
            let infected = agg[0] + agg[1] + agg[2] + agg[3];
            (infected <= p.omega * p.population).then_some(agg)
        })
        .collect();
    let kept: Vec<[f64; 5]> = propagated.iter().flatten().copied().collect();
    let dropped = propagated.len() - kept.len();

    let mut priors = [Distribution1D::Gamma { shape: 1.0, scale: 1.0 }; 5];
    let mut means = [0.0; 5];
    let mut variances = [0.0; 5];
    for j in 0..5 {
        let col: Vec<f64> = kept.iter().map(|a| a[j]).collect();
        priors[j] = fit_moments(&col, Family::Gamma).map_err(|e| match e {
            Error::FitDegenerate(msg) => {
                Error::FitDegenerate(format!("{}: {msg}", InferenceVector::NAMES[j]))
            }
            other => other,
        })?;
        means[j] = stats::mean(&col);
        variances[j] = stats::variance(&col);
    }
    Ok(StatePropagation {
        priors,
        means,
        variances,
        dropped,
    })
}

/// Priors for `(beta, omega, g)` in the next window: the previous marginal
/// posterior's mean with its variance multiplied by `inflation^2`, matched to
/// LogNormal, Beta and Beta respectively.
pub fn autoregressive_theta_prior(post: &PosteriorSamples, inflation: f64) -> Result<[Distribution1D; 3]> {
    if !(inflation.is_finite() && inflation >= 1.0) {
        return Err(Error::InvalidConfig(format!("inflation must be >= 1, got {inflation}")));
    }
    let coords = [
        (InferenceVector::BETA, Family::LogNormal),
        (InferenceVector::OMEGA, Family::Beta),
        (InferenceVector::G, Family::Beta),
    ];
    let mut out = [Distribution1D::Gamma { shape: 1.0, scale: 1.0 }; 3];
    for (slot, (j, fam)) in out.iter_mut().zip(coords) {
        let col = post.column(j);
        if col.len() < 2 {
            return Err(Error::FitDegenerate("posterior holds fewer than two draws".into()));
        }
        let m = stats::mean(&col);
        let v = stats::variance(&col);
        *slot = Distribution1D::from_mean_var(fam, m, inflation * inflation * v)
            .map_err(|e| Error::FitDegenerate(format!("{}: {e}", InferenceVector::NAMES[j])))?;
    }
    Ok(out)
}

/// Prior for window `k + 1` assembled from window `k`'s posterior.
pub fn next_prior(post: &PosteriorSamples, advance: usize, opts: &AssimilationOptions) -> Result<(PriorSpec, StatePropagation)> {
    let states = propagate_state_prior(post, advance, opts)?;
    let theta = autoregressive_theta_prior(post, opts.inflation)?;
    let s = states.priors;
    let spec = PriorSpec::new([s[0], s[1], s[2], s[3], s[4], theta[0], theta[1], theta[2]])?;
    Ok((spec, states))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub q05: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub q95: f64,
}

impl Quantiles {
    pub const LEVELS: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

    pub fn from_sorted(sorted: &[f64]) -> Self {
        let q = |p| quantile_sorted(sorted, p);
        Self {
            q05: q(0.05),
            q25: q(0.25),
            q50: q(0.5),
            q75: q(0.75),
            q95: q(0.95),
        }
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.q05, self.q25, self.q50, self.q75, self.q95]
    }

    pub fn is_monotone(&self) -> bool {
        let a = self.as_array();
        a[0] >= 0.0 && a.windows(2).all(|w| w[0] <= w[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecastDay {
    /// Series day index of the observation interval `[day, day + 1]`.
    pub day: usize,
    pub cases: Quantiles,
    pub deaths: Quantiles,
}

/// Posterior median and 90% interval of one parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub median: f64,
    pub q05: f64,
    pub q95: f64,
}

impl ParamSummary {
    pub fn from_samples(xs: &[f64]) -> Self {
        let s = stats::sorted(xs);
        Self {
            median: quantile_sorted(&s, 0.5),
            q05: quantile_sorted(&s, 0.05),
            q95: quantile_sorted(&s, 0.95),
        }
    }

    pub fn covers(&self, x: f64) -> bool {
        self.q05 <= x && x <= self.q95
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastResult {
    pub window: usize,
    /// `t_k + L + D`, as a series day index.
    pub forecast_day: usize,
    pub days: Vec<ForecastDay>,
    pub beta: ParamSummary,
    pub omega: ParamSummary,
    pub g: ParamSummary,
    /// Posterior draws dropped because their trajectory diverged.
    pub dropped_draws: usize,
}

impl ForecastResult {
    pub fn is_monotone(&self) -> bool {
        self.days.iter().all(|d| d.cases.is_monotone() && d.deaths.is_monotone())
    }
}

/// Posterior-predictive quantiles for the forecasting period of window `k`.
pub fn forecast<R: Rng + ?Sized>(
    post: &PosteriorSamples,
    cfg: &WindowConfig,
    k: usize,
    opts: &AssimilationOptions,
    rng: &mut R,
) -> Result<ForecastResult> {
    let bounds = window_bounds(cfg, k);
    let offset = bounds.forecast.start - bounds.start();
    let span = bounds.forecast.end - bounds.start();
    let fixed = opts.fixed;
    let step = opts.step;

    let means: Vec<Option<(Vec<f64>, Vec<f64>)>> = post
        .draws
        .par_iter()
        .map(|d| {
            let v = InferenceVector::from_slice(d)?;
            let p = v.params(&fixed);
            let x0 = assemble_initial_state(&v.initial_conditions(), &p).ok()?;
            let traj = integrate(&x0, &p, 0.0, span as f64, step).ok()?;
            let (c, dth) = expected_counts(&traj, &p);
            Some((c[offset..].to_vec(), dth[offset..].to_vec()))
        })
        .collect();
    let total = means.len();
    let kept: Vec<&(Vec<f64>, Vec<f64>)> = means.iter().flatten().collect();
    let dropped = total - kept.len();
    if kept.is_empty() || dropped as f64 > MAX_DROPPED_FRACTION * total as f64 {
        return Err(Error::ForecastUnstable { dropped, total });
    }

    let horizon = cfg.horizon;
    let mut cases = vec![Vec::with_capacity(kept.len()); horizon];
    let mut deaths = vec![Vec::with_capacity(kept.len()); horizon];
    for (mc, md) in &kept {
        for h in 0..horizon {
            let (c, d) = match opts.noise {
                PredictiveNoise::NegativeBinomial => (
                    nb_sample(mc[h], &opts.obs, rng) as f64,
                    nb_sample(md[h], &opts.obs, rng) as f64,
                ),
                PredictiveNoise::None => (mc[h], md[h]),
            };
            cases[h].push(c);
            deaths[h].push(d);
        }
    }
    let days = (0..horizon)
        .map(|h| ForecastDay {
            day: bounds.forecast.start + h,
            cases: Quantiles::from_sorted(&stats::sorted(&cases[h])),
            deaths: Quantiles::from_sorted(&stats::sorted(&deaths[h])),
        })
        .collect();

    Ok(ForecastResult {
        window: k,
        forecast_day: bounds.forecast_day(),
        days,
        beta: ParamSummary::from_samples(&post.column(InferenceVector::BETA)),
        omega: ParamSummary::from_samples(&post.column(InferenceVector::OMEGA)),
        g: ParamSummary::from_samples(&post.column(InferenceVector::G)),
        dropped_draws: dropped,
    })
}

/// One completed window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowOutcome {
    pub bounds: WindowBounds,
    pub prior: PriorSpec,
    /// Draws discarded while building this window's prior.
    pub propagation_dropped: usize,
    pub posterior: PosteriorSamples,
    pub forecast: ForecastResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequentialRun {
    pub windows: Vec<WindowOutcome>,
    /// Set when a window failed; earlier windows are kept.
    pub failure: Option<Error>,
    /// Number of windows the series allows.
    pub planned: usize,
}

impl SequentialRun {
    pub fn completed(&self) -> bool {
        self.failure.is_none() && self.windows.len() == self.planned
    }
}

/// Runs every window that fits in `series`, feeding each posterior into the
/// next window's prior.
pub fn run_sequential(series: &EpidemicSeries, cfg: &WindowConfig, opts: &AssimilationOptions) -> Result<SequentialRun> {
    cfg.validate()?;
    opts.validate()?;
    let planned = cfg.window_count(series.len());
    if planned == 0 {
        return Err(Error::InvalidConfig(format!(
            "series of {} days is shorter than one learning period starting at day {}",
            series.len(),
            cfg.t0
        )));
    }

    let mut windows: Vec<WindowOutcome> = Vec::with_capacity(planned);
    let mut prior = default_prior();
    let mut propagation_dropped = 0;
    for k in 0..planned {
        let step = (|| -> Result<WindowOutcome> {
            if let Some(prev) = windows.last() {
                let (next, states) = next_prior(&prev.posterior, cfg.advance, opts)?;
                prior = next;
                propagation_dropped = states.dropped;
            }
            let bounds = window_bounds(cfg, k);
            let data = series.view(bounds.learning.start, bounds.learning.len())?;
            let posterior = assimilate_window(data, &prior, opts, &mut opts.window_rng(k, 0))?;
            let fc = forecast(&posterior, cfg, k, opts, &mut opts.window_rng(k, 1))?;
            Ok(WindowOutcome {
                bounds,
                prior,
                propagation_dropped,
                posterior,
                forecast: fc,
            })
        })();
        match step {
            Ok(w) => windows.push(w),
            Err(e) => {
                return Ok(SequentialRun {
                    windows,
                    failure: Some(e.in_window(k)),
                    planned,
                })
            }
        }
    }
    Ok(SequentialRun {
        windows,
        failure: None,
        planned,
    })
}
