mod common;

use chrono::NaiveDate;
use common::{simulate, truth, POPULATION};
use epiassim_core::assimilation::{
    assimilate_window, propagate_state_prior, run_sequential, window_bounds, AssimilationOptions, WindowConfig,
};
use epiassim_core::epimodel::{FixedParams, InferenceVector};
use epiassim_core::observation::EpidemicSeries;
use epiassim_core::priors::default_prior;
use epiassim_core::sampler::McmcSettings;
use epiassim_core::stats;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn options(seed: u64) -> AssimilationOptions {
    let mut opts = AssimilationOptions::new(POPULATION, seed);
    opts.mcmc = McmcSettings {
        iters: 60_000,
        burn_in: 20_000,
        thin: 40,
        ..Default::default()
    };
    opts
}

fn zeros(days: usize) -> EpidemicSeries {
    EpidemicSeries::new(NaiveDate::from_ymd_opt(2021, 1, 1).unwrap(), vec![0; days], vec![0; days]).unwrap()
}

#[test]
fn all_zero_window_pulls_beta_below_prior_median() {
    let series = zeros(28);
    let opts = options(1);
    let prior = default_prior();
    let post = assimilate_window(series.all(), &prior, &opts, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let beta = stats::sorted(&post.column(InferenceVector::BETA));
    let prior_median = 1f64.exp();
    assert!(stats::quantile_sorted(&beta, 0.5) < prior_median);
    for d in &post.draws {
        let v = InferenceVector::from_slice(d).unwrap();
        let infected: f64 = v.0[..4].iter().sum();
        assert!(infected <= v.omega() * POPULATION);
    }
}

#[test]
fn all_zero_series_completes_with_finite_quantiles() {
    let cfg = WindowConfig::default();
    let run = run_sequential(&zeros(35), &cfg, &options(2)).unwrap();
    assert!(run.completed(), "{:?}", run.failure);
    assert_eq!(run.windows.len(), 2);
    for w in &run.windows {
        assert!(w.forecast.is_monotone());
        assert!(w.forecast.days.iter().all(|d| d.cases.q95.is_finite() && d.deaths.q95.is_finite()));
    }
}

#[test]
fn propagated_exposed_prior_tracks_truth() {
    let fixed = FixedParams::new(POPULATION);
    let v = truth();
    let (series, traj) = simulate(&v, &fixed, 28, 7);
    let opts = options(3);
    let post = assimilate_window(series.all(), &default_prior(), &opts, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    let prop = propagate_state_prior(&post, 7, &opts).unwrap();
    let true_e = traj.states()[7].exposed();
    let fitted = prop.priors[0].mean();
    assert!((fitted / true_e - 1.0).abs() < 0.1, "fitted E mean {fitted} vs true {true_e}");
}

#[test]
fn later_windows_use_propagated_priors() {
    let fixed = FixedParams::new(POPULATION);
    let (series, _) = simulate(&truth(), &fixed, 35, 8);
    let cfg = WindowConfig::default();
    let run = run_sequential(&series, &cfg, &options(4)).unwrap();
    assert!(run.completed());
    assert_eq!(run.windows.len(), 2);
    assert_eq!(run.windows[0].prior, default_prior());
    assert_ne!(run.windows[1].prior, default_prior());
    assert_eq!(run.windows[1].bounds, window_bounds(&cfg, 1));
    assert_eq!(run.windows[1].forecast.forecast_day, 42);
}

#[test]
fn sequential_runs_are_reproducible() {
    let fixed = FixedParams::new(POPULATION);
    let (series, _) = simulate(&truth(), &fixed, 28, 9);
    let cfg = WindowConfig::default();
    let mut opts = options(5);
    opts.mcmc.iters = 25_000;
    opts.mcmc.burn_in = 5_000;
    opts.mcmc.thin = 20;
    let a = run_sequential(&series, &cfg, &opts).unwrap();
    let b = run_sequential(&series, &cfg, &opts).unwrap();
    assert_eq!(a.windows, b.windows);
}
