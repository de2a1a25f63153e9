mod common;

use common::{simulate, truth, POPULATION};
use epiassim_core::epimodel::{FixedParams, InferenceVector, StateVector};
use epiassim_core::observation::{log_likelihood, ObsConfig};
use epiassim_core::odeint::{integrate, trapezoid_day_integral};

#[test]
fn likelihood_prefers_truth_over_inflated_beta() {
    let fixed = FixedParams::new(POPULATION);
    let v = truth();
    let mut off = v;
    off.0[InferenceVector::BETA] *= 1.5;
    let days = 60;
    let cfg = ObsConfig::default();
    let p_true = v.params(&fixed);
    let p_off = off.params(&fixed);
    let traj_off = common::true_trajectory(&off, &fixed, days);
    let wins = (0..100)
        .filter(|&seed| {
            let (series, traj) = simulate(&v, &fixed, days, 1000 + seed);
            let at_truth = log_likelihood(series.all(), &traj, &p_true, &cfg).unwrap();
            let at_off = log_likelihood(series.all(), &traj_off, &p_off, &cfg).unwrap();
            at_truth / days as f64 > at_off / days as f64
        })
        .count();
    assert!(wins >= 95, "truth preferred in {wins}/100");
}

#[test]
fn staged_exposed_class_has_five_day_mean_residence() {
    let p = FixedParams::new(POPULATION).with_inferred(0.0, 1.0, 0.0);
    let mut x0 = StateVector::zeros();
    x0.e1 = 1000.0;
    let days = 120;
    let traj = integrate(&x0, &p, 0.0, days as f64, 0.01).unwrap();
    let (r_e, _, _) = p.stage_rates();
    let mut exit_time = 0.0;
    let mut exit_sq = 0.0;
    let mut exited = 0.0;
    for d in 0..days {
        let grid = traj.subgrid(d);
        let t_flux: Vec<f64> = (0..grid.len()).map(|j| (d as f64 + j as f64 / 9.0) * r_e * grid[j].e2).collect();
        let t2_flux: Vec<f64> = (0..grid.len()).map(|j| (d as f64 + j as f64 / 9.0).powi(2) * r_e * grid[j].e2).collect();
        let flux: Vec<f64> = grid.iter().map(|s| r_e * s.e2).collect();
        exit_time += trapezoid_day_integral(&t_flux).unwrap();
        exit_sq += trapezoid_day_integral(&t2_flux).unwrap();
        exited += trapezoid_day_integral(&flux).unwrap();
    }
    assert!((exited / 1000.0 - 1.0).abs() < 1e-3, "exited mass {exited}");
    let mean = exit_time / exited;
    assert!((mean / 5.0 - 1.0).abs() < 0.01, "mean residence {mean}");
    // Erlang(2) with rate 2/5 has variance 12.5
    let var = exit_sq / exited - mean * mean;
    assert!((var / 12.5 - 1.0).abs() < 0.01, "residence variance {var}");
}
