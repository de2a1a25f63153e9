#![allow(dead_code)]

use chrono::NaiveDate;
use epiassim_core::epimodel::{assemble_initial_state, FixedParams, InitialConditions, InferenceVector};
use epiassim_core::observation::{expected_counts, nb_sample, EpidemicSeries, ObsConfig};
use epiassim_core::odeint::{integrate, Trajectory, DEFAULT_STEP};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const POPULATION: f64 = 1e6;

pub fn truth() -> InferenceVector {
    InferenceVector::new(
        InitialConditions {
            e0: 10.0,
            o0: 10.0,
            u0: 10.0,
            r0: 1.0,
            d0: 1.0,
        },
        0.3,
        0.3,
        0.05,
    )
}

pub fn true_trajectory(v: &InferenceVector, fixed: &FixedParams, days: usize) -> Trajectory {
    let p = v.params(fixed);
    let x0 = assemble_initial_state(&v.initial_conditions(), &p).unwrap();
    integrate(&x0, &p, 0.0, days as f64, DEFAULT_STEP).unwrap()
}

/// Negative-binomial counts around the true expected values.
pub fn simulate(v: &InferenceVector, fixed: &FixedParams, days: usize, seed: u64) -> (EpidemicSeries, Trajectory) {
    let traj = true_trajectory(v, fixed, days);
    let (mc, md) = expected_counts(&traj, &v.params(fixed));
    let cfg = ObsConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = Vec::with_capacity(days);
    let mut deaths = Vec::with_capacity(days);
    for d in 0..days {
        cases.push(nb_sample(mc[d], &cfg, &mut rng));
        deaths.push(nb_sample(md[d], &cfg, &mut rng));
    }
    let start = NaiveDate::from_ymd_opt(2020, 3, 1).unwrap();
    (EpidemicSeries::new(start, cases, deaths).unwrap(), traj)
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

/// Asymptotic two-sample KS critical value at level 0.01.
pub fn ks_critical_01(n: usize, m: usize) -> f64 {
    1.628 * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}
