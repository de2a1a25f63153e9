//! Kernel-level checks of the t-walk on a 2-dim Gaussian.
//!
//! Starting each transition from an exact draw of the pair target, detailed
//! balance makes `(z, z')` and `(z', z)` equal in law. A non-symmetric
//! statistic of the two is compared across independent halves with a
//! two-sample KS test.

mod common;

use common::{ks_critical_01, ks_statistic};
use epiassim_core::sampler::{FnTarget, Kernel, TWalk, TWalkConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const TRANSITIONS: usize = 100_000;

// covariance [[1, 0.6], [0.6, 2]] via its Cholesky factor
const L11: f64 = 1.0;
const L21: f64 = 0.6;
const L22: f64 = 1.28062484748656968; // sqrt(2 - 0.36)

fn log_target(x: &[f64]) -> f64 {
    let a = x[0] / L11;
    let b = (x[1] - L21 * a) / L22;
    -0.5 * (a * a + b * b)
}

fn exact_draw<R: Rng>(rng: &mut R) -> Vec<f64> {
    let z0: f64 = rng.sample(StandardNormal);
    let z1: f64 = rng.sample(StandardNormal);
    vec![L11 * z0, L21 * z0 + L22 * z1]
}

fn stat(from: &[f64], to: &[f64]) -> f64 {
    from[0] + 0.5 * from[1] + 2.0 * (to[0] - 0.3 * to[1]) + to[0] * to[0]
}

/// Forward and reversed statistics from independent transitions.
fn samples<F>(seed: u64, mut transition: F) -> (Vec<f64>, Vec<f64>, usize)
where
    F: FnMut(&[f64], &[f64], &mut ChaCha8Rng) -> (Vec<f64>, bool),
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fwd = Vec::with_capacity(TRANSITIONS / 2);
    let mut rev = Vec::with_capacity(TRANSITIONS / 2);
    let mut moves = 0;
    for i in 0..TRANSITIONS {
        let x = exact_draw(&mut rng);
        let xp = exact_draw(&mut rng);
        let (y, moved) = transition(&x, &xp, &mut rng);
        moves += moved as usize;
        if i % 2 == 0 {
            fwd.push(stat(&x, &y));
        } else {
            rev.push(stat(&y, &x));
        }
    }
    (fwd, rev, moves)
}

fn check_kernel(kernel: Kernel, seed: u64) {
    let target = FnTarget::new(2, log_target);
    let (fwd, rev, moves) = samples(seed, |x, xp, rng| {
        let mut tw = TWalk::new(&target, x.to_vec(), xp.to_vec(), TWalkConfig::default()).unwrap();
        let out = tw.step_with(kernel, rng);
        (tw.x().to_vec(), out.accepted && out.moved_x)
    });
    assert!(moves > TRANSITIONS / 50, "{kernel:?}: only {moves} moves of x");
    let d = ks_statistic(&fwd, &rev);
    let crit = ks_critical_01(fwd.len(), rev.len());
    assert!(d < crit, "{kernel:?}: KS {d:.5} >= {crit:.5}");
}

#[test]
fn walk_is_reversible() {
    check_kernel(Kernel::Walk, 11);
}

#[test]
fn traverse_is_reversible() {
    check_kernel(Kernel::Traverse, 12);
}

#[test]
fn blow_is_reversible() {
    check_kernel(Kernel::Blow, 13);
}

#[test]
fn hop_is_reversible() {
    check_kernel(Kernel::Hop, 14);
}

#[test]
fn full_mixture_is_reversible() {
    let target = FnTarget::new(2, log_target);
    let (fwd, rev, _) = samples(15, |x, xp, rng| {
        let mut tw = TWalk::new(&target, x.to_vec(), xp.to_vec(), TWalkConfig::default()).unwrap();
        let out = tw.step(rng);
        (tw.x().to_vec(), out.accepted && out.moved_x)
    });
    assert!(ks_statistic(&fwd, &rev) < ks_critical_01(fwd.len(), rev.len()));
}

/// The test must detect a kernel that ignores the target: an unadjusted
/// random walk leaks mass outward.
#[test]
fn detects_unadjusted_proposal() {
    let (fwd, rev, _) = samples(16, |x, _, rng| {
        let y = vec![x[0] + 0.8 * rng.sample::<f64, _>(StandardNormal), x[1] + 0.8 * rng.sample::<f64, _>(StandardNormal)];
        (y, true)
    });
    assert!(ks_statistic(&fwd, &rev) > ks_critical_01(fwd.len(), rev.len()));
}

/// Hastings correction dropped from hop: same proposal, ratio ignored.
#[test]
fn detects_missing_hastings_ratio() {
    let (fwd, rev, _) = samples(17, |x, xp, rng| {
        let s = (x[0] - xp[0]).abs().max((x[1] - xp[1]).abs());
        let y = vec![xp[0] + s * rng.sample::<f64, _>(StandardNormal), xp[1] + s * rng.sample::<f64, _>(StandardNormal)];
        let accept = (log_target(&y) - log_target(x)).min(0.0) > rng.random::<f64>().ln();
        (if accept { y } else { x.to_vec() }, accept)
    });
    assert!(ks_statistic(&fwd, &rev) > ks_critical_01(fwd.len(), rev.len()));
}
