//! The t-walk: a derivative-free, scale-free MCMC sampler that evolves a pair
//! of points `(x, x')` under the product target `pi(x) pi(x')`.
//!
//! Each iteration picks one of the pair and moves it with one of four kernels
//! (walk, traverse, blow, hop) applied to a random subset of coordinates. The
//! other point sets the scale, so no tuning is needed.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::stats;
use crate::{Error, Result};

/// Unnormalised log density; `-inf` marks points outside the support.
pub trait LogDensity {
    fn dim(&self) -> usize;
    fn log_density(&self, x: &[f64]) -> f64;
}

/// Adapter for closures.
pub struct FnTarget<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64> FnTarget<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(&[f64]) -> f64> LogDensity for FnTarget<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Kernel {
    Walk,
    Traverse,
    Blow,
    Hop,
}

impl Kernel {
    pub const ALL: [Kernel; 4] = [Kernel::Walk, Kernel::Traverse, Kernel::Blow, Kernel::Hop];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TWalkConfig {
    /// Walk aperture.
    pub aw: f64,
    /// Traverse scale parameter.
    pub at: f64,
    /// Expected number of coordinates moved per step (capped at the dimension).
    pub n1phi: f64,
    /// Kernel probabilities in [`Kernel::ALL`] order.
    pub move_probs: [f64; 4],
}

impl Default for TWalkConfig {
    fn default() -> Self {
        Self {
            aw: 1.5,
            at: 6.0,
            n1phi: 4.0,
            move_probs: [0.4918, 0.4918, 0.0082, 0.0082],
        }
    }
}

impl TWalkConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.aw > 0.0 && self.at > 1.0 && self.n1phi > 0.0) {
            return Err(Error::InvalidConfig("t-walk needs aw > 0, at > 1, n1phi > 0".into()));
        }
        let total: f64 = self.move_probs.iter().sum();
        if self.move_probs.iter().any(|p| *p < 0.0) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig("move probabilities must be >= 0 and sum to 1".into()));
        }
        Ok(())
    }

    fn pick(&self, u: f64) -> Kernel {
        let mut acc = 0.0;
        for (k, p) in Kernel::ALL.iter().zip(self.move_probs) {
            acc += p;
            if u < acc {
                return *k;
            }
        }
        Kernel::Hop
    }
}

/// Result of one sampler step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub kernel: Kernel,
    /// Whether `x` (rather than `x'`) was the moving point.
    pub moved_x: bool,
    pub accepted: bool,
}

/// t-walk state: the point pair and their log densities.
pub struct TWalk<'t, T: LogDensity + ?Sized> {
    target: &'t T,
    cfg: TWalkConfig,
    pphi: f64,
    x: Vec<f64>,
    xp: Vec<f64>,
    lx: f64,
    lxp: f64,
}

impl<'t, T: LogDensity + ?Sized> TWalk<'t, T> {
    pub fn new(target: &'t T, x0: Vec<f64>, xp0: Vec<f64>, cfg: TWalkConfig) -> Result<Self> {
        cfg.validate()?;
        let n = target.dim();
        if x0.len() != n || xp0.len() != n {
            return Err(Error::InvalidConfig(format!("start points must have dimension {n}")));
        }
        if x0.iter().zip(&xp0).any(|(a, b)| a == b) {
            return Err(Error::InvalidConfig("start points must differ in every coordinate".into()));
        }
        let lx = target.log_density(&x0);
        let lxp = target.log_density(&xp0);
        if !(lx.is_finite() && lxp.is_finite()) {
            return Err(Error::InitializationFailed { attempts: 1 });
        }
        Ok(Self {
            target,
            pphi: (cfg.n1phi / n as f64).min(1.0),
            cfg,
            x: x0,
            xp: xp0,
            lx,
            lxp,
        })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn xp(&self) -> &[f64] {
        &self.xp
    }

    pub fn log_density_x(&self) -> f64 {
        self.lx
    }

    /// Overwrites the pair; used to restart from a known state.
    pub fn set_state(&mut self, x: Vec<f64>, xp: Vec<f64>) {
        self.lx = self.target.log_density(&x);
        self.lxp = self.target.log_density(&xp);
        self.x = x;
        self.xp = xp;
    }

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> StepOutcome {
        let kernel = self.cfg.pick(rng.random::<f64>());
        self.step_with(kernel, rng)
    }

    /// One step with a fixed kernel.
    pub fn step_with<R: Rng + ?Sized>(&mut self, kernel: Kernel, rng: &mut R) -> StepOutcome {
        let moved_x = rng.random::<f64>() < 0.5;
        let (cur, other, l_cur) = if moved_x {
            (&self.x, &self.xp, self.lx)
        } else {
            (&self.xp, &self.x, self.lxp)
        };
        let n = cur.len();
        let phi: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < self.pphi).collect();
        let nphi = phi.iter().filter(|b| **b).count();

        let proposal = if nphi == 0 {
            None
        } else {
            match kernel {
                Kernel::Walk => Some(propose_walk(cur, other, &phi, self.cfg.aw, rng)),
                Kernel::Traverse => Some(propose_traverse(cur, other, &phi, nphi, self.cfg.at, rng)),
                Kernel::Blow => propose_blow(cur, other, &phi, rng),
                Kernel::Hop => propose_hop(cur, other, &phi, rng),
            }
        };

        let Some((y, log_q_ratio)) = proposal else {
            return StepOutcome {
                kernel,
                moved_x,
                accepted: false,
            };
        };
        // the pair must stay distinct in every coordinate
        if y.iter().zip(other).any(|(a, b)| a == b) {
            return StepOutcome {
                kernel,
                moved_x,
                accepted: false,
            };
        }
        let l_y = self.target.log_density(&y);
        let accepted = if l_y == f64::NEG_INFINITY || l_y.is_nan() {
            false
        } else {
            let log_a = l_y - l_cur + log_q_ratio;
            log_a >= 0.0 || rng.random::<f64>().ln() < log_a
        };
        if accepted {
            if moved_x {
                self.x = y;
                self.lx = l_y;
            } else {
                self.xp = y;
                self.lxp = l_y;
            }
        }
        StepOutcome {
            kernel,
            moved_x,
            accepted,
        }
    }
}

/// `y_i = x_i + (x_i - x'_i) z_i` with `z` drawn so that `1 + z` has density
/// proportional to `1/sqrt(1 + z)` on `[1/(1 + aw), 1 + aw]`. Symmetric.
fn propose_walk<R: Rng + ?Sized>(x: &[f64], xp: &[f64], phi: &[bool], aw: f64, rng: &mut R) -> (Vec<f64>, f64) {
    let mut y = x.to_vec();
    for i in 0..x.len() {
        if phi[i] {
            let u: f64 = rng.random();
            let z = aw / (1.0 + aw) * (aw * u * u + 2.0 * u - 1.0);
            y[i] = x[i] + (x[i] - xp[i]) * z;
        }
    }
    (y, 0.0)
}

fn sim_traverse_beta<R: Rng + ?Sized>(at: f64, rng: &mut R) -> f64 {
    if rng.random::<f64>() < (at - 1.0) / (2.0 * at) {
        rng.random::<f64>().powf(1.0 / (at + 1.0))
    } else {
        rng.random::<f64>().powf(1.0 / (1.0 - at))
    }
}

/// `y_i = x'_i + beta (x'_i - x_i)`: reflects `x` through `x'` with a random stretch.
fn propose_traverse<R: Rng + ?Sized>(
    x: &[f64],
    xp: &[f64],
    phi: &[bool],
    nphi: usize,
    at: f64,
    rng: &mut R,
) -> (Vec<f64>, f64) {
    let beta = sim_traverse_beta(at, rng);
    let mut y = x.to_vec();
    for i in 0..x.len() {
        if phi[i] {
            y[i] = xp[i] + beta * (xp[i] - x[i]);
        }
    }
    (y, (nphi as f64 - 2.0) * beta.ln())
}

fn max_gap(a: &[f64], b: &[f64], phi: &[bool]) -> f64 {
    (0..a.len())
        .filter(|&i| phi[i])
        .map(|i| (a[i] - b[i]).abs())
        .fold(0.0, f64::max)
}

/// `-log` of an isotropic normal density over the `phi` coordinates.
fn neg_log_normal(h: &[f64], center: &[f64], sigma: f64, phi: &[bool]) -> f64 {
    let mut ss = 0.0;
    let mut k = 0.0;
    for i in 0..h.len() {
        if phi[i] {
            let d = h[i] - center[i];
            ss += d * d;
            k += 1.0;
        }
    }
    0.5 * k * (2.0 * std::f64::consts::PI).ln() + k * sigma.ln() + 0.5 * ss / (sigma * sigma)
}

/// Blow: `y_i ~ N(x'_i, s^2)` with `s = max |x'_i - x_i|` over the moved set.
fn propose_blow<R: Rng + ?Sized>(x: &[f64], xp: &[f64], phi: &[bool], rng: &mut R) -> Option<(Vec<f64>, f64)> {
    let sigma = max_gap(xp, x, phi);
    if !(sigma > 0.0) {
        return None;
    }
    let mut y = x.to_vec();
    for i in 0..x.len() {
        if phi[i] {
            let z: f64 = rng.sample(StandardNormal);
            y[i] = xp[i] + sigma * z;
        }
    }
    let sigma_back = max_gap(xp, &y, phi);
    if !(sigma_back > 0.0) {
        return None;
    }
    // log q(x | y) - log q(y | x)
    let fwd = neg_log_normal(&y, xp, sigma, phi);
    let back = neg_log_normal(x, xp, sigma_back, phi);
    Some((y, fwd - back))
}

/// Hop: `y_i ~ N(x_i, s^2)` with `s = max |x'_i - x_i| / 3` over the moved set.
fn propose_hop<R: Rng + ?Sized>(x: &[f64], xp: &[f64], phi: &[bool], rng: &mut R) -> Option<(Vec<f64>, f64)> {
    let sigma = max_gap(xp, x, phi) / 3.0;
    if !(sigma > 0.0) {
        return None;
    }
    let mut y = x.to_vec();
    for i in 0..x.len() {
        if phi[i] {
            let z: f64 = rng.sample(StandardNormal);
            y[i] = x[i] + sigma * z;
        }
    }
    let sigma_back = max_gap(xp, &y, phi) / 3.0;
    if !(sigma_back > 0.0) {
        return None;
    }
    let fwd = neg_log_normal(&y, x, sigma, phi);
    let back = neg_log_normal(x, &y, sigma_back, phi);
    Some((y, fwd - back))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McmcSettings {
    pub iters: usize,
    pub burn_in: usize,
    pub thin: usize,
    #[serde(default)]
    pub twalk: TWalkConfig,
}

impl Default for McmcSettings {
    fn default() -> Self {
        Self {
            iters: 150_000,
            burn_in: 50_000,
            thin: 100,
            twalk: TWalkConfig::default(),
        }
    }
}

impl McmcSettings {
    pub fn validate(&self) -> Result<()> {
        self.twalk.validate()?;
        if self.thin == 0 {
            return Err(Error::InvalidConfig("thin must be >= 1".into()));
        }
        if self.iters <= self.burn_in {
            return Err(Error::InvalidConfig(format!(
                "iters ({}) must exceed burn_in ({})",
                self.iters, self.burn_in
            )));
        }
        Ok(())
    }

    /// Number of draws kept after burn-in and thinning.
    pub fn retained(&self) -> usize {
        (self.iters - self.burn_in).div_ceil(self.thin)
    }
}

/// Post-burn-in, thinned draws of the `x` chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSamples {
    pub draws: Vec<Vec<f64>>,
    pub log_posts: Vec<f64>,
    /// Fraction of iterations whose proposal was accepted.
    pub acceptance_rate: f64,
    /// Integrated autocorrelation time per coordinate, in retained draws;
    /// `None` where the chain never moved.
    pub iat: Vec<Option<f64>>,
}

impl PosteriorSamples {
    pub fn dim(&self) -> usize {
        self.draws.first().map_or(0, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.draws.iter().map(|d| d[j]).collect()
    }
}

/// Runs the t-walk from `(init_a, init_b)` and keeps every `thin`-th state of
/// the `x` chain after `burn_in` iterations.
pub fn run_mcmc<T, R>(
    target: &T,
    init_a: &[f64],
    init_b: &[f64],
    settings: &McmcSettings,
    rng: &mut R,
) -> Result<PosteriorSamples>
where
    T: LogDensity + ?Sized,
    R: Rng + ?Sized,
{
    settings.validate()?;
    let mut tw = TWalk::new(target, init_a.to_vec(), init_b.to_vec(), settings.twalk)?;
    let mut draws = Vec::with_capacity(settings.retained());
    let mut log_posts = Vec::with_capacity(settings.retained());
    let mut accepted = 0usize;
    for it in 0..settings.iters {
        if tw.step(rng).accepted {
            accepted += 1;
        }
        if it >= settings.burn_in && (it - settings.burn_in) % settings.thin == 0 {
            draws.push(tw.x().to_vec());
            log_posts.push(tw.log_density_x());
        }
    }
    let dim = target.dim();
    let iat = (0..dim)
        .map(|j| {
            let col: Vec<f64> = draws.iter().map(|d: &Vec<f64>| d[j]).collect();
            estimate_iat(&col).ok()
        })
        .collect();
    Ok(PosteriorSamples {
        draws,
        log_posts,
        acceptance_rate: accepted as f64 / settings.iters as f64,
        iat,
    })
}

/// Draws start points from `draw` until both have finite target density and
/// differ in every coordinate, giving up after `max_attempts` draws per point.
pub fn draw_start_pair<T, R, D>(target: &T, mut draw: D, max_attempts: usize, rng: &mut R) -> Result<(Vec<f64>, Vec<f64>)>
where
    T: LogDensity + ?Sized,
    R: Rng + ?Sized,
    D: FnMut(&mut R) -> Vec<f64>,
{
    let mut find = |rng: &mut R, avoid: Option<&[f64]>| {
        for _ in 0..max_attempts {
            let v = draw(rng);
            let distinct = avoid.is_none_or(|a| a.iter().zip(&v).all(|(p, q)| p != q));
            if distinct && target.log_density(&v).is_finite() {
                return Some(v);
            }
        }
        None
    };
    let a = find(rng, None).ok_or(Error::InitializationFailed { attempts: max_attempts })?;
    let b = find(rng, Some(&a)).ok_or(Error::InitializationFailed { attempts: max_attempts })?;
    Ok((a, b))
}

/// Integrated autocorrelation time by the initial positive sequence estimator.
/// Returns [`Error::DegenerateChain`] for chains without variance.
pub fn estimate_iat(chain: &[f64]) -> Result<f64> {
    let n = chain.len();
    if n < 2 {
        return Err(Error::DegenerateChain("chain too short"));
    }
    let m = stats::mean(chain);
    let centered: Vec<f64> = chain.iter().map(|x| x - m).collect();
    let autocov = |lag: usize| -> f64 {
        centered[..n - lag]
            .iter()
            .zip(&centered[lag..])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / n as f64
    };
    let c0 = autocov(0);
    if !(c0 > 0.0) || c0 <= 1e-24 * m * m {
        return Err(Error::DegenerateChain("chain has no variance"));
    }
    let mut sum = 0.0;
    let mut k = 0;
    while 2 * k + 1 < n {
        let pair = (autocov(2 * k) + autocov(2 * k + 1)) / c0;
        if pair <= 0.0 {
            break;
        }
        sum += pair;
        k += 1;
    }
    Ok((2.0 * sum - 1.0).max(1.0))
}
