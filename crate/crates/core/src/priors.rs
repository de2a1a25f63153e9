//! One-dimensional distributions, moment fits and the joint prior over
//! [`InferenceVector`].

use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma, LogNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::epimodel::{assemble_initial_state, FixedParams, InferenceVector, INFERENCE_DIM};
use crate::stats;
use crate::{Error, Result};

/// Lower bound applied to Beta parameters recovered by moment inversion.
pub const BETA_PARAM_FLOOR: f64 = 0.01;

/// Minimum sample count accepted by [`fit_moments`].
pub const MIN_FIT_SAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    Gamma,
    Beta,
    LogNormal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum Distribution1D {
    Gamma { shape: f64, scale: f64 },
    Beta { a: f64, b: f64 },
    LogNormal { mu: f64, sigma: f64 },
}

impl Distribution1D {
    pub fn gamma(shape: f64, scale: f64) -> Result<Self> {
        check_positive(&[shape, scale])?;
        Ok(Self::Gamma { shape, scale })
    }

    pub fn beta(a: f64, b: f64) -> Result<Self> {
        check_positive(&[a, b])?;
        Ok(Self::Beta { a, b })
    }

    pub fn lognormal(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::InvalidConfig(format!("lognormal mu must be finite, got {mu}")));
        }
        check_positive(&[sigma])?;
        Ok(Self::LogNormal { mu, sigma })
    }

    pub fn family(&self) -> Family {
        match self {
            Self::Gamma { .. } => Family::Gamma,
            Self::Beta { .. } => Family::Beta,
            Self::LogNormal { .. } => Family::LogNormal,
        }
    }

    pub fn in_support(&self, x: f64) -> bool {
        match self {
            Self::Gamma { .. } | Self::LogNormal { .. } => x > 0.0 && x.is_finite(),
            Self::Beta { .. } => x > 0.0 && x < 1.0,
        }
    }

    pub fn log_density(&self, x: f64) -> f64 {
        if !self.in_support(x) {
            return f64::NEG_INFINITY;
        }
        match *self {
            Self::Gamma { shape, scale } => {
                (shape - 1.0) * x.ln() - x / scale - ln_gamma(shape) - shape * scale.ln()
            }
            Self::Beta { a, b } => {
                (a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() - ln_beta(a, b)
            }
            Self::LogNormal { mu, sigma } => {
                let z = (x.ln() - mu) / sigma;
                -0.5 * z * z - x.ln() - sigma.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Gamma { shape, scale } => Gamma::new(shape, scale).expect("validated").sample(rng),
            Self::Beta { a, b } => Beta::new(a, b).expect("validated").sample(rng),
            Self::LogNormal { mu, sigma } => LogNormal::new(mu, sigma).expect("validated").sample(rng),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Self::Gamma { shape, scale } => shape * scale,
            Self::Beta { a, b } => a / (a + b),
            Self::LogNormal { mu, sigma } => (mu + 0.5 * sigma * sigma).exp(),
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Self::Gamma { shape, scale } => shape * scale * scale,
            Self::Beta { a, b } => a * b / ((a + b) * (a + b) * (a + b + 1.0)),
            Self::LogNormal { mu, sigma } => {
                let s2 = sigma * sigma;
                (s2.exp() - 1.0) * (2.0 * mu + s2).exp()
            }
        }
    }

    /// Member of `family` with the given natural-scale mean and variance.
    /// Beta parameters are floored at [`BETA_PARAM_FLOOR`].
    pub fn from_mean_var(family: Family, mean: f64, var: f64) -> Result<Self> {
        if !(mean.is_finite() && var.is_finite()) || var <= 1e-12 * mean * mean {
            return Err(Error::FitDegenerate(format!(
                "mean {mean}, variance {var} cannot define a {family:?}"
            )));
        }
        match family {
            Family::Gamma => {
                if mean <= 0.0 {
                    return Err(Error::FitDegenerate(format!("Gamma mean must be > 0, got {mean}")));
                }
                Self::gamma(mean * mean / var, var / mean)
            }
            Family::LogNormal => {
                if mean <= 0.0 {
                    return Err(Error::FitDegenerate(format!("LogNormal mean must be > 0, got {mean}")));
                }
                let s2 = (var / (mean * mean)).ln_1p();
                Self::lognormal(mean.ln() - 0.5 * s2, s2.sqrt())
            }
            Family::Beta => {
                if !(mean > 0.0 && mean < 1.0) {
                    return Err(Error::FitDegenerate(format!("Beta mean must lie in (0,1), got {mean}")));
                }
                let common = mean * (1.0 - mean) / var - 1.0;
                let a = (mean * common).max(BETA_PARAM_FLOOR);
                let b = ((1.0 - mean) * common).max(BETA_PARAM_FLOOR);
                Self::beta(a, b)
            }
        }
    }
}

fn check_positive(vals: &[f64]) -> Result<()> {
    if vals.iter().all(|v| v.is_finite() && *v > 0.0) {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("distribution parameters must be positive: {vals:?}")))
    }
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Method-of-moments fit. Gamma and Beta match the sample mean and variance;
/// LogNormal matches the mean and standard deviation of the log-samples.
pub fn fit_moments(samples: &[f64], family: Family) -> Result<Distribution1D> {
    if samples.len() < MIN_FIT_SAMPLES {
        return Err(Error::FitDegenerate(format!(
            "need at least {MIN_FIT_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    let inside = |x: f64| match family {
        Family::Gamma | Family::LogNormal => x > 0.0 && x.is_finite(),
        Family::Beta => x > 0.0 && x < 1.0,
    };
    if let Some(bad) = samples.iter().find(|x| !inside(**x)) {
        return Err(Error::FitDegenerate(format!("sample {bad} outside {family:?} support")));
    }
    match family {
        Family::LogNormal => {
            let logs: Vec<f64> = samples.iter().map(|x| x.ln()).collect();
            let mu = stats::mean(&logs);
            let var = stats::variance(&logs);
            if var <= 1e-12 * mu.abs().max(1.0).powi(2) {
                return Err(Error::FitDegenerate("log-samples have no spread".into()));
            }
            Distribution1D::lognormal(mu, var.sqrt())
        }
        _ => Distribution1D::from_mean_var(family, stats::mean(samples), stats::variance(samples)),
    }
}

/// Independent per-coordinate prior over `(E0, O0, U0, R0, D0, beta, omega, g)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub coords: [Distribution1D; INFERENCE_DIM],
}

impl PriorSpec {
    pub fn new(coords: [Distribution1D; INFERENCE_DIM]) -> Result<Self> {
        let expected = [
            Family::Gamma,
            Family::Gamma,
            Family::Gamma,
            Family::Gamma,
            Family::Gamma,
            Family::LogNormal,
            Family::Beta,
            Family::Beta,
        ];
        for (i, (d, fam)) in coords.iter().zip(expected).enumerate() {
            // counts and beta need positive support, omega and g need (0,1)
            let ok = match fam {
                Family::Beta => d.family() == Family::Beta,
                _ => d.family() != Family::Beta,
            };
            if !ok {
                return Err(Error::InvalidConfig(format!(
                    "{} prior has the wrong support ({:?})",
                    InferenceVector::NAMES[i],
                    d.family()
                )));
            }
        }
        Ok(Self { coords })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> InferenceVector {
        let mut v = [0.0; INFERENCE_DIM];
        for (x, d) in v.iter_mut().zip(&self.coords) {
            *x = d.sample(rng);
        }
        InferenceVector(v)
    }
}

/// Initial-window prior: `Gamma(10, 1)` for `E0, O0, U0`, `Gamma(1, 1)` for
/// `R0, D0`, `LogNormal(1, 1)` for `beta` and `Beta(7/6, 4/3)` for `omega`, `g`.
pub fn default_prior() -> PriorSpec {
    let g10 = Distribution1D::Gamma { shape: 10.0, scale: 1.0 };
    let g1 = Distribution1D::Gamma { shape: 1.0, scale: 1.0 };
    let frac = Distribution1D::Beta {
        a: 1.0 + 1.0 / 6.0,
        b: 1.0 + 1.0 / 3.0,
    };
    PriorSpec {
        coords: [
            g10,
            g10,
            g10,
            g1,
            g1,
            Distribution1D::LogNormal { mu: 1.0, sigma: 1.0 },
            frac,
            frac,
        ],
    }
}

/// Sum of coordinate log densities; `-inf` outside the support or when the
/// implied `S(0)` would be negative.
pub fn prior_log_density(ps: &PriorSpec, v: &InferenceVector, fixed: &FixedParams) -> f64 {
    let mut total = 0.0;
    for (d, x) in ps.coords.iter().zip(v.0) {
        let ld = d.log_density(x);
        if ld == f64::NEG_INFINITY {
            return ld;
        }
        total += ld;
    }
    match assemble_initial_state(&v.initial_conditions(), &v.params(fixed)) {
        Ok(_) => total,
        Err(_) => f64::NEG_INFINITY,
    }
}
