//! Sequential Bayesian data assimilation for epidemic forecasting.
//!
//! An Erlang-staged SEIR-type model with observed (`O`) and unobserved (`U`)
//! infectious classes is fitted to daily confirmed cases and deaths over a
//! sliding learning window. Each window's posterior is pushed through the
//! dynamics to build the next window's prior, and posterior-predictive
//! quantile bands are reported for the forecasting period.
//!
//! Module map:
//!
//! - [`epimodel`]: state, parameters, force of infection and the ODE right-hand side.
//! - [`odeint`]: fixed-step RK4 trajectories with a per-day quadrature sub-grid.
//! - [`observation`]: expected daily counts and the negative-binomial likelihood.
//! - [`priors`]: 1-D distributions, moment fits and the joint prior.
//! - [`sampler`]: the t-walk MCMC sampler and autocorrelation diagnostics.
//! - [`assimilation`]: window bookkeeping, prior propagation and forecasting.

pub mod assimilation;
pub mod epimodel;
mod error;
pub mod observation;
pub mod odeint;
pub mod priors;
pub mod sampler;
pub mod stats;

pub use error::{Error, Result};
