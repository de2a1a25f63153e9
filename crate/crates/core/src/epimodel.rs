//! Compartmental state, parameters and the staged SEIR-type dynamics.
//!
//! Exposed (`E`), observed infectious (`O`) and unobserved infectious (`U`)
//! residence times are Erlang with shape 2, realised as two serial
//! sub-compartments that each exit at twice the aggregate rate.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Number of compartments in [`StateVector`].
pub const STATE_DIM: usize = 9;

/// Erlang shape used for the staged compartments.
pub const ERLANG_SHAPE: f64 = 2.0;

/// Compartment masses at one instant, in individuals.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StateVector {
    pub s: f64,
    pub e1: f64,
    pub e2: f64,
    pub o1: f64,
    pub o2: f64,
    pub u1: f64,
    pub u2: f64,
    pub r: f64,
    pub d: f64,
}

impl StateVector {
    pub const NAMES: [&'static str; STATE_DIM] = ["S", "E1", "E2", "O1", "O2", "U1", "U2", "R", "D"];

    pub fn zeros() -> Self {
        Self::default()
    }

    #[inline]
    pub fn to_array(self) -> [f64; STATE_DIM] {
        [
            self.s, self.e1, self.e2, self.o1, self.o2, self.u1, self.u2, self.r, self.d,
        ]
    }

    #[inline]
    pub fn from_array(a: [f64; STATE_DIM]) -> Self {
        Self {
            s: a[0],
            e1: a[1],
            e2: a[2],
            o1: a[3],
            o2: a[4],
            u1: a[5],
            u2: a[6],
            r: a[7],
            d: a[8],
        }
    }

    pub fn exposed(&self) -> f64 {
        self.e1 + self.e2
    }

    pub fn observed(&self) -> f64 {
        self.o1 + self.o2
    }

    pub fn unobserved(&self) -> f64 {
        self.u1 + self.u2
    }

    pub fn total(&self) -> f64 {
        self.to_array().iter().sum()
    }

    pub fn is_valid(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite() && *v >= 0.0)
    }
}

/// Parameters that stay fixed across windows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedParams {
    /// Fraction of exposed individuals that become observed infectious.
    pub f: f64,
    /// Contact-rate multiplier for observed infectious individuals.
    pub k_obs: f64,
    /// Inverse mean exposed time, 1/day.
    pub sigma1: f64,
    /// Inverse mean observed-infectious time, 1/day.
    pub sigma2: f64,
    /// Inverse mean unobserved-infectious time, 1/day.
    pub gamma: f64,
    /// Census population of the locality.
    pub population: f64,
}

impl FixedParams {
    /// Defaults: 5-day exposed, 14-day observed and 7-day unobserved mean
    /// residence, `f = 0.8`, `k_obs = 1`.
    pub fn new(population: f64) -> Self {
        Self {
            f: 0.8,
            k_obs: 1.0,
            sigma1: 1.0 / 5.0,
            sigma2: 1.0 / 14.0,
            gamma: 1.0 / 7.0,
            population,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| v > 0.0 && v < 1.0;
        let rate = |v: f64| v.is_finite() && v > 0.0;
        if !unit(self.f) {
            return Err(Error::InvalidConfig(format!("f must lie in (0,1), got {}", self.f)));
        }
        if !(self.k_obs.is_finite() && self.k_obs >= 0.0) {
            return Err(Error::InvalidConfig(format!("k_obs must be >= 0, got {}", self.k_obs)));
        }
        if !(rate(self.sigma1) && rate(self.sigma2) && rate(self.gamma)) {
            return Err(Error::InvalidConfig("residence rates must be positive".into()));
        }
        if !(self.population.is_finite() && self.population >= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "population must be >= 1, got {}",
                self.population
            )));
        }
        Ok(())
    }

    pub fn with_inferred(&self, beta: f64, omega: f64, g: f64) -> EpiParams {
        EpiParams {
            beta,
            omega,
            g,
            f: self.f,
            k_obs: self.k_obs,
            sigma1: self.sigma1,
            sigma2: self.sigma2,
            gamma: self.gamma,
            population: self.population,
        }
    }
}

/// Full parameter set for one evaluation of the dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpiParams {
    /// Infectious contact rate, 1/day.
    pub beta: f64,
    /// Fraction of the population taking part in the outbreak.
    pub omega: f64,
    /// Fraction of observed infectious that die.
    pub g: f64,
    pub f: f64,
    pub k_obs: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub gamma: f64,
    pub population: f64,
}

impl EpiParams {
    pub fn fixed(&self) -> FixedParams {
        FixedParams {
            f: self.f,
            k_obs: self.k_obs,
            sigma1: self.sigma1,
            sigma2: self.sigma2,
            gamma: self.gamma,
            population: self.population,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.fixed().validate()?;
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::InvalidConfig(format!("beta must be > 0, got {}", self.beta)));
        }
        if !(self.omega > 0.0 && self.omega < 1.0) {
            return Err(Error::InvalidConfig(format!("omega must lie in (0,1), got {}", self.omega)));
        }
        if !(self.g > 0.0 && self.g < 1.0) {
            return Err(Error::InvalidConfig(format!("g must lie in (0,1), got {}", self.g)));
        }
        Ok(())
    }

    /// Per-stage exit rates `(rE, rO, rU)`.
    #[inline]
    pub fn stage_rates(&self) -> (f64, f64, f64) {
        (
            ERLANG_SHAPE * self.sigma1,
            ERLANG_SHAPE * self.sigma2,
            ERLANG_SHAPE * self.gamma,
        )
    }
}

/// Initial aggregate masses; `S(0)` is derived from them.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct InitialConditions {
    pub e0: f64,
    pub o0: f64,
    pub u0: f64,
    pub r0: f64,
    pub d0: f64,
}

/// Number of jointly inferred coordinates.
pub const INFERENCE_DIM: usize = 8;

/// `(E0, O0, U0, R0, D0, beta, omega, g)`, in that order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InferenceVector(pub [f64; INFERENCE_DIM]);

impl InferenceVector {
    pub const NAMES: [&'static str; INFERENCE_DIM] =
        ["E0", "O0", "U0", "R0", "D0", "beta", "omega", "g"];

    pub const BETA: usize = 5;
    pub const OMEGA: usize = 6;
    pub const G: usize = 7;

    pub fn from_slice(v: &[f64]) -> Option<Self> {
        <[f64; INFERENCE_DIM]>::try_from(v).ok().map(Self)
    }

    pub fn new(ic: InitialConditions, beta: f64, omega: f64, g: f64) -> Self {
        Self([ic.e0, ic.o0, ic.u0, ic.r0, ic.d0, beta, omega, g])
    }

    pub fn initial_conditions(&self) -> InitialConditions {
        let v = &self.0;
        InitialConditions {
            e0: v[0],
            o0: v[1],
            u0: v[2],
            r0: v[3],
            d0: v[4],
        }
    }

    pub fn beta(&self) -> f64 {
        self.0[Self::BETA]
    }

    pub fn omega(&self) -> f64 {
        self.0[Self::OMEGA]
    }

    pub fn g(&self) -> f64 {
        self.0[Self::G]
    }

    pub fn params(&self, fixed: &FixedParams) -> EpiParams {
        fixed.with_inferred(self.beta(), self.omega(), self.g())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// `lambda = (U + k_obs * O) * beta / N`.
#[inline]
pub fn force_of_infection(x: &StateVector, p: &EpiParams) -> f64 {
    (x.unobserved() + p.k_obs * x.observed()) * p.beta / p.population
}

/// Every inter-compartment flow, individuals/day.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Flows {
    pub infection: f64,
    pub e_stage: f64,
    pub e_to_o: f64,
    pub e_to_u: f64,
    pub o_stage: f64,
    pub o_to_r: f64,
    pub o_to_d: f64,
    pub u_stage: f64,
    pub u_to_r: f64,
}

impl Flows {
    pub fn as_array(&self) -> [f64; 9] {
        [
            self.infection,
            self.e_stage,
            self.e_to_o,
            self.e_to_u,
            self.o_stage,
            self.o_to_r,
            self.o_to_d,
            self.u_stage,
            self.u_to_r,
        ]
    }
}

#[inline]
pub fn flows(x: &StateVector, p: &EpiParams) -> Flows {
    let (r_e, r_o, r_u) = p.stage_rates();
    let e_exit = r_e * x.e2;
    let o_exit = r_o * x.o2;
    Flows {
        infection: force_of_infection(x, p) * x.s,
        e_stage: r_e * x.e1,
        e_to_o: p.f * e_exit,
        e_to_u: (1.0 - p.f) * e_exit,
        o_stage: r_o * x.o1,
        o_to_r: (1.0 - p.g) * o_exit,
        o_to_d: p.g * o_exit,
        u_stage: r_u * x.u1,
        u_to_r: r_u * x.u2,
    }
}

/// Time derivative of the staged system.
#[inline]
pub fn rhs(x: &StateVector, p: &EpiParams) -> StateVector {
    let fl = flows(x, p);
    StateVector {
        s: -fl.infection,
        e1: fl.infection - fl.e_stage,
        e2: fl.e_stage - (fl.e_to_o + fl.e_to_u),
        o1: fl.e_to_o - fl.o_stage,
        o2: fl.o_stage - (fl.o_to_r + fl.o_to_d),
        u1: fl.e_to_u - fl.u_stage,
        u2: fl.u_stage - fl.u_to_r,
        r: fl.o_to_r + fl.u_to_r,
        d: fl.o_to_d,
    }
}

/// Builds `x(t_k)` with `S = omega*N - (E0 + O0 + U0 + R0)` and each
/// aggregate split evenly across its two stages. `D0` is not subtracted.
pub fn assemble_initial_state(ic: &InitialConditions, p: &EpiParams) -> Result<StateVector> {
    let parts = [ic.e0, ic.o0, ic.u0, ic.r0, ic.d0];
    if parts.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InfeasibleParameters("negative initial condition"));
    }
    let s = p.omega * p.population - (ic.e0 + ic.o0 + ic.u0 + ic.r0);
    if !(s >= 0.0) {
        return Err(Error::InfeasibleParameters("initial infected exceed omega * N"));
    }
    Ok(StateVector {
        s,
        e1: 0.5 * ic.e0,
        e2: 0.5 * ic.e0,
        o1: 0.5 * ic.o0,
        o2: 0.5 * ic.o0,
        u1: 0.5 * ic.u0,
        u2: 0.5 * ic.u0,
        r: ic.r0,
        d: ic.d0,
    })
}
