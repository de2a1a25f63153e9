//! Fixed-step RK4 integration of the staged model.
//!
//! States are recorded at every integer day. Each day additionally carries
//! [`QUADRATURE_POINTS`] equally spaced samples (both endpoints included) for
//! the case-flux quadrature. Sub-grid samples that fall on an RK4 step point
//! are taken directly; the rest use the cubic Hermite dense output of the step
//! that contains them.

use crate::epimodel::{rhs, EpiParams, StateVector, STATE_DIM};
use crate::{Error, Result};

/// Samples per day used by [`trapezoid_day_integral`].
pub const QUADRATURE_POINTS: usize = 10;

/// Default RK4 step, in days.
pub const DEFAULT_STEP: f64 = 0.1;

/// Negative components smaller than this fraction of `N` are clamped to zero.
const CLAMP_TOLERANCE: f64 = 1e-6;

pub type SubGrid = [StateVector; QUADRATURE_POINTS];

/// Day-resolution solution with a per-day quadrature sub-grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    start: f64,
    states: Vec<StateVector>,
    subgrid: Vec<SubGrid>,
}

impl Trajectory {
    /// First recorded time, in days.
    pub fn start(&self) -> f64 {
        self.start
    }

    /// Number of whole days covered.
    pub fn days(&self) -> usize {
        self.subgrid.len()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.states.len()).map(move |i| self.start + i as f64)
    }

    /// States at `start, start + 1, ..., start + days()`.
    pub fn states(&self) -> &[StateVector] {
        &self.states
    }

    /// Quadrature samples for the day `[start + i, start + i + 1]`.
    pub fn subgrid(&self, day: usize) -> &SubGrid {
        &self.subgrid[day]
    }

    pub fn final_state(&self) -> &StateVector {
        self.states.last().expect("trajectory has at least one state")
    }
}

/// Number of RK4 steps per day implied by `step`; `1/step` must be a whole number.
pub fn steps_per_day(step: f64) -> Result<usize> {
    if !(step.is_finite() && step > 0.0 && step <= 1.0) {
        return Err(Error::InvalidConfig(format!("step must lie in (0, 1], got {step}")));
    }
    let m = (1.0 / step).round();
    if ((1.0 / step) - m).abs() > 1e-9 * m {
        return Err(Error::InvalidConfig(format!(
            "step {step} does not divide one day into whole steps"
        )));
    }
    Ok(m as usize)
}

/// Integrates from `t0` to `t_end` with constant parameters.
pub fn integrate(x0: &StateVector, p: &EpiParams, t0: f64, t_end: f64, step: f64) -> Result<Trajectory> {
    integrate_with(x0, |_| p, t0, t_end, step)
}

/// Like [`integrate`], but parameters may change at whole-day boundaries:
/// `params_for(i)` is used throughout day `[t0 + i, t0 + i + 1]`.
pub fn integrate_with<'a, F>(x0: &StateVector, mut params_for: F, t0: f64, t_end: f64, step: f64) -> Result<Trajectory>
where
    F: FnMut(usize) -> &'a EpiParams,
{
    let span = t_end - t0;
    let n_days = span.round();
    if !(span > 0.0) || (span - n_days).abs() > 1e-9 {
        return Err(Error::InvalidConfig(format!(
            "integration span [{t0}, {t_end}] must be a positive whole number of days"
        )));
    }
    let n_days = n_days as usize;
    let m = steps_per_day(step)?;
    let h = 1.0 / m as f64;
    let q = QUADRATURE_POINTS - 1;

    let mut states = Vec::with_capacity(n_days + 1);
    let mut subgrid = Vec::with_capacity(n_days);
    let mut y = x0.to_array();
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::IntegrationDiverged { time: t0 });
    }

    for day in 0..n_days {
        let p = params_for(day);
        let day_start = t0 + day as f64;
        let clamp_limit = CLAMP_TOLERANCE * p.population;
        states.push(record(&y, day_start, clamp_limit)?);

        let mut samples = [StateVector::zeros(); QUADRATURE_POINTS];
        samples[0] = record(&y, day_start, clamp_limit)?;
        let mut next = 1;
        let mut fy = deriv(&y, p);
        for s in 0..m {
            let y1 = rk4_step(&y, &fy, h, p);
            let t1 = day_start + (s + 1) as f64 * h;
            if y1.iter().any(|v| !v.is_finite()) {
                return Err(Error::IntegrationDiverged { time: t1 });
            }
            let f1 = deriv(&y1, p);
            // sub-grid point j sits at j/q of the day; it lies in this step when j*m <= q*(s+1)
            while next < QUADRATURE_POINTS && next * m <= q * (s + 1) {
                let num = next * m - q * s;
                let ys = if num == q {
                    y1
                } else {
                    hermite(&y, &fy, &y1, &f1, h, num as f64 / q as f64)
                };
                samples[next] = record(&ys, day_start + next as f64 / q as f64, clamp_limit)?;
                next += 1;
            }
            y = y1;
            fy = f1;
        }
        subgrid.push(samples);
    }
    let last_p = params_for(n_days.saturating_sub(1));
    states.push(record(&y, t_end, CLAMP_TOLERANCE * last_p.population)?);

    Ok(Trajectory {
        start: t0,
        states,
        subgrid,
    })
}

/// Composite trapezoid rule over one day from [`QUADRATURE_POINTS`] equally
/// spaced samples that include both endpoints.
pub fn trapezoid_day_integral(values: &[f64]) -> Result<f64> {
    if values.len() != QUADRATURE_POINTS {
        return Err(Error::InvalidConfig(format!(
            "expected {QUADRATURE_POINTS} quadrature samples, got {}",
            values.len()
        )));
    }
    Ok(trapezoid(values))
}

#[inline]
pub(crate) fn trapezoid(values: &[f64]) -> f64 {
    let n = values.len();
    let interior: f64 = values[1..n - 1].iter().sum();
    (interior + 0.5 * (values[0] + values[n - 1])) / (n - 1) as f64
}

#[inline]
fn deriv(y: &[f64; STATE_DIM], p: &EpiParams) -> [f64; STATE_DIM] {
    rhs(&StateVector::from_array(*y), p).to_array()
}

#[inline]
fn axpy(y: &[f64; STATE_DIM], a: f64, k: &[f64; STATE_DIM]) -> [f64; STATE_DIM] {
    let mut out = *y;
    for (o, ki) in out.iter_mut().zip(k) {
        *o += a * ki;
    }
    out
}

#[inline]
fn rk4_step(y: &[f64; STATE_DIM], k1: &[f64; STATE_DIM], h: f64, p: &EpiParams) -> [f64; STATE_DIM] {
    let k2 = deriv(&axpy(y, 0.5 * h, k1), p);
    let k3 = deriv(&axpy(y, 0.5 * h, &k2), p);
    let k4 = deriv(&axpy(y, h, &k3), p);
    let mut out = *y;
    for i in 0..STATE_DIM {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

#[inline]
fn hermite(
    y0: &[f64; STATE_DIM],
    f0: &[f64; STATE_DIM],
    y1: &[f64; STATE_DIM],
    f1: &[f64; STATE_DIM],
    h: f64,
    theta: f64,
) -> [f64; STATE_DIM] {
    let t2 = theta * theta;
    let t3 = t2 * theta;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + theta;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    let mut out = [0.0; STATE_DIM];
    for i in 0..STATE_DIM {
        out[i] = h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i];
    }
    out
}

fn record(y: &[f64; STATE_DIM], time: f64, clamp_limit: f64) -> Result<StateVector> {
    let mut out = *y;
    for v in out.iter_mut() {
        if !v.is_finite() {
            return Err(Error::IntegrationDiverged { time });
        }
        if *v < 0.0 {
            if *v < -clamp_limit {
                return Err(Error::IntegrationDiverged { time });
            }
            *v = 0.0;
        }
    }
    Ok(StateVector::from_array(out))
}
