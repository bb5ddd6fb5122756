//! Generic numerical engines: adaptive Runge-Kutta integration for flows and
//! orbit iteration for discrete-time maps.
//!
//! The integrator is the Dormand-Prince 5(4) embedded pair with a
//! proportional-integral step-size controller. Only accepted steps are
//! recorded; there is no dense output.

use std::ops::Deref;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("state vector must have at least one component")]
    EmptyState,
    #[error("state component {index} is not finite ({value})")]
    NonFiniteComponent { index: usize, value: f64 },
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid time span [{t0}, {t1}]: t1 must exceed t0")]
    InvalidSpan { t0: f64, t1: f64 },
    #[error("invalid iteration count: {0}")]
    InvalidCount(String),
    #[error("step size underflow at t = {t}: required step {step:e} is below the minimum {min_step:e}")]
    StepUnderflow { t: f64, step: f64, min_step: f64 },
    #[error("maximum number of steps ({max_steps}) exceeded at t = {t}")]
    MaxStepsExceeded { max_steps: usize, t: f64 },
    #[error("vector field produced a non-finite value at t = {t}")]
    NonFiniteState { t: f64 },
    #[error("map iterate {index} is not finite")]
    NonFiniteIterate { index: usize },
}

pub type Result<T> = std::result::Result<T, DynamicsError>;

/// A point in n-dimensional phase space. Always non-empty and finite.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(Vec<f64>);

impl StateVector {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(DynamicsError::EmptyState);
        }
        if let Some((index, &value)) = components.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(DynamicsError::NonFiniteComponent { index, value });
        }
        Ok(Self(components))
    }

    pub fn from_slice(components: &[f64]) -> Result<Self> {
        Self::new(components.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Largest absolute component.
    pub fn max_norm(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Deref for StateVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Time-stamped accepted steps of a flow integration.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<StateVector>,
    dim: usize,
}

impl Trajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[StateVector] {
        &self.states
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Number of accepted integration steps (one less than the sample count).
    pub fn steps(&self) -> usize {
        self.times.len().saturating_sub(1)
    }

    pub fn last_state(&self) -> &StateVector {
        self.states.last().expect("trajectory always holds the initial state")
    }

    pub fn last_time(&self) -> f64 {
        *self.times.last().expect("trajectory always holds the initial time")
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &StateVector)> {
        self.times.iter().copied().zip(self.states.iter())
    }
}

/// Tolerances and step limits for [`integrate`].
#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// `None` selects `(t1 - t0) / 100` clamped to `[min_step, t1 - t0]`.
    pub initial_step: Option<f64>,
    pub max_steps: usize,
    /// `None` selects `1e-12 * (t1 - t0)`.
    pub min_step: Option<f64>,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { rel_tol: 1e-6, abs_tol: 1e-6, initial_step: None, max_steps: 1_000_000, min_step: None }
    }
}

impl IntegratorConfig {
    pub fn with_tolerances(rel_tol: f64, abs_tol: f64) -> Self {
        Self { rel_tol, abs_tol, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let in_unit = |v: f64| v > 0.0 && v < 1.0;
        if !in_unit(self.rel_tol) {
            return Err(DynamicsError::InvalidConfig(format!("rel_tol must lie in (0, 1), got {}", self.rel_tol)));
        }
        if !in_unit(self.abs_tol) {
            return Err(DynamicsError::InvalidConfig(format!("abs_tol must lie in (0, 1), got {}", self.abs_tol)));
        }
        if self.max_steps == 0 {
            return Err(DynamicsError::InvalidConfig("max_steps must be positive".into()));
        }
        if let Some(h) = self.initial_step {
            if !(h > 0.0 && h.is_finite()) {
                return Err(DynamicsError::InvalidConfig(format!("initial_step must be positive, got {h}")));
            }
        }
        if let Some(m) = self.min_step {
            if !(m > 0.0 && m.is_finite()) {
                return Err(DynamicsError::InvalidConfig(format!("min_step must be positive, got {m}")));
            }
            if let Some(h) = self.initial_step {
                if m >= h {
                    return Err(DynamicsError::InvalidConfig(format!(
                        "min_step ({m}) must be smaller than initial_step ({h})"
                    )));
                }
            }
        }
        Ok(())
    }

    fn resolved_min_step(&self, span: f64) -> f64 {
        self.min_step.unwrap_or(1e-12 * span)
    }

    fn resolved_initial_step(&self, span: f64, min_step: f64) -> f64 {
        self.initial_step.unwrap_or(span / 100.0).max(min_step).min(span)
    }
}

// Dormand-Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Difference between the 5th and 4th order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// PI controller (Hairer, Norsett & Wanner, vol. I, II.4).
const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const ALPHA: f64 = 0.2 - BETA * 0.75;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;

struct Workspace {
    k: [Vec<f64>; 7],
    stage: Vec<f64>,
    y_new: Vec<f64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Self { k: std::array::from_fn(|_| vec![0.0; n]), stage: vec![0.0; n], y_new: vec![0.0; n] }
    }
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Integrates `x' = field(t, x)` from `t0` to `t1`.
///
/// The field writes the derivative into its third argument, which always has
/// the dimension of `x0`. The returned trajectory starts at exactly `t0` and
/// ends at exactly `t1`; each accepted step satisfies
/// `|err_i| <= abs_tol + rel_tol * max(|y_i|, |y_new_i|)` for every component.
pub fn integrate<F>(field: F, x0: &StateVector, t0: f64, t1: f64, config: &IntegratorConfig) -> Result<Trajectory>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    config.validate()?;
    if !(t0.is_finite() && t1.is_finite() && t1 > t0) {
        return Err(DynamicsError::InvalidSpan { t0, t1 });
    }
    let n = x0.dim();
    let span = t1 - t0;
    let min_step = config.resolved_min_step(span);
    let mut h = config.resolved_initial_step(span, min_step);

    let mut ws = Workspace::new(n);
    let mut y = x0.as_slice().to_vec();
    let mut t = t0;

    let mut times = vec![t0];
    let mut states = vec![x0.clone()];

    field(t, &y, &mut ws.k[0]);
    if !all_finite(&ws.k[0]) {
        return Err(DynamicsError::NonFiniteState { t });
    }

    let mut err_prev: f64 = 1e-4;
    let mut rejected_last = false;
    let mut attempts = 0usize;

    loop {
        attempts += 1;
        if attempts > config.max_steps {
            return Err(DynamicsError::MaxStepsExceeded { max_steps: config.max_steps, t });
        }

        // Land exactly on t1 without leaving a sliver step behind.
        let last = t + 1.01 * h >= t1;
        if last {
            h = t1 - t;
        }

        let finite = dopri_stages(&field, t, h, &y, &mut ws);
        let err = if finite { error_norm(&y, h, config, &ws) } else { f64::INFINITY };

        if err <= 1.0 {
            let t_new = if last { t1 } else { t + h };
            std::mem::swap(&mut y, &mut ws.y_new);
            ws.k.swap(0, 6);
            t = t_new;
            times.push(t);
            states.push(StateVector(y.clone()));
            if last {
                break;
            }

            let err_c = err.max(1e-10);
            let mut factor = SAFETY * err_c.powf(-ALPHA) * err_prev.powf(BETA);
            factor = factor.clamp(MIN_FACTOR, MAX_FACTOR);
            if rejected_last {
                factor = factor.min(1.0);
            }
            err_prev = err_c;
            rejected_last = false;
            h *= factor;
        } else {
            let factor = if err.is_finite() { (SAFETY * err.powf(-ALPHA)).max(MIN_FACTOR) } else { MIN_FACTOR };
            h *= factor;
            rejected_last = true;
            if h < min_step {
                return Err(if finite {
                    DynamicsError::StepUnderflow { t, step: h, min_step }
                } else {
                    DynamicsError::NonFiniteState { t }
                });
            }
        }
    }

    Ok(Trajectory { times, states, dim: n })
}

/// Evaluates stages 2..7 given `ws.k[0] = f(t, y)`. Writes the 5th order
/// solution to `ws.y_new` and `f(t + h, y_new)` to `ws.k[6]`. Returns false if
/// any stage came back non-finite.
fn dopri_stages<F>(field: &F, t: f64, h: f64, y: &[f64], ws: &mut Workspace) -> bool
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let n = y.len();
    let Workspace { k, stage, y_new } = ws;

    for i in 0..n {
        stage[i] = y[i] + h * A21 * k[0][i];
    }
    field(t + C2 * h, stage, &mut k[1]);
    if !all_finite(&k[1]) {
        return false;
    }

    for i in 0..n {
        stage[i] = y[i] + h * (A31 * k[0][i] + A32 * k[1][i]);
    }
    field(t + C3 * h, stage, &mut k[2]);
    if !all_finite(&k[2]) {
        return false;
    }

    for i in 0..n {
        stage[i] = y[i] + h * (A41 * k[0][i] + A42 * k[1][i] + A43 * k[2][i]);
    }
    field(t + C4 * h, stage, &mut k[3]);
    if !all_finite(&k[3]) {
        return false;
    }

    for i in 0..n {
        stage[i] = y[i] + h * (A51 * k[0][i] + A52 * k[1][i] + A53 * k[2][i] + A54 * k[3][i]);
    }
    field(t + C5 * h, stage, &mut k[4]);
    if !all_finite(&k[4]) {
        return false;
    }

    for i in 0..n {
        stage[i] = y[i] + h * (A61 * k[0][i] + A62 * k[1][i] + A63 * k[2][i] + A64 * k[3][i] + A65 * k[4][i]);
    }
    field(t + h, stage, &mut k[5]);
    if !all_finite(&k[5]) {
        return false;
    }

    for i in 0..n {
        y_new[i] = y[i] + h * (A71 * k[0][i] + A73 * k[2][i] + A74 * k[3][i] + A75 * k[4][i] + A76 * k[5][i]);
    }
    if !all_finite(y_new) {
        return false;
    }
    field(t + h, y_new, &mut k[6]);
    all_finite(&k[6])
}

/// Max over components of `|err_i| / (abs_tol + rel_tol * max(|y_i|, |y_new_i|))`.
fn error_norm(y: &[f64], h: f64, config: &IntegratorConfig, ws: &Workspace) -> f64 {
    let k = &ws.k;
    let mut worst: f64 = 0.0;
    for i in 0..y.len() {
        let err = h * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
        let scale = config.abs_tol + config.rel_tol * y[i].abs().max(ws.y_new[i].abs());
        worst = worst.max((err / scale).abs());
    }
    worst
}

/// Orbit of a discrete-time map with an optional transient prefix dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct MapOrbit {
    points: Vec<StateVector>,
    discarded: usize,
}

impl MapOrbit {
    pub fn points(&self) -> &[StateVector] {
        &self.points
    }

    pub fn discarded(&self) -> usize {
        self.discarded
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Absolute iterate index of `points[k]`.
    pub fn index_of(&self, k: usize) -> usize {
        self.discarded + k
    }
}

/// Iterates `map` from `x0`, producing the raw orbit `x0, f(x0), ...` of
/// length `n` and keeping entries `discard..n`.
///
/// The map writes its image into the second argument.
pub fn iterate_map<F>(map: F, x0: &StateVector, n: usize, discard: usize) -> Result<MapOrbit>
where
    F: Fn(&[f64], &mut [f64]),
{
    if n == 0 {
        return Err(DynamicsError::InvalidCount("n must be positive".into()));
    }
    if discard >= n {
        return Err(DynamicsError::InvalidCount(format!("n ({n}) must exceed discard ({discard})")));
    }
    let mut points = Vec::with_capacity(n - discard);
    let mut current = x0.as_slice().to_vec();
    let mut next = vec![0.0; current.len()];
    if discard == 0 {
        points.push(x0.clone());
    }
    for index in 1..n {
        map(&current, &mut next);
        if !all_finite(&next) {
            return Err(DynamicsError::NonFiniteIterate { index });
        }
        std::mem::swap(&mut current, &mut next);
        if index >= discard {
            points.push(StateVector(current.clone()));
        }
    }
    Ok(MapOrbit { points, discarded: discard })
}
