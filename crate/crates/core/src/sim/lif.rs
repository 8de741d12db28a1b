//! Leaky integrator with reset: `dx/dt = -alpha x + u` while `x <= theta`,
//! and `x(t+) = 0` once `x > theta`.

use serde::{Deserialize, Serialize};

use super::integrator::Rk4;
use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LifSpec {
    /// Leak rate, 1/ms.
    pub alpha: f64,
    /// Reset threshold.
    pub theta: f64,
}

impl LifSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(SimError::Validation("LIF alpha must be > 0".into()));
        }
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return Err(SimError::Validation("LIF theta must be > 0".into()));
        }
        Ok(())
    }
}

/// Piecewise-constant input: `(start time, value)` breakpoints. The value
/// before the first breakpoint is zero.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseConstant {
    pub breakpoints: Vec<(f64, f64)>,
}

impl PiecewiseConstant {
    pub fn constant(value: f64) -> Self {
        Self { breakpoints: vec![(0.0, value)] }
    }

    pub fn at(&self, t: f64) -> f64 {
        self.breakpoints
            .iter()
            .take_while(|(start, _)| *start <= t)
            .last()
            .map_or(0.0, |(_, v)| *v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Initial state.
    #[serde(default)]
    pub x0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifTrace {
    pub time: Vec<f64>,
    pub x: Vec<f64>,
    /// Times (end of the step on which `x > theta` was detected), ms.
    pub resets: Vec<f64>,
}

pub fn simulate_lif(spec: &LifSpec, input: &PiecewiseConstant, config: &LifConfig) -> Result<LifTrace, SimError> {
    spec.validate()?;
    if !(config.dt > 0.0 && config.t_end >= config.dt && config.x0.is_finite()) {
        return Err(SimError::Validation("LIF config needs dt > 0 and t_end >= dt".into()));
    }
    let steps = (config.t_end / config.dt).round() as usize;
    let mut time = Vec::with_capacity(steps + 1);
    let mut xs = Vec::with_capacity(steps + 1);
    let mut resets = Vec::new();
    let mut y = [config.x0];
    let mut rk = Rk4::new(1);
    time.push(0.0);
    xs.push(y[0]);
    for i in 0..steps {
        let t = i as f64 * config.dt;
        let u = input.at(t);
        rk.step(t, config.dt, &mut y, |_, y, d| d[0] = -spec.alpha * y[0] + u);
        let t_next = (i + 1) as f64 * config.dt;
        if y[0] > spec.theta {
            y[0] = 0.0;
            resets.push(t_next);
        }
        time.push(t_next);
        xs.push(y[0]);
    }
    Ok(LifTrace { time, x: xs, resets })
}
