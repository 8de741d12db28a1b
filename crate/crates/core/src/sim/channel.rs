//! Voltage-gated ion channels.
//!
//! A channel is a conductor in series with a battery: `g_max * m^p * h^q * (V - E)`.
//! Each gate relaxes toward a voltage-dependent steady state with first-order
//! kinetics. Two parameterizations are supported: the opening/closing rate form
//! used by the classical squid-axon fits, and a direct steady-state/time-constant
//! form that is more convenient for slow calcium and potassium currents.

use serde::{Deserialize, Serialize};

/// Lower and upper ends of the voltage range over which gate time constants
/// must stay positive and finite.
pub const VALIDATION_RANGE_MV: (f64, f64) = (-120.0, 60.0);

/// A voltage-dependent rate (1/ms).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum RateFn {
    /// `rate * exp((v - midpoint) / scale)`
    Exp { rate: f64, midpoint: f64, scale: f64 },
    /// `rate / (1 + exp((midpoint - v) / scale))`
    Sigmoid { rate: f64, midpoint: f64, scale: f64 },
    /// `rate * x / (1 - exp(-x))` with `x = (v - midpoint) / scale`
    ExpLinear { rate: f64, midpoint: f64, scale: f64 },
}

impl RateFn {
    #[inline]
    pub fn eval(&self, v: f64) -> f64 {
        match *self {
            RateFn::Exp { rate, midpoint, scale } => rate * ((v - midpoint) / scale).exp(),
            RateFn::Sigmoid { rate, midpoint, scale } => {
                rate / (1.0 + ((midpoint - v) / scale).exp())
            }
            RateFn::ExpLinear { rate, midpoint, scale } => {
                let x = (v - midpoint) / scale;
                if x.abs() < 1e-6 {
                    // series expansion around the removable singularity
                    rate * (1.0 + 0.5 * x)
                } else {
                    rate * x / (1.0 - (-x).exp())
                }
            }
        }
    }
}

/// Time-constant curve `base + amplitude / cosh((v - v_peak) / width)` in ms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TauCurve {
    pub base: f64,
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default)]
    pub v_peak: f64,
    #[serde(default = "default_width")]
    pub width: f64,
}

fn default_width() -> f64 {
    1.0
}

impl TauCurve {
    #[inline]
    pub fn eval(&self, v: f64) -> f64 {
        self.base + self.amplitude / ((v - self.v_peak) / self.width).cosh()
    }
}

/// Gate kinetics in either parameterization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum GateKinetics {
    /// Opening rate `alpha(v)` and closing rate `beta(v)`.
    Rates { alpha: RateFn, beta: RateFn },
    /// Boltzmann steady state `1 / (1 + exp(-(v - v_half) / slope))` and a
    /// bell-shaped time constant. A negative slope gives an inactivation curve.
    SteadyState { v_half: f64, slope: f64, tau: TauCurve },
}

impl GateKinetics {
    /// Steady-state open fraction and time constant (ms) at `v`.
    #[inline]
    pub fn inf_tau(&self, v: f64) -> (f64, f64) {
        match self {
            GateKinetics::Rates { alpha, beta } => {
                let a = alpha.eval(v);
                let b = beta.eval(v);
                let s = a + b;
                (a / s, 1.0 / s)
            }
            GateKinetics::SteadyState { v_half, slope, tau } => {
                let inf = 1.0 / (1.0 + (-(v - v_half) / slope).exp());
                (inf, tau.eval(v))
            }
        }
    }

    /// Right-hand side of `dx/dt = (x_inf(v) - x) / tau(v)`.
    #[inline]
    pub fn derivative(&self, v: f64, x: f64) -> f64 {
        match self {
            GateKinetics::Rates { alpha, beta } => {
                let a = alpha.eval(v);
                let b = beta.eval(v);
                a * (1.0 - x) - b * x
            }
            GateKinetics::SteadyState { .. } => {
                let (inf, tau) = self.inf_tau(v);
                (inf - x) / tau
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gate {
    pub exponent: u32,
    pub kinetics: GateKinetics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IonChannel {
    pub name: String,
    /// Maximal conductance, mS/cm².
    pub g_max: f64,
    /// Reversal potential, mV.
    pub e_rev: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub activation: Option<Gate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inactivation: Option<Gate>,
}

impl IonChannel {
    pub fn activation_exponent(&self) -> u32 {
        self.activation.as_ref().map_or(0, |g| g.exponent)
    }

    pub fn inactivation_exponent(&self) -> u32 {
        self.inactivation.as_ref().map_or(0, |g| g.exponent)
    }

    /// Gates in state-vector order: activation first, then inactivation.
    pub fn gates(&self) -> impl Iterator<Item = &Gate> {
        self.activation.iter().chain(self.inactivation.iter())
    }

    /// Checks the parameter invariants, returning a description of the first
    /// violation.
    pub fn validate(&self) -> Result<(), String> {
        if !(self.g_max >= 0.0 && self.g_max.is_finite()) {
            return Err(format!("channel `{}`: g_max must be finite and >= 0", self.name));
        }
        if !self.e_rev.is_finite() {
            return Err(format!("channel `{}`: e_rev must be finite", self.name));
        }
        let (lo, hi) = VALIDATION_RANGE_MV;
        for gate in self.gates() {
            let mut v = lo;
            while v <= hi {
                let (inf, tau) = gate.kinetics.inf_tau(v);
                if !(tau > 0.0 && tau.is_finite()) {
                    return Err(format!(
                        "channel `{}`: gate time constant {tau} ms at {v} mV is not strictly positive",
                        self.name
                    ));
                }
                if !(0.0..=1.0).contains(&inf) {
                    return Err(format!(
                        "channel `{}`: steady state {inf} at {v} mV outside [0, 1]",
                        self.name
                    ));
                }
                v += 0.5;
            }
        }
        Ok(())
    }

    /// Outward ionic current (µA/cm²) for the given gate values.
    #[inline]
    pub fn current(&self, v: f64, gates: &[f64]) -> f64 {
        let mut g = self.g_max;
        let mut k = 0;
        if let Some(a) = &self.activation {
            g *= gates[k].powi(a.exponent as i32);
            k += 1;
        }
        if let Some(i) = &self.inactivation {
            g *= gates[k].powi(i.exponent as i32);
        }
        g * (v - self.e_rev)
    }
}
