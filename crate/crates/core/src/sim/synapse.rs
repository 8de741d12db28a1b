use std::fmt;

use serde::{Deserialize, Serialize};

use super::neuron::NeuronId;

/// Excitatory reversal potentials must sit at or above this value (mV), i.e.
/// above the spike-initiation band.
pub const EXCITATORY_MIN_REVERSAL_MV: f64 = -40.0;
/// Inhibitory reversal potentials must sit at or below this value (mV), i.e.
/// below the resting band.
pub const INHIBITORY_MAX_REVERSAL_MV: f64 = -68.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynapseKind {
    Excitatory,
    Inhibitory,
}

impl fmt::Display for SynapseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SynapseKind::Excitatory => "excitatory",
            SynapseKind::Inhibitory => "inhibitory",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Speed {
    Fast,
    Slow,
}

impl Speed {
    /// Default (rise, decay) time constants in ms.
    pub fn default_time_constants(self) -> (f64, f64) {
        match self {
            Speed::Fast => (0.5, 5.0),
            Speed::Slow => (5.0, 100.0),
        }
    }
}

fn default_v_half() -> f64 {
    -20.0
}

fn default_slope() -> f64 {
    2.0
}

/// A chemical synapse with first-order activation kinetics driven by a
/// sigmoid of the presynaptic voltage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynapseSpec {
    pub pre: NeuronId,
    pub post: NeuronId,
    pub kind: SynapseKind,
    pub speed: Speed,
    /// mS/cm²
    pub g_syn: f64,
    /// mV
    pub e_syn: f64,
    /// Presynaptic half-activation voltage, mV.
    #[serde(default = "default_v_half")]
    pub v_half: f64,
    /// Presynaptic activation slope, mV.
    #[serde(default = "default_slope")]
    pub slope: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_rise: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_decay: Option<f64>,
}

impl SynapseSpec {
    pub fn tau_rise(&self) -> f64 {
        self.tau_rise.unwrap_or(self.speed.default_time_constants().0)
    }

    pub fn tau_decay(&self) -> f64 {
        self.tau_decay.unwrap_or(self.speed.default_time_constants().1)
    }

    /// Steady-state activation for a presynaptic voltage.
    #[inline]
    pub fn activation_inf(&self, v_pre: f64) -> f64 {
        1.0 / (1.0 + (-(v_pre - self.v_half) / self.slope).exp())
    }

    /// `ds/dt`: relaxes toward `activation_inf(v_pre)` with the rise time
    /// constant when opening and the decay time constant when closing.
    #[inline]
    pub fn activation_derivative(&self, v_pre: f64, s: f64) -> f64 {
        let target = self.activation_inf(v_pre);
        let tau = if target > s { self.tau_rise() } else { self.tau_decay() };
        (target - s) / tau
    }

    pub fn validate(&self) -> Result<(), String> {
        let name = format!("synapse {}->{}", self.pre, self.post);
        if self.pre == self.post {
            return Err(format!("{name}: self-synapses are not allowed"));
        }
        if !(self.g_syn >= 0.0 && self.g_syn.is_finite()) {
            return Err(format!("{name}: g_syn must be finite and >= 0"));
        }
        if !(self.slope > 0.0 && self.slope.is_finite() && self.v_half.is_finite()) {
            return Err(format!("{name}: activation slope must be > 0"));
        }
        if !(self.tau_rise() > 0.0 && self.tau_decay() > 0.0) {
            return Err(format!("{name}: time constants must be > 0"));
        }
        match self.kind {
            SynapseKind::Excitatory if self.e_syn < EXCITATORY_MIN_REVERSAL_MV => Err(format!(
                "{name}: excitatory reversal {} mV below {EXCITATORY_MIN_REVERSAL_MV} mV",
                self.e_syn
            )),
            SynapseKind::Inhibitory if self.e_syn > INHIBITORY_MAX_REVERSAL_MV => Err(format!(
                "{name}: inhibitory reversal {} mV above {INHIBITORY_MAX_REVERSAL_MV} mV",
                self.e_syn
            )),
            _ => Ok(()),
        }
    }
}

/// Postsynaptic current (µA/cm², positive depolarizes):
/// `g_syn * activation * (e_syn - v_post)`.
///
/// The presynaptic voltage only enters through the activation dynamics.
#[inline]
pub fn synaptic_current(syn: &SynapseSpec, _v_pre: f64, v_post: f64, activation: f64) -> f64 {
    syn.g_syn * activation * (syn.e_syn - v_post)
}
