use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::neuron::{NeuronId, NeuronSpec};
use super::stimulus::StimulusProgram;
use super::synapse::SynapseSpec;
use super::SimError;

/// Neurons plus synaptic interconnections.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitSpec {
    pub neurons: Vec<NeuronSpec>,
    #[serde(default)]
    pub synapses: Vec<SynapseSpec>,
}

impl CircuitSpec {
    pub fn neuron(&self, id: NeuronId) -> Option<&NeuronSpec> {
        self.neurons.iter().find(|n| n.id == id)
    }

    pub fn index_of(&self, id: NeuronId) -> Option<usize> {
        self.neurons.iter().position(|n| n.id == id)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.neurons.is_empty() {
            return Err(SimError::Validation("circuit has no neurons".into()));
        }
        let mut ids = BTreeSet::new();
        for n in &self.neurons {
            if !ids.insert(n.id) {
                return Err(SimError::Validation(format!("duplicate neuron id {}", n.id)));
            }
            n.validate().map_err(SimError::Validation)?;
        }
        for s in &self.synapses {
            s.validate().map_err(SimError::Validation)?;
            for end in [s.pre, s.post] {
                if !ids.contains(&end) {
                    return Err(SimError::Validation(format!(
                        "synapse {}->{} references unknown neuron {end}",
                        s.pre, s.post
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn validate_stimulus(&self, stimulus: &StimulusProgram) -> Result<(), SimError> {
        stimulus.validate().map_err(SimError::Validation)?;
        for id in stimulus.pulses.keys() {
            if self.neuron(*id).is_none() {
                return Err(SimError::Validation(format!("stimulus targets unknown neuron {id}")));
            }
        }
        Ok(())
    }
}

fn default_dt() -> f64 {
    0.01
}

fn default_record() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Integration step, ms.
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// End time, ms.
    pub t_end: f64,
    #[serde(default)]
    pub seed: u64,
    /// Keep gate and synaptic-activation traces. Voltages are always kept.
    #[serde(default = "default_record", skip_serializing_if = "Clone::clone")]
    pub record_states: bool,
}

impl SimConfig {
    pub fn new(dt: f64, t_end: f64, seed: u64) -> Self {
        Self { dt, t_end, seed, record_states: true }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(SimError::Validation(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.t_end >= self.dt && self.t_end.is_finite()) {
            return Err(SimError::Validation(format!(
                "t_end must be >= dt, got t_end={} dt={}",
                self.t_end, self.dt
            )));
        }
        Ok(())
    }

    /// Number of integration steps.
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// The single-document circuit file: `neurons`, `synapses`, `stimuli`, `config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitBundle {
    pub neurons: Vec<NeuronSpec>,
    #[serde(default)]
    pub synapses: Vec<SynapseSpec>,
    #[serde(default)]
    pub stimuli: StimulusProgram,
    pub config: SimConfig,
}

impl CircuitBundle {
    pub fn new(circuit: CircuitSpec, stimuli: StimulusProgram, config: SimConfig) -> Self {
        Self { neurons: circuit.neurons, synapses: circuit.synapses, stimuli, config }
    }

    pub fn circuit(&self) -> CircuitSpec {
        CircuitSpec { neurons: self.neurons.clone(), synapses: self.synapses.clone() }
    }

    /// Parses and validates a bundle. Errors carry the line and column.
    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let bundle: CircuitBundle = serde_json::from_str(text).map_err(|e| SimError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let circuit = bundle.circuit();
        circuit.validate()?;
        circuit.validate_stimulus(&bundle.stimuli)?;
        bundle.config.validate()?;
        Ok(bundle)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SimError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bundle serializes")
    }
}
