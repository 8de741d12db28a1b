//! Shipped parameter sets: the default neurons and the calibrated synapse
//! profiles used to assemble winner-take-all circuits.

use serde::{Deserialize, Serialize};

use super::circuit::CircuitSpec;
use super::neuron::{BehaviorClass, NeuronId, NeuronSpec};
use super::stimulus::{Pulse, StimulusProgram};
use super::synapse::{Speed, SynapseKind, SynapseSpec};

const HH_JSON: &str = include_str!("../../data/neurons/hh.json");
const BURSTER_JSON: &str = include_str!("../../data/neurons/rebound_burster.json");
const WTA_JSON: &str = include_str!("../../data/profiles/wta.json");
const REALIZATION_JSON: &str = include_str!("../../data/profiles/realization.json");

fn load_neuron(text: &str, id: NeuronId) -> NeuronSpec {
    let mut n: NeuronSpec = serde_json::from_str(text).expect("shipped neuron parses");
    n.id = id;
    n
}

/// Classical squid-axon neuron (Na, K, leak), noise-free.
pub fn hh_neuron(id: NeuronId) -> NeuronSpec {
    load_neuron(HH_JSON, id)
}

/// The squid-axon neuron with the given behavior label. The same channel set
/// is excitable and rebounds after hyperpolarization.
pub fn hh_neuron_as(id: NeuronId, class: BehaviorClass) -> NeuronSpec {
    let mut n = hh_neuron(id);
    n.behavior_class = class;
    n
}

/// Squid-axon channels plus a T-type calcium current and a slow potassium
/// current: spikes once when depolarized, bursts on release from long
/// hyperpolarization.
pub fn rebound_burster(id: NeuronId) -> NeuronSpec {
    load_neuron(BURSTER_JSON, id)
}

/// Kinetic parameters of one synapse population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynapseParams {
    pub g_syn: f64,
    pub e_syn: f64,
    pub v_half: f64,
    pub slope: f64,
    pub tau_rise: f64,
    pub tau_decay: f64,
}

impl SynapseParams {
    pub fn connect(&self, pre: NeuronId, post: NeuronId, kind: SynapseKind, speed: Speed) -> SynapseSpec {
        SynapseSpec {
            pre,
            post,
            kind,
            speed,
            g_syn: self.g_syn,
            e_syn: self.e_syn,
            v_half: self.v_half,
            slope: self.slope,
            tau_rise: Some(self.tau_rise),
            tau_decay: Some(self.tau_decay),
        }
    }
}

/// Calibrated parameters for a network of rebound-spiking neurons with
/// all-to-all fast inhibition and, optionally, slow excitation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitProfile {
    pub noise_amplitude: f64,
    pub inhibition: SynapseParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub excitation: Option<SynapseParams>,
    /// Initiating pulse.
    pub kick: Pulse,
}

impl CircuitProfile {
    /// Strong, brief inhibition: every release triggers a rebound race, so
    /// the network keeps switching winners on its own.
    pub fn wta() -> Self {
        serde_json::from_str(WTA_JSON).expect("shipped profile parses")
    }

    /// Inhibition too shallow to cause rebound spikes by itself; winner
    /// changes happen only along slow excitatory synapses.
    pub fn realization() -> Self {
        serde_json::from_str(REALIZATION_JSON).expect("shipped profile parses")
    }

    pub fn neuron(&self, id: NeuronId) -> NeuronSpec {
        let mut n = hh_neuron_as(id, BehaviorClass::ReboundSpiking);
        n.noise_amplitude = self.noise_amplitude;
        n
    }

    pub fn inhibitory(&self, pre: NeuronId, post: NeuronId) -> SynapseSpec {
        self.inhibition.connect(pre, post, SynapseKind::Inhibitory, Speed::Fast)
    }

    pub fn excitatory(&self, pre: NeuronId, post: NeuronId) -> Option<SynapseSpec> {
        self.excitation.map(|p| p.connect(pre, post, SynapseKind::Excitatory, Speed::Slow))
    }

    /// Neurons with the given ids, all-to-all inhibition, no self-synapses.
    pub fn wta_circuit(&self, ids: &[NeuronId]) -> CircuitSpec {
        let neurons = ids.iter().map(|id| self.neuron(*id)).collect();
        let mut synapses = Vec::with_capacity(ids.len() * ids.len().saturating_sub(1));
        for pre in ids {
            for post in ids {
                if pre != post {
                    synapses.push(self.inhibitory(*pre, *post));
                }
            }
        }
        CircuitSpec { neurons, synapses }
    }

    pub fn kick(&self, id: NeuronId) -> StimulusProgram {
        StimulusProgram::new().with_pulse(id, self.kick)
    }
}
