use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::neuron::NeuronId;

/// A rectangular current pulse. Positive amplitudes depolarize (excitatory),
/// negative amplitudes hyperpolarize (inhibitory).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pulse {
    /// ms
    pub start: f64,
    /// ms
    pub duration: f64,
    /// µA/cm²
    pub amplitude: f64,
}

impl Pulse {
    pub fn end(&self) -> f64 {
        self.start + self.duration
    }

    #[inline]
    pub fn is_active(&self, t: f64) -> bool {
        t >= self.start && t < self.end()
    }
}

/// External current program, keyed by neuron.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StimulusProgram {
    pub pulses: BTreeMap<NeuronId, Vec<Pulse>>,
}

impl StimulusProgram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a pulse, keeping each neuron's list sorted by start time.
    pub fn with_pulse(mut self, neuron: NeuronId, pulse: Pulse) -> Self {
        self.push(neuron, pulse);
        self
    }

    pub fn push(&mut self, neuron: NeuronId, pulse: Pulse) {
        let list = self.pulses.entry(neuron).or_default();
        list.push(pulse);
        list.sort_by(|a, b| a.start.total_cmp(&b.start));
    }

    pub fn pulses_for(&self, neuron: NeuronId) -> &[Pulse] {
        self.pulses.get(&neuron).map_or(&[], Vec::as_slice)
    }

    /// Total external current into `neuron` at time `t`.
    #[inline]
    pub fn current_at(&self, neuron: NeuronId, t: f64) -> f64 {
        self.pulses_for(neuron)
            .iter()
            .filter(|p| p.is_active(t))
            .map(|p| p.amplitude)
            .sum()
    }

    pub fn validate(&self) -> Result<(), String> {
        for (id, pulses) in &self.pulses {
            let mut sorted = pulses.clone();
            sorted.sort_by(|a, b| a.start.total_cmp(&b.start));
            for p in &sorted {
                if !(p.start.is_finite() && p.amplitude.is_finite()) {
                    return Err(format!("stimulus for neuron {id}: non-finite pulse"));
                }
                if !(p.duration > 0.0 && p.duration.is_finite()) {
                    return Err(format!(
                        "stimulus for neuron {id}: pulse at {} ms has non-positive duration",
                        p.start
                    ));
                }
            }
            for w in sorted.windows(2) {
                if w[1].start < w[0].end() {
                    return Err(format!(
                        "stimulus for neuron {id}: pulses at {} ms and {} ms overlap",
                        w[0].start, w[1].start
                    ));
                }
            }
        }
        Ok(())
    }
}
