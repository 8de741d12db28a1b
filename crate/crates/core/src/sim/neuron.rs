use std::fmt;

use serde::{Deserialize, Serialize};

use super::channel::IonChannel;

/// Integer neuron identifier; event symbols carry it as a suffix (`sigma1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NeuronId(pub u32);

impl fmt::Display for NeuronId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Qualitative behavior of a neuron, which fixes its discrete-event template.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BehaviorClass {
    Lif,
    Excitable,
    ReboundSpiking,
    SpikingReboundBursting,
}

impl BehaviorClass {
    /// Number of mixed (inward/outward) active conductance pairs the class needs.
    pub fn required_mixed_pairs(self) -> usize {
        match self {
            BehaviorClass::Lif => 0,
            BehaviorClass::Excitable | BehaviorClass::ReboundSpiking => 1,
            BehaviorClass::SpikingReboundBursting => 2,
        }
    }
}

impl fmt::Display for BehaviorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BehaviorClass::Lif => "lif",
            BehaviorClass::Excitable => "excitable",
            BehaviorClass::ReboundSpiking => "rebound_spiking",
            BehaviorClass::SpikingReboundBursting => "spiking_rebound_bursting",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Leak {
    /// mS/cm²
    pub g: f64,
    /// mV
    pub e_rev: f64,
}

/// Channels reversing above this potential (mV) count as inward currents.
const INWARD_REVERSAL_MV: f64 = -30.0;
/// Channels reversing below this potential (mV) count as outward currents.
const OUTWARD_REVERSAL_MV: f64 = -60.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeuronSpec {
    pub id: NeuronId,
    #[serde(rename = "class")]
    pub behavior_class: BehaviorClass,
    /// µF/cm²
    pub capacitance: f64,
    pub leak: Leak,
    #[serde(default)]
    pub channels: Vec<IonChannel>,
    /// Standard deviation of the additive current noise, µA/cm².
    #[serde(default)]
    pub noise_amplitude: f64,
}

impl NeuronSpec {
    /// Number of gate variables across all channels.
    pub fn gate_count(&self) -> usize {
        self.channels.iter().map(|c| c.gates().count()).sum()
    }

    fn mixed_pairs(&self) -> usize {
        let active = |c: &&IonChannel| c.g_max > 0.0 && c.gates().next().is_some();
        let inward = self
            .channels
            .iter()
            .filter(active)
            .filter(|c| c.e_rev > INWARD_REVERSAL_MV)
            .count();
        let outward = self
            .channels
            .iter()
            .filter(active)
            .filter(|c| c.e_rev < OUTWARD_REVERSAL_MV)
            .count();
        inward.min(outward)
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.capacitance > 0.0 && self.capacitance.is_finite()) {
            return Err(format!("neuron {}: capacitance must be > 0", self.id));
        }
        if !(self.leak.g >= 0.0 && self.leak.g.is_finite() && self.leak.e_rev.is_finite()) {
            return Err(format!("neuron {}: leak must be finite with g >= 0", self.id));
        }
        if !(self.noise_amplitude >= 0.0 && self.noise_amplitude.is_finite()) {
            return Err(format!("neuron {}: noise_amplitude must be >= 0", self.id));
        }
        for ch in &self.channels {
            ch.validate().map_err(|e| format!("neuron {}: {e}", self.id))?;
        }
        let need = self.behavior_class.required_mixed_pairs();
        let have = self.mixed_pairs();
        if have < need {
            return Err(format!(
                "neuron {}: class `{}` needs {need} mixed conductance pair(s), channel set provides {have}",
                self.id, self.behavior_class
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leak_only(class: BehaviorClass) -> NeuronSpec {
        NeuronSpec {
            id: NeuronId(1),
            behavior_class: class,
            capacitance: 1.0,
            leak: Leak { g: 0.3, e_rev: -65.0 },
            channels: vec![],
            noise_amplitude: 0.0,
        }
    }

    #[test]
    fn class_must_match_channels() {
        let n = leak_only(BehaviorClass::Excitable);
        let err = n.validate().unwrap_err();
        assert!(err.contains("mixed conductance"), "{err}");
    }

    #[test]
    fn passive_membrane_is_a_valid_lif_class() {
        assert!(leak_only(BehaviorClass::Lif).validate().is_ok());
    }

    #[test]
    fn negative_noise_rejected() {
        let mut n = leak_only(BehaviorClass::Excitable);
        n.noise_amplitude = -1.0;
        assert!(n.validate().unwrap_err().contains("noise"));
    }

    #[test]
    fn class_serializes_snake_case() {
        let s = serde_json::to_string(&BehaviorClass::SpikingReboundBursting).unwrap();
        assert_eq!(s, "\"spiking_rebound_bursting\"");
    }
}
