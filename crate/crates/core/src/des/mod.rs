//! Discrete-event models of neurons and networks.
//!
//! Each neuron class has a template automaton whose states are its rest and
//! active regimes. A synapse turns the postsynaptic neuron's externally
//! driven onset into an internal transition synchronized with a presynaptic
//! event; neurons nobody can stimulate lose their remaining external
//! transitions. The network model is the composition of the rewritten
//! neurons.

mod wta;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use wta::{apply_excitatory_restriction, wta_automaton, wta_event, wta_state, Restriction, WtaParams, WTA_IDLE};

use crate::automata::{compose_all, Automaton, AutomatonError, StateId, TransitionKind};
use crate::extract::{EventLabel, Symbol};
use crate::sim::{BehaviorClass, CircuitSpec, NeuronId, Speed, StimulusProgram, SynapseKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DesError {
    #[error("invalid topology: {0}")]
    Validation(String),
    #[error("synapse {pre}->{post}: {reason}")]
    UnsupportedRewrite { pre: NeuronId, post: NeuronId, reason: String },
    #[error("synapse {pre}->{post} targets a rebound-bursting neuron; interconnection rules for bursting neurons are not defined")]
    OutOfScope { pre: NeuronId, post: NeuronId },
    #[error("invalid WTA parameters: {0}")]
    Wta(String),
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("io: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyNeuron {
    pub id: NeuronId,
    pub class: BehaviorClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySynapse {
    pub pre: NeuronId,
    pub post: NeuronId,
    pub kind: SynapseKind,
    pub speed: Speed,
}

/// Who is connected to whom, and which neurons the outside world can drive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkTopology {
    pub neurons: Vec<TopologyNeuron>,
    #[serde(default)]
    pub synapses: Vec<TopologySynapse>,
    #[serde(default)]
    pub interactable: BTreeSet<NeuronId>,
}

impl NetworkTopology {
    /// Topology of a circuit; the interactable neurons are those the stimulus
    /// program targets.
    pub fn from_circuit(circuit: &CircuitSpec, stimulus: &StimulusProgram) -> Self {
        Self {
            neurons: circuit.neurons.iter().map(|n| TopologyNeuron { id: n.id, class: n.behavior_class }).collect(),
            synapses: circuit
                .synapses
                .iter()
                .map(|s| TopologySynapse { pre: s.pre, post: s.post, kind: s.kind, speed: s.speed })
                .collect(),
            interactable: stimulus.pulses.iter().filter(|(_, p)| !p.is_empty()).map(|(id, _)| *id).collect(),
        }
    }

    pub fn class_of(&self, id: NeuronId) -> Option<BehaviorClass> {
        self.neurons.iter().find(|n| n.id == id).map(|n| n.class)
    }

    pub fn validate(&self) -> Result<(), DesError> {
        if self.neurons.is_empty() {
            return Err(DesError::Validation("no neurons".into()));
        }
        let mut ids = BTreeSet::new();
        for n in &self.neurons {
            if !ids.insert(n.id) {
                return Err(DesError::Validation(format!("duplicate neuron {}", n.id)));
            }
        }
        for s in &self.synapses {
            if s.pre == s.post {
                return Err(DesError::Validation(format!("self-synapse on neuron {}", s.pre)));
            }
            for end in [s.pre, s.post] {
                if !ids.contains(&end) {
                    return Err(DesError::Validation(format!("synapse references unknown neuron {end}")));
                }
            }
        }
        if let Some(x) = self.interactable.iter().find(|x| !ids.contains(x)) {
            return Err(DesError::Validation(format!("interactable neuron {x} does not exist")));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, DesError> {
        let t: Self = serde_json::from_str(text)
            .map_err(|e| DesError::Parse { line: e.line(), column: e.column(), message: e.to_string() })?;
        t.validate()?;
        Ok(t)
    }

    pub fn load(path: &Path) -> Result<Self, DesError> {
        let text = std::fs::read_to_string(path).map_err(|e| DesError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

/// Event token for a neuron, e.g. `sigma1`.
pub fn event(symbol: Symbol, id: NeuronId) -> String {
    EventLabel::new(symbol, id).token()
}

pub fn idle_state(id: NeuronId) -> String {
    format!("i{id}")
}

pub fn spiking_state(id: NeuronId) -> String {
    format!("s{id}")
}

pub fn bursting_state(id: NeuronId) -> String {
    format!("b{id}")
}

/// Phase letter (`i`, `s`, `b`) of neuron `id` inside a composite state
/// label such as `i1s2`.
pub fn phase_of(label: &str, id: NeuronId) -> Option<char> {
    let want = id.to_string();
    let bytes = label.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let letter = bytes[i];
        let start = i + 1;
        let mut end = start;
        while end < bytes.len() && bytes[end].is_ascii_digit() {
            end += 1;
        }
        if letter.is_ascii_alphabetic() && end > start && label[start..end] == want {
            return Some(letter as char);
        }
        i = end.max(i + 1);
    }
    None
}

/// Template automaton of a single neuron.
pub fn neuron_template(class: BehaviorClass, id: NeuronId) -> Automaton {
    use TransitionKind::*;
    let (i, s, b) = (idle_state(id), spiking_state(id), bursting_state(id));
    let ev = |sym| event(sym, id);
    let builder = Automaton::builder().initial(&i);
    let builder = match class {
        BehaviorClass::Lif => builder.edge(&i, &ev(Symbol::Sigma), ExternalExcitatory, &i),
        BehaviorClass::Excitable => builder
            .edge(&i, &ev(Symbol::Sigma), ExternalExcitatory, &s)
            .edge(&s, &ev(Symbol::Eta), Internal, &i),
        BehaviorClass::ReboundSpiking => builder
            .edge(&i, &ev(Symbol::Sigma), ExternalExcitatory, &s)
            .edge(&i, &ev(Symbol::RhoRebound), ExternalInhibitory, &s)
            .edge(&s, &ev(Symbol::Eta), Internal, &i),
        BehaviorClass::SpikingReboundBursting => builder
            .edge(&i, &ev(Symbol::Sigma), ExternalExcitatory, &s)
            .edge(&i, &ev(Symbol::Beta), ExternalInhibitory, &b)
            .edge(&s, &ev(Symbol::Eta), Internal, &i)
            .edge(&b, &ev(Symbol::Rho), Internal, &i),
    };
    builder.build().expect("templates are well formed")
}

/// Events on which a neuron leaves its idle state.
fn onset_events(a: &Automaton, id: NeuronId) -> Vec<(String, TransitionKind)> {
    let idle = a.state_id(&idle_state(id)).expect("template idle state");
    a.out_edges(idle)
        .filter(|t| t.dst != idle)
        .map(|t| (t.event.clone(), a.transition_kind(t)))
        .collect()
}

/// The template's own external events (`sigma<id>`, `rho_rebound<id>`,
/// `beta<id>`).
fn own_external_events(a: &Automaton, id: NeuronId) -> BTreeSet<String> {
    [Symbol::Sigma, Symbol::RhoRebound, Symbol::Beta]
        .into_iter()
        .map(|s| event(s, id))
        .filter(|e| a.kind(e).is_some_and(TransitionKind::is_external))
        .collect()
}

/// Rewrites neuron templates for the topology's synapses.
///
/// Neurons outside the interactable set first lose their own external
/// transitions. Then, for `pre -e-> post`, `post` gains internal idle->spiking
/// edges on every onset event of `pre` (its own and those it inherits from
/// upstream excitation, to a fixpoint); for `pre -i-> post`, `post` gains an
/// idle->spiking edge on each return-to-rest event of `pre`. Synchronized
/// events keep the kind they have in the presynaptic neuron.
pub fn apply_synapses(
    topology: &NetworkTopology,
    templates: &BTreeMap<NeuronId, Automaton>,
) -> Result<BTreeMap<NeuronId, Automaton>, DesError> {
    topology.validate()?;
    for s in &topology.synapses {
        match topology.class_of(s.post).expect("validated") {
            BehaviorClass::Lif => {
                return Err(DesError::UnsupportedRewrite {
                    pre: s.pre,
                    post: s.post,
                    reason: "a leaky integrator has no onset transition to rewrite".into(),
                })
            }
            BehaviorClass::SpikingReboundBursting => return Err(DesError::OutOfScope { pre: s.pre, post: s.post }),
            _ => {}
        }
        if s.kind == SynapseKind::Inhibitory && topology.class_of(s.pre) == Some(BehaviorClass::Lif) {
            return Err(DesError::UnsupportedRewrite {
                pre: s.pre,
                post: s.post,
                reason: "a leaky integrator has no return-to-rest event to synchronize with".into(),
            });
        }
    }

    let mut out = BTreeMap::new();
    for n in &topology.neurons {
        let t = templates
            .get(&n.id)
            .ok_or_else(|| DesError::Validation(format!("no template for neuron {}", n.id)))?;
        let pruned = if topology.interactable.contains(&n.id) {
            t.clone()
        } else {
            t.without_events(&own_external_events(t, n.id))
        };
        out.insert(n.id, pruned);
    }

    for s in topology.synapses.iter().filter(|s| s.kind == SynapseKind::Inhibitory) {
        let pre = &out[&s.pre];
        let returns: Vec<(String, TransitionKind)> = [Symbol::Eta, Symbol::Rho]
            .into_iter()
            .map(|sym| event(sym, s.pre))
            .filter_map(|e| pre.kind(&e).map(|k| (e, k)))
            .collect();
        add_onsets(&mut out, s.post, &returns)?;
    }
    // Excitation propagates onsets downstream; iterate until nothing changes.
    loop {
        let before: usize = out.values().map(|a| a.transitions().len()).sum();
        for s in topology.synapses.iter().filter(|s| s.kind == SynapseKind::Excitatory) {
            let onsets = onset_events(&out[&s.pre], s.pre);
            add_onsets(&mut out, s.post, &onsets)?;
        }
        let after: usize = out.values().map(|a| a.transitions().len()).sum();
        if after == before {
            break;
        }
    }
    Ok(out)
}

fn add_onsets(
    automata: &mut BTreeMap<NeuronId, Automaton>,
    post: NeuronId,
    events: &[(String, TransitionKind)],
) -> Result<(), DesError> {
    let a = &automata[&post];
    let idle: StateId = a.state_id(&idle_state(post)).expect("template idle state");
    let spiking: StateId = a.state_id(&spiking_state(post)).expect("post has a spiking state");
    let new: Vec<_> = events
        .iter()
        .filter(|(e, _)| a.step(idle, e).is_none())
        .map(|(e, k)| (idle, e.clone(), *k, spiking))
        .collect();
    if !new.is_empty() {
        let rewritten = a.with_transitions(new)?;
        automata.insert(post, rewritten);
    }
    Ok(())
}

/// Template per neuron, rewritten for the synapses, composed in id order and
/// restricted to its accessible part.
pub fn build_network_des(topology: &NetworkTopology) -> Result<Automaton, DesError> {
    let templates: BTreeMap<NeuronId, Automaton> =
        topology.neurons.iter().map(|n| (n.id, neuron_template(n.class, n.id))).collect();
    let rewritten = apply_synapses(topology, &templates)?;
    Ok(compose_all(rewritten.values())?.accessible())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::compose;

    fn rs(id: u32) -> TopologyNeuron {
        TopologyNeuron { id: NeuronId(id), class: BehaviorClass::ReboundSpiking }
    }

    fn syn(pre: u32, post: u32, kind: SynapseKind) -> TopologySynapse {
        TopologySynapse { pre: NeuronId(pre), post: NeuronId(post), kind, speed: Speed::Fast }
    }

    fn topo(neurons: Vec<TopologyNeuron>, synapses: Vec<TopologySynapse>, interactable: &[u32]) -> NetworkTopology {
        NetworkTopology { neurons, synapses, interactable: interactable.iter().map(|i| NeuronId(*i)).collect() }
    }

    #[test]
    fn template_sizes() {
        let cases = [
            (BehaviorClass::Lif, 1, 1),
            (BehaviorClass::Excitable, 2, 2),
            (BehaviorClass::ReboundSpiking, 2, 3),
            (BehaviorClass::SpikingReboundBursting, 3, 4),
        ];
        for (class, states, transitions) in cases {
            let a = neuron_template(class, NeuronId(1));
            assert_eq!((a.state_count(), a.transitions().len()), (states, transitions), "{class}");
        }
    }

    #[test]
    fn phase_lookup_in_composite_labels() {
        assert_eq!(phase_of("i1s2", NeuronId(2)), Some('s'));
        assert_eq!(phase_of("i1s2", NeuronId(1)), Some('i'));
        assert_eq!(phase_of("i1s12", NeuronId(1)), Some('i'));
        assert_eq!(phase_of("i1s12", NeuronId(12)), Some('s'));
        assert_eq!(phase_of("i1s2", NeuronId(3)), None);
    }

    #[test]
    fn empty_synapse_set_keeps_interactable_templates() {
        let t = topo(vec![rs(1), rs(2)], vec![], &[1, 2]);
        let templates: BTreeMap<_, _> =
            t.neurons.iter().map(|n| (n.id, neuron_template(n.class, n.id))).collect();
        assert_eq!(apply_synapses(&t, &templates).unwrap(), templates);
    }

    #[test]
    fn pruning_removes_own_externals_only() {
        let t = topo(vec![rs(1), rs(2)], vec![syn(1, 2, SynapseKind::Excitatory)], &[1]);
        let templates: BTreeMap<_, _> =
            t.neurons.iter().map(|n| (n.id, neuron_template(n.class, n.id))).collect();
        let out = apply_synapses(&t, &templates).unwrap();
        let n2 = &out[&NeuronId(2)];
        let events: Vec<_> = n2.alphabet().keys().cloned().collect();
        assert_eq!(events, ["eta2", "rho_rebound1", "sigma1"]);
        assert_eq!(n2.kind("sigma1"), Some(TransitionKind::ExternalExcitatory));
    }

    #[test]
    fn excitation_chains_propagate_onsets() {
        let t = topo(
            vec![rs(1), rs(2), rs(3)],
            vec![syn(2, 3, SynapseKind::Excitatory), syn(1, 2, SynapseKind::Excitatory)],
            &[1],
        );
        let templates: BTreeMap<_, _> =
            t.neurons.iter().map(|n| (n.id, neuron_template(n.class, n.id))).collect();
        let out = apply_synapses(&t, &templates).unwrap();
        assert!(out[&NeuronId(3)].alphabet().contains_key("sigma1"));
    }

    #[test]
    fn rejected_rewrites() {
        let lif = TopologyNeuron { id: NeuronId(2), class: BehaviorClass::Lif };
        let t = topo(vec![rs(1), lif], vec![syn(1, 2, SynapseKind::Excitatory)], &[1]);
        assert!(matches!(build_network_des(&t), Err(DesError::UnsupportedRewrite { .. })));
        let lif_pre = TopologyNeuron { id: NeuronId(1), class: BehaviorClass::Lif };
        let t = topo(vec![lif_pre, rs(2)], vec![syn(1, 2, SynapseKind::Inhibitory)], &[1]);
        assert!(matches!(build_network_des(&t), Err(DesError::UnsupportedRewrite { .. })));
        let srb = TopologyNeuron { id: NeuronId(2), class: BehaviorClass::SpikingReboundBursting };
        let t = topo(vec![rs(1), srb], vec![syn(1, 2, SynapseKind::Inhibitory)], &[1]);
        let err = build_network_des(&t).unwrap_err();
        assert!(matches!(err, DesError::OutOfScope { .. }));
        assert!(err.to_string().contains("bursting"));
    }

    #[test]
    fn topology_validation() {
        let t = topo(vec![rs(1)], vec![syn(1, 1, SynapseKind::Excitatory)], &[]);
        assert!(t.validate().is_err());
        let t = topo(vec![rs(1)], vec![], &[4]);
        assert!(t.validate().is_err());
        let json = r#"{"neurons":[{"id":1,"class":"excitable"}],"interactable":[1],"extra":0}"#;
        assert!(NetworkTopology::from_json(json).is_err());
    }

    #[test]
    fn single_neuron_network_is_its_template() {
        let t = topo(vec![rs(1)], vec![], &[1]);
        assert_eq!(build_network_des(&t).unwrap(), neuron_template(BehaviorClass::ReboundSpiking, NeuronId(1)));
    }

    #[test]
    fn bursting_presynaptic_neuron_synchronizes_on_both_returns() {
        let srb = TopologyNeuron { id: NeuronId(1), class: BehaviorClass::SpikingReboundBursting };
        let t = topo(vec![srb, rs(2)], vec![syn(1, 2, SynapseKind::Inhibitory)], &[1]);
        let a = build_network_des(&t).unwrap();
        assert!(a.accepts(&["beta1", "rho1", "eta2"]));
        assert!(a.accepts(&["sigma1", "eta1", "eta2"]));
        let b = compose(&neuron_template(BehaviorClass::Excitable, NeuronId(5)), &a).unwrap();
        assert!(b.state_count() > a.state_count());
    }
}
