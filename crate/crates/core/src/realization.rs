//! Compiling self-loop-free automata into winner-take-all circuits.
//!
//! Every state becomes a rebound-spiking neuron in an all-to-all inhibitory
//! network, and every transition a slow excitatory synapse from the source
//! state's neuron to the target state's neuron. The neuron of the initial
//! state receives the initiating kick.

use std::collections::{BTreeMap, BTreeSet};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automata::{isomorphic, Automaton, IsoMode, StateId, TransitionKind};
use crate::des::{apply_excitatory_restriction, wta_automaton, wta_state, DesError, Restriction, WtaParams};
use crate::extract::{extract_trace, winner_tokens, ExtractError, ExtractionConfig};
use crate::sim::{simulate, CircuitBundle, CircuitProfile, CircuitSpec, NeuronId, SimConfig, SimError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RealizeError {
    #[error("state {0} has a self-loop; only automata without self-loops can be realized")]
    SelfLoop(String),
    #[error("need at least 2 states, got {0}")]
    TooFewStates(usize),
    #[error("the realization profile has no excitatory synapse parameters")]
    NoExcitation,
    #[error(transparent)]
    Des(#[from] DesError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Extract(#[from] ExtractError),
}

/// One transition and the synapse that implements it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannedSynapse {
    pub event: String,
    pub src: String,
    pub dst: String,
    pub pre: NeuronId,
    pub post: NeuronId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RealizationPlan {
    /// State label to neuron; neurons are numbered 1..N in state order.
    pub state_map: BTreeMap<String, NeuronId>,
    pub synapses: Vec<PlannedSynapse>,
    /// Simulatable circuit with the initiating kick and a default run config.
    pub circuit: CircuitBundle,
}

impl RealizationPlan {
    pub fn neuron_count(&self) -> usize {
        self.state_map.len()
    }

    pub fn circuit_spec(&self) -> CircuitSpec {
        self.circuit.circuit()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

fn neuron_of(s: StateId) -> NeuronId {
    NeuronId(s as u32 + 1)
}

/// Realizes `a` with the shipped realization profile.
pub fn realize(a: &Automaton) -> Result<RealizationPlan, RealizeError> {
    realize_with(a, &CircuitProfile::realization())
}

pub fn realize_with(a: &Automaton, profile: &CircuitProfile) -> Result<RealizationPlan, RealizeError> {
    if let Some(t) = a.transitions().iter().find(|t| t.src == t.dst) {
        return Err(RealizeError::SelfLoop(a.label(t.src).to_owned()));
    }
    if a.state_count() < 2 {
        return Err(RealizeError::TooFewStates(a.state_count()));
    }
    if profile.excitation.is_none() && !a.transitions().is_empty() {
        return Err(RealizeError::NoExcitation);
    }
    let ids: Vec<NeuronId> = (0..a.state_count()).map(neuron_of).collect();
    // Noise breaks ties wherever the next state is not forced.
    let needs_noise = (0..a.state_count()).any(|s| a.out_edges(s).count() != 1);
    let mut profile = profile.clone();
    if !needs_noise {
        profile.noise_amplitude = 0.0;
    }
    let mut circuit = profile.wta_circuit(&ids);
    let mut synapses = Vec::with_capacity(a.transitions().len());
    for t in a.transitions() {
        let (pre, post) = (neuron_of(t.src), neuron_of(t.dst));
        circuit.synapses.push(profile.excitatory(pre, post).expect("checked above"));
        synapses.push(PlannedSynapse {
            event: t.event.clone(),
            src: a.label(t.src).to_owned(),
            dst: a.label(t.dst).to_owned(),
            pre,
            post,
        });
    }
    let state_map = a.states().iter().enumerate().map(|(s, l)| (l.clone(), neuron_of(s))).collect();
    let stimuli = profile.kick(neuron_of(a.initial()));
    let mut config = SimConfig::new(0.01, 1000.0, 0);
    config.record_states = false;
    Ok(RealizationPlan { state_map, synapses, circuit: CircuitBundle::new(circuit, stimuli, config) })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundTripVerdict {
    pub pass: bool,
    /// For each state of the source automaton, the matching winner state.
    pub witness: Option<Vec<String>>,
    /// First structural difference when the check fails.
    pub mismatch: Option<String>,
}

/// The winner-state sub-automaton a realization implements: the WTA
/// automaton over the plan's neurons, with the plan's excitatory edges as the
/// only internal winner-to-winner moves, idle state and external edges
/// dropped.
pub fn realized_internal_automaton(plan: &RealizationPlan) -> Result<Automaton, RealizeError> {
    let n = plan.neuron_count();
    let wta = wta_automaton(&WtaParams::new(n))?;
    let edges: BTreeSet<(usize, usize)> =
        plan.synapses.iter().map(|s| (s.pre.0 as usize, s.post.0 as usize)).collect();
    let restricted = apply_excitatory_restriction(&wta, &edges, Restriction::Complete)?;
    let winners: Vec<StateId> = (1..=n).map(|k| restricted.state_id(&wta_state(k)).expect("winner state")).collect();
    let initial_neuron = plan.circuit.stimuli.pulses.keys().next().map_or(1, |id| id.0 as usize);
    let initial = restricted.state_id(&wta_state(initial_neuron)).expect("winner state");
    Ok(restricted.restrict(&winners, initial, |t| restricted.transition_kind(t) == TransitionKind::Internal))
}

/// Realizes `a`, rebuilds the automaton the circuit implements and compares
/// the two up to state relabeling (which states are connected, initial state
/// fixed).
pub fn round_trip_check(a: &Automaton) -> Result<RoundTripVerdict, RealizeError> {
    let plan = realize(a)?;
    let back = realized_internal_automaton(&plan)?;
    if let Some(w) = isomorphic(a, &back, IsoMode::Structure) {
        let witness = w.into_iter().map(|s| back.label(s).to_owned()).collect();
        return Ok(RoundTripVerdict { pass: true, witness: Some(witness), mismatch: None });
    }
    Ok(RoundTripVerdict { pass: false, witness: None, mismatch: Some(first_mismatch(a, &back)) })
}

/// Compares edges under the plan's own state numbering.
fn first_mismatch(a: &Automaton, back: &Automaton) -> String {
    if a.state_count() != back.state_count() {
        return format!("{} states vs {}", a.state_count(), back.state_count());
    }
    let pairs = |x: &Automaton| -> BTreeSet<(usize, usize)> {
        x.transitions().iter().map(|t| (t.src, t.dst)).collect()
    };
    let (pa, pb) = (pairs(a), pairs(back));
    if let Some((s, d)) = pa.difference(&pb).next() {
        return format!("edge {} -> {} has no counterpart", a.label(*s), a.label(*d));
    }
    if let Some((s, d)) = pb.difference(&pa).next() {
        return format!("extra edge {} -> {}", back.label(*s), back.label(*d));
    }
    "initial states differ".to_owned()
}

/// Winner sequence of one simulated trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub seed: u64,
    pub winners: Vec<NeuronId>,
    /// Winner sequence mapped back to state labels.
    pub states: Vec<String>,
    /// No step with more than one neuron above the spike threshold.
    pub exclusive: bool,
    /// The state sequence starts at the initial state and follows transitions.
    pub follows_automaton: bool,
}

/// Per-trial seeds drawn from a generator seeded with the master seed.
pub fn trial_seeds(master: u64, trials: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    (0..trials).map(|_| rng.next_u64()).collect()
}

/// Automaton over `win<k>` events whose generated strings are the winner
/// sequences (after the first) the realization may produce.
pub fn winner_automaton(a: &Automaton) -> Automaton {
    let mut b = Automaton::builder().initial(a.label(a.initial()));
    for s in a.states() {
        b = b.state(s);
    }
    for t in a.transitions() {
        let event = winner_tokens(&[neuron_of(t.dst)]).remove(0);
        b = b.edge(a.label(t.src), &event, TransitionKind::Internal, a.label(t.dst));
    }
    b.build().expect("destination-labelled edges are deterministic")
}

/// Simulates the realized circuit `trials` times for `t_end` ms and maps
/// each extracted winner sequence back to automaton states.
pub fn realize_and_simulate(
    a: &Automaton,
    trials: usize,
    seed: u64,
    t_end: f64,
) -> Result<Vec<TrialOutcome>, RealizeError> {
    let plan = realize(a)?;
    let circuit = plan.circuit_spec();
    let stimuli = plan.circuit.stimuli.clone();
    let labels: BTreeMap<NeuronId, String> = plan.state_map.iter().map(|(l, id)| (*id, l.clone())).collect();
    let path = winner_automaton(a);
    let initial = neuron_of(a.initial());
    let extraction = ExtractionConfig::default();
    trial_seeds(seed, trials)
        .into_par_iter()
        .map(|trial_seed| {
            let mut config = SimConfig::new(plan.circuit.config.dt, t_end, trial_seed);
            config.record_states = false;
            let result = simulate(&circuit, &stimuli, &config)?;
            let exclusive = (0..result.time.len())
                .all(|i| result.voltages.iter().filter(|v| v[i] >= extraction.spike_threshold).count() <= 1);
            let winners = extract_trace(&result, &circuit, &extraction)?.winners();
            let states = winners.iter().map(|k| labels[k].clone()).collect();
            let follows_automaton = match winners.split_first() {
                None => true,
                Some((first, rest)) => *first == initial && path.accepts(&winner_tokens(rest)),
            };
            Ok(TrialOutcome { seed: trial_seed, winners, states, exclusive, follows_automaton })
        })
        .collect()
}
