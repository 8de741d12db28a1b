//! Winner-take-all automata and excitatory ordering.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::DesError;
use crate::automata::{Automaton, TransitionKind};

/// Label of the collective idle state.
pub const WTA_IDLE: &str = "i";

/// Label of the state in which neuron `k` (1-based) is the winner.
pub fn wta_state(k: usize) -> String {
    format!("s{k}")
}

/// Event of the edge between two WTA states; 0 stands for idle.
pub fn wta_event(from: usize, to: usize) -> String {
    let part = |k: usize| if k == 0 { WTA_IDLE.to_owned() } else { k.to_string() };
    format!("w_{}_{}", part(from), part(to))
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WtaParams {
    pub n: usize,
    /// Designated winner-to-winner edges, 1-based.
    #[serde(default)]
    pub excitatory_edges: BTreeSet<(usize, usize)>,
}

impl WtaParams {
    pub fn new(n: usize) -> Self {
        Self { n, excitatory_edges: BTreeSet::new() }
    }

    pub fn validate(&self) -> Result<(), DesError> {
        if self.n < 2 {
            return Err(DesError::Wta(format!("need at least 2 neurons, got {}", self.n)));
        }
        validate_edges(self.n, &self.excitatory_edges)
    }
}

fn validate_edges(n: usize, edges: &BTreeSet<(usize, usize)>) -> Result<(), DesError> {
    for &(a, b) in edges {
        if a == b {
            return Err(DesError::Wta(format!("self-loop s{a} -> s{b}")));
        }
        if a == 0 || b == 0 || a > n || b > n {
            return Err(DesError::Wta(format!("edge s{a} -> s{b} outside s1..s{n}")));
        }
    }
    Ok(())
}

/// How non-designated winner-to-winner edges are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Restriction {
    /// Only states with at least one designated outgoing edge lose their
    /// other internal moves; states without designated edges keep the free
    /// inhibitory race.
    #[default]
    Partial,
    /// Every non-designated winner-to-winner edge needs external input. This
    /// is the circuit obtained when excitation is the only way to hand over.
    Complete,
}

/// Idle state plus one winner state per neuron, with an edge for every
/// ordered pair of distinct states. Idle/winner edges are
/// external-inhibitory, winner-to-winner edges internal. Designated edges in
/// `params` are then applied with [`Restriction::Partial`].
pub fn wta_automaton(params: &WtaParams) -> Result<Automaton, DesError> {
    params.validate()?;
    let n = params.n;
    let mut b = Automaton::builder().initial(WTA_IDLE);
    for k in 1..=n {
        b = b.state(&wta_state(k));
    }
    for k in 1..=n {
        b = b
            .edge(WTA_IDLE, &wta_event(0, k), TransitionKind::ExternalInhibitory, &wta_state(k))
            .edge(&wta_state(k), &wta_event(k, 0), TransitionKind::ExternalInhibitory, WTA_IDLE);
    }
    for j in 1..=n {
        for k in (1..=n).filter(|k| *k != j) {
            b = b.edge(&wta_state(j), &wta_event(j, k), TransitionKind::Internal, &wta_state(k));
        }
    }
    let a = b.build()?;
    if params.excitatory_edges.is_empty() {
        Ok(a)
    } else {
        apply_excitatory_restriction(&a, &params.excitatory_edges, Restriction::Partial)
    }
}

/// Keeps the designated winner-to-winner edges internal and turns the
/// competing ones external-excitatory. With [`Restriction::Partial`] only
/// states that have a designated outgoing edge are affected.
pub fn apply_excitatory_restriction(
    wta: &Automaton,
    edges: &BTreeSet<(usize, usize)>,
    mode: Restriction,
) -> Result<Automaton, DesError> {
    let n = wta.state_count().saturating_sub(1);
    validate_edges(n, edges)?;
    let sources: BTreeSet<usize> = edges.iter().map(|e| e.0).collect();
    let mut kinds = BTreeMap::new();
    for j in 1..=n {
        if mode == Restriction::Partial && !sources.contains(&j) {
            continue;
        }
        for k in (1..=n).filter(|k| *k != j) {
            let event = wta_event(j, k);
            if wta.kind(&event).is_none() {
                return Err(DesError::Wta(format!("no WTA edge {event}")));
            }
            let kind = if edges.contains(&(j, k)) {
                TransitionKind::Internal
            } else {
                TransitionKind::ExternalExcitatory
            };
            kinds.insert(event, kind);
        }
    }
    Ok(wta.with_kinds(&kinds))
}
