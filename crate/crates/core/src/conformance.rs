//! Checking extracted event traces against network automata.

use serde::Serialize;

use crate::automata::{Automaton, StateId};
use crate::des::phase_of;
use crate::extract::{Event, EventTrace, Occurrence, Symbol};

/// Outcome of replaying a trace on an automaton.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConformanceReport {
    pub conforms: bool,
    /// Observable untimed string, one token per event.
    pub tokens: Vec<String>,
    /// Number of leading tokens the automaton accepted.
    pub accepted: usize,
    pub failure: Option<Failure>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    /// ms
    pub time: f64,
    pub event: String,
    pub state: String,
    pub reason: String,
}

impl ConformanceReport {
    pub fn accepted_prefix(&self) -> &[String] {
        &self.tokens[..self.accepted]
    }
}

/// Replays the observable part of `trace` on `des`.
///
/// Every observable event must be generated from the current state; the
/// parts of a composite event may occur in any order. A synaptically driven
/// onset of neuron `k` is not an event of its own, so it must already be
/// reflected in the automaton: the current state has to put `k` in the
/// matching active phase (`s` for a spike, `b` for a burst).
pub fn check(des: &Automaton, trace: &EventTrace) -> ConformanceReport {
    let tokens: Vec<String> = trace.observable().events.iter().map(Event::token).collect();
    let mut state = des.initial();
    let mut accepted = 0;
    for event in &trace.events {
        let observable: Vec<&Occurrence> = event.occurrences.iter().filter(|o| !o.is_internal_onset()).collect();
        if !observable.is_empty() {
            let parts: Vec<String> = observable.iter().map(|o| o.label.token()).collect();
            match step_any_order(des, state, &parts) {
                Some(next) => state = next,
                None => {
                    let reason = format!("{} is not enabled", parts.join("+"));
                    return fail(des, tokens, accepted, event, state, reason);
                }
            }
            accepted += 1;
        }
        for o in event.occurrences.iter().filter(|o| o.is_internal_onset()) {
            let want = if o.label.symbol == Symbol::Beta { 'b' } else { 's' };
            let phase = phase_of(des.label(state), o.label.neuron);
            if phase != Some(want) {
                let reason = format!(
                    "synaptically driven {} is not explained: neuron {} is in phase {}",
                    o.label.token(),
                    o.label.neuron,
                    phase.map_or_else(|| "?".to_owned(), String::from)
                );
                return fail(des, tokens, accepted, event, state, reason);
            }
        }
    }
    ConformanceReport { conforms: true, tokens, accepted, failure: None }
}

fn fail(
    des: &Automaton,
    tokens: Vec<String>,
    accepted: usize,
    event: &Event,
    state: StateId,
    reason: String,
) -> ConformanceReport {
    let failure = Failure { time: event.time, event: event.token(), state: des.label(state).to_owned(), reason };
    ConformanceReport { conforms: false, tokens, accepted, failure: Some(failure) }
}

/// Follows `parts` from `state` in the first order that works.
fn step_any_order(des: &Automaton, state: StateId, parts: &[String]) -> Option<StateId> {
    if parts.is_empty() {
        return Some(state);
    }
    parts.iter().enumerate().find_map(|(i, p)| {
        let next = des.step(state, p)?;
        let rest: Vec<String> = parts.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, q)| q.clone()).collect();
        step_any_order(des, next, &rest)
    })
}
