//! Deterministic finite automata with typed transitions.
//!
//! Automata here are generators: their language is the prefix-closed set of
//! event strings that label paths from the initial state. There are no marked
//! states. Every event symbol has exactly one [`TransitionKind`].

mod dot;
mod iso;

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use iso::{isomorphic, IsoMode};

/// Internal transitions are endogenous; external ones need an input of the
/// stated sign and preempt internal ones when that input is present.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransitionKind {
    Internal,
    ExternalExcitatory,
    ExternalInhibitory,
}

impl TransitionKind {
    pub fn is_external(self) -> bool {
        !matches!(self, TransitionKind::Internal)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TransitionKind::Internal => "internal",
            TransitionKind::ExternalExcitatory => "external_excitatory",
            TransitionKind::ExternalInhibitory => "external_inhibitory",
        }
    }
}

impl fmt::Display for TransitionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AutomatonError {
    #[error("duplicate state {0:?}")]
    DuplicateState(String),
    #[error("unknown state {0:?}")]
    UnknownState(String),
    #[error("event {0:?} is not in the alphabet")]
    UnknownEvent(String),
    #[error("state {state:?} has two transitions on {event:?}")]
    Nondeterministic { state: String, event: String },
    #[error("event {event:?} is {left} in one automaton and {right} in the other")]
    KindConflict { event: String, left: TransitionKind, right: TransitionKind },
    #[error("automaton has no states")]
    Empty,
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("io: {0}")]
    Io(String),
}

pub type StateId = usize;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Transition {
    pub src: StateId,
    pub event: String,
    pub dst: StateId,
}

/// A deterministic automaton. Transitions are kept sorted by
/// `(src, event)`; states are identified by index and carry unique labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "AutomatonFile", into = "AutomatonFile")]
pub struct Automaton {
    states: Vec<String>,
    alphabet: BTreeMap<String, TransitionKind>,
    transitions: Vec<Transition>,
    initial: StateId,
}

/// On-disk form: states and transitions by label.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AutomatonFile {
    states: Vec<String>,
    alphabet: BTreeMap<String, TransitionKind>,
    transitions: Vec<(String, String, String)>,
    initial: String,
}

impl TryFrom<AutomatonFile> for Automaton {
    type Error = AutomatonError;

    fn try_from(f: AutomatonFile) -> Result<Self, Self::Error> {
        Automaton::from_labels(f.states, f.alphabet, f.transitions, &f.initial)
    }
}

impl From<Automaton> for AutomatonFile {
    fn from(a: Automaton) -> Self {
        let transitions = a
            .transitions
            .iter()
            .map(|t| (a.states[t.src].clone(), t.event.clone(), a.states[t.dst].clone()))
            .collect();
        AutomatonFile {
            initial: a.states[a.initial].clone(),
            states: a.states,
            alphabet: a.alphabet,
            transitions,
        }
    }
}

/// Incremental construction by label. States are created on first mention,
/// in order; the first state mentioned is initial unless set otherwise.
#[derive(Debug, Clone, Default)]
pub struct AutomatonBuilder {
    states: Vec<String>,
    alphabet: BTreeMap<String, TransitionKind>,
    transitions: Vec<(String, String, String)>,
    initial: Option<String>,
    error: Option<AutomatonError>,
}

impl AutomatonBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn state(mut self, label: &str) -> Self {
        if !self.states.iter().any(|s| s == label) {
            self.states.push(label.to_owned());
        }
        self
    }

    pub fn initial(mut self, label: &str) -> Self {
        self = self.state(label);
        self.initial = Some(label.to_owned());
        self
    }

    /// Declares an event without using it.
    pub fn event(mut self, event: &str, kind: TransitionKind) -> Self {
        match self.alphabet.get(event) {
            Some(k) if *k != kind => {
                self.error.get_or_insert(AutomatonError::KindConflict {
                    event: event.to_owned(),
                    left: *k,
                    right: kind,
                });
            }
            _ => {
                self.alphabet.insert(event.to_owned(), kind);
            }
        }
        self
    }

    pub fn edge(mut self, src: &str, event: &str, kind: TransitionKind, dst: &str) -> Self {
        self = self.state(src).state(dst).event(event, kind);
        self.transitions.push((src.to_owned(), event.to_owned(), dst.to_owned()));
        self
    }

    pub fn build(self) -> Result<Automaton, AutomatonError> {
        if let Some(e) = self.error {
            return Err(e);
        }
        let initial = match self.initial.or_else(|| self.states.first().cloned()) {
            Some(i) => i,
            None => return Err(AutomatonError::Empty),
        };
        Automaton::from_labels(self.states, self.alphabet, self.transitions, &initial)
    }
}

impl Automaton {
    pub fn builder() -> AutomatonBuilder {
        AutomatonBuilder::new()
    }

    /// Validates and assembles an automaton from labels.
    pub fn from_labels(
        states: Vec<String>,
        alphabet: BTreeMap<String, TransitionKind>,
        transitions: Vec<(String, String, String)>,
        initial: &str,
    ) -> Result<Self, AutomatonError> {
        if states.is_empty() {
            return Err(AutomatonError::Empty);
        }
        let mut index = HashMap::with_capacity(states.len());
        for (i, s) in states.iter().enumerate() {
            if index.insert(s.as_str(), i).is_some() {
                return Err(AutomatonError::DuplicateState(s.clone()));
            }
        }
        let lookup = |s: &str| index.get(s).copied().ok_or_else(|| AutomatonError::UnknownState(s.to_owned()));
        let initial = lookup(initial)?;
        let mut ts = Vec::with_capacity(transitions.len());
        for (src, event, dst) in &transitions {
            if !alphabet.contains_key(event) {
                return Err(AutomatonError::UnknownEvent(event.clone()));
            }
            ts.push(Transition { src: lookup(src)?, event: event.clone(), dst: lookup(dst)? });
        }
        Self::from_parts(states, alphabet, ts, initial)
    }

    fn from_parts(
        states: Vec<String>,
        alphabet: BTreeMap<String, TransitionKind>,
        mut transitions: Vec<Transition>,
        initial: StateId,
    ) -> Result<Self, AutomatonError> {
        transitions.sort();
        transitions.dedup();
        for w in transitions.windows(2) {
            if w[0].src == w[1].src && w[0].event == w[1].event {
                return Err(AutomatonError::Nondeterministic {
                    state: states[w[0].src].clone(),
                    event: w[0].event.clone(),
                });
            }
        }
        Ok(Self { states, alphabet, transitions, initial })
    }

    pub fn from_json(text: &str) -> Result<Self, AutomatonError> {
        serde_json::from_str(text).map_err(|e| {
            // Validation failures surface through serde as custom errors.
            AutomatonError::Parse { line: e.line(), column: e.column(), message: e.to_string() }
        })
    }

    pub fn load(path: &Path) -> Result<Self, AutomatonError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AutomatonError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("automaton serializes")
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn label(&self, s: StateId) -> &str {
        &self.states[s]
    }

    pub fn state_id(&self, label: &str) -> Option<StateId> {
        self.states.iter().position(|s| s == label)
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn alphabet(&self) -> &BTreeMap<String, TransitionKind> {
        &self.alphabet
    }

    pub fn kind(&self, event: &str) -> Option<TransitionKind> {
        self.alphabet.get(event).copied()
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn transition_kind(&self, t: &Transition) -> TransitionKind {
        self.alphabet[&t.event]
    }

    pub fn out_edges(&self, s: StateId) -> impl Iterator<Item = &Transition> {
        let lo = self.transitions.partition_point(|t| t.src < s);
        self.transitions[lo..].iter().take_while(move |t| t.src == s)
    }

    pub fn step(&self, s: StateId, event: &str) -> Option<StateId> {
        self.out_edges(s).find(|t| t.event == event).map(|t| t.dst)
    }

    pub fn has_self_loops(&self) -> bool {
        self.transitions.iter().any(|t| t.src == t.dst)
    }

    /// Sub-automaton on the states reachable from the initial state.
    pub fn accessible(&self) -> Automaton {
        let mut seen = vec![false; self.states.len()];
        let mut order = Vec::new();
        let mut queue = VecDeque::from([self.initial]);
        seen[self.initial] = true;
        while let Some(s) = queue.pop_front() {
            order.push(s);
            for t in self.out_edges(s) {
                if !seen[t.dst] {
                    seen[t.dst] = true;
                    queue.push_back(t.dst);
                }
            }
        }
        // Keep the original relative order of surviving states.
        order.sort_unstable();
        self.restrict(&order, self.initial, |_| true)
    }

    /// Keeps `keep` (state ids of `self`) and the transitions among them for
    /// which `pred` holds. `initial` must be in `keep`.
    pub fn restrict<F>(&self, keep: &[StateId], initial: StateId, pred: F) -> Automaton
    where
        F: Fn(&Transition) -> bool,
    {
        let mut remap = vec![usize::MAX; self.states.len()];
        for (new, old) in keep.iter().enumerate() {
            remap[*old] = new;
        }
        let states = keep.iter().map(|s| self.states[*s].clone()).collect();
        let transitions = self
            .transitions
            .iter()
            .filter(|t| remap[t.src] != usize::MAX && remap[t.dst] != usize::MAX && pred(t))
            .map(|t| Transition { src: remap[t.src], event: t.event.clone(), dst: remap[t.dst] })
            .collect();
        Self::from_parts(states, self.alphabet.clone(), transitions, remap[initial])
            .expect("restriction preserves determinism")
    }

    /// Same automaton with the given transitions removed and the listed
    /// events dropped from the alphabet.
    pub fn without_events(&self, events: &BTreeSet<String>) -> Automaton {
        let keep: Vec<StateId> = (0..self.states.len()).collect();
        let mut a = self.restrict(&keep, self.initial, |t| !events.contains(&t.event));
        a.alphabet.retain(|e, _| !events.contains(e));
        a
    }

    /// Adds transitions by state id. New events are added to the alphabet
    /// with the given kind.
    pub fn with_transitions(
        &self,
        extra: impl IntoIterator<Item = (StateId, String, TransitionKind, StateId)>,
    ) -> Result<Automaton, AutomatonError> {
        let mut alphabet = self.alphabet.clone();
        let mut transitions = self.transitions.clone();
        for (src, event, kind, dst) in extra {
            if let Some(k) = alphabet.get(&event) {
                if *k != kind {
                    return Err(AutomatonError::KindConflict { event, left: *k, right: kind });
                }
            }
            alphabet.insert(event.clone(), kind);
            transitions.push(Transition { src, event, dst });
        }
        Self::from_parts(self.states.clone(), alphabet, transitions, self.initial)
    }

    /// Replaces the kinds of the listed events.
    pub fn with_kinds(&self, kinds: &BTreeMap<String, TransitionKind>) -> Automaton {
        let mut a = self.clone();
        for (e, k) in kinds {
            if let Some(slot) = a.alphabet.get_mut(e) {
                *slot = *k;
            }
        }
        a
    }

    /// Renames states; `f` must be injective.
    pub fn relabel<F: Fn(&str) -> String>(&self, f: F) -> Result<Automaton, AutomatonError> {
        let states: Vec<String> = self.states.iter().map(|s| f(s)).collect();
        let mut seen = BTreeSet::new();
        for s in &states {
            if !seen.insert(s) {
                return Err(AutomatonError::DuplicateState(s.clone()));
            }
        }
        Ok(Automaton { states, ..self.clone() })
    }

    /// Events enabled at `state`. External transitions need input; when input
    /// is present and some external transition leaves `state`, the external
    /// transitions preempt the internal ones.
    pub fn enabled(&self, state: StateId, input_present: bool) -> BTreeSet<String> {
        let external: BTreeSet<String> = self
            .out_edges(state)
            .filter(|t| self.transition_kind(t).is_external())
            .map(|t| t.event.clone())
            .collect();
        if input_present && !external.is_empty() {
            return external;
        }
        self.out_edges(state)
            .filter(|t| !self.transition_kind(t).is_external())
            .map(|t| t.event.clone())
            .collect()
    }

    /// State reached by following `events` from the initial state.
    pub fn run<S: AsRef<str>>(&self, events: &[S]) -> Option<StateId> {
        events.iter().try_fold(self.initial, |s, e| self.step(s, e.as_ref()))
    }

    /// Length of the longest prefix of `events` the automaton generates.
    pub fn accepted_prefix_len<S: AsRef<str>>(&self, events: &[S]) -> usize {
        let mut s = self.initial;
        for (i, e) in events.iter().enumerate() {
            match self.step(s, e.as_ref()) {
                Some(n) => s = n,
                None => return i,
            }
        }
        events.len()
    }

    /// Whether `events` is in the generated language.
    pub fn accepts<S: AsRef<str>>(&self, events: &[S]) -> bool {
        self.run(events).is_some()
    }

    /// All generated strings of length at most `max_len`.
    pub fn generate_language(&self, max_len: usize) -> BTreeSet<Vec<String>> {
        let mut out = BTreeSet::new();
        let mut stack = vec![(self.initial, Vec::<String>::new())];
        while let Some((s, word)) = stack.pop() {
            if word.len() < max_len {
                for t in self.out_edges(s) {
                    let mut w = word.clone();
                    w.push(t.event.clone());
                    stack.push((t.dst, w));
                }
            }
            out.insert(word);
        }
        out
    }

    /// DOT rendering. Internal edges are solid; external edges are dashed
    /// with a square (excitatory) or open-circle (inhibitory) tail.
    pub fn to_dot(&self, name: &str) -> String {
        dot::render(self, name)
    }
}

/// Parallel composition.
///
/// Shared events synchronize and private events interleave, with one
/// restriction: a private *external* event of one side may only occur while
/// the other side sits in its initial (resting) state. External input models
/// a stimulus to an otherwise quiet network, so it cannot overlap activity it
/// did not cause. The result is the accessible part; composite labels
/// concatenate the component labels.
pub fn compose(a: &Automaton, b: &Automaton) -> Result<Automaton, AutomatonError> {
    for (e, ka) in &a.alphabet {
        if let Some(kb) = b.alphabet.get(e) {
            if ka != kb {
                return Err(AutomatonError::KindConflict { event: e.clone(), left: *ka, right: *kb });
            }
        }
    }
    let mut alphabet = a.alphabet.clone();
    alphabet.extend(b.alphabet.iter().map(|(e, k)| (e.clone(), *k)));

    let mut ids: HashMap<(StateId, StateId), StateId> = HashMap::new();
    let mut pairs = vec![(a.initial, b.initial)];
    ids.insert((a.initial, b.initial), 0);
    let mut transitions = Vec::new();
    let mut next = 0;
    while next < pairs.len() {
        let (p, q) = pairs[next];
        let src = next;
        next += 1;
        for (event, kind) in &alphabet {
            let in_a = a.alphabet.contains_key(event);
            let in_b = b.alphabet.contains_key(event);
            let target = match (in_a, in_b) {
                (true, true) => a.step(p, event).zip(b.step(q, event)),
                (true, false) if !kind.is_external() || q == b.initial => a.step(p, event).map(|p2| (p2, q)),
                (false, true) if !kind.is_external() || p == a.initial => b.step(q, event).map(|q2| (p, q2)),
                _ => None,
            };
            if let Some(pair) = target {
                let dst = *ids.entry(pair).or_insert_with(|| {
                    pairs.push(pair);
                    pairs.len() - 1
                });
                transitions.push(Transition { src, event: event.clone(), dst });
            }
        }
    }

    let mut states: Vec<String> = pairs.iter().map(|(p, q)| format!("{}{}", a.states[*p], b.states[*q])).collect();
    if states.iter().collect::<BTreeSet<_>>().len() != states.len() {
        states = pairs.iter().map(|(p, q)| format!("{}|{}", a.states[*p], b.states[*q])).collect();
    }
    Automaton::from_parts(states, alphabet, transitions, 0)
}

/// Composes all automata left to right. An empty list is an error.
pub fn compose_all<'a, I>(automata: I) -> Result<Automaton, AutomatonError>
where
    I: IntoIterator<Item = &'a Automaton>,
{
    let mut it = automata.into_iter();
    let first = it.next().ok_or(AutomatonError::Empty)?.accessible();
    it.try_fold(first, |acc, a| compose(&acc, a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use TransitionKind::*;

    fn excitable() -> Automaton {
        Automaton::builder()
            .initial("i")
            .edge("i", "sigma", ExternalExcitatory, "s")
            .edge("s", "eta", Internal, "i")
            .build()
            .unwrap()
    }

    #[test]
    fn builder_rejects_nondeterminism_and_kind_conflicts() {
        let err = Automaton::builder()
            .edge("i", "a", Internal, "s")
            .edge("i", "a", Internal, "t")
            .build()
            .unwrap_err();
        assert!(matches!(err, AutomatonError::Nondeterministic { .. }));
        let err = Automaton::builder()
            .edge("i", "a", Internal, "s")
            .edge("s", "a", ExternalExcitatory, "i")
            .build()
            .unwrap_err();
        assert!(matches!(err, AutomatonError::KindConflict { .. }));
    }

    #[test]
    fn json_round_trip_and_validation() {
        let a = excitable();
        let back = Automaton::from_json(&a.to_json()).unwrap();
        assert_eq!(a, back);
        let bad = r#"{"states":["i"],"alphabet":{},"transitions":[["i","x","i"]],"initial":"i"}"#;
        let err = Automaton::from_json(bad).unwrap_err();
        assert!(err.to_string().contains("not in the alphabet"), "{err}");
        let unknown_key = r#"{"states":["i"],"alphabet":{},"transitions":[],"initial":"i","x":1}"#;
        assert!(Automaton::from_json(unknown_key).is_err());
    }

    #[test]
    fn accessible_drops_unreachable_states() {
        let a = Automaton::builder()
            .initial("i")
            .edge("i", "a", Internal, "s")
            .edge("t", "b", Internal, "i")
            .build()
            .unwrap();
        let acc = a.accessible();
        assert_eq!(acc.states(), ["i", "s"]);
        assert_eq!(acc.transitions().len(), 1);
        assert_eq!(acc.accessible(), acc);
    }

    #[test]
    fn enabled_applies_preemption() {
        let a = excitable();
        let i = a.state_id("i").unwrap();
        let s = a.state_id("s").unwrap();
        assert!(a.enabled(i, false).is_empty());
        assert_eq!(a.enabled(i, true), BTreeSet::from(["sigma".to_owned()]));
        assert_eq!(a.enabled(s, true), BTreeSet::from(["eta".to_owned()]));
        assert_eq!(a.enabled(s, false), BTreeSet::from(["eta".to_owned()]));
    }

    #[test]
    fn language_of_two_state_cycle() {
        let a = excitable();
        assert!(a.accepts(&["sigma", "eta", "sigma", "eta"]));
        assert!(!a.accepts(&["eta"]));
        assert!(!a.accepts(&["unknown"]));
        assert!(a.accepts::<&str>(&[]));
        let l = a.generate_language(2);
        let expected: BTreeSet<Vec<String>> =
            [vec![], vec!["sigma".into()], vec!["sigma".into(), "eta".into()]].into_iter().collect();
        assert_eq!(l, expected);
        assert_eq!(a.generate_language(0).len(), 1);
        assert_eq!(a.accepted_prefix_len(&["sigma", "sigma"]), 1);
    }

    #[test]
    fn shared_events_synchronize() {
        let a = Automaton::builder().edge("a0", "x", Internal, "a1").build().unwrap();
        let b = Automaton::builder()
            .edge("b0", "x", Internal, "b1")
            .edge("b0", "y", Internal, "b2")
            .build()
            .unwrap();
        let c = compose(&a, &b).unwrap();
        assert_eq!(c.states(), ["a0b0", "a1b1", "a0b2"]);
        assert!(c.accepts(&["x"]));
        assert!(c.accepts(&["y"]));
        assert!(!c.accepts(&["y", "x"]));
    }

    #[test]
    fn private_external_events_need_the_partner_at_rest() {
        let a = excitable();
        let b = Automaton::builder()
            .initial("p")
            .edge("p", "go", Internal, "q")
            .build()
            .unwrap();
        let c = compose(&a, &b).unwrap();
        // sigma fires from p but not once b has moved to q.
        assert!(c.accepts(&["sigma", "go", "eta"]));
        assert!(!c.accepts(&["go", "sigma"]));
    }

    #[test]
    fn composition_rejects_kind_conflicts() {
        let a = excitable();
        let b = Automaton::builder().edge("p", "sigma", Internal, "q").build().unwrap();
        assert!(matches!(compose(&a, &b), Err(AutomatonError::KindConflict { .. })));
    }

    #[test]
    fn colliding_concatenated_labels_fall_back_to_separator() {
        let a = Automaton::builder()
            .edge("a", "x", Internal, "ab")
            .build()
            .unwrap();
        let b = Automaton::builder()
            .edge("bc", "y", Internal, "c")
            .build()
            .unwrap();
        // "a"+"bc" and "ab"+"c" would both read "abc".
        let c = compose(&a, &b).unwrap();
        assert!(c.states().iter().all(|s| s.contains('|')));
        assert_eq!(c.state_count(), 4);
    }
}
