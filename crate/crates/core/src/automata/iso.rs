//! Isomorphism search by backtracking over degree-compatible candidates.

use std::collections::{BTreeMap, BTreeSet};

use super::{Automaton, StateId, TransitionKind};

/// What a state bijection has to preserve besides the initial state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IsoMode {
    /// Every transition with its event symbol and kind.
    Exact,
    /// Only which ordered state pairs are connected; events, kinds and
    /// parallel edges are ignored.
    Structure,
}

/// Edge colors between ordered state pairs under a mode.
type Adjacency = BTreeMap<(StateId, StateId), BTreeSet<(String, TransitionKind)>>;

fn adjacency(a: &Automaton, mode: IsoMode) -> Adjacency {
    let mut adj = Adjacency::new();
    for t in a.transitions() {
        let colors = adj.entry((t.src, t.dst)).or_default();
        if mode == IsoMode::Exact {
            colors.insert((t.event.clone(), a.transition_kind(t)));
        }
    }
    adj
}

/// Per-state invariant used to prune candidates.
fn signatures(a: &Automaton, adj: &Adjacency) -> Vec<(bool, Vec<BTreeSet<(String, TransitionKind)>>, Vec<BTreeSet<(String, TransitionKind)>>)> {
    let n = a.state_count();
    let mut out: Vec<Vec<_>> = vec![Vec::new(); n];
    let mut inc: Vec<Vec<_>> = vec![Vec::new(); n];
    for ((s, d), c) in adj {
        out[*s].push(c.clone());
        inc[*d].push(c.clone());
    }
    (0..n)
        .map(|s| {
            let mut o = std::mem::take(&mut out[s]);
            let mut i = std::mem::take(&mut inc[s]);
            o.sort();
            i.sort();
            (s == a.initial(), o, i)
        })
        .collect()
}

/// Returns a bijection `w` with `w[state of a] = state of b` when the two
/// automata are isomorphic under `mode`, the initial state mapping to the
/// initial state. Alphabet symbols that label no transition are ignored.
pub fn isomorphic(a: &Automaton, b: &Automaton, mode: IsoMode) -> Option<Vec<StateId>> {
    let n = a.state_count();
    if n != b.state_count() {
        return None;
    }
    let adj_a = adjacency(a, mode);
    let adj_b = adjacency(b, mode);
    if adj_a.len() != adj_b.len() {
        return None;
    }
    let sig_a = signatures(a, &adj_a);
    let sig_b = signatures(b, &adj_b);
    let mut sorted_a = sig_a.clone();
    let mut sorted_b = sig_b.clone();
    sorted_a.sort();
    sorted_b.sort();
    if sorted_a != sorted_b {
        return None;
    }

    // Visit states of `a` breadth-first from the initial state so constrained
    // states are fixed early; unreachable ones follow in index order.
    let mut order = vec![a.initial()];
    let mut placed = vec![false; n];
    placed[a.initial()] = true;
    let mut k = 0;
    while order.len() < n {
        if k < order.len() {
            let s = order[k];
            k += 1;
            for t in a.out_edges(s) {
                if !placed[t.dst] {
                    placed[t.dst] = true;
                    order.push(t.dst);
                }
            }
        } else {
            let s = (0..n).find(|s| !placed[*s]).expect("some state unplaced");
            placed[s] = true;
            order.push(s);
        }
    }

    let mut map = vec![usize::MAX; n];
    let mut used = vec![false; n];
    let ctx = Search { adj_a: &adj_a, adj_b: &adj_b, sig_a: &sig_a, sig_b: &sig_b, order: &order };
    if ctx.extend(0, &mut map, &mut used) {
        Some(map)
    } else {
        None
    }
}

struct Search<'a, S> {
    adj_a: &'a Adjacency,
    adj_b: &'a Adjacency,
    sig_a: &'a [S],
    sig_b: &'a [S],
    order: &'a [StateId],
}

impl<S: PartialEq> Search<'_, S> {
    fn consistent(&self, s: StateId, t: StateId, map: &[StateId]) -> bool {
        // Every edge between `s` and an already mapped state (or itself) must
        // correspond exactly.
        for u in self.order {
            let mu = if *u == s { t } else { map[*u] };
            if mu == usize::MAX {
                continue;
            }
            if self.adj_a.get(&(s, *u)) != self.adj_b.get(&(t, mu)) {
                return false;
            }
            if self.adj_a.get(&(*u, s)) != self.adj_b.get(&(mu, t)) {
                return false;
            }
        }
        true
    }

    fn extend(&self, depth: usize, map: &mut [StateId], used: &mut [bool]) -> bool {
        if depth == self.order.len() {
            return true;
        }
        let s = self.order[depth];
        for t in 0..used.len() {
            if used[t] || self.sig_a[s] != self.sig_b[t] || !self.consistent(s, t, map) {
                continue;
            }
            map[s] = t;
            used[t] = true;
            if self.extend(depth + 1, map, used) {
                return true;
            }
            map[s] = usize::MAX;
            used[t] = false;
        }
        false
    }
}
