use std::fmt::Write;

use super::{Automaton, TransitionKind};

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

pub(super) fn render(a: &Automaton, name: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph {} {{", quote(name));
    out.push_str("  rankdir=LR;\n  node [shape=circle];\n  __start [shape=point, label=\"\"];\n");
    for s in a.states() {
        let _ = writeln!(out, "  {};", quote(s));
    }
    let _ = writeln!(out, "  __start -> {};", quote(a.label(a.initial())));
    for t in a.transitions() {
        let style = match a.transition_kind(t) {
            TransitionKind::Internal => String::new(),
            TransitionKind::ExternalExcitatory => ", style=dashed, dir=both, arrowtail=box".to_owned(),
            TransitionKind::ExternalInhibitory => ", style=dashed, dir=both, arrowtail=odot".to_owned(),
        };
        let _ = writeln!(
            out,
            "  {} -> {} [label={}{}];",
            quote(a.label(t.src)),
            quote(a.label(t.dst)),
            quote(&t.event),
            style
        );
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_styles_follow_kinds() {
        let a = Automaton::builder()
            .initial("i")
            .edge("i", "sigma", TransitionKind::ExternalExcitatory, "s")
            .edge("i", "rho_rebound", TransitionKind::ExternalInhibitory, "s")
            .edge("s", "eta", TransitionKind::Internal, "i")
            .build()
            .unwrap();
        let dot = a.to_dot("n1");
        assert!(dot.starts_with("digraph \"n1\" {"));
        assert!(dot.contains("__start -> \"i\";"));
        assert!(dot.contains("\"i\" -> \"s\" [label=\"sigma\", style=dashed, dir=both, arrowtail=box];"));
        assert!(dot.contains("\"i\" -> \"s\" [label=\"rho_rebound\", style=dashed, dir=both, arrowtail=odot];"));
        assert!(dot.contains("\"s\" -> \"i\" [label=\"eta\"];"));
    }
}
