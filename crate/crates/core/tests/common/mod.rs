#![allow(dead_code)]

use std::path::PathBuf;

use neurodes::automata::Automaton;
use neurodes::sim::CircuitBundle;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(format!("{name}.json"))
}

pub fn fixture(name: &str) -> Automaton {
    Automaton::load(&fixture_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub const FIXTURES: &[&str] = &[
    "lif_neuron",
    "excitable_neuron",
    "rebound_spiking_neuron",
    "rebound_bursting_neuron",
    "excitatory_pre",
    "excitatory_post",
    "excitatory_pair",
    "inhibitory_pre",
    "inhibitory_post",
    "inhibitory_pair",
    "hco",
    "directed_wta3",
    "cycle3",
    "branch",
];

pub fn all_fixtures() -> Vec<(&'static str, Automaton)> {
    FIXTURES.iter().map(|n| (*n, fixture(n))).collect()
}

pub fn circuit_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/circuits").join(format!("{name}.json"))
}

pub fn circuit(name: &str) -> CircuitBundle {
    CircuitBundle::load(&circuit_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_owned).collect()
}
