pub mod automata;
pub mod conformance;
pub mod des;
pub mod extract;
pub mod realization;
pub mod sim;
