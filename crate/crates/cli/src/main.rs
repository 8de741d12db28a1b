mod commands;
mod manifest;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

/// Overrides for the run config stored in a circuit file.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize, PartialEq)]
pub struct RunFlags {
    /// Integration step, ms.
    #[arg(long)]
    pub dt: Option<f64>,
    /// End time, ms.
    #[arg(long = "t-end")]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "kebab-case", tag = "subcommand")]
pub enum Command {
    /// Integrate a circuit file and write the voltage trace as CSV.
    Simulate {
        circuit: PathBuf,
        /// Stimulus program replacing the circuit file's `stimuli`.
        #[arg(long)]
        stimulus: Option<PathBuf>,
        #[command(flatten)]
        run: RunFlags,
        /// Also write an SVG voltage plot.
        #[arg(long)]
        plot: bool,
    },
    /// Simulate and write the extracted event trace and untimed string.
    Extract {
        circuit: PathBuf,
        #[arg(long)]
        stimulus: Option<PathBuf>,
        /// Extraction settings (JSON); defaults otherwise.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Build the network automaton from a topology or circuit file.
    BuildDes { input: PathBuf },
    /// Compose automaton files left to right.
    Compose {
        #[arg(required = true, num_args = 2..)]
        automata: Vec<PathBuf>,
    },
    /// Winner-take-all automaton over N neurons.
    Wta {
        #[arg(long)]
        n: usize,
        /// Designated excitatory edges, e.g. `1>3,2>3`.
        #[arg(long, default_value = "")]
        edges: String,
    },
    /// Apply excitatory ordering to a winner-take-all automaton file.
    Restrict {
        wta: PathBuf,
        #[arg(long)]
        edges: String,
        /// Make every non-designated winner-to-winner edge external.
        #[arg(long)]
        complete: bool,
    },
    /// Compile an automaton without self-loops into a circuit.
    Realize {
        automaton: PathBuf,
        /// Simulate the realized circuit this many times.
        #[arg(long, default_value_t = 0)]
        trials: usize,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Realize an automaton and compare the implemented automaton with it.
    RoundTrip { automaton: PathBuf },
    /// Simulate a circuit and check its trace against the network automaton.
    Check {
        circuit: PathBuf,
        #[arg(long)]
        stimulus: Option<PathBuf>,
        /// Topology replacing the one derived from the circuit.
        #[arg(long)]
        topology: Option<PathBuf>,
        /// Check this many runs with seeds derived from `--seed`.
        #[arg(long, default_value_t = 1)]
        trials: usize,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Render an automaton file as DOT.
    ExportDot { automaton: PathBuf },
    /// Re-run the command recorded in a manifest and compare outputs.
    Rerun { manifest: PathBuf },
}

/// Simulate neuron circuits, extract their event traces, and build, check
/// and realize their discrete-event models.
#[derive(Debug, Parser)]
#[command(name = "neurodes", version)]
struct Top {
    #[command(subcommand)]
    command: Command,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
}

/// How a successful run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Ok,
    Violation,
}

fn main() -> ExitCode {
    let top = Top::parse();
    match commands::run(&top.command, &top.out) {
        Ok(Verdict::Ok) => ExitCode::SUCCESS,
        Ok(Verdict::Violation) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
