//! Continuous-time simulation of conductance-based neurons and synapses.
//!
//! Every neuron is an RC membrane with a bank of voltage-gated channels. The
//! full network state (voltages, gates, synaptic activations) is advanced with
//! fixed-step RK4. External pulses and membrane noise are held constant over
//! each step, so a run is a deterministic function of circuit, stimulus,
//! config and seed.

pub mod channel;
pub mod circuit;
pub mod integrator;
pub mod lif;
pub mod neuron;
pub mod profile;
pub mod stimulus;
pub mod synapse;

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use channel::{Gate, GateKinetics, IonChannel, RateFn, TauCurve};
pub use circuit::{CircuitBundle, CircuitSpec, SimConfig};
pub use integrator::Rk4;
pub use lif::{simulate_lif, LifConfig, LifSpec, LifTrace, PiecewiseConstant};
pub use neuron::{BehaviorClass, Leak, NeuronId, NeuronSpec};
pub use profile::{hh_neuron, hh_neuron_as, rebound_burster, CircuitProfile, SynapseParams};
pub use stimulus::{Pulse, StimulusProgram};
pub use synapse::{synaptic_current, Speed, SynapseKind, SynapseSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("integration diverged: neuron {neuron} has a non-finite state at t = {time} ms")]
    Diverged { neuron: NeuronId, time: f64 },
    #[error("neuron {neuron} has no resting equilibrium: |dV/dt| = {residual} mV/ms after relaxation")]
    NonResting { neuron: NeuronId, residual: f64 },
    #[error("io: {0}")]
    Io(String),
}

/// Relaxation horizon and step used to find a resting equilibrium.
const REST_RELAX_MS: f64 = 500.0;
const REST_DT_MS: f64 = 0.01;
const REST_START_MV: f64 = -65.0;
/// Largest |dV/dt| (mV/ms) accepted at the end of relaxation.
pub const REST_RESIDUAL_TOL: f64 = 1e-3;

/// Membrane voltage plus gate values of one neuron.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuronState {
    pub v: f64,
    pub gates: Vec<f64>,
}

impl NeuronState {
    /// Voltage `v` with every gate at its steady state for `v`.
    pub fn steady_at(neuron: &NeuronSpec, v: f64) -> Self {
        let gates = neuron
            .channels
            .iter()
            .flat_map(|c| c.gates())
            .map(|g| g.kinetics.inf_tau(v).0)
            .collect();
        Self { v, gates }
    }
}

/// Intrinsic (synapse-free) membrane derivative for one neuron. Writes gate
/// derivatives into `dgates` and returns dV/dt.
#[inline]
fn membrane_rhs(neuron: &NeuronSpec, v: f64, gates: &[f64], dgates: &mut [f64], input: f64) -> f64 {
    let mut ionic = neuron.leak.g * (v - neuron.leak.e_rev);
    let mut k = 0;
    for ch in &neuron.channels {
        let n = ch.gates().count();
        ionic += ch.current(v, &gates[k..k + n]);
        for (j, gate) in ch.gates().enumerate() {
            dgates[k + j] = gate.kinetics.derivative(v, gates[k + j]);
        }
        k += n;
    }
    (input - ionic) / neuron.capacitance
}

/// Finds the resting equilibrium of an isolated neuron by relaxation: 500 ms
/// with zero input from -65 mV and steady-state gates.
pub fn resting_state(neuron: &NeuronSpec) -> Result<NeuronState, SimError> {
    neuron.validate().map_err(SimError::Validation)?;
    let init = NeuronState::steady_at(neuron, REST_START_MV);
    let mut y = Vec::with_capacity(1 + init.gates.len());
    y.push(init.v);
    y.extend_from_slice(&init.gates);
    let mut rk = Rk4::new(y.len());
    let steps = (REST_RELAX_MS / REST_DT_MS).round() as usize;
    let rhs = |_: f64, y: &[f64], d: &mut [f64]| {
        let (dv, dg) = d.split_at_mut(1);
        dv[0] = membrane_rhs(neuron, y[0], &y[1..], dg, 0.0);
    };
    for i in 0..steps {
        rk.step(i as f64 * REST_DT_MS, REST_DT_MS, &mut y, rhs);
        if !y.iter().all(|x| x.is_finite()) {
            return Err(SimError::Diverged { neuron: neuron.id, time: (i + 1) as f64 * REST_DT_MS });
        }
    }
    let mut d = vec![0.0; y.len()];
    rhs(0.0, &y, &mut d);
    let residual = d[0].abs();
    if residual >= REST_RESIDUAL_TOL {
        return Err(SimError::NonResting { neuron: neuron.id, residual });
    }
    Ok(NeuronState { v: y[0], gates: y[1..].to_vec() })
}

/// Index layout of the flat network state vector.
#[derive(Debug, Clone)]
struct Layout {
    /// Offset of each neuron's voltage; its gates follow immediately.
    neuron_offset: Vec<usize>,
    /// Index of each synapse's activation.
    synapse_offset: Vec<usize>,
    /// For each synapse, (pre index, post index) into `circuit.neurons`.
    endpoints: Vec<(usize, usize)>,
    dim: usize,
}

impl Layout {
    fn new(circuit: &CircuitSpec) -> Self {
        let mut neuron_offset = Vec::with_capacity(circuit.neurons.len());
        let mut k = 0;
        for n in &circuit.neurons {
            neuron_offset.push(k);
            k += 1 + n.gate_count();
        }
        let mut synapse_offset = Vec::with_capacity(circuit.synapses.len());
        let mut endpoints = Vec::with_capacity(circuit.synapses.len());
        for s in &circuit.synapses {
            synapse_offset.push(k);
            k += 1;
            let pre = circuit.index_of(s.pre).expect("validated");
            let post = circuit.index_of(s.post).expect("validated");
            endpoints.push((pre, post));
        }
        Self { neuron_offset, synapse_offset, endpoints, dim: k }
    }
}

/// Output of [`simulate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub config: SimConfig,
    /// Uniform time grid, ms; `time[i] = i * dt`.
    pub time: Vec<f64>,
    pub neuron_ids: Vec<NeuronId>,
    /// Resting potential each neuron started from, mV.
    pub v_rest: Vec<f64>,
    /// `voltages[n][i]`: membrane voltage of neuron `n` at `time[i]`, mV.
    pub voltages: Vec<Vec<f64>>,
    /// `gates[n][g][i]`; empty when `config.record_states` is false.
    pub gates: Vec<Vec<Vec<f64>>>,
    /// `synaptic[s][i]`; empty when `config.record_states` is false.
    pub synaptic: Vec<Vec<f64>>,
    pub stimulus: StimulusProgram,
    pub seed: u64,
}

impl SimulationResult {
    pub fn dt(&self) -> f64 {
        self.config.dt
    }

    pub fn voltage(&self, id: NeuronId) -> Option<&[f64]> {
        let k = self.neuron_ids.iter().position(|n| *n == id)?;
        Some(&self.voltages[k])
    }

    pub fn rest_of(&self, id: NeuronId) -> Option<f64> {
        let k = self.neuron_ids.iter().position(|n| *n == id)?;
        Some(self.v_rest[k])
    }

    /// Writes `t,neuron_id,v,i_ext`, one row per (step, neuron).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), SimError> {
        let io = |e: csv::Error| SimError::Io(e.to_string());
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "neuron_id", "v", "i_ext"]).map_err(io)?;
        for (i, t) in self.time.iter().enumerate() {
            for (k, id) in self.neuron_ids.iter().enumerate() {
                let i_ext = self.stimulus.current_at(*id, *t);
                w.write_record(&[
                    format!("{t:.6}"),
                    id.to_string(),
                    format!("{:.6}", self.voltages[k][i]),
                    format!("{i_ext}"),
                ])
                .map_err(io)?;
            }
        }
        w.flush().map_err(|e| SimError::Io(e.to_string()))
    }
}

/// Integrates the circuit under the stimulus program.
///
/// Each neuron starts at its isolated resting equilibrium (or at -65 mV with
/// steady-state gates when it has none) and each synapse at the steady
/// activation for its presynaptic resting voltage.
pub fn simulate(
    circuit: &CircuitSpec,
    stimulus: &StimulusProgram,
    config: &SimConfig,
) -> Result<SimulationResult, SimError> {
    circuit.validate()?;
    circuit.validate_stimulus(stimulus)?;
    config.validate()?;

    let layout = Layout::new(circuit);
    let mut y = vec![0.0; layout.dim];
    let mut v_rest = Vec::with_capacity(circuit.neurons.len());
    for (k, n) in circuit.neurons.iter().enumerate() {
        let st = resting_state(n).unwrap_or_else(|_| NeuronState::steady_at(n, REST_START_MV));
        let o = layout.neuron_offset[k];
        y[o] = st.v;
        y[o + 1..o + 1 + st.gates.len()].copy_from_slice(&st.gates);
        v_rest.push(st.v);
    }
    for (j, s) in circuit.synapses.iter().enumerate() {
        let (pre, _) = layout.endpoints[j];
        y[layout.synapse_offset[j]] = s.activation_inf(v_rest[pre]);
    }

    let steps = config.steps();
    let dt = config.dt;
    let n_neurons = circuit.neurons.len();
    let mut voltages: Vec<Vec<f64>> = (0..n_neurons).map(|_| Vec::with_capacity(steps + 1)).collect();
    let mut gates: Vec<Vec<Vec<f64>>> = if config.record_states {
        circuit
            .neurons
            .iter()
            .map(|n| (0..n.gate_count()).map(|_| Vec::with_capacity(steps + 1)).collect())
            .collect()
    } else {
        Vec::new()
    };
    let mut synaptic: Vec<Vec<f64>> = if config.record_states {
        (0..circuit.synapses.len()).map(|_| Vec::with_capacity(steps + 1)).collect()
    } else {
        Vec::new()
    };
    let record = |y: &[f64], voltages: &mut Vec<Vec<f64>>, gates: &mut Vec<Vec<Vec<f64>>>, synaptic: &mut Vec<Vec<f64>>| {
        for k in 0..n_neurons {
            let o = layout.neuron_offset[k];
            voltages[k].push(y[o]);
            if let Some(g) = gates.get_mut(k) {
                for (j, trace) in g.iter_mut().enumerate() {
                    trace.push(y[o + 1 + j]);
                }
            }
        }
        for (j, trace) in synaptic.iter_mut().enumerate() {
            trace.push(y[layout.synapse_offset[j]]);
        }
    };
    record(&y, &mut voltages, &mut gates, &mut synaptic);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let noise_scale: Vec<f64> =
        circuit.neurons.iter().map(|n| n.noise_amplitude / dt.sqrt()).collect();
    let mut input = vec![0.0; n_neurons];
    let mut syn_input = vec![0.0; n_neurons];
    let mut rk = Rk4::new(layout.dim);

    for i in 0..steps {
        let t = i as f64 * dt;
        for (k, n) in circuit.neurons.iter().enumerate() {
            let mut cur = stimulus.current_at(n.id, t);
            if noise_scale[k] > 0.0 {
                let xi: f64 = StandardNormal.sample(&mut rng);
                cur += noise_scale[k] * xi;
            }
            input[k] = cur;
        }
        rk.step(t, dt, &mut y, |_, y, d| {
            syn_input.iter_mut().for_each(|x| *x = 0.0);
            for (j, s) in circuit.synapses.iter().enumerate() {
                let (pre, post) = layout.endpoints[j];
                let a = y[layout.synapse_offset[j]];
                let v_pre = y[layout.neuron_offset[pre]];
                let v_post = y[layout.neuron_offset[post]];
                syn_input[post] += synaptic_current(s, v_pre, v_post, a);
                d[layout.synapse_offset[j]] = s.activation_derivative(v_pre, a);
            }
            for (k, n) in circuit.neurons.iter().enumerate() {
                let o = layout.neuron_offset[k];
                let g = n.gate_count();
                let (dv, dg) = d[o..o + 1 + g].split_at_mut(1);
                dv[0] = membrane_rhs(n, y[o], &y[o + 1..o + 1 + g], dg, input[k] + syn_input[k]);
            }
        });
        for (k, n) in circuit.neurons.iter().enumerate() {
            let o = layout.neuron_offset[k];
            if !y[o..o + 1 + n.gate_count()].iter().all(|x| x.is_finite()) {
                return Err(SimError::Diverged { neuron: n.id, time: (i + 1) as f64 * dt });
            }
        }
        record(&y, &mut voltages, &mut gates, &mut synaptic);
    }

    Ok(SimulationResult {
        config: *config,
        time: (0..=steps).map(|i| i as f64 * dt).collect(),
        neuron_ids: circuit.neurons.iter().map(|n| n.id).collect(),
        v_rest,
        voltages,
        gates,
        synaptic,
        stimulus: stimulus.clone(),
        seed: config.seed,
    })
}
