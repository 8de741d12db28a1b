//! Discrete events from continuous traces.
//!
//! Spikes are upward threshold crossings. Spikes closer together than the
//! burst interval are grouped into bursts. Each episode becomes an onset
//! event and, once the neuron is back down, a return event. The cause of an
//! onset comes from the stimulus log, never from the voltage shape.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use crate::automata::TransitionKind as Cause;
use crate::sim::{BehaviorClass, CircuitSpec, NeuronId, SimConfig, SimulationResult, SynapseKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExtractError {
    #[error("neuron {neuron}: onset at {time} ms follows both excitatory and inhibitory pulses")]
    AttributionConflict { neuron: NeuronId, time: f64 },
    #[error("invalid extraction config: {0}")]
    Config(String),
    #[error("result does not match circuit: {0}")]
    Mismatch(String),
    #[error("io: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtractionConfig {
    /// Upward crossing level, mV.
    pub spike_threshold: f64,
    /// Half-width of the rest band around the resting potential, mV.
    pub rest_band: f64,
    /// Time the voltage must stay in the rest band to count as rested, ms.
    pub rest_hold: f64,
    /// Largest inter-spike interval inside one burst, ms.
    pub burst_max_isi: f64,
    pub min_burst_spikes: usize,
    /// How long after a pulse ends an onset is still attributed to it, ms.
    pub attribution_window: f64,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            spike_threshold: 0.0,
            rest_band: 3.0,
            rest_hold: 10.0,
            burst_max_isi: 30.0,
            min_burst_spikes: 2,
            attribution_window: 15.0,
        }
    }
}

impl ExtractionConfig {
    pub fn validate(&self) -> Result<(), ExtractError> {
        let positive = [self.rest_band, self.rest_hold, self.burst_max_isi, self.attribution_window];
        if !positive.iter().all(|x| *x > 0.0 && x.is_finite()) || self.min_burst_spikes < 2 {
            return Err(ExtractError::Config(
                "rest band, rest hold, burst ISI and attribution window must be > 0; min burst spikes >= 2".into(),
            ));
        }
        if !self.spike_threshold.is_finite() {
            return Err(ExtractError::Config("spike threshold must be finite".into()));
        }
        Ok(())
    }
}

/// Event symbol, without the neuron index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Symbol {
    /// Spike onset caused by excitation.
    Sigma,
    /// Spike onset caused by release from inhibition.
    RhoRebound,
    /// Return to rest after a spike.
    Eta,
    /// Burst onset.
    Beta,
    /// Return to rest after a burst.
    Rho,
}

impl Symbol {
    pub fn ascii(self) -> &'static str {
        match self {
            Symbol::Sigma => "sigma",
            Symbol::RhoRebound => "rho_rebound",
            Symbol::Eta => "eta",
            Symbol::Beta => "beta",
            Symbol::Rho => "rho",
        }
    }

    pub fn greek(self) -> &'static str {
        match self {
            Symbol::Sigma => "σ",
            Symbol::RhoRebound => "ϱ",
            Symbol::Eta => "η",
            Symbol::Beta => "β",
            Symbol::Rho => "ρ",
        }
    }

    pub fn is_onset(self) -> bool {
        matches!(self, Symbol::Sigma | Symbol::RhoRebound | Symbol::Beta)
    }
}

/// A symbol tagged with its neuron, e.g. `sigma1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EventLabel {
    pub neuron: NeuronId,
    pub symbol: Symbol,
}

impl EventLabel {
    pub fn new(symbol: Symbol, neuron: NeuronId) -> Self {
        Self { neuron, symbol }
    }

    /// ASCII token used in automata and exports.
    pub fn token(&self) -> String {
        format!("{}{}", self.symbol.ascii(), self.neuron)
    }
}

impl fmt::Display for EventLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.symbol.greek(), self.neuron)
    }
}

/// One labelled occurrence inside an [`Event`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Occurrence {
    pub label: EventLabel,
    pub cause: Cause,
}

impl Occurrence {
    /// Onsets driven by other neurons rather than by an external pulse.
    pub fn is_internal_onset(&self) -> bool {
        self.label.symbol.is_onset() && self.cause == Cause::Internal
    }
}

/// Everything that happened on one integration step. Usually a single
/// occurrence; simultaneous ones form a composite event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    /// ms
    pub time: f64,
    pub occurrences: Vec<Occurrence>,
}

impl Event {
    /// Token of the (possibly composite) event: parts joined with `+`.
    pub fn token(&self) -> String {
        self.occurrences.iter().map(|o| o.label.token()).collect::<Vec<_>>().join("+")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventTrace {
    pub events: Vec<Event>,
    pub seed: u64,
    /// Hash of the simulation and extraction configs.
    pub config_hash: String,
    /// Neurons whose last episode was cut off by the end of the run: its
    /// onset is present, its return is not.
    pub truncated: Vec<NeuronId>,
}

impl EventTrace {
    /// Drops synaptically driven onsets. In the network automaton those onsets
    /// are not separate events: they ride on the presynaptic event that caused
    /// them.
    pub fn observable(&self) -> EventTrace {
        let events = self
            .events
            .iter()
            .filter_map(|e| {
                let occurrences: Vec<Occurrence> =
                    e.occurrences.iter().copied().filter(|o| !o.is_internal_onset()).collect();
                (!occurrences.is_empty()).then(|| Event { time: e.time, occurrences })
            })
            .collect();
        EventTrace { events, ..self.clone() }
    }

    /// Neurons in the order their episodes start.
    pub fn winners(&self) -> Vec<NeuronId> {
        self.events
            .iter()
            .flat_map(|e| e.occurrences.iter())
            .filter(|o| o.label.symbol.is_onset())
            .map(|o| o.label.neuron)
            .collect()
    }

    pub fn occurrences(&self) -> impl Iterator<Item = (f64, &Occurrence)> {
        self.events.iter().flat_map(|e| e.occurrences.iter().map(move |o| (e.time, o)))
    }

    /// Writes `time_ms,neuron,symbol,cause`, one row per occurrence.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), ExtractError> {
        let io = |e: csv::Error| ExtractError::Io(e.to_string());
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["time_ms", "neuron", "symbol", "cause"]).map_err(io)?;
        for (t, o) in self.occurrences() {
            w.write_record(&[
                format!("{t:.6}"),
                o.label.neuron.to_string(),
                o.label.symbol.ascii().to_owned(),
                o.cause.as_str().to_owned(),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| ExtractError::Io(e.to_string()))
    }
}

/// Timestamps and causes dropped; one token per (possibly composite) event.
pub fn untime(trace: &EventTrace) -> Vec<String> {
    trace.events.iter().map(Event::token).collect()
}

/// Winner sequence as `win<k>` tokens.
pub fn winner_tokens(winners: &[NeuronId]) -> Vec<String> {
    winners.iter().map(|k| format!("win{k}")).collect()
}

/// Whitespace-separated rendering of an untimed string.
pub fn untimed_text(tokens: &[String]) -> String {
    tokens.join(" ")
}

/// Times of upward crossings of the spike threshold: the first sample at or
/// above threshold after a sample below it.
pub fn detect_spikes(time: &[f64], voltage: &[f64], config: &ExtractionConfig) -> Vec<f64> {
    crossing_indices(voltage, config.spike_threshold).into_iter().map(|i| time[i]).collect()
}

fn crossing_indices(voltage: &[f64], threshold: f64) -> Vec<usize> {
    voltage
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[0] < threshold && w[1] >= threshold)
        .map(|(i, _)| i + 1)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpisodeKind {
    Spike,
    Burst,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub kind: EpisodeKind,
    /// First spike time, ms.
    pub onset: f64,
    /// Last spike time, ms.
    pub offset: f64,
    pub spikes: usize,
}

/// Maximal runs of spikes with gaps of at most the burst interval. Runs with
/// at least the minimum spike count are bursts; everything else is split into
/// single spikes.
pub fn group_episodes(spikes: &[f64], config: &ExtractionConfig) -> Vec<Episode> {
    group_indices(spikes, config)
        .into_iter()
        .map(|(a, b)| Episode {
            kind: if b - a + 1 >= config.min_burst_spikes { EpisodeKind::Burst } else { EpisodeKind::Spike },
            onset: spikes[a],
            offset: spikes[b],
            spikes: b - a + 1,
        })
        .collect()
}

/// Inclusive index ranges of episodes.
fn group_indices(spikes: &[f64], config: &ExtractionConfig) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=spikes.len() {
        if i == spikes.len() || spikes[i] - spikes[i - 1] > config.burst_max_isi {
            if i > start {
                let run = (start, i - 1);
                if i - start >= config.min_burst_spikes {
                    out.push(run);
                } else {
                    out.extend((start..i).map(|k| (k, k)));
                }
            }
            start = i;
        }
    }
    out
}

/// Raw occurrence before simultaneity merging.
#[derive(Debug, Clone, Copy)]
struct Stamp {
    step: usize,
    occurrence: Occurrence,
}

fn config_hash(sim: &SimConfig, extraction: &ExtractionConfig) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(sim).expect("config serializes"));
    h.update(serde_json::to_vec(extraction).expect("config serializes"));
    hex::encode(&h.finalize()[..8])
}

/// Event trace of a simulation run.
///
/// Onset cause: excitatory if a positive pulse to the neuron is active at the
/// onset or ended within the attribution window; inhibitory if a negative
/// pulse ended within the window; internal otherwise. An internal spike onset
/// counts as a rebound when the presynaptic neuron that spiked last before it
/// is inhibitory. Spikes are grouped into bursts only for neurons whose class
/// has a burst state. Spike returns are stamped where the last spike falls back
/// below threshold; burst returns where the voltage enters the rest band for
/// good (or at that same downward crossing if it never settles).
pub fn extract_trace(
    result: &SimulationResult,
    circuit: &CircuitSpec,
    config: &ExtractionConfig,
) -> Result<EventTrace, ExtractError> {
    config.validate()?;
    let dt = result.dt();
    let n_steps = result.time.len();
    let mut spikes_by_neuron = Vec::with_capacity(circuit.neurons.len());
    for n in &circuit.neurons {
        let v = result
            .voltage(n.id)
            .ok_or_else(|| ExtractError::Mismatch(format!("no trace for neuron {}", n.id)))?;
        if v.len() != n_steps {
            return Err(ExtractError::Mismatch(format!("trace length of neuron {} differs", n.id)));
        }
        let rest = result.rest_of(n.id).expect("trace implies rest");
        if config.spike_threshold <= rest + config.rest_band {
            return Err(ExtractError::Config(format!(
                "spike threshold {} mV is inside the rest band of neuron {} (rest {rest:.2} mV)",
                config.spike_threshold, n.id
            )));
        }
        spikes_by_neuron.push(crossing_indices(v, config.spike_threshold));
    }

    let mut stamps = Vec::new();
    let mut truncated = Vec::new();
    for (k, n) in circuit.neurons.iter().enumerate() {
        let v = result.voltage(n.id).expect("checked above");
        let rest = result.rest_of(n.id).expect("checked above");
        let idx = &spikes_by_neuron[k];
        let times: Vec<f64> = idx.iter().map(|i| result.time[*i]).collect();
        let presynaptic: Vec<(usize, SynapseKind)> = circuit
            .synapses
            .iter()
            .filter(|s| s.post == n.id)
            .filter_map(|s| circuit.index_of(s.pre).map(|p| (p, s.kind)))
            .collect();
        // Only neurons with a burst state have burst episodes; for the others
        // every spike is an episode of its own.
        let groups = if n.behavior_class == BehaviorClass::SpikingReboundBursting {
            group_indices(&times, config)
        } else {
            (0..times.len()).map(|i| (i, i)).collect()
        };
        for (g, &(a, b)) in groups.iter().enumerate() {
            let is_burst = b - a + 1 >= config.min_burst_spikes;
            let onset_step = idx[a];
            let onset = result.time[onset_step];
            let cause = attribute(result, n.id, onset, config)?;
            let symbol = match (is_burst, cause) {
                (true, _) => Symbol::Beta,
                (false, Cause::ExternalExcitatory) => Symbol::Sigma,
                (false, Cause::ExternalInhibitory) => Symbol::RhoRebound,
                (false, Cause::Internal) => {
                    // Credit the presynaptic neuron that spiked last.
                    let last = presynaptic
                        .iter()
                        .filter_map(|&(p, kind)| {
                            let before = spikes_by_neuron[p].partition_point(|&i| i < onset_step);
                            (before > 0).then(|| (spikes_by_neuron[p][before - 1], kind == SynapseKind::Excitatory))
                        })
                        .max();
                    match last {
                        Some((_, false)) => Symbol::RhoRebound,
                        _ => Symbol::Sigma,
                    }
                }
            };
            stamps.push(Stamp { step: onset_step, occurrence: Occurrence { label: EventLabel::new(symbol, n.id), cause } });

            // The return must precede the next episode's onset.
            let limit = groups.get(g + 1).map_or(n_steps, |&(na, _)| idx[na]);
            let down = (idx[b]..limit).find(|&i| v[i] < config.spike_threshold);
            let Some(down) = down else {
                truncated.push(n.id);
                continue;
            };
            let step = if is_burst {
                match settle_index(v, rest, down, limit, dt, config) {
                    Some(i) => i,
                    None if limit == n_steps && result.time[n_steps - 1] - result.time[idx[b]] < config.burst_max_isi => {
                        truncated.push(n.id);
                        continue;
                    }
                    None => down,
                }
            } else {
                down
            };
            let symbol = if is_burst { Symbol::Rho } else { Symbol::Eta };
            stamps.push(Stamp {
                step,
                occurrence: Occurrence { label: EventLabel::new(symbol, n.id), cause: Cause::Internal },
            });
        }
    }

    stamps.sort_by(|x, y| {
        x.step.cmp(&y.step).then_with(|| x.occurrence.label.cmp(&y.occurrence.label))
    });
    let mut events: Vec<Event> = Vec::new();
    let mut last_step = usize::MAX;
    for s in stamps {
        if s.step == last_step {
            events.last_mut().expect("same step implies an event").occurrences.push(s.occurrence);
        } else {
            events.push(Event { time: result.time[s.step], occurrences: vec![s.occurrence] });
            last_step = s.step;
        }
    }
    truncated.sort();
    truncated.dedup();
    Ok(EventTrace { events, seed: result.seed, config_hash: config_hash(&result.config, config), truncated })
}

/// First index in `[from, limit)` where the voltage enters the rest band and
/// stays there for the hold time.
fn settle_index(v: &[f64], rest: f64, from: usize, limit: usize, dt: f64, config: &ExtractionConfig) -> Option<usize> {
    let hold = (config.rest_hold / dt).round() as usize;
    let mut run_start = None;
    for i in from..limit {
        if (v[i] - rest).abs() <= config.rest_band {
            let s = *run_start.get_or_insert(i);
            if i - s >= hold {
                return Some(s);
            }
        } else {
            run_start = None;
        }
    }
    None
}

fn attribute(result: &SimulationResult, neuron: NeuronId, onset: f64, config: &ExtractionConfig) -> Result<Cause, ExtractError> {
    let pulses = result.stimulus.pulses_for(neuron);
    let excitatory = pulses.iter().any(|p| {
        p.amplitude > 0.0 && p.start <= onset && onset - p.end() <= config.attribution_window
    });
    let inhibitory = pulses.iter().any(|p| {
        p.amplitude < 0.0 && p.end() <= onset && onset - p.end() <= config.attribution_window
    });
    match (excitatory, inhibitory) {
        (true, true) => Err(ExtractError::AttributionConflict { neuron, time: onset }),
        (true, false) => Ok(Cause::ExternalExcitatory),
        (false, true) => Ok(Cause::ExternalInhibitory),
        (false, false) => Ok(Cause::Internal),
    }
}
