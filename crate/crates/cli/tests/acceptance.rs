//! End-to-end acceptance run: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (no test harness) so the verdict lines are always
//! printed; exits non-zero if any criterion fails.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use neurodes::automata::{compose, isomorphic, Automaton, IsoMode, TransitionKind};
use neurodes::des::{
    apply_synapses, neuron_template, wta_automaton, NetworkTopology, TopologyNeuron,
    TopologySynapse, WtaParams,
};
use neurodes::extract::{detect_spikes, extract_trace, untime, ExtractionConfig, Occurrence};
use neurodes::realization::{realize_and_simulate, round_trip_check, trial_seeds};
use neurodes::sim::{
    simulate, BehaviorClass, CircuitBundle, NeuronId, Pulse, SimConfig, SimulationResult, Speed, SynapseKind,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Verdict = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn core_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core")
}

fn circuit_path(name: &str) -> PathBuf {
    core_dir().join("data/circuits").join(format!("{name}.json"))
}

fn fixture_path(name: &str) -> PathBuf {
    core_dir().join("tests/fixtures").join(format!("{name}.json"))
}

fn circuit(name: &str) -> CircuitBundle {
    CircuitBundle::load(&circuit_path(name)).expect("shipped circuit loads")
}

fn fixture(name: &str) -> Automaton {
    Automaton::load(&fixture_path(name)).expect("fixture loads")
}

const FIXTURES: &[&str] = &[
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

fn same(a: &Automaton, b: &Automaton) -> bool {
    isomorphic(a, b, IsoMode::Exact).is_some()
}

fn run_bundle(b: &CircuitBundle) -> (SimulationResult, Vec<String>) {
    let r = simulate(&b.circuit(), &b.stimuli, &b.config).expect("simulation runs");
    let trace = extract_trace(&r, &b.circuit(), &ExtractionConfig::default()).expect("extraction runs");
    (r, untime(&trace))
}

fn neurodes(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_neurodes")).args(args).output().expect("binary runs")
}

/// At every step, at most one neuron is at or above the spike threshold.
fn exclusive(r: &SimulationResult) -> bool {
    let threshold = ExtractionConfig::default().spike_threshold;
    (0..r.time.len()).all(|i| r.voltages.iter().filter(|v| v[i] >= threshold).count() <= 1)
}

fn criterion_1() -> Verdict {
    let b = circuit("threshold_pulses");
    let start = Instant::now();
    let r = simulate(&b.circuit(), &b.stimuli, &b.config).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let v = &r.voltages[0];
    let window_max = |lo: f64, hi: f64| {
        r.time.iter().zip(v).filter(|(t, _)| (lo..hi).contains(*t)).map(|(_, v)| *v).fold(f64::MIN, f64::max)
    };
    let (first, second) = (window_max(0.0, 30.0), window_max(30.0, 60.0));
    let spikes = detect_spikes(&r.time, v, &ExtractionConfig::default());
    ensure!(first < 0.0, "3.75 pulse reached {first:.2} mV");
    ensure!(spikes.len() == 1 && spikes[0] > 35.0, "spikes {spikes:?}");
    ensure!((25.0..=45.0).contains(&second), "peak {second:.2} mV");
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!("3.75 -> max {first:.2} mV; 3.95 -> one spike, peak {second:.2} mV; {elapsed:.0?}"))
}

fn criterion_2() -> Verdict {
    let cfg = ExtractionConfig::default();
    let (d, depolarized) = run_bundle(&circuit("rebound_depolarize"));
    let d_spikes = detect_spikes(&d.time, &d.voltages[0], &cfg);
    let (h, hyperpolarized) = run_bundle(&circuit("rebound_hyperpolarize"));
    let h_spikes = detect_spikes(&h.time, &h.voltages[0], &cfg);
    ensure!(!d_spikes.is_empty(), "no spike under depolarization");
    ensure!(h_spikes.len() >= 2, "rebound spikes {h_spikes:?}");
    ensure!(h_spikes.windows(2).all(|w| w[1] - w[0] <= 30.0), "ISIs too long: {h_spikes:?}");
    ensure!(depolarized == ["sigma1", "eta1"], "depolarized: {depolarized:?}");
    ensure!(hyperpolarized == ["beta1", "rho1"], "hyperpolarized: {hyperpolarized:?}");
    Ok(format!(
        "{} spike(s) -> \"{}\"; burst of {} at {:?} ms -> \"{}\"",
        d_spikes.len(),
        depolarized.join(" "),
        h_spikes.len(),
        h_spikes.iter().map(|t| (t * 100.0).round() / 100.0).collect::<Vec<_>>(),
        hyperpolarized.join(" ")
    ))
}

fn criterion_3() -> Verdict {
    let cases = [
        (BehaviorClass::Lif, "lif_neuron"),
        (BehaviorClass::Excitable, "excitable_neuron"),
        (BehaviorClass::ReboundSpiking, "rebound_spiking_neuron"),
        (BehaviorClass::SpikingReboundBursting, "rebound_bursting_neuron"),
    ];
    for (class, name) in cases {
        ensure!(same(&neuron_template(class, NeuronId(1)), &fixture(name)), "{class} differs from {name}");
    }
    Ok("4/4 templates isomorphic to references".into())
}

fn pair(kind: SynapseKind) -> NetworkTopology {
    NetworkTopology {
        neurons: (1..=2).map(|i| TopologyNeuron { id: NeuronId(i), class: BehaviorClass::ReboundSpiking }).collect(),
        synapses: vec![TopologySynapse { pre: NeuronId(1), post: NeuronId(2), kind, speed: Speed::Fast }],
        interactable: BTreeSet::from([NeuronId(1)]),
    }
}

fn criterion_4() -> Verdict {
    let mut sizes = Vec::new();
    for (kind, reference, states) in
        [(SynapseKind::Excitatory, "excitatory_pair", 4), (SynapseKind::Inhibitory, "inhibitory_pair", 3)]
    {
        let t = pair(kind);
        let templates = t.neurons.iter().map(|n| (n.id, neuron_template(n.class, n.id))).collect();
        let r = apply_synapses(&t, &templates).map_err(|e| e.to_string())?;
        let composed = compose(&r[&NeuronId(1)], &r[&NeuronId(2)]).map_err(|e| e.to_string())?.accessible();
        ensure!(composed.state_count() == states, "{reference}: {} states", composed.state_count());
        ensure!(same(&composed, &fixture(reference)), "{reference}: not isomorphic");
        sizes.push(format!("{reference} {states} states"));
    }
    Ok(sizes.join(", "))
}

fn criterion_5() -> Verdict {
    let b = circuit("hco");
    let start = Instant::now();
    let r = simulate(&b.circuit(), &b.stimuli, &b.config).map_err(|e| e.to_string())?;
    let trace = extract_trace(&r, &b.circuit(), &ExtractionConfig::default()).map_err(|e| e.to_string())?;
    let out = tempfile::tempdir().map_err(|e| e.to_string())?;
    let check = neurodes(&["check", circuit_path("hco").to_str().unwrap(), "--out", out.path().to_str().unwrap()]);
    let elapsed = start.elapsed();
    let winners = trace.winners();
    let switches = winners.windows(2).filter(|w| w[0] != w[1]).count();
    ensure!(winners.first() == Some(&NeuronId(1)), "first winner {winners:?}");
    ensure!(winners.windows(2).all(|w| w[0] != w[1]), "repeat in {winners:?}");
    ensure!(switches >= 10, "{switches} alternations");
    ensure!(exclusive(&r), "two neurons above threshold at once");
    ensure!(check.status.code() == Some(0), "check exited {:?}", check.status.code());
    ensure!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    Ok(format!("{switches} alternations, exclusive, check exit 0; {elapsed:.1?}"))
}

fn strongly_connected(a: &Automaton) -> bool {
    let reach = |reverse: bool| {
        let mut seen = BTreeSet::from([a.initial()]);
        let mut stack = vec![a.initial()];
        while let Some(s) = stack.pop() {
            for t in a.transitions() {
                let (x, y) = if reverse { (t.dst, t.src) } else { (t.src, t.dst) };
                if x == s && seen.insert(y) {
                    stack.push(y);
                }
            }
        }
        seen.len()
    };
    reach(false) == a.state_count() && reach(true) == a.state_count()
}

fn criterion_6() -> Verdict {
    for n in 2..=6 {
        let a = wta_automaton(&WtaParams::new(n)).map_err(|e| e.to_string())?;
        ensure!(a.state_count() == n + 1, "N={n}: {} states", a.state_count());
        ensure!(a.transitions().len() == n * (n + 1), "N={n}: {} transitions", a.transitions().len());
        ensure!(!a.has_self_loops(), "N={n}: self-loop");
        ensure!(strongly_connected(&a), "N={n}: not strongly connected");
    }
    Ok("N=2..6: N+1 states, N(N+1) transitions, loop-free, strongly connected".into())
}

/// Onsets after `after`, in time order.
fn onsets_after(trace: &[(f64, Occurrence)], after: f64) -> impl Iterator<Item = &(f64, Occurrence)> {
    trace.iter().filter(move |(t, o)| *t > after && o.label.symbol.is_onset())
}

fn criterion_7() -> Verdict {
    const TRIALS: usize = 100;
    const BASELINE_MS: f64 = 300.0;
    let pulse_delay = 10.0;
    let b = circuit("wta3");
    let c = b.circuit();
    let cfg = ExtractionConfig::default();
    let (mut violations_i, mut violations_iii, mut steered) = (0, 0, 0);
    let mut winner_changes = 0;
    for seed in trial_seeds(7, TRIALS) {
        let config = SimConfig { seed, record_states: false, ..b.config };
        let r = simulate(&c, &b.stimuli, &config).map_err(|e| e.to_string())?;
        let trace = extract_trace(&r, &c, &cfg).map_err(|e| e.to_string())?;
        let winners = trace.winners();
        winner_changes += winners.len().saturating_sub(1);
        violations_i += usize::from(!exclusive(&r));
        violations_iii += usize::from(winners.windows(2).any(|w| w[0] == w[1]));

        // Steer: pulse the designated non-winner shortly after the current
        // winner took over and see who wins next.
        let base_cfg = SimConfig { t_end: BASELINE_MS, ..config };
        let base = simulate(&c, &b.stimuli, &base_cfg).map_err(|e| e.to_string())?;
        let base_trace = extract_trace(&base, &c, &cfg).map_err(|e| e.to_string())?;
        let occ: Vec<(f64, Occurrence)> = base_trace.occurrences().map(|(t, o)| (t, *o)).collect();
        let Some(&(tw, last)) = onsets_after(&occ, f64::NEG_INFINITY).last() else {
            return Err(format!("seed {seed}: no winner"));
        };
        let w = last.label.neuron.0;
        let target = NeuronId(w % 3 + 1);
        let mut stimuli = b.stimuli.clone();
        stimuli.push(target, Pulse { start: tw + pulse_delay, duration: 2.0, amplitude: 30.0 });
        let probe_cfg = SimConfig { t_end: tw + pulse_delay + 60.0, ..config };
        let probe = simulate(&c, &stimuli, &probe_cfg).map_err(|e| e.to_string())?;
        let probe_trace = extract_trace(&probe, &c, &cfg).map_err(|e| e.to_string())?;
        let occ: Vec<(f64, Occurrence)> = probe_trace.occurrences().map(|(t, o)| (t, *o)).collect();
        if onsets_after(&occ, tw + 0.5).next().map(|(_, o)| o.label.neuron) == Some(target) {
            steered += 1;
        }
    }
    ensure!(violations_i == 0, "(i) violated in {violations_i} trials");
    ensure!(violations_iii == 0, "(iii) violated in {violations_iii} trials");
    ensure!(steered >= 95, "(ii) steered {steered}/{TRIALS}");
    Ok(format!(
        "(i) 0/{TRIALS} violations, (iii) 0/{TRIALS} repeats over {winner_changes} winner changes, (ii) {steered}/{TRIALS} steered"
    ))
}

fn random_automaton(rng: &mut ChaCha8Rng) -> Automaton {
    let n = rng.random_range(3..=6);
    let density = rng.random_range(0.3..=0.8);
    let mut b = Automaton::builder().initial("q0");
    for s in 1..n {
        b = b.state(&format!("q{s}"));
    }
    let mut k = 0;
    for s in 0..n {
        for d in 0..n {
            if s != d && rng.random_bool(density) {
                b = b.edge(&format!("q{s}"), &format!("e{k}"), TransitionKind::Internal, &format!("q{d}"));
                k += 1;
            }
        }
    }
    b.build().expect("distinct events keep it deterministic")
}

fn edge_labels(a: &Automaton) -> BTreeSet<(String, String)> {
    a.transitions().iter().map(|t| (a.label(t.src).to_owned(), a.label(t.dst).to_owned())).collect()
}

fn criterion_8() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for i in 0..50 {
        let a = random_automaton(&mut rng);
        let verdict = round_trip_check(&a).map_err(|e| e.to_string())?;
        ensure!(verdict.pass, "random automaton {i}: {:?}", verdict.mismatch);
    }

    let cycle = fixture("cycle3");
    let runs = realize_and_simulate(&cycle, 10, 1, 1000.0).map_err(|e| e.to_string())?;
    let bad: Vec<u64> = runs.iter().filter(|r| !(r.follows_automaton && r.exclusive)).map(|r| r.seed).collect();
    ensure!(bad.is_empty(), "cycle: trials off the cycle {bad:?}");
    let shortest = runs.iter().map(|r| r.winners.len()).min().unwrap_or(0);
    ensure!(shortest >= 4, "cycle: only {shortest} winners in some trial");

    let branch = fixture("branch");
    let runs = realize_and_simulate(&branch, 100, 1, 1000.0).map_err(|e| e.to_string())?;
    let mut observed = BTreeSet::new();
    let mut off_path = 0;
    for r in &runs {
        off_path += usize::from(!(r.follows_automaton && r.exclusive));
        for w in r.states.windows(2) {
            observed.insert((w[0].clone(), w[1].clone()));
        }
    }
    let want = edge_labels(&branch);
    ensure!(off_path == 0, "branch: {off_path}/100 trials off the automaton");
    ensure!(observed == want, "branch: observed {observed:?}, automaton {want:?}");
    Ok(format!(
        "50/50 random round trips; cycle 10/10 (>= {shortest} winners each); branch 100/100 on-path, {} of {} edges seen",
        observed.len(),
        want.len()
    ))
}

/// All strings over the alphabet up to `max_len`, visited depth first.
fn for_each_string(alphabet: &[String], max_len: usize, word: &mut Vec<String>, f: &mut impl FnMut(&[String])) {
    f(word);
    if word.len() == max_len {
        return;
    }
    for e in alphabet {
        word.push(e.clone());
        for_each_string(alphabet, max_len, word, f);
        word.pop();
    }
}

fn criterion_9() -> Verdict {
    let fixtures: Vec<(&str, Automaton)> = FIXTURES.iter().map(|n| (*n, fixture(n))).collect();
    let mut strings = 0usize;
    for (name, a) in &fixtures {
        let lang: HashSet<Vec<String>> = a.generate_language(6).into_iter().collect();
        let alphabet: Vec<String> = a.alphabet().keys().cloned().collect();
        let mut mismatch = None;
        for_each_string(&alphabet, 6, &mut Vec::new(), &mut |w| {
            strings += 1;
            if mismatch.is_none() && a.accepts(w) != lang.contains(w) {
                mismatch = Some(w.to_vec());
            }
        });
        ensure!(mismatch.is_none(), "{name}: accepts and language disagree on {mismatch:?}");
    }
    let mut pairs = 0;
    let mut triples = 0;
    for (na, a) in &fixtures {
        for (nb, b) in &fixtures {
            match (compose(a, b), compose(b, a)) {
                (Ok(ab), Ok(ba)) => {
                    ensure!(same(&ab, &ba), "{na} || {nb} does not commute");
                    pairs += 1;
                }
                (Err(_), Err(_)) => {}
                _ => return Err(format!("{na} || {nb}: only one order composes")),
            }
            for (nc, c) in &fixtures {
                let left = compose(a, b).and_then(|ab| compose(&ab, c));
                let right = compose(b, c).and_then(|bc| compose(a, &bc));
                match (left, right) {
                    (Ok(l), Ok(r)) => {
                        ensure!(same(&l, &r), "({na} || {nb}) || {nc} is not associative");
                        triples += 1;
                    }
                    (Err(_), Err(_)) => {}
                    _ => return Err(format!("{na}, {nb}, {nc}: only one grouping composes")),
                }
            }
        }
    }
    Ok(format!(
        "{strings} strings over {} fixtures agree; {pairs} pairs commute, {triples} triples associate",
        fixtures.len()
    ))
}

fn criterion_10() -> Verdict {
    let work = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dir = |name: &str| work.path().join(name).to_str().unwrap().to_owned();
    let c = |name: &str| circuit_path(name).to_str().unwrap().to_owned();
    let f = |name: &str| fixture_path(name).to_str().unwrap().to_owned();
    let wta = format!("{}/wta.json", dir("wta"));
    let pipelines: Vec<(&str, Vec<String>)> = vec![
        ("simulate", vec!["simulate".into(), c("threshold_pulses"), "--plot".into()]),
        ("extract", vec!["extract".into(), c("wta3"), "--seed".into(), "9".into(), "--t-end".into(), "300".into()]),
        ("build-des", vec!["build-des".into(), c("hco")]),
        ("compose", vec!["compose".into(), f("inhibitory_pre"), f("inhibitory_post")]),
        ("wta", vec!["wta".into(), "--n".into(), "3".into()]),
        ("restrict", vec!["restrict".into(), wta, "--edges".into(), "1>3,2>3".into()]),
        ("realize", vec!["realize".into(), f("branch"), "--trials".into(), "3".into(), "--seed".into(), "4".into()]),
        ("round-trip", vec!["round-trip".into(), f("cycle3")]),
        ("check", vec!["check".into(), c("hco"), "--trials".into(), "2".into(), "--seed".into(), "9".into()]),
        ("export-dot", vec!["export-dot".into(), f("hco")]),
    ];
    let mut files = 0;
    for (name, mut args) in pipelines {
        args.extend(["--out".into(), dir(name)]);
        let argv: Vec<&str> = args.iter().map(String::as_str).collect();
        let first = neurodes(&argv);
        ensure!(first.status.code() == Some(0), "{name}: exit {:?}: {}", first.status.code(), String::from_utf8_lossy(&first.stderr));
        let again = format!("{}-rerun", dir(name));
        let manifest = format!("{}/manifest.json", dir(name));
        let second = neurodes(&["rerun", &manifest, "--out", &again]);
        ensure!(second.status.code() == Some(0), "{name}: rerun exit {:?}: {}", second.status.code(), String::from_utf8_lossy(&second.stdout));
        let a = read_outputs(Path::new(&dir(name)));
        let b = read_outputs(Path::new(&again));
        ensure!(a == b, "{name}: rerun outputs differ");
        files += a.len();
    }
    Ok(format!("10 pipelines, {files} output files byte-identical on rerun"))
}

/// Output files other than the manifest, which records its own directory.
fn read_outputs(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .expect("output dir exists")
        .map(|e| e.expect("dir entry").path())
        .filter(|p| p.file_name().is_some_and(|n| n != "manifest.json"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).expect("readable")))
        .collect()
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 10] = [
        ("excitability threshold", criterion_1),
        ("rebound spiking and bursting", criterion_2),
        ("single-neuron automata", criterion_3),
        ("synapse constructions", criterion_4),
        ("half-center oscillator", criterion_5),
        ("winner-take-all automaton", criterion_6),
        ("winner-take-all simulation", criterion_7),
        ("realization round trip", criterion_8),
        ("oracle equivalence", criterion_9),
        ("determinism", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let verdict = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match verdict {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{secs:.1}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("acceptance: {}/10 passed", 10 - failed);
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
