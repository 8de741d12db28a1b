use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;

use neurodes::automata::{compose_all, Automaton};
use neurodes::conformance::{check, ConformanceReport};
use neurodes::des::{
    apply_excitatory_restriction, build_network_des, wta_automaton, NetworkTopology, Restriction, WtaParams,
};
use neurodes::extract::{extract_trace, untime, untimed_text, winner_tokens, EventTrace, ExtractionConfig};
use neurodes::realization::{realize, realize_and_simulate, round_trip_check, trial_seeds};
use neurodes::sim::{simulate, CircuitBundle, SimulationResult, StimulusProgram};

use crate::manifest::{self, FileHash, RunConfig, RunManifest};
use crate::{plot, Command, RunFlags, Verdict};

/// Files a command produced, before they are written.
struct Output {
    verdict: Verdict,
    files: Vec<(String, Vec<u8>)>,
    config: Option<RunConfig>,
}

impl Output {
    fn new() -> Self {
        Self { verdict: Verdict::Ok, files: Vec::new(), config: None }
    }

    fn file(mut self, name: impl Into<String>, bytes: impl Into<Vec<u8>>) -> Self {
        self.files.push((name.into(), bytes.into()));
        self
    }

    fn json<T: Serialize>(self, name: &str, value: &T) -> Self {
        let mut text = serde_json::to_string_pretty(value).expect("output serializes");
        text.push('\n');
        self.file(name, text)
    }

    fn automaton(self, stem: &str, a: &Automaton) -> Self {
        self.file(format!("{stem}.json"), a.to_json() + "\n").file(format!("{stem}.dot"), a.to_dot(stem))
    }
}

pub fn run(command: &Command, out: &Path) -> Result<Verdict> {
    if let Command::Rerun { manifest } = command {
        return rerun(manifest, out);
    }
    let command = absolutize(command)?;
    let inputs = inputs(&command).into_iter().map(|p| manifest::hash_file(&p)).collect::<Result<Vec<_>>>()?;
    let output = execute(&command)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut outputs = Vec::with_capacity(output.files.len());
    for (name, bytes) in &output.files {
        let path = out.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        outputs.push(FileHash { path: PathBuf::from(name), sha256: manifest::sha256_hex(bytes) });
    }
    let m = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_owned(),
        version: env!("CARGO_PKG_VERSION").to_owned(),
        command,
        inputs,
        config: output.config,
        out_dir: std::path::absolute(out)?,
        outputs,
    };
    let path = out.join(manifest::FILE_NAME);
    fs::write(&path, serde_json::to_string_pretty(&m)? + "\n").with_context(|| format!("writing {}", path.display()))?;
    Ok(output.verdict)
}

fn rerun(path: &Path, out: &Path) -> Result<Verdict> {
    let recorded = manifest::RunManifest::load(path)?;
    let changed = manifest::changed_inputs(&recorded)?;
    if !changed.is_empty() {
        bail!("inputs changed since the manifest was written: {changed:?}");
    }
    if std::path::absolute(out)? == recorded.out_dir {
        bail!("rerun needs an output directory other than the recorded one");
    }
    run(&recorded.command, out)?;
    let fresh = manifest::RunManifest::load(&out.join(manifest::FILE_NAME))?;
    if fresh.outputs == recorded.outputs {
        println!("reproduced {} output files", fresh.outputs.len());
        Ok(Verdict::Ok)
    } else {
        for (a, b) in recorded.outputs.iter().zip(&fresh.outputs) {
            if a != b {
                println!("differs: {}", a.path.display());
            }
        }
        if recorded.outputs.len() != fresh.outputs.len() {
            println!("output count {} vs {}", recorded.outputs.len(), fresh.outputs.len());
        }
        Ok(Verdict::Violation)
    }
}

fn absolutize(command: &Command) -> Result<Command> {
    let abs = |p: &PathBuf| std::path::absolute(p).with_context(|| format!("resolving {}", p.display()));
    let opt = |p: &Option<PathBuf>| p.as_ref().map(abs).transpose();
    let mut c = command.clone();
    match &mut c {
        Command::Simulate { circuit, stimulus, .. } => {
            *circuit = abs(circuit)?;
            *stimulus = opt(stimulus)?;
        }
        Command::Extract { circuit, stimulus, config, .. } => {
            *circuit = abs(circuit)?;
            *stimulus = opt(stimulus)?;
            *config = opt(config)?;
        }
        Command::Check { circuit, stimulus, topology, .. } => {
            *circuit = abs(circuit)?;
            *stimulus = opt(stimulus)?;
            *topology = opt(topology)?;
        }
        Command::BuildDes { input: p }
        | Command::Restrict { wta: p, .. }
        | Command::Realize { automaton: p, .. }
        | Command::RoundTrip { automaton: p }
        | Command::ExportDot { automaton: p }
        | Command::Rerun { manifest: p } => *p = abs(p)?,
        Command::Compose { automata } => {
            for p in automata {
                *p = abs(p)?;
            }
        }
        Command::Wta { .. } => {}
    }
    Ok(c)
}

fn inputs(command: &Command) -> Vec<PathBuf> {
    let mut out = Vec::new();
    match command {
        Command::Simulate { circuit, stimulus, .. } => out.extend([Some(circuit.clone()), stimulus.clone()].into_iter().flatten()),
        Command::Extract { circuit, stimulus, config, .. } => {
            out.extend([Some(circuit.clone()), stimulus.clone(), config.clone()].into_iter().flatten())
        }
        Command::Check { circuit, stimulus, topology, .. } => {
            out.extend([Some(circuit.clone()), stimulus.clone(), topology.clone()].into_iter().flatten())
        }
        Command::BuildDes { input: p }
        | Command::Restrict { wta: p, .. }
        | Command::Realize { automaton: p, .. }
        | Command::RoundTrip { automaton: p }
        | Command::ExportDot { automaton: p }
        | Command::Rerun { manifest: p } => out.push(p.clone()),
        Command::Compose { automata } => out.extend(automata.iter().cloned()),
        Command::Wta { .. } => {}
    }
    out
}

fn execute(command: &Command) -> Result<Output> {
    match command {
        Command::Simulate { circuit, stimulus, run, plot } => {
            let bundle = load_bundle(circuit, stimulus.as_deref(), run)?;
            let result = simulate_bundle(&bundle)?;
            for (k, id) in result.neuron_ids.iter().enumerate() {
                let peak = result.voltages[k].iter().copied().fold(f64::NEG_INFINITY, f64::max);
                println!("neuron {id}: max V = {peak:.2} mV");
            }
            let mut csv = Vec::new();
            result.write_csv(&mut csv)?;
            let mut output = Output::new().file("trace.csv", csv);
            if *plot {
                output = output.file("voltage.svg", plot::voltage_svg(&result));
            }
            output.config = Some(run_config(&bundle));
            Ok(output)
        }
        Command::Extract { circuit, stimulus, config, run } => {
            let bundle = load_bundle(circuit, stimulus.as_deref(), run)?;
            let extraction = match config {
                Some(p) => serde_json::from_str(&read(p)?).with_context(|| format!("parsing {}", p.display()))?,
                None => ExtractionConfig::default(),
            };
            let result = simulate_bundle(&bundle)?;
            let trace = extract_trace(&result, &bundle.circuit(), &extraction)?;
            let observable = untimed_text(&untime(&trace.observable()));
            println!("{observable}");
            let mut output = trace_files(Output::new(), &trace)
                .file("untimed.txt", untimed_text(&untime(&trace)) + "\n")
                .file("observable.txt", observable + "\n");
            output.config = Some(run_config(&bundle));
            Ok(output)
        }
        Command::BuildDes { input } => {
            let text = read(input)?;
            let value: serde_json::Value =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", input.display()))?;
            let topology = if value.get("config").is_some() {
                let bundle = CircuitBundle::from_json(&text).with_context(|| format!("in {}", input.display()))?;
                NetworkTopology::from_circuit(&bundle.circuit(), &bundle.stimuli)
            } else {
                NetworkTopology::from_json(&text).with_context(|| format!("in {}", input.display()))?
            };
            let des = build_network_des(&topology)?;
            println!("{} states, {} transitions", des.state_count(), des.transitions().len());
            Ok(Output::new().automaton("des", &des))
        }
        Command::Compose { automata } => {
            let loaded = automata.iter().map(|p| load_automaton(p)).collect::<Result<Vec<_>>>()?;
            let composed = compose_all(&loaded)?;
            println!("{} states, {} transitions", composed.state_count(), composed.transitions().len());
            Ok(Output::new().automaton("composed", &composed))
        }
        Command::Wta { n, edges } => {
            let params = WtaParams { n: *n, excitatory_edges: parse_edges(edges)? };
            let a = wta_automaton(&params)?;
            println!("{} states, {} transitions", a.state_count(), a.transitions().len());
            Ok(Output::new().automaton("wta", &a))
        }
        Command::Restrict { wta, edges, complete } => {
            let a = load_automaton(wta)?;
            let mode = if *complete { Restriction::Complete } else { Restriction::Partial };
            let r = apply_excitatory_restriction(&a, &parse_edges(edges)?, mode)?;
            Ok(Output::new().automaton("restricted", &r))
        }
        Command::Realize { automaton, trials, run } => {
            let a = load_automaton(automaton)?;
            let plan = realize(&a)?;
            let circuit = plan.circuit_spec();
            let inhibitory = circuit.synapses.len() - plan.synapses.len();
            println!("{} neurons, {inhibitory} inhibitory synapses, {} excitatory synapses", plan.neuron_count(), plan.synapses.len());
            let mut output = Output::new().json("plan.json", &plan).json("circuit.json", &plan.circuit);
            if *trials > 0 {
                if run.dt.is_some() {
                    bail!("--dt is fixed by the realized circuit");
                }
                let seed = run.seed.unwrap_or(plan.circuit.config.seed);
                let t_end = run.t_end.unwrap_or(plan.circuit.config.t_end);
                let outcomes = realize_and_simulate(&a, *trials, seed, t_end)?;
                let good = outcomes.iter().filter(|o| o.exclusive && o.follows_automaton).count();
                println!("{good}/{trials} trials follow the automaton");
                let text: String = outcomes.iter().map(|o| o.states.join(" ") + "\n").collect();
                output = output.json("trials.json", &outcomes).file("states.txt", text);
                output.config = Some(RunConfig { dt: plan.circuit.config.dt, t_end, seed });
                if good < outcomes.len() {
                    output.verdict = Verdict::Violation;
                }
            }
            Ok(output)
        }
        Command::RoundTrip { automaton } => {
            let a = load_automaton(automaton)?;
            let verdict = round_trip_check(&a)?;
            println!("{}", if verdict.pass { "pass" } else { "fail" });
            if let Some(m) = &verdict.mismatch {
                println!("{m}");
            }
            let mut output = Output::new().json("round_trip.json", &verdict);
            if !verdict.pass {
                output.verdict = Verdict::Violation;
            }
            Ok(output)
        }
        Command::Check { circuit, stimulus, topology, trials, run } => {
            let bundle = load_bundle(circuit, stimulus.as_deref(), run)?;
            let topology = match topology {
                Some(p) => NetworkTopology::load(p)?,
                None => NetworkTopology::from_circuit(&bundle.circuit(), &bundle.stimuli),
            };
            let des = build_network_des(&topology)?;
            let seeds = if *trials <= 1 { vec![bundle.config.seed] } else { trial_seeds(bundle.config.seed, *trials) };
            let extraction = ExtractionConfig::default();
            let mut reports = Vec::with_capacity(seeds.len());
            let mut first_trace = None;
            for seed in &seeds {
                let mut b = bundle.clone();
                b.config.seed = *seed;
                let result = simulate_bundle(&b)?;
                let trace = extract_trace(&result, &b.circuit(), &extraction)?;
                reports.push(SeededReport { seed: *seed, report: check(&des, &trace) });
                first_trace.get_or_insert(trace);
            }
            let violations = reports.iter().filter(|r| !r.report.conforms).count();
            for r in reports.iter().filter(|r| !r.report.conforms) {
                let f = r.report.failure.as_ref().expect("violation has a failure");
                println!(
                    "violation (seed {}): accepted prefix [{}]; at {:.2} ms in state {}: {}",
                    r.seed,
                    r.report.accepted_prefix().join(" "),
                    f.time,
                    f.state,
                    f.reason
                );
            }
            if violations == 0 {
                println!("conform: {}", untimed_text(&reports[0].report.tokens));
            }
            let trace = first_trace.expect("at least one trial");
            let mut output = trace_files(Output::new().automaton("des", &des), &trace)
                .file("untimed.txt", untimed_text(&reports[0].report.tokens) + "\n")
                .json("report.json", &reports);
            output.config = Some(run_config(&bundle));
            if violations > 0 {
                output.verdict = Verdict::Violation;
            }
            Ok(output)
        }
        Command::ExportDot { automaton } => {
            let a = load_automaton(automaton)?;
            let stem = automaton.file_stem().and_then(|s| s.to_str()).unwrap_or("automaton");
            Ok(Output::new().file(format!("{stem}.dot"), a.to_dot(stem)))
        }
        Command::Rerun { .. } => unreachable!("handled by run"),
    }
}

#[derive(Serialize)]
struct SeededReport {
    seed: u64,
    #[serde(flatten)]
    report: ConformanceReport,
}

fn trace_files(output: Output, trace: &EventTrace) -> Output {
    let mut csv = Vec::new();
    trace.write_csv(&mut csv).expect("writing to memory");
    let winners = untimed_text(&winner_tokens(&trace.winners()));
    output.file("events.csv", csv).file("winners.txt", winners + "\n")
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_automaton(path: &Path) -> Result<Automaton> {
    Automaton::load(path).with_context(|| format!("in {}", path.display()))
}

fn load_bundle(path: &Path, stimulus: Option<&Path>, run: &RunFlags) -> Result<CircuitBundle> {
    let mut bundle = CircuitBundle::load(path).with_context(|| format!("in {}", path.display()))?;
    if let Some(p) = stimulus {
        let program: StimulusProgram =
            serde_json::from_str(&read(p)?).with_context(|| format!("parsing {}", p.display()))?;
        bundle.circuit().validate_stimulus(&program).with_context(|| format!("in {}", p.display()))?;
        bundle.stimuli = program;
    }
    if let Some(dt) = run.dt {
        bundle.config.dt = dt;
    }
    if let Some(t_end) = run.t_end {
        bundle.config.t_end = t_end;
    }
    if let Some(seed) = run.seed {
        bundle.config.seed = seed;
    }
    bundle.config.record_states = false;
    bundle.config.validate()?;
    Ok(bundle)
}

fn simulate_bundle(bundle: &CircuitBundle) -> Result<SimulationResult> {
    Ok(simulate(&bundle.circuit(), &bundle.stimuli, &bundle.config)?)
}

fn run_config(bundle: &CircuitBundle) -> RunConfig {
    RunConfig { dt: bundle.config.dt, t_end: bundle.config.t_end, seed: bundle.config.seed }
}

/// Parses `1>3,2>3` into 1-based winner pairs.
fn parse_edges(text: &str) -> Result<BTreeSet<(usize, usize)>> {
    let mut edges = BTreeSet::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let Some((a, b)) = part.split_once('>') else {
            bail!("edge `{part}` is not of the form FROM>TO");
        };
        let parse = |s: &str| s.trim().parse::<usize>().with_context(|| format!("edge `{part}`"));
        edges.insert((parse(a)?, parse(b)?));
    }
    Ok(edges)
}
