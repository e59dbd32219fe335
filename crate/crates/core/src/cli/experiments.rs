use rand::Rng;
use serde_json::json;

use super::config::{
    substream, Experiment, ExperimentConfig, GhzStrategy, InputKind, Instance, Mode, PipelineStep,
};
use super::report::ExperimentReport;
use crate::compile::{
    compile_corpus, halve_turns_private, halve_turns_shared, pad_turns, parallel_repeat,
    perfect_completeness, perfect_completeness_with, seven_to_five, CompileCorpusEntry,
};
use crate::dam::toy_protocols;
use crate::dqct::{build_ideal_pdqct, build_pdqct, closeness_bound, soundness_probe, DqctInstance};
use crate::error::{Error, Result};
use crate::ghz::{build_pghz, ghz_output_fidelity, GhzProtocolParams};
use crate::network::NetworkGraph;
use crate::protocol::{acceptance_probability, execute_sampled, ProtocolSpec, ProverStrategy};
use crate::prover::{exact_single_message_max, seesaw_optimize_from};
use crate::qcore::{fidelity, haar_random_state, rng, trace_distance, DensityOperator, QuantumState, C64};

/// Runs one experiment; the report depends only on `config`.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new(config);
    let seed = config.seed;
    match &config.experiment {
        Experiment::Ghz {
            graph,
            copies,
            epsilon,
            delta,
            strategy,
        } => {
            let graph = graph.build()?;
            let params = GhzProtocolParams {
                nodes: graph.node_count(),
                copies: *copies,
                epsilon: *epsilon,
                delta: *delta,
                seed,
            };
            let (spec, honest) = build_pghz(&graph, &params)?;
            let prover = match strategy {
                GhzStrategy::Honest => honest,
                GhzStrategy::Unentangled => {
                    let mut s = honest;
                    s.moves[0].responses.iter_mut().for_each(|r| r.ops.clear());
                    s
                }
                GhzStrategy::WrongParity => {
                    let mut s = honest;
                    for r in &mut s.moves[2].responses {
                        if let Some(x) = r.replies.first_mut() {
                            *x ^= 1;
                        }
                    }
                    s
                }
            };
            let (acc, fid) = ghz_output_fidelity(&spec, &prover)?;
            report.metric("acceptance", acc);
            report.metric("output_fidelity", fid);
            report.metric("epsilon", *epsilon);
            report.flag("fidelity_meets_epsilon", fid >= 1.0 - epsilon);
            describe(&mut report, &spec);
            sampled(&mut report, config, &spec, &prover)?;
        }
        Experiment::Dqct {
            graph,
            qubits_per_node,
            inputs,
            copies,
            epsilon,
            delta,
            ideal_control,
            optimizer,
        } => {
            let graph = graph.build()?;
            let instance = make_instance(graph, qubits_per_node.clone(), *inputs, substream(seed, "dqct.inputs"))?;
            let params = GhzProtocolParams {
                nodes: instance.graph.node_count(),
                copies: *copies,
                epsilon: *epsilon,
                delta: *delta,
                seed,
            };
            let (spec, honest) = if *ideal_control {
                build_ideal_pdqct(&instance)?
            } else {
                build_pdqct(&instance, &params)?
            };
            let eps = if *ideal_control { 0.0 } else { *epsilon };
            let acc = acceptance_probability(&spec, &honest)?;
            report.metric("acceptance", acc);
            report.metric("overlap", instance.overlap());
            report.metric("swap_test_value", instance.swap_test_value());
            report.metric("distance", instance.distance());
            report.metric("closeness_bound", closeness_bound(acc.clamp(0.0, 1.0), eps)?);
            describe(&mut report, &spec);
            sampled(&mut report, config, &spec, &honest)?;
            if let Some(o) = optimizer {
                let ghz = (!*ideal_control).then_some(&params);
                let probe = soundness_probe(&instance, ghz, &o.config(substream(seed, "dqct.optimizer"), 1))?;
                report.metric("best_acceptance", probe.best_acceptance);
                report.metric("ceiling", probe.ceiling);
                report.metric("bound_at_best", probe.bound);
                report.flag("implication_holds", probe.implication_holds);
            }
        }
        Experiment::CompilePipeline {
            protocol,
            steps,
            optimizer,
        } => {
            let e = corpus_entry(protocol)?;
            let (mut yes, mut honest) = (e.yes.clone(), e.honest.clone());
            let mut no = e.no.clone();
            let mut no_prover = ProverStrategy::trivial(&no);
            let (mut c, mut s) = (e.completeness, Some(e.soundness));
            report.metric("input.completeness", c);
            report.metric("input.soundness", e.soundness);
            report.metric("input.turns", yes.num_turns() as f64);
            let mut reports = Vec::new();
            for (i, step) in steps.iter().enumerate() {
                let (y, h, r) = apply_step(step, &yes, &honest, None)?;
                let target = acceptance_probability(&yes, &honest)?;
                let (n2, nh, _) = apply_step(step, &no, &no_prover, Some(target))?;
                let pred = r.predict(c, s.unwrap_or(1.0));
                c = pred.completeness;
                s = if s.is_some() { pred.soundness } else { None };
                yes = y;
                honest = h;
                no = n2;
                no_prover = nh;
                let key = |m: &str| format!("step{i}.{m}");
                report.metric(key("turns"), yes.num_turns() as f64);
                report.metric(key("acceptance"), acceptance_probability(&yes, &honest)?);
                report.metric(key("predicted_completeness"), c);
                if let Some(s) = s {
                    report.metric(key("predicted_soundness"), s);
                }
                reports.push(r);
            }
            if let Some(o) = optimizer {
                // the transformed trivial prover carries valid tree labels
                let config = o.config(substream(seed, "pipeline.optimizer"), no.prover_qubits());
                let trace = seesaw_optimize_from(&no, &config, Some(&no_prover))?;
                report.metric("no.best_acceptance", trace.best_acceptance);
                if let Some(s) = s {
                    report.flag("no.within_prediction", trace.best_acceptance <= s + 1e-6);
                }
            }
            report.details = json!({ "transforms": reports });
        }
        Experiment::Optimize {
            protocol,
            instance,
            optimizer,
        } => {
            let e = corpus_entry(protocol)?;
            let (spec, start) = match instance {
                Instance::Yes => (&e.yes, Some(&e.honest)),
                Instance::No => (&e.no, None),
            };
            let config = optimizer.config(substream(seed, "optimize"), spec.prover_qubits());
            let trace = seesaw_optimize_from(spec, &config, start)?;
            report.metric("best_acceptance", trace.best_acceptance);
            report.metric(
                "reference_value",
                match instance {
                    Instance::Yes => e.completeness,
                    Instance::No => e.soundness,
                },
            );
            if let Ok(v) = exact_single_message_max(spec) {
                report.metric("exact_single_message_max", v);
            }
            let worst_step = trace.min_increment();
            if worst_step.is_finite() {
                report.metric("min_sweep_increment", worst_step);
            }
            describe(&mut report, spec);
            report.details = json!({ "restarts": trace.restarts });
        }
        Experiment::DamBruteForce { protocol } => {
            let e = toy_protocols()?
                .into_iter()
                .find(|e| &e.protocol.name == protocol)
                .ok_or_else(|| Error::Config(format!("unknown dAM protocol {protocol}")))?;
            let yes = crate::dam::brute_force_value(&e.protocol, &e.yes_instance)?;
            let no = crate::dam::brute_force_value(&e.protocol, &e.no_instance)?;
            report.metric("completeness", yes.optimal_acceptance);
            report.metric("soundness", no.optimal_acceptance);
            report.metric("yes.enumeration_size", yes.enumeration_size as f64);
            report.metric("no.enumeration_size", no.enumeration_size as f64);
            report.details = json!({
                "protocol": e.protocol,
                "yes": { "numerator": yes.numerator, "denominator": yes.denominator, "strategy": yes.strategy },
                "no": { "numerator": no.numerator, "denominator": no.denominator, "strategy": no.strategy },
            });
        }
        Experiment::QcoreProperties { samples, max_qubits } => {
            let slack = inequality_slack(*samples, *max_qubits, substream(seed, "qcore"))?;
            report.metric("samples", *samples as f64);
            report.metric("fuchs_lower_min_slack", slack.lower);
            report.metric("fuchs_upper_min_slack", slack.upper);
            report.metric("fidelity_triple_min_slack", slack.triple);
            report.metric("violations", slack.violations as f64);
        }
    }
    Ok(report)
}

fn describe(report: &mut ExperimentReport, spec: &ProtocolSpec) {
    report.metric("turns", spec.num_turns() as f64);
    report.metric("total_qubits", spec.total_qubits() as f64);
}

fn sampled(
    report: &mut ExperimentReport,
    config: &ExperimentConfig,
    spec: &ProtocolSpec,
    prover: &ProverStrategy,
) -> Result<()> {
    if config.mode == Mode::Sampled {
        let r = execute_sampled(spec, prover, config.trials, substream(config.seed, "sampled"))?;
        report.metric("sampled.acceptance", r.acceptance_probability);
        if let Some([lo, hi]) = r.wilson {
            report.metric("sampled.wilson_low", lo);
            report.metric("sampled.wilson_high", hi);
        }
        report.metric("sampled.trials", config.trials as f64);
    }
    Ok(())
}

pub(crate) fn corpus_entry(name: &str) -> Result<CompileCorpusEntry> {
    compile_corpus()?
        .into_iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::Config(format!("unknown corpus protocol {name}")))
}

/// `target` is the honest yes-acceptance when transforming a no-instance.
fn apply_step(
    step: &PipelineStep,
    spec: &ProtocolSpec,
    prover: &ProverStrategy,
    target: Option<f64>,
) -> Result<(ProtocolSpec, ProverStrategy, crate::compile::CompileReport)> {
    match step {
        PipelineStep::Pad { turns } => pad_turns(spec, prover, *turns),
        PipelineStep::HalveShared => halve_turns_shared(spec, prover),
        PipelineStep::HalvePrivate => halve_turns_private(spec, prover),
        PipelineStep::SevenToFive => seven_to_five(spec, prover, 0),
        PipelineStep::PerfectCompleteness => match target {
            Some(c) => perfect_completeness_with(spec, prover, c),
            None => perfect_completeness(spec, prover),
        },
        PipelineStep::Repeat { copies, mode } => parallel_repeat(spec, prover, *copies, *mode),
    }
}

/// Builds inputs of the requested kind; all randomness comes from `seed`.
pub fn make_instance(
    graph: NetworkGraph,
    qubits_per_node: Vec<usize>,
    kind: InputKind,
    seed: u64,
) -> Result<DqctInstance> {
    let total: usize = qubits_per_node.iter().sum();
    match kind {
        InputKind::Random => DqctInstance::random(graph, qubits_per_node, seed),
        InputKind::Equal => {
            let psi = haar_random_state(total, seed)?;
            DqctInstance::new(graph, qubits_per_node, psi.clone(), psi)
        }
        InputKind::Orthogonal => {
            let psi = haar_random_state(total, seed)?;
            let chi = haar_random_state(total, seed ^ 0x5bd1_e995)?;
            let ov = psi.inner(&chi)?;
            let rest: Vec<C64> = chi
                .amplitudes()
                .iter()
                .zip(psi.amplitudes())
                .map(|(c, p)| c - ov * p)
                .collect();
            DqctInstance::new(graph, qubits_per_node, psi, QuantumState::normalized(rest)?)
        }
    }
}

/// Smallest slack of the fidelity/trace-distance inequalities over random
/// mixed states.
pub(crate) struct Slack {
    pub lower: f64,
    pub upper: f64,
    pub triple: f64,
    pub violations: usize,
}

fn random_mixed(q: usize, rng: &mut rand_chacha::ChaCha8Rng) -> Result<DensityOperator> {
    let k = rng.random_range(1..=4);
    let mut states = Vec::with_capacity(k);
    let mut weights = Vec::with_capacity(k);
    for _ in 0..k {
        states.push(haar_random_state(q, rng.random())?);
        weights.push(rng.random::<f64>() + 1e-3);
    }
    let total: f64 = weights.iter().sum();
    let parts: Vec<(f64, &[C64])> = weights
        .iter()
        .zip(&states)
        .map(|(w, s)| (w / total, s.amplitudes()))
        .collect();
    DensityOperator::mixture(q, &parts)
}

pub(crate) fn inequality_slack(samples: usize, max_qubits: usize, seed: u64) -> Result<Slack> {
    if max_qubits == 0 {
        return Err(Error::Config("max_qubits must be at least 1".into()));
    }
    let mut rng = rng(seed);
    let mut out = Slack {
        lower: f64::INFINITY,
        upper: f64::INFINITY,
        triple: f64::INFINITY,
        violations: 0,
    };
    for _ in 0..samples {
        let q = rng.random_range(1..=max_qubits);
        let rho = random_mixed(q, &mut rng)?;
        let sigma = random_mixed(q, &mut rng)?;
        let xi = random_mixed(q, &mut rng)?;
        let f = fidelity(&rho, &sigma)?;
        let d = trace_distance(&rho, &sigma)?;
        let lower = d - (1.0 - f);
        let upper = (1.0 - f * f).max(0.0).sqrt() - d;
        let triple = 1.0 + fidelity(&rho, &xi)? - f * f - fidelity(&xi, &sigma)?.powi(2);
        for x in [lower, upper, triple] {
            if x < -1e-8 {
                out.violations += 1;
            }
        }
        out.lower = out.lower.min(lower);
        out.upper = out.upper.min(upper);
        out.triple = out.triple.min(triple);
    }
    Ok(out)
}
