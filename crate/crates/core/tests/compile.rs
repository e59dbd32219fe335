use dqip_core::compile::*;
use dqip_core::protocol::{acceptance_probability, final_branches, Check, ProtocolSpec, VarOwner};
use dqip_core::prover::{seesaw_optimize, OptimizerConfig};

fn entry(name: &str) -> CompileCorpusEntry {
    compile_corpus()
        .unwrap()
        .into_iter()
        .find(|e| e.name == name)
        .unwrap()
}

fn seesaw_best(spec: &ProtocolSpec, restarts: usize) -> f64 {
    let config = OptimizerConfig {
        prover_qubits: spec.prover_qubits(),
        sweeps: 30,
        restarts,
        seed: 7,
        convergence_tol: 1e-10,
    };
    seesaw_optimize(spec, &config).unwrap().best_acceptance
}

#[test]
fn compiled_classical_protocols_keep_their_values() {
    for e in compile_corpus().unwrap() {
        let c = acceptance_probability(&e.yes, &e.honest).unwrap();
        assert!((c - e.completeness).abs() < 1e-9, "{}: {c}", e.name);
        let s = seesaw_best(&e.no, 3);
        assert!(s <= e.soundness + 1e-6, "{}: {s} > {}", e.name, e.soundness);
    }
}

#[test]
fn padding_keeps_acceptance() {
    let e = entry("coin-echo");
    let (spec, honest, report) = pad_turns(&e.yes, &e.honest, 7).unwrap();
    assert_eq!((report.input_turns, report.output_turns), (3, 7));
    let c = acceptance_probability(&spec, &honest).unwrap();
    assert!((c - 0.75).abs() < 1e-12);
    assert!(pad_turns(&e.yes, &e.honest, 4).is_err());
}

#[test]
fn shared_halving_identities() {
    let e = entry("coin-echo");
    let (five, honest5, _) = pad_turns(&e.yes, &e.honest, 5).unwrap();
    let (out, honest, report) = halve_turns_shared(&five, &honest5).unwrap();
    assert_eq!((report.input_turns, report.output_turns), (5, 3));
    let c = acceptance_probability(&out, &honest).unwrap();
    let predicted = report.predict(e.completeness, e.soundness);
    assert!((c - predicted.completeness).abs() < 1e-9, "{c}");
    assert!((c - 0.875).abs() < 1e-9);
    // the first delivery carries the private and message registers
    for u in 0..report.input_private_qubits.len() {
        assert_eq!(
            report.output_message_qubits[u],
            report.input_message_qubits[u] + report.input_private_qubits[u]
        );
    }
    // no-instance
    let (five_no, h_no, _) = pad_turns(&e.no, &dqip_core::protocol::ProverStrategy::trivial(&e.no), 5).unwrap();
    let (out_no, _, _) = halve_turns_shared(&five_no, &h_no).unwrap();
    let s = seesaw_best(&out_no, 3);
    assert!(s <= predicted.soundness.unwrap() + 1e-6, "{s}");
}

#[test]
fn repeated_halving_stops_at_the_first_coin() {
    let e = entry("tilted-0.6");
    let (nine, h9, _) = pad_turns(&e.yes, &e.honest, 9).unwrap();
    let (out, honest, reports) = reduce_turns_shared(&nine, &h9, 5).unwrap();
    assert_eq!(out.num_turns(), 5);
    let turns: Vec<(usize, usize)> = reports.iter().map(|r| (r.input_turns, r.output_turns)).collect();
    assert_eq!(turns, vec![(9, 5)]);
    let c = acceptance_probability(&out, &honest).unwrap();
    assert!((c - 0.8).abs() < 1e-9, "{c}");
    let (out, honest, reports) = reduce_turns_shared(&e.yes, &e.honest, 3).unwrap();
    assert!(reports.is_empty());
    assert_eq!(acceptance_probability(&out, &honest).unwrap(), acceptance_probability(&e.yes, &e.honest).unwrap());
    let err = reduce_turns_shared(&nine, &h9, 3).unwrap_err();
    assert_eq!(err.kind(), "unsupported");
}

#[test]
fn perfect_completeness_rejects_bad_targets() {
    let e = entry("tilted-0.6");
    for c in [0.0, -0.5, 1.5] {
        let err = perfect_completeness_with(&e.yes, &e.honest, c).unwrap_err();
        assert_eq!(err.kind(), "validation");
    }
}

#[test]
fn private_halving_soundness() {
    let e = entry("coin-echo");
    let trivial = dqip_core::protocol::ProverStrategy::trivial(&e.no);
    let (five, h5, _) = pad_turns(&e.no, &trivial, 5).unwrap();
    let (out, _, report) = halve_turns_private(&five, &h5).unwrap();
    let bound = report.predict(e.completeness, e.soundness).soundness.unwrap();
    let s = seesaw_best(&out, 3);
    assert!(s <= bound + 1e-6, "{s} > {bound}");
}

#[test]
fn seven_to_five_identities() {
    let e = entry("tilted-0.75");
    let (seven, h7, _) = pad_turns(&e.yes, &e.honest, 7).unwrap();
    let (out, honest, report) = seven_to_five(&seven, &h7, 0).unwrap();
    assert_eq!(out.num_turns(), 5);
    let c = acceptance_probability(&out, &honest).unwrap();
    assert!((c - 0.875).abs() < 1e-9, "{c}");
    for u in 0..report.output_message_qubits.len() {
        assert!(
            report.output_message_qubits[u]
                <= report.input_message_qubits[u] + report.input_private_qubits[u]
        );
    }
}

#[test]
fn private_halving_has_fair_coins() {
    let e = entry("coin-echo");
    let (five, honest5, _) = pad_turns(&e.yes, &e.honest, 5).unwrap();
    let (out, honest, report) = halve_turns_private(&five, &honest5).unwrap();
    assert_eq!(report.output_turns, 5);
    let c = acceptance_probability(&out, &honest).unwrap();
    assert!((c - 0.875).abs() < 1e-9, "{c}");
    let branches = final_branches(&out, &honest).unwrap();
    for u in 0..out.graph.node_count() {
        let local = out.var(&format!("coin[{u}]")).unwrap();
        let copied = out.var(&format!("copy[{u}]")).unwrap();
        let root = out.var(&format!("root[{u}]")).unwrap();
        assert_eq!(out.vars[local].owner, VarOwner::Node(u));
        let mut one = 0.0;
        let mut total = 0.0;
        for b in &branches {
            let mass = b.weight * b.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>();
            let is_root = b.vars[root] as usize == u;
            let coin = (b.vars[local] == 1) ^ (b.vars[copied] == 1 && !is_root);
            total += mass;
            if coin {
                one += mass;
            }
        }
        assert!((one / total - 0.5).abs() < 1e-10, "node {u}: {}", one / total);
    }
}

#[test]
fn perfect_completeness_reaches_one() {
    for c in [0.6, 0.75, 1.0] {
        let e = entry(&format!("tilted-{c}"));
        let (out, honest, report) = perfect_completeness(&e.yes, &e.honest).unwrap();
        assert_eq!(report.output_turns, report.input_turns + 4);
        let acc = acceptance_probability(&out, &honest).unwrap();
        assert!((acc - 1.0).abs() < 1e-9, "c = {c}: {acc}");
    }
}

#[test]
fn perfect_completeness_soundness() {
    let e = entry("tilted-0.75");
    let (out_no, _, report) = perfect_completeness_with(
        &e.no,
        &dqip_core::protocol::ProverStrategy::trivial(&e.no),
        e.completeness,
    )
    .unwrap();
    let bound = report.predict(e.completeness, e.soundness).soundness.unwrap();
    let s = seesaw_best(&out_no, 2);
    assert!(s <= bound + 1e-6, "{s} > {bound}");
}

#[test]
fn parallel_and_multiplies() {
    let e = entry("tilted-0.75");
    let (out, honest, report) = parallel_repeat(&e.yes, &e.honest, 2, RepetitionMode::And).unwrap();
    assert_eq!(out.num_turns(), e.yes.num_turns());
    let acc = acceptance_probability(&out, &honest).unwrap();
    assert!((acc - 0.75f64.powi(2)).abs() < 1e-9);
    assert!((report.predict(0.75, 0.1).completeness - acc).abs() < 1e-9);

    let (maj, honest, report) =
        parallel_repeat(&e.yes, &e.honest, 3, RepetitionMode::Majority).unwrap();
    let acc = acceptance_probability(&maj, &honest).unwrap();
    let oracle = 0.75f64.powi(3) + 3.0 * 0.75f64.powi(2) * 0.25;
    assert!((acc - oracle).abs() < 1e-9, "{acc}");
    assert!((report.predict(0.75, 0.1).completeness - oracle).abs() < 1e-12);
}

#[test]
fn repetition_of_classical_protocol_keeps_views() {
    let e = entry("coin-echo");
    let (out, honest, _) = parallel_repeat(&e.yes, &e.honest, 2, RepetitionMode::And).unwrap();
    let acc = acceptance_probability(&out, &honest).unwrap();
    assert!((acc - 0.5625).abs() < 1e-9, "{acc}");
    assert!(out.verification.checks.iter().all(|c| c.check != Check::Const(false)));
}

#[test]
fn shared_randomness_is_rejected() {
    let mut e = dqip_core::dam::toy_protocols().unwrap().remove(1);
    e.protocol.randomness = dqip_core::dam::Randomness::Shared;
    let err = dam_to_dqip(&e.protocol, &e.yes_instance).unwrap_err();
    assert_eq!(err.kind(), "unsupported");
}
