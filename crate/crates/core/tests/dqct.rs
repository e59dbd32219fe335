use dqip_core::compile::accounting;
use dqip_core::dqct::*;
use dqip_core::ghz::GhzProtocolParams;
use dqip_core::network::NetworkGraph;
use dqip_core::protocol::acceptance_probability;
use dqip_core::prover::OptimizerConfig;
use dqip_core::qcore::{QuantumState, C64};

fn ghz(n: usize, copies: usize, epsilon: f64) -> GhzProtocolParams {
    GhzProtocolParams {
        nodes: n,
        copies,
        epsilon,
        delta: 0.1,
        seed: 0,
    }
}

/// Overlap from the raw amplitude vectors.
fn raw_overlap(a: &QuantumState, b: &QuantumState) -> f64 {
    a.amplitudes()
        .iter()
        .zip(b.amplitudes())
        .map(|(x, y)| x.conj() * y)
        .sum::<C64>()
        .norm_sqr()
}

#[test]
fn equal_inputs_always_pass() {
    let mut inst = DqctInstance::random(NetworkGraph::path(2), vec![1, 1], 3).unwrap();
    inst.phi = inst.psi.clone();
    let (spec, honest) = build_pdqct(&inst, &ghz(2, 1, 0.1)).unwrap();
    assert_eq!(spec.num_turns(), 5);
    let acc = acceptance_probability(&spec, &honest).unwrap();
    assert!((acc - 1.0).abs() < 1e-9, "{acc}");
}

#[test]
fn orthogonal_inputs_pass_half_the_time() {
    let g = NetworkGraph::path(2);
    let psi = QuantumState::basis(2, 0).unwrap();
    let phi = QuantumState::basis(2, 3).unwrap();
    let inst = DqctInstance::new(g, vec![1, 1], psi, phi).unwrap();
    let (spec, honest) = build_pdqct(&inst, &ghz(2, 1, 0.1)).unwrap();
    let acc = acceptance_probability(&spec, &honest).unwrap();
    assert!((acc - 0.5).abs() < 1e-9, "{acc}");
}

#[test]
fn honest_value_is_the_swap_test() {
    let cases = [
        (NetworkGraph::path(2), vec![1, 2], 1),
        (NetworkGraph::path(3), vec![1, 1, 1], 1),
        (NetworkGraph::path(2), vec![2, 2], 2),
    ];
    for (seed, (graph, sizes, copies)) in cases.into_iter().enumerate() {
        let n = graph.node_count();
        let inst = DqctInstance::random(graph, sizes, seed as u64).unwrap();
        let (spec, honest) = build_pdqct(&inst, &ghz(n, copies, 0.1)).unwrap();
        let acc = acceptance_probability(&spec, &honest).unwrap();
        let want = 0.5 + 0.5 * raw_overlap(&inst.psi, &inst.phi);
        assert!((acc - want).abs() < 1e-9, "{acc} vs {want}");

        let (ideal, h) = build_ideal_pdqct(&inst).unwrap();
        let acc = acceptance_probability(&ideal, &h).unwrap();
        assert!((acc - want).abs() < 1e-9);
    }
}

#[test]
fn bound_formula() {
    assert!((closeness_bound(0.5, 0.01).unwrap() - 1.01).abs() < 1e-12);
    assert!((closeness_bound(1.0, 0.05).unwrap() - 0.05).abs() < 1e-15);
    assert!((closeness_bound(0.9, 0.01).unwrap() - (0.2f64.sqrt() + 0.01)).abs() < 1e-12);
    assert!(closeness_bound(0.7, 0.0).unwrap() > closeness_bound(0.8, 0.0).unwrap());
    assert!(closeness_bound(1.2, 0.0).is_err());
}

#[test]
fn ideal_control_cannot_beat_the_swap_test() {
    let g = NetworkGraph::path(2);
    let psi = QuantumState::basis(2, 1).unwrap();
    let phi = QuantumState::basis(2, 2).unwrap();
    let inst = DqctInstance::new(g, vec![1, 1], psi, phi).unwrap();
    let config = OptimizerConfig {
        prover_qubits: 1,
        sweeps: 30,
        restarts: 4,
        seed: 11,
        convergence_tol: 1e-10,
    };
    let r = soundness_probe(&inst, None, &config).unwrap();
    assert!(r.best_acceptance <= 0.5 + 1e-6, "{}", r.best_acceptance);
    assert!(r.implication_holds);
}

#[test]
fn communication_does_not_grow_with_inputs() {
    let small = DqctInstance::random(NetworkGraph::path(2), vec![1, 1], 0).unwrap();
    let big = DqctInstance::random(NetworkGraph::path(2), vec![3, 3], 0).unwrap();
    let (a, _) = build_pdqct(&small, &ghz(2, 1, 0.1)).unwrap();
    let (b, _) = build_pdqct(&big, &ghz(2, 1, 0.1)).unwrap();
    assert_eq!(accounting(&a).0, accounting(&b).0);
    assert!(accounting(&a).0.iter().all(|&m| m <= 3));
}

#[test]
fn bad_instances_rejected() {
    let g = NetworkGraph::path(2);
    let s = QuantumState::zero(2);
    assert!(DqctInstance::new(g.clone(), vec![1], s.clone(), s.clone()).is_err());
    assert!(DqctInstance::new(g.clone(), vec![1, 2], s.clone(), s.clone()).is_err());
    assert!(DqctInstance::new(g, vec![2, 0], s.clone(), s).is_err());
}
