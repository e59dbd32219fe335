use dqip_core::network::{allocate_layout, LayoutSizes, NetworkGraph};
use dqip_core::protocol::*;
use dqip_core::qcore::{haar_random_unitary, Gate, C64};

fn base_spec(n: usize) -> ProtocolSpec {
    let graph = NetworkGraph::path(n);
    let layout = allocate_layout(
        &graph,
        &LayoutSizes {
            prover: 1,
            private: 1,
            message: 1,
            edge: 0,
            extras: Vec::new(),
        },
    )
    .unwrap();
    let checks = (0..n)
        .map(|u| NodeCheck {
            node: u,
            check: Check::qubit_zero(layout.qubits(&format!("V[{u}]"))[0]),
        })
        .collect();
    ProtocolSpec {
        name: "base".into(),
        graph,
        layout,
        vars: Vec::new(),
        turns: Vec::new(),
        verification: VerificationPhase {
            checks,
            ..Default::default()
        },
        initial: Vec::new(),
        communication: false,
        min_prover_qubits: 0,
    }
}

fn exact(spec: &ProtocolSpec, s: &ProverStrategy) -> f64 {
    execute_exact(spec, s, CoinPolicy::Branch)
        .unwrap()
        .acceptance_probability
}

#[test]
fn zero_turns_accepts() {
    let spec = base_spec(2);
    let r = execute_exact(&spec, &ProverStrategy::trivial(&spec), CoinPolicy::Branch).unwrap();
    assert!((r.acceptance_probability - 1.0).abs() < 1e-12);
    assert_eq!(r.node_acceptance, vec![1.0, 1.0]);
}

#[test]
fn flipping_accept_qubit_rejects() {
    let mut spec = base_spec(2);
    let q = spec.layout.qubits("V[1]")[0];
    let flip = Turn::Verifier(VerifierTurn {
        steps: vec![VerifierStep::Gate(LocalOp::new(1, Gate::x(), vec![q]))],
        ..Default::default()
    });
    // an odd number of turns must open with the prover
    spec.turns = vec![flip.clone()];
    assert!(spec.validate().is_err());
    spec.turns = vec![flip, Turn::Prover(ProverTurn::default())];
    let s = ProverStrategy::trivial(&spec);
    let r = execute_exact(&spec, &s, CoinPolicy::Branch).unwrap();
    assert!(r.acceptance_probability.abs() < 1e-12);
    assert_eq!(r.node_acceptance, vec![1.0, 0.0]);
}

#[test]
fn ownership_violation_names_register() {
    let mut spec = base_spec(2);
    let m = spec.layout.qubits("M[0]")[0];
    // the verifier touches M[0] before the prover has sent it
    spec.turns = vec![
        Turn::Verifier(VerifierTurn {
            steps: vec![VerifierStep::Gate(LocalOp::new(0, Gate::h(), vec![m]))],
            ..Default::default()
        }),
        Turn::Prover(ProverTurn::default()),
    ];
    let err = spec.validate().unwrap_err().to_string();
    assert!(err.contains("M[0]") && err.contains("turn 1"), "{err}");
}

fn coin_spec() -> ProtocolSpec {
    let mut spec = base_spec(1);
    let q = spec.layout.qubits("V[0]")[0];
    spec.vars.push(ClassicalVar {
        name: "r".into(),
        owner: VarOwner::Node(0),
        domain: 2,
    });
    spec.verification.steps = vec![
        VerifierStep::Coin { var: 0 },
        VerifierStep::Gate(LocalOp::new(0, Gate::x(), vec![q]).when(Check::bit(0))),
    ];
    spec
}

#[test]
fn fair_coin_exact_and_sampled() {
    let spec = coin_spec();
    let s = ProverStrategy::trivial(&spec);
    assert!((exact(&spec, &s) - 0.5).abs() < 1e-12);
    let r = execute_sampled(&spec, &s, 10_000, 3).unwrap();
    assert!((r.acceptance_probability - 0.5).abs() < 0.02);
    let again = execute_sampled(&spec, &s, 10_000, 3).unwrap();
    assert_eq!(r, again);
}

#[test]
fn always_accept_sampled() {
    let spec = base_spec(3);
    let s = ProverStrategy::trivial(&spec);
    let r = execute_sampled(&spec, &s, 100, 1).unwrap();
    assert_eq!(r.acceptance_probability, 1.0);
    let [lo, hi] = r.wilson.unwrap();
    assert!(lo > 0.95 && hi > 1.0 - 1e-12);
}

#[test]
fn bell_pair_coins_match_branching() {
    let cfg = RandomSpecConfig {
        nodes: 2,
        turns: 3,
        coins: true,
        measurements: true,
        private_qubits: 2,
        ..Default::default()
    };
    for seed in 0..5 {
        let spec = random_spec(&cfg, seed).unwrap();
        let s = random_strategy(&spec, seed + 100).unwrap();
        let a = exact(&spec, &s);
        let b = execute_exact(&spec, &s, CoinPolicy::BellPair)
            .unwrap()
            .acceptance_probability;
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
}

#[test]
fn projector_examples() {
    let spec = base_spec(1);
    let p = verification_projector(&spec).unwrap();
    let v = spec.layout.qubits("V[0]")[0];
    for i in 0..p.nrows() {
        let want = if (i >> v) & 1 == 0 { 1.0 } else { 0.0 };
        assert!((p[(i, i)].re - want).abs() < 1e-12);
    }
    let mut h = spec.clone();
    h.verification.steps = vec![VerifierStep::Gate(LocalOp::new(0, Gate::h(), vec![v]))];
    let p = verification_projector(&h).unwrap();
    assert!((&p * &p - &p).norm() < 1e-9);
    // H |0><0| H = |+><+| on V[0], identity elsewhere
    for i in 0..p.nrows() {
        for j in 0..p.nrows() {
            let rest_equal = (i & !(1 << v)) == (j & !(1 << v));
            let want = if rest_equal { 0.5 } else { 0.0 };
            assert!((p[(i, j)] - C64::new(want, 0.0)).norm() < 1e-12);
        }
    }
}

#[test]
fn projector_matches_exact_on_random_specs() {
    let cfg = RandomSpecConfig {
        nodes: 2,
        turns: 3,
        edge_qubits: 1,
        ..Default::default()
    };
    for seed in 0..10 {
        let spec = random_spec(&cfg, seed).unwrap();
        let s = random_strategy(&spec, seed).unwrap();
        let want = exact(&spec, &s);
        let mut got = 0.0;
        for b in pre_verification_states(&spec, &s).unwrap() {
            let e = verification_operator(&spec, &b.vars).unwrap();
            assert!((&e * &e - &e).norm() < 1e-9);
            let v = nalgebra::DVector::from_vec(b.amplitudes);
            got += b.weight * (v.adjoint() * &e * &v)[(0, 0)].re;
        }
        assert!((got - want).abs() < 1e-10, "seed {seed}: {got} vs {want}");
    }
}

#[test]
fn exact_and_sampled_agree_on_random_specs() {
    let cfg = RandomSpecConfig {
        nodes: 2,
        turns: 3,
        coins: true,
        measurements: true,
        private_qubits: 2,
        ..Default::default()
    };
    let mut inside = 0;
    for seed in 0..100 {
        let spec = random_spec(&cfg, 1000 + seed).unwrap();
        let s = random_strategy(&spec, seed).unwrap();
        let p = exact(&spec, &s);
        let r = execute_sampled(&spec, &s, 400, seed).unwrap();
        let [lo, hi] = r.wilson.unwrap();
        if lo <= p && p <= hi {
            inside += 1;
        }
    }
    assert!(inside >= 95, "{inside}/100 inside");
}

#[test]
fn relabeling_nodes_preserves_acceptance() {
    let cfg = RandomSpecConfig {
        nodes: 3,
        turns: 3,
        edge_qubits: 1,
        coins: true,
        ..Default::default()
    };
    for seed in 0..8 {
        let spec = random_spec(&cfg, seed).unwrap();
        let s = random_strategy(&spec, seed).unwrap();
        let p = exact(&spec, &s);
        for perm in [[1, 2, 0], [2, 1, 0], [0, 2, 1]] {
            let (relabeled, map) = spec.relabel_nodes(&perm).unwrap();
            let q = exact(&relabeled, &s.remap_qubits(&map));
            assert!((p - q).abs() < 1e-10, "seed {seed} perm {perm:?}: {p} vs {q}");
        }
    }
}

#[test]
fn prover_postprocessing_on_private_register_is_invisible() {
    for seed in 0..8 {
        let spec = random_spec(&RandomSpecConfig::default(), seed).unwrap();
        let s = random_strategy(&spec, seed).unwrap();
        let p = spec.layout.qubits("P");
        let extra = s
            .clone()
            .then_last(ProverOp::gate(haar_random_unitary(p.len(), seed).unwrap(), p));
        assert!((exact(&spec, &s) - exact(&spec, &extra)).abs() < 1e-10);
    }
}

#[test]
fn accepted_reduced_state_of_untouched_qubit() {
    let spec = base_spec(2);
    let s = ProverStrategy::trivial(&spec);
    let m = spec.layout.qubits("M[0]");
    let (p, rho) = accepted_reduced_state(&spec, &s, &m).unwrap();
    assert!((p - 1.0).abs() < 1e-12);
    assert!((rho.matrix()[(0, 0)].re - 1.0).abs() < 1e-12);
}

#[test]
fn json_round_trip() {
    let cfg = RandomSpecConfig {
        coins: true,
        measurements: true,
        edge_qubits: 1,
        private_qubits: 2,
        ..Default::default()
    };
    let spec = random_spec(&cfg, 5).unwrap();
    let text = serde_json::to_string(&spec).unwrap();
    let back: ProtocolSpec = serde_json::from_str(&text).unwrap();
    assert_eq!(spec, back);
    let s = random_strategy(&spec, 5).unwrap();
    let back_s: ProverStrategy = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
    assert_eq!(s, back_s);
}
