use dqip_core::network::{allocate_layout, LayoutSizes, NetworkGraph};
use dqip_core::protocol::*;
use dqip_core::prover::*;
use dqip_core::qcore::Gate;

/// One node, one message qubit sent by the prover, verification reads it.
fn message_spec(incompatible: bool) -> ProtocolSpec {
    let graph = NetworkGraph::path(1);
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
    let m = layout.qubits("M[0]")[0];
    let mut vars = Vec::new();
    let mut steps = Vec::new();
    if incompatible {
        vars.push(ClassicalVar {
            name: "r".into(),
            owner: VarOwner::Node(0),
            domain: 2,
        });
        steps.push(VerifierStep::Coin { var: 0 });
        steps.push(VerifierStep::Gate(
            LocalOp::new(0, Gate::x(), vec![m]).when(Check::bit(0)),
        ));
    }
    ProtocolSpec {
        name: "message".into(),
        graph,
        layout,
        vars,
        turns: vec![Turn::Prover(ProverTurn {
            send: vec!["M[0]".into()],
            replies: Vec::new(),
        })],
        verification: VerificationPhase {
            steps,
            checks: vec![NodeCheck {
                node: 0,
                check: Check::qubit_zero(m),
            }],
            ..Default::default()
        },
        initial: Vec::new(),
        communication: false,
        min_prover_qubits: 0,
    }
}

fn config(seed: u64) -> OptimizerConfig {
    OptimizerConfig {
        prover_qubits: 1,
        sweeps: 200,
        restarts: 3,
        seed,
        convergence_tol: 1e-11,
    }
}

#[test]
fn single_message_examples() {
    assert!((exact_single_message_max(&message_spec(false)).unwrap() - 1.0).abs() < 1e-10);
    assert!((exact_single_message_max(&message_spec(true)).unwrap() - 0.5).abs() < 1e-10);
    let t = seesaw_optimize(&message_spec(false), &config(1)).unwrap();
    assert!((t.best_acceptance - 1.0).abs() < 1e-6);
}

#[test]
fn multi_turn_is_a_shape_error() {
    let spec = random_spec(&RandomSpecConfig::default(), 0).unwrap();
    assert!(matches!(
        exact_single_message_max(&spec),
        Err(dqip_core::Error::Shape(_))
    ));
}

#[test]
fn prover_independent_spec_has_flat_trace() {
    let mut spec = message_spec(false);
    spec.verification.checks[0].check = Check::qubit_zero(spec.layout.qubits("V[0]")[0]);
    let t = seesaw_optimize(&spec, &config(2)).unwrap();
    assert!((t.best_acceptance - 1.0).abs() < 1e-12);
    for r in &t.restarts {
        for a in &r.acceptance {
            assert!((a - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn seesaw_matches_spectral_max_on_single_message_specs() {
    let cfg = RandomSpecConfig {
        nodes: 2,
        turns: 1,
        edge_qubits: 1,
        ..Default::default()
    };
    for seed in 0..8 {
        let spec = random_spec(&cfg, seed).unwrap();
        let exact = exact_single_message_max(&spec).unwrap();
        let t = seesaw_optimize(&spec, &config(seed)).unwrap();
        assert!(t.best_acceptance <= exact + 1e-8, "seed {seed}");
        assert!((t.best_acceptance - exact).abs() < 1e-6, "seed {seed}: {} vs {exact}", t.best_acceptance);
        assert!(t.min_increment() >= -1e-9);
    }
}

#[test]
fn seesaw_is_monotone_on_multi_turn_specs() {
    let cfg = RandomSpecConfig {
        nodes: 2,
        turns: 3,
        coins: true,
        ..Default::default()
    };
    for seed in 0..4 {
        let spec = random_spec(&cfg, seed).unwrap();
        let t = seesaw_optimize(
            &spec,
            &OptimizerConfig {
                sweeps: 20,
                restarts: 2,
                seed,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(t.min_increment() >= -1e-9);
        assert!(t.best_acceptance <= 1.0 + 1e-9);
        let again = seesaw_optimize(
            &spec,
            &OptimizerConfig {
                sweeps: 20,
                restarts: 2,
                seed,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(t, again);
    }
}

#[test]
fn bad_config_is_rejected() {
    let spec = message_spec(false);
    let mut c = config(0);
    c.sweeps = 0;
    assert!(matches!(seesaw_optimize(&spec, &c), Err(dqip_core::Error::Config(_))));
    let mut needy = spec.clone();
    needy.min_prover_qubits = 3;
    assert!(matches!(seesaw_optimize(&needy, &config(0)), Err(dqip_core::Error::Config(_))));
}
