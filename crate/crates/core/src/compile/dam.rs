use super::{CompileReport, Transform};
use crate::dam::{brute_force_value, DamProtocol, DamVar, Randomness};
use crate::error::{Error, Result};
use crate::network::{allocate_layout, register_name, LayoutSizes, NetworkGraph, Owner};
use crate::protocol::{
    Check, LocalOp, NodeCheck, ProtocolSpec, ProverMove, ProverOp, ProverResponse, ProverStrategy,
    ProverTurn, Turn, VerificationPhase, VerifierStep, VerifierTurn,
};
use crate::qcore::Gate;

/// Compiles a classical Arthur-Merlin protocol into a quantum one with the
/// same turn count. Coins become `H` plus a CNOT copy; certificates become
/// basis states. The honest prover plays the brute-forced optimal tables,
/// so completeness on `graph` equals the classical optimum.
pub fn dam_to_dqip(
    dam: &DamProtocol,
    graph: &NetworkGraph,
) -> Result<(ProtocolSpec, ProverStrategy, CompileReport)> {
    if dam.randomness == Randomness::Shared {
        return Err(Error::Unsupported(
            "compiling shared-coin protocols needs a shared coin source".into(),
        ));
    }
    let checks = dam.checks(graph)?;
    let value = brute_force_value(dam, graph)?;
    let n = graph.node_count();
    let (k, m) = (dam.turns, dam.bits);
    let arthur_turns = (1..=k).filter(|&j| !dam.is_merlin_turn(j)).count();
    let mut layout = allocate_layout(
        graph,
        &LayoutSizes {
            prover: n * m * arthur_turns,
            private: (k - 1) * m,
            message: m,
            edge: 0,
            extras: Vec::new(),
        },
    )?;
    if k % 2 == 0 {
        for u in 0..n {
            let id = layout.id(&register_name("M", &[u]))?;
            layout.set_owner(id, Owner::Node(u));
        }
    }
    let p = layout.qubits("P");
    let v: Vec<Vec<usize>> = (0..n).map(|u| layout.qubits(&register_name("V", &[u]))).collect();
    let msg: Vec<Vec<usize>> = (0..n).map(|u| layout.qubits(&register_name("M", &[u]))).collect();
    let slot = |u: usize, turn: usize, b: usize| v[u][(turn - 1) * m + b];
    // index among Arthur turns of every turn (meaningful for Arthur turns)
    let arthur_index = |j: usize| (1..j).filter(|&i| !dam.is_merlin_turn(i)).count();
    let p_slot = |a: usize, u: usize, b: usize| p[a * n * m + u * m + b];
    let all_m: Vec<String> = (0..n).map(|u| register_name("M", &[u])).collect();

    let mut turns = Vec::with_capacity(k);
    let mut moves = Vec::new();
    for j in 1..=k {
        if dam.is_merlin_turn(j) {
            let mut ops = Vec::new();
            if j > 1 {
                let a = arthur_index(j - 1);
                for u in 0..n {
                    for b in 0..m {
                        ops.push(ProverOp::gate(Gate::swap(), vec![msg[u][b], p_slot(a, u, b)]));
                    }
                }
            }
            let table = value
                .strategy
                .iter()
                .find(|t| t.turn == j)
                .ok_or_else(|| Error::Validation(format!("no Merlin table for turn {j}")))?;
            let hist_bits = arthur_index(j) * n * m;
            let mut targets: Vec<usize> = p[..hist_bits].to_vec();
            targets.extend(msg.iter().flatten().copied());
            let mask = (1usize << hist_bits) - 1;
            let certs = table.certificates.clone();
            let gate = Gate::from_permutation(targets.len(), move |i| {
                i ^ ((certs[i & mask] as usize) << hist_bits)
            });
            if !gate.is_identity(0.0) {
                ops.push(ProverOp::gate(gate, targets));
            }
            turns.push(Turn::Prover(ProverTurn {
                send: all_m.clone(),
                replies: Vec::new(),
            }));
            moves.push(ProverMove::uniform(ProverResponse::ops(ops)));
        } else {
            let mut steps = Vec::new();
            for u in 0..n {
                for b in 0..m {
                    if j > 1 {
                        steps.push(VerifierStep::Gate(LocalOp::new(
                            u,
                            Gate::swap(),
                            vec![msg[u][b], slot(u, j - 1, b)],
                        )));
                    }
                    steps.push(VerifierStep::Gate(LocalOp::new(u, Gate::h(), vec![msg[u][b]])));
                    steps.push(VerifierStep::Gate(LocalOp::new(
                        u,
                        Gate::cnot(),
                        vec![msg[u][b], slot(u, j, b)],
                    )));
                }
            }
            turns.push(Turn::Verifier(VerifierTurn {
                steps,
                send: all_m.clone(),
                reveal: Vec::new(),
            }));
        }
    }

    let qubit_of = |d: &DamVar| match *d {
        DamVar::Cert { turn, node, bit } if turn == k => Some((node, msg[node][bit])),
        DamVar::Cert { turn, node, bit } | DamVar::Rand { turn, node, bit } => {
            Some((node, slot(node, turn, bit)))
        }
        DamVar::Input { .. } => None,
    };
    let mut node_checks = Vec::with_capacity(n);
    let mut broadcast = Vec::new();
    for (u, c) in checks.iter().enumerate() {
        let check: Check = c.map(&mut |d| match qubit_of(d) {
            Some((holder, q)) => {
                if holder != u && !broadcast.contains(&(holder, q)) {
                    broadcast.push((holder, q));
                }
                Check::qubit(q)
            }
            None => match *d {
                DamVar::Input { node, bit } => {
                    Check::Const(graph.input(node).get(bit).copied().unwrap_or(false))
                }
                _ => unreachable!(),
            },
        });
        node_checks.push(NodeCheck { node: u, check });
    }
    broadcast.sort_unstable();

    let spec = ProtocolSpec {
        name: format!("{}-quantum", dam.name),
        graph: graph.clone(),
        layout,
        vars: Vec::new(),
        turns,
        verification: VerificationPhase {
            steps: Vec::new(),
            broadcast,
            checks: node_checks,
            global_readout: false,
        },
        initial: Vec::new(),
        communication: false,
        min_prover_qubits: p.len(),
    };
    spec.validate()?;
    let report = CompileReport::new(Transform::DamToDqip, &spec, &spec);
    Ok((spec, ProverStrategy { moves }, report))
}
