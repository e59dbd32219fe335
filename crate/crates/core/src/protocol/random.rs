//! Random small protocols for property tests and cross-checks.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::expr::BoolExpr;
use super::spec::{
    ClassicalVar, LocalOp, NodeCheck, ProtocolSpec, ProverTurn, Turn, VarOwner,
    VerificationPhase, VerifierStep, VerifierTurn,
};
use super::strategy::{ProverOp, ProverResponse, ProverStrategy};
use crate::error::Result;
use crate::network::{allocate_layout, build_network, LayoutSizes, Owner};
use crate::qcore::{haar_unitary_with, rng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomSpecConfig {
    pub nodes: usize,
    pub turns: usize,
    pub private_qubits: usize,
    pub message_qubits: usize,
    pub edge_qubits: usize,
    pub prover_qubits: usize,
    /// Verifier turns draw and reveal a coin per node.
    pub coins: bool,
    /// Verifier turns may measure a private qubit.
    pub measurements: bool,
}

impl Default for RandomSpecConfig {
    fn default() -> Self {
        RandomSpecConfig {
            nodes: 2,
            turns: 3,
            private_qubits: 1,
            message_qubits: 1,
            edge_qubits: 0,
            prover_qubits: 1,
            coins: false,
            measurements: false,
        }
    }
}

fn random_local_gates(
    rng: &mut ChaCha8Rng,
    node: usize,
    qubits: &[usize],
    steps: &mut Vec<VerifierStep>,
    condition: Option<usize>,
) -> Result<()> {
    if qubits.is_empty() {
        return Ok(());
    }
    let mut qs = qubits.to_vec();
    qs.shuffle(rng);
    let arity = qs.len().min(2);
    let targets: Vec<usize> = qs[..arity].to_vec();
    let gate = haar_unitary_with(arity, rng)?;
    let mut op = LocalOp::new(node, gate, targets);
    if let Some(var) = condition {
        op = op.when(BoolExpr::atom(super::expr::Atom::Var { var, value: 1 }));
    }
    steps.push(VerifierStep::Gate(op));
    if qs.len() > 2 {
        let gate = haar_unitary_with(2, rng)?;
        steps.push(VerifierStep::Gate(LocalOp::new(node, gate, vec![qs[1], qs[2]])));
    }
    Ok(())
}

/// A random well-formed protocol on a connected graph with Haar-random
/// local gates and acceptance on the first private qubit of each node.
pub fn random_spec(config: &RandomSpecConfig, seed: u64) -> Result<ProtocolSpec> {
    let mut rng = rng(seed);
    let n = config.nodes;
    let mut edges: Vec<(usize, usize)> = (1..n).map(|u| (u - 1, u)).collect();
    for a in 0..n {
        for b in a + 2..n {
            if rng.random_bool(0.3) {
                edges.push((a, b));
            }
        }
    }
    let graph = build_network(n, &edges, Vec::new())?;
    let layout = allocate_layout(
        &graph,
        &LayoutSizes {
            prover: config.prover_qubits,
            private: config.private_qubits.max(1),
            message: config.message_qubits,
            edge: config.edge_qubits,
            extras: Vec::new(),
        },
    )?;
    let v = |u: usize| layout.qubits(&format!("V[{u}]"));
    let m = |u: usize| layout.qubits(&format!("M[{u}]"));
    let w = |u: usize| -> Vec<usize> {
        graph
            .neighbors(u)
            .iter()
            .flat_map(|&x| layout.qubits(&format!("W[{u},{x}]")))
            .collect()
    };
    let mut vars = Vec::new();
    let mut turns = Vec::new();
    let mut node_holds_m = false;
    let k = config.turns;
    let prover_first = k % 2 == 1;
    for i in 0..k {
        let is_prover = (i % 2 == 0) == prover_first;
        if is_prover {
            let send = if config.message_qubits > 0 {
                (0..n).map(|u| format!("M[{u}]")).collect()
            } else {
                Vec::new()
            };
            turns.push(Turn::Prover(ProverTurn {
                send,
                replies: Vec::new(),
            }));
            node_holds_m = config.message_qubits > 0;
        } else {
            let mut steps = Vec::new();
            let mut reveal = Vec::new();
            for u in 0..n {
                let mut qs = v(u);
                if node_holds_m {
                    qs.extend(m(u));
                }
                let cond = if config.coins {
                    let id = vars.len();
                    vars.push(ClassicalVar {
                        name: format!("r{i}_{u}"),
                        owner: VarOwner::Node(u),
                        domain: 2,
                    });
                    steps.push(VerifierStep::Coin { var: id });
                    reveal.push(id);
                    Some(id)
                } else {
                    None
                };
                random_local_gates(&mut rng, u, &qs, &mut steps, cond)?;
                if config.measurements && v(u).len() > 1 && rng.random_bool(0.5) {
                    let id = vars.len();
                    vars.push(ClassicalVar {
                        name: format!("o{i}_{u}"),
                        owner: VarOwner::Node(u),
                        domain: 2,
                    });
                    steps.push(VerifierStep::Measure {
                        node: u,
                        qubit: *v(u).last().unwrap(),
                        var: id,
                    });
                }
            }
            let later_prover = i + 1 < k;
            let send = if node_holds_m && later_prover {
                node_holds_m = false;
                (0..n).map(|u| format!("M[{u}]")).collect()
            } else {
                Vec::new()
            };
            turns.push(Turn::Verifier(VerifierTurn {
                steps,
                send,
                reveal,
            }));
        }
    }
    let mut steps = Vec::new();
    for &(a, b) in graph.edges() {
        if config.edge_qubits > 0 {
            steps.push(VerifierStep::Exchange {
                a: format!("W[{a},{b}]"),
                b: format!("W[{b},{a}]"),
            });
        }
    }
    for u in 0..n {
        let mut qs = v(u);
        if node_holds_m {
            qs.extend(m(u));
        }
        qs.extend(w(u));
        random_local_gates(&mut rng, u, &qs, &mut steps, None)?;
    }
    let checks = (0..n)
        .map(|u| NodeCheck {
            node: u,
            check: super::expr::Check::qubit_zero(v(u)[0]),
        })
        .collect();
    let spec = ProtocolSpec {
        name: format!("random-{seed}"),
        graph: graph.clone(),
        layout: layout.clone(),
        vars,
        turns,
        verification: VerificationPhase {
            steps,
            broadcast: Vec::new(),
            checks,
            global_readout: false,
        },
        initial: Vec::new(),
        communication: false,
        min_prover_qubits: 0,
    };
    spec.validate()?;
    debug_assert!(spec
        .layout
        .registers()
        .iter()
        .all(|r| r.owner == Owner::Prover || r.base != "M"));
    Ok(spec)
}

/// Haar-random unitary on everything the prover holds, chosen per view.
pub fn random_strategy(spec: &ProtocolSpec, seed: u64) -> Result<ProverStrategy> {
    let info = spec.validate()?;
    let mut rng = rng(seed);
    let mut err = None;
    let s = ProverStrategy::from_fn(spec, &info, |t, _| {
        let held = &info.held[t];
        let replies: Vec<u32> = match &spec.turns[info.prover_turns[t]] {
            Turn::Prover(p) => p
                .replies
                .iter()
                .map(|&v| rng.random_range(0..spec.vars[v].domain))
                .collect(),
            Turn::Verifier(_) => Vec::new(),
        };
        let ops = if held.is_empty() {
            Vec::new()
        } else {
            match haar_unitary_with(held.len(), &mut rng) {
                Ok(g) => vec![ProverOp::gate(g, held.clone())],
                Err(e) => {
                    err = Some(e);
                    Vec::new()
                }
            }
        };
        ProverResponse { ops, replies }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(s),
    }
}
