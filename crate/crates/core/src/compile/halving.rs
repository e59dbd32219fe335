use super::{
    backward_steps, check_pair, circulating_registers, forward_steps, gated_verification,
    node_check, pad_turns, plain_responses, private_qubits, state_before, turn_gates,
    CompileReport, Transform,
};
use crate::error::{Error, Result};
use crate::network::{register_name, spanning_tree, Owner, RegisterLayout};
use crate::protocol::{
    Check, ClassicalVar, LocalOp, NodeCheck, ProtocolSpec, ProverOp, ProverResponse,
    ProverStrategy, ProverTurn, Turn, VarOwner, VerificationPhase, VerifierStep, VerifierTurn,
};
use crate::qcore::Gate;

/// Hands every register a node could hold to the prover at the start.
/// Returns the new layout and the names delivered in the first turn.
fn prover_starts_with(spec: &ProtocolSpec, circulating: &[String], only_private: bool) -> (RegisterLayout, Vec<String>) {
    let mut layout = spec.layout.clone();
    let mut delivered = Vec::new();
    for (id, r) in spec.layout.registers().iter().enumerate() {
        let private = matches!(r.owner, Owner::Node(_));
        let moves = private || (!only_private && circulating.contains(&r.name()));
        if moves {
            layout.set_owner(id, Owner::Prover);
            delivered.push(r.name());
        }
    }
    (layout, delivered)
}

/// Either branch of a rewound run: `forward` continues the original, the
/// other branch runs it backwards and finally tests that every register a
/// node started with is back to zero.
fn branch_check(spec: &ProtocolSpec, u: usize, forward: Check, backward: Check) -> Check {
    Check::or(vec![
        Check::and(vec![forward, node_check(spec, u)]),
        Check::and(vec![backward, Check::all_zero(private_qubits(spec, u))]),
    ])
}

fn add_var(vars: &mut Vec<ClassicalVar>, name: String, owner: VarOwner, domain: u32) -> usize {
    vars.push(ClassicalVar {
        name,
        owner,
        domain,
    });
    vars.len() - 1
}

fn half_length(spec: &ProtocolSpec) -> Result<usize> {
    let k = spec.num_turns();
    if k < 5 || k % 4 != 1 {
        return Err(Error::Shape(format!(
            "turn halving needs 4l+1 turns with l >= 1, got {k}"
        )));
    }
    Ok((k - 1) / 4)
}

/// The middle steps shared by both halving variants: verifier turns
/// `2l+2j+2` forwards and `2l-2j+2` backwards for `j = 1..l-1`, each followed
/// by a prover turn.
fn middle_turns(
    spec: &ProtocolSpec,
    ell: usize,
    circulating: &[String],
    fwd: &impl Fn(usize) -> Check,
    bwd: &impl Fn(usize) -> Check,
) -> Vec<Turn> {
    let mut turns = Vec::new();
    let prover = || {
        Turn::Prover(ProverTurn {
            send: circulating.to_vec(),
            replies: Vec::new(),
        })
    };
    for j in 1..ell {
        turns.push(prover());
        let mut steps = forward_steps(&turn_gates(spec, 2 * ell + 2 * j + 2), fwd);
        steps.extend(backward_steps(&turn_gates(spec, 2 * ell - 2 * j + 2), bwd));
        turns.push(Turn::Verifier(VerifierTurn {
            steps,
            send: circulating.to_vec(),
            reveal: Vec::new(),
        }));
    }
    turns.push(prover());
    turns
}

fn verification(
    spec: &ProtocolSpec,
    fwd: &impl Fn(usize) -> Check,
    bwd: &impl Fn(usize) -> Check,
    checks: Vec<NodeCheck>,
) -> VerificationPhase {
    let mut steps = backward_steps(&turn_gates(spec, 2), bwd);
    steps.extend(gated_verification(spec, fwd));
    VerificationPhase {
        steps,
        broadcast: spec.verification.broadcast.clone(),
        checks,
        global_readout: spec.verification.global_readout,
    }
}

/// `4l+1` turns to `2l+1` with one shared coin. The prover first delivers
/// the state of the middle of the run; the coin then decides whether the
/// nodes continue it or rewind it to the start.
pub fn halve_turns_shared(
    spec: &ProtocolSpec,
    honest: &ProverStrategy,
) -> Result<(ProtocolSpec, ProverStrategy, CompileReport)> {
    let ell = half_length(spec)?;
    let circulating = circulating_registers(spec, "turn halving")?;
    check_pair(spec, honest)?;
    let original = plain_responses(honest, "turn halving")?;
    let middle = state_before(spec, honest, Some(ell + 1))?;
    let n = spec.graph.node_count();

    let (layout, delivered) = prover_starts_with(spec, &circulating, false);
    let mut vars = spec.vars.clone();
    let coin = add_var(&mut vars, "rewind".into(), VarOwner::Shared, 2);
    let fwd = |_u: usize| Check::var_eq(coin, 0);
    let bwd = |_u: usize| Check::var_eq(coin, 1);

    let mut turns = vec![Turn::Prover(ProverTurn {
        send: delivered,
        replies: Vec::new(),
    })];
    let mut steps = vec![VerifierStep::Coin { var: coin }];
    steps.extend(backward_steps(&turn_gates(spec, 2 * ell + 2), &bwd));
    turns.push(Turn::Verifier(VerifierTurn {
        steps,
        send: circulating.clone(),
        reveal: vec![coin],
    }));
    turns.extend(middle_turns(spec, ell, &circulating, &fwd, &bwd));

    let checks = (0..n)
        .map(|u| NodeCheck {
            node: u,
            check: branch_check(spec, u, fwd(u), bwd(u)),
        })
        .collect();
    let out = ProtocolSpec {
        name: format!("{}-halved", spec.name),
        graph: spec.graph.clone(),
        layout,
        vars,
        turns,
        verification: verification(spec, &fwd, &bwd, checks),
        initial: Vec::new(),
        communication: spec.communication,
        min_prover_qubits: spec.min_prover_qubits,
    };
    let info = out.validate()?;
    let all: Vec<usize> = (0..out.total_qubits()).collect();
    let prepare = ProverOp::prepare(all, &middle)?;
    let strategy = ProverStrategy::from_fn(&out, &info, |ord, view| {
        if ord == 0 {
            ProverResponse::ops(vec![prepare.clone()])
        } else if view[0] == 0 {
            ProverResponse::ops(original[ell + ord].ops.clone())
        } else {
            ProverResponse::ops(original[ell + 1 - ord].adjoint_ops())
        }
    });
    let report = CompileReport::new(Transform::HalveShared { ell }, spec, &out);
    Ok((out, strategy, report))
}

/// Pads and halves until at most `target` turns remain (`target >= 3`).
/// Halving needs a purely unitary interaction and its output draws a coin,
/// so only the first halving of a chain can succeed; a second one fails
/// with an unsupported error.
pub fn reduce_turns_shared(
    spec: &ProtocolSpec,
    honest: &ProverStrategy,
    target: usize,
) -> Result<(ProtocolSpec, ProverStrategy, Vec<CompileReport>)> {
    if target < 3 {
        return Err(Error::Shape("halving cannot go below 3 turns".into()));
    }
    let mut cur = (spec.clone(), honest.clone());
    let mut reports = Vec::new();
    while cur.0.num_turns() > target {
        let k = cur.0.num_turns();
        let padded = (k + 2) / 4 * 4 + 1;
        if padded != k {
            let (s, h, r) = pad_turns(&cur.0, &cur.1, padded)?;
            reports.push(r);
            cur = (s, h);
        }
        let (s, h, r) = halve_turns_shared(&cur.0, &cur.1)?;
        reports.push(r);
        cur = (s, h);
    }
    Ok((cur.0, cur.1, reports))
}

/// Labels and coin bookkeeping of [`halve_turns_private`], per node.
#[derive(Clone, Copy)]
struct NodeVars {
    root: usize,
    parent: usize,
    dist: usize,
    local: usize,
    copied: usize,
}

/// `4l+1` turns to `2l+3` with private coins only. The prover also certifies
/// a rooted spanning tree; the root flips the coin and the prover fans a
/// copy of it out to every other node.
pub fn halve_turns_private(
    spec: &ProtocolSpec,
    honest: &ProverStrategy,
) -> Result<(ProtocolSpec, ProverStrategy, CompileReport)> {
    let ell = half_length(spec)?;
    let circulating = circulating_registers(spec, "turn halving")?;
    check_pair(spec, honest)?;
    let original = plain_responses(honest, "turn halving")?;
    let middle = state_before(spec, honest, Some(ell + 1))?;
    let graph = &spec.graph;
    let n = graph.node_count();
    let nn = n as u32;

    let (mut layout, delivered) = prover_starts_with(spec, &circulating, false);
    for u in 0..n {
        layout.push("C", &[u], 1, Owner::Node(u));
        layout.push("Vc", &[u], 1, Owner::Node(u));
    }
    layout.push("K", &[], 1, Owner::Prover);
    layout.check_ceiling(crate::qcore::QUBIT_CEILING)?;
    let c_reg = |u: usize| layout.qubits(&register_name("C", &[u]))[0];
    let vc_reg = |u: usize| layout.qubits(&register_name("Vc", &[u]))[0];
    let keeper = layout.qubits("K")[0];
    let c_names: Vec<String> = (0..n).map(|u| register_name("C", &[u])).collect();

    let mut vars = spec.vars.clone();
    let nv: Vec<NodeVars> = (0..n)
        .map(|u| NodeVars {
            root: add_var(&mut vars, format!("root[{u}]"), VarOwner::Node(u), nn),
            parent: add_var(&mut vars, format!("parent[{u}]"), VarOwner::Node(u), nn + 1),
            dist: add_var(&mut vars, format!("dist[{u}]"), VarOwner::Node(u), nn),
            local: add_var(&mut vars, format!("coin[{u}]"), VarOwner::Node(u), 2),
            copied: add_var(&mut vars, format!("copy[{u}]"), VarOwner::Node(u), 2),
        })
        .collect();
    let is_root = |u: usize| Check::var_eq(nv[u].root, u as u32);
    let coin = |u: usize| {
        Check::xor(vec![
            Check::bit(nv[u].local),
            Check::and(vec![Check::bit(nv[u].copied), Check::not(is_root(u))]),
        ])
    };
    let fwd = |u: usize| Check::not(coin(u));
    let bwd = |u: usize| coin(u);

    let labels: Vec<usize> = nv.iter().flat_map(|v| [v.root, v.parent, v.dist]).collect();
    let mut turns = vec![Turn::Prover(ProverTurn {
        send: delivered,
        replies: labels,
    })];
    let mut flip = Vec::new();
    for u in 0..n {
        flip.push(VerifierStep::Gate(LocalOp::new(u, Gate::h(), vec![c_reg(u)]).when(is_root(u))));
        flip.push(VerifierStep::Gate(
            LocalOp::new(u, Gate::cnot(), vec![c_reg(u), vc_reg(u)]).when(is_root(u)),
        ));
    }
    turns.push(Turn::Verifier(VerifierTurn {
        steps: flip,
        send: c_names.clone(),
        reveal: Vec::new(),
    }));
    turns.push(Turn::Prover(ProverTurn {
        send: c_names,
        replies: Vec::new(),
    }));
    let mut steps = Vec::new();
    for u in 0..n {
        steps.push(VerifierStep::Measure {
            node: u,
            qubit: vc_reg(u),
            var: nv[u].local,
        });
        steps.push(VerifierStep::Measure {
            node: u,
            qubit: c_reg(u),
            var: nv[u].copied,
        });
    }
    steps.extend(backward_steps(&turn_gates(spec, 2 * ell + 2), &bwd));
    turns.push(Turn::Verifier(VerifierTurn {
        steps,
        send: circulating.clone(),
        reveal: Vec::new(),
    }));
    turns.extend(middle_turns(spec, ell, &circulating, &fwd, &bwd));

    let mut checks = Vec::with_capacity(n);
    for u in 0..n {
        let mut parts = Vec::new();
        for &v in graph.neighbors(u) {
            parts.push(Check::vars_equal(nv[u].root, nv[v].root, nn));
            parts.push(Check::equal(coin(u), coin(v)));
        }
        let mut non_root = Vec::new();
        for &p in graph.neighbors(u) {
            for d in 1..nn {
                non_root.push(Check::and(vec![
                    Check::var_eq(nv[u].parent, p as u32),
                    Check::var_eq(nv[u].dist, d),
                    Check::var_eq(nv[p].dist, d - 1),
                ]));
            }
        }
        parts.push(Check::or(vec![
            Check::and(vec![
                is_root(u),
                Check::var_eq(nv[u].dist, 0),
                Check::var_eq(nv[u].parent, nn),
            ]),
            Check::and(vec![Check::not(is_root(u)), Check::or(non_root)]),
        ]));
        parts.push(branch_check(spec, u, fwd(u), bwd(u)));
        checks.push(NodeCheck {
            node: u,
            check: Check::and(parts),
        });
    }

    let out = ProtocolSpec {
        name: format!("{}-halved-private", spec.name),
        graph: graph.clone(),
        layout: layout.clone(),
        vars,
        turns,
        verification: verification(spec, &fwd, &bwd, checks),
        initial: Vec::new(),
        communication: spec.communication,
        min_prover_qubits: spec.min_prover_qubits,
    };
    let info = out.validate()?;

    let tree = spanning_tree(graph, 0);
    let mut replies = Vec::with_capacity(3 * n);
    for u in 0..n {
        replies.push(0);
        replies.push(tree.parent[u].map_or(nn, |p| p as u32));
        replies.push(tree.distance[u] as u32);
    }
    let original_qubits: Vec<usize> = (0..spec.total_qubits()).collect();
    let prepare = ProverOp::prepare(original_qubits, &middle)?;
    let mut fan_out = vec![ProverOp::gate(Gate::swap(), vec![c_reg(0), keeper])];
    for v in 1..n {
        fan_out.push(ProverOp::gate(Gate::cnot(), vec![keeper, c_reg(v)]));
    }
    let strategy = ProverStrategy::from_fn(&out, &info, |ord, _view| match ord {
        0 => ProverResponse {
            ops: vec![prepare.clone()],
            replies: replies.clone(),
        },
        1 => ProverResponse::ops(fan_out.clone()),
        _ => {
            let i = ord - 1;
            let mut ops: Vec<ProverOp> = original[ell + i]
                .ops
                .iter()
                .map(|o| o.clone().controlled_by(&[(keeper, false)]))
                .collect();
            ops.extend(
                original[ell + 1 - i]
                    .adjoint_ops()
                    .into_iter()
                    .map(|o| o.controlled_by(&[(keeper, true)])),
            );
            ProverResponse::ops(ops)
        }
    });
    let report = CompileReport::new(Transform::HalvePrivate { ell }, spec, &out);
    Ok((out, strategy, report))
}

/// Seven turns to five with a coin drawn by `leader`. Every node receives
/// the coin as a prover reply and neighbors compare their copies.
pub fn seven_to_five(
    spec: &ProtocolSpec,
    honest: &ProverStrategy,
    leader: usize,
) -> Result<(ProtocolSpec, ProverStrategy, CompileReport)> {
    if spec.num_turns() != 7 {
        return Err(Error::Shape(format!(
            "needs a 7-turn protocol, got {}",
            spec.num_turns()
        )));
    }
    let n = spec.graph.node_count();
    if leader >= n {
        return Err(Error::Validation(format!("leader {leader} is not a node")));
    }
    let circulating = circulating_registers(spec, "turn reduction")?;
    check_pair(spec, honest)?;
    let original = plain_responses(honest, "turn reduction")?;
    let middle = state_before(spec, honest, Some(2))?;

    let (layout, delivered) = prover_starts_with(spec, &circulating, true);
    let mut vars = spec.vars.clone();
    let coin = add_var(&mut vars, "rewind".into(), VarOwner::Node(leader), 2);
    let copies: Vec<usize> = (0..n)
        .map(|u| add_var(&mut vars, format!("rewind[{u}]"), VarOwner::Node(u), 2))
        .collect();
    let fwd = |u: usize| Check::var_eq(copies[u], 0);
    let bwd = |u: usize| Check::var_eq(copies[u], 1);

    let mut t4 = forward_steps(&turn_gates(spec, 6), &fwd);
    t4.extend(backward_steps(&turn_gates(spec, 4), &bwd));
    let turns = vec![
        Turn::Prover(ProverTurn {
            send: delivered,
            replies: Vec::new(),
        }),
        Turn::Verifier(VerifierTurn {
            steps: vec![VerifierStep::Coin { var: coin }],
            send: Vec::new(),
            reveal: vec![coin],
        }),
        Turn::Prover(ProverTurn {
            send: circulating.clone(),
            replies: copies.clone(),
        }),
        Turn::Verifier(VerifierTurn {
            steps: t4,
            send: circulating.clone(),
            reveal: Vec::new(),
        }),
        Turn::Prover(ProverTurn {
            send: circulating.clone(),
            replies: Vec::new(),
        }),
    ];
    let checks = (0..n)
        .map(|u| {
            let mut parts: Vec<Check> = spec
                .graph
                .neighbors(u)
                .iter()
                .map(|&v| Check::vars_equal(copies[u], copies[v], 2))
                .collect();
            if u == leader {
                parts.push(Check::vars_equal(copies[u], coin, 2));
            }
            parts.push(branch_check(spec, u, fwd(u), bwd(u)));
            NodeCheck {
                node: u,
                check: Check::and(parts),
            }
        })
        .collect();
    let out = ProtocolSpec {
        name: format!("{}-five", spec.name),
        graph: spec.graph.clone(),
        layout,
        vars,
        turns,
        verification: verification(spec, &fwd, &bwd, checks),
        initial: Vec::new(),
        communication: spec.communication,
        min_prover_qubits: spec.min_prover_qubits,
    };
    let info = out.validate()?;
    let all: Vec<usize> = (0..out.total_qubits()).collect();
    let prepare = ProverOp::prepare(all, &middle)?;
    let strategy = ProverStrategy::from_fn(&out, &info, |ord, view| match (ord, view.first()) {
        (0, _) => ProverResponse::ops(vec![prepare.clone()]),
        (1, Some(0)) => ProverResponse {
            ops: original[2].ops.clone(),
            replies: vec![0; n],
        },
        (1, _) => ProverResponse {
            ops: Vec::new(),
            replies: vec![1; n],
        },
        (_, Some(0)) => ProverResponse::ops(original[3].ops.clone()),
        (_, _) => ProverResponse::ops(original[1].adjoint_ops()),
    });
    let report = CompileReport::new(Transform::SevenToFive, spec, &out);
    Ok((out, strategy, report))
}
