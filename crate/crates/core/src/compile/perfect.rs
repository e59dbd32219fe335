use super::{check_pair, circulating_registers, plain_responses, state_before, CompileReport, Transform};
use crate::error::{Error, Result};
use crate::network::{register_name, Owner};
use crate::protocol::{
    acceptance_probability, Atom, BoolExpr, Check, ClassicalVar, LocalOp, NodeCheck, ProtocolSpec,
    ProverMove, ProverOp, ProverResponse, ProverStrategy, ProverTurn, Turn, VarOwner,
    VerificationPhase, VerifierStep, VerifierTurn,
};
use crate::qcore::{kernel, Gate, C64, QUBIT_CEILING};

/// Output qubit of every node: the single qubit its check requires to read 0.
fn output_qubits(spec: &ProtocolSpec) -> Result<Vec<usize>> {
    let n = spec.graph.node_count();
    let mut out = vec![None; n];
    for c in &spec.verification.checks {
        let q = match &c.check {
            BoolExpr::Not(inner) => match **inner {
                BoolExpr::Atom(Atom::Qubit(q)) => Some(q),
                _ => None,
            },
            _ => None,
        };
        match (q, out[c.node]) {
            (Some(q), None) => out[c.node] = Some(q),
            _ => {
                return Err(Error::Unsupported(
                    "perfect completeness needs one single-qubit check per node".into(),
                ))
            }
        }
    }
    out.into_iter()
        .map(|q| q.ok_or_else(|| Error::Unsupported("every node needs an output qubit".into())))
        .collect()
}

/// Appends two rounds in which the prover boosts the honest acceptance to 1. The
/// nodes hand a leader-held flag `B`, set iff some node rejects, to a
/// rotation tuned to the honest acceptance `c`; the prover coherently
/// returns the rejecting part of the state to the flag's copy so that the
/// rotation lands on `|0>`.
pub fn perfect_completeness_with(
    spec: &ProtocolSpec,
    honest: &ProverStrategy,
    c: f64,
) -> Result<(ProtocolSpec, ProverStrategy, CompileReport)> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::Validation(format!("acceptance {c} outside (0, 1]")));
    }
    let rotation = Gate::t_c(c)?;
    circulating_registers(spec, "perfect completeness")?;
    let info = check_pair(spec, honest)?;
    let original = plain_responses(honest, "perfect completeness")?;
    let v = &spec.verification;
    if !spec.vars.is_empty() || !v.broadcast.is_empty() || v.global_readout {
        return Err(Error::Unsupported(
            "perfect completeness needs purely local quantum checks".into(),
        ));
    }
    if v
        .steps
        .iter()
        .any(|s| !matches!(s, VerifierStep::Gate(_) | VerifierStep::Exchange { .. }))
    {
        return Err(Error::Unsupported(
            "perfect completeness needs a unitary verification phase".into(),
        ));
    }
    let outputs = output_qubits(spec)?;
    let graph = &spec.graph;
    let n = graph.node_count();
    let leader = 0;

    let mut layout = spec.layout.clone();
    for u in 0..n {
        layout.push("O", &[u], 1, Owner::Node(u));
        layout.push("G", &[u], 1, Owner::Prover);
        layout.push("F", &[u], 1, Owner::Node(u));
    }
    layout.push("B", &[leader], 1, Owner::Node(leader));
    layout.push("Bc", &[leader], 1, Owner::Node(leader));
    layout.check_ceiling(QUBIT_CEILING)?;
    let one = |base: &str, u: usize| layout.qubits(&register_name(base, &[u]))[0];
    let (flag, flag_copy) = (one("B", leader), one("Bc", leader));
    let names = |base: &str| -> Vec<String> { (0..n).map(|u| register_name(base, &[u])).collect() };

    let mut vars = Vec::new();
    let mut parity_vars = vec![Vec::new(); n];
    let mut steps = Vec::new();
    for &(a, b) in graph.edges() {
        let (u, w) = (a.min(b), a.max(b));
        vars.push(ClassicalVar {
            name: format!("parity[{u},{w}]"),
            owner: VarOwner::Node(u),
            domain: 2,
        });
        parity_vars[u].push(vars.len() - 1);
        steps.push(VerifierStep::MeasureParity {
            node: u,
            qubits: vec![one("G", u), one("G", w)],
            var: vars.len() - 1,
        });
    }
    let mut fault_vars = Vec::with_capacity(n);
    for u in 0..n {
        vars.push(ClassicalVar {
            name: format!("fault[{u}]"),
            owner: VarOwner::Node(u),
            domain: 2,
        });
        fault_vars.push(vars.len() - 1);
        // a rejecting node must see the flag raised
        steps.push(VerifierStep::Gate(
            LocalOp::new(u, Gate::x(), vec![one("F", u)])
                .controlled(vec![(outputs[u], true), (one("G", u), false)]),
        ));
        steps.push(VerifierStep::Measure {
            node: u,
            qubit: one("F", u),
            var: vars.len() - 1,
        });
    }
    for target in [flag, flag_copy] {
        steps.push(VerifierStep::Gate(LocalOp::new(
            leader,
            Gate::cnot(),
            vec![one("G", leader), target],
        )));
    }

    let mut returned: Vec<String> = spec
        .layout
        .registers()
        .iter()
        .filter(|r| r.len > 0 && matches!(info.final_owner[r.start], Owner::Node(_)))
        .map(|r| r.name())
        .collect();
    returned.extend(names("G"));
    returned.push(register_name("Bc", &[leader]));

    let mut readout = v.steps.clone();
    for u in 0..n {
        readout.push(VerifierStep::Gate(LocalOp::new(
            u,
            Gate::cnot(),
            vec![outputs[u], one("O", u)],
        )));
    }
    let mut turns = spec.turns.clone();
    turns.push(Turn::Verifier(VerifierTurn {
        steps: readout,
        send: names("O"),
        reveal: Vec::new(),
    }));
    turns.push(Turn::Prover(ProverTurn {
        send: names("G"),
        replies: Vec::new(),
    }));
    turns.push(Turn::Verifier(VerifierTurn {
        steps,
        send: returned,
        reveal: Vec::new(),
    }));
    turns.push(Turn::Prover(ProverTurn {
        send: vec![register_name("Bc", &[leader])],
        replies: Vec::new(),
    }));

    let checks = (0..n)
        .map(|u| {
            let mut parts: Vec<Check> = parity_vars[u].iter().map(|&p| Check::var_eq(p, 0)).collect();
            parts.push(Check::var_eq(fault_vars[u], 0));
            if u == leader {
                parts.push(Check::qubit_zero(flag));
            }
            NodeCheck {
                node: u,
                check: Check::and(parts),
            }
        })
        .collect();
    let out = ProtocolSpec {
        name: format!("{}-perfect", spec.name),
        graph: graph.clone(),
        layout: layout.clone(),
        vars,
        turns,
        verification: VerificationPhase {
            steps: vec![
                VerifierStep::Gate(LocalOp::new(leader, Gate::cnot(), vec![flag, flag_copy])),
                VerifierStep::Gate(LocalOp::new(leader, rotation, vec![flag])),
            ],
            broadcast: Vec::new(),
            checks,
            global_readout: false,
        },
        initial: Vec::new(),
        communication: true,
        min_prover_qubits: spec.min_prover_qubits,
    };
    let out_info = out.validate()?;

    let mut moves: Vec<ProverMove> = original.into_iter().map(ProverMove::uniform).collect();
    let mut raise = vec![ProverOp::Gate {
        gate: Gate::x(),
        targets: vec![one("G", leader)],
        controls: (0..n).map(|u| (one("O", u), false)).collect(),
    }];
    raise.push(ProverOp::gate(Gate::x(), vec![one("G", leader)]));
    for u in (0..n).filter(|&u| u != leader) {
        raise.push(ProverOp::gate(Gate::cnot(), vec![one("G", leader), one("G", u)]));
    }
    moves.push(ProverMove::uniform(ProverResponse::ops(raise)));
    moves.push(ProverMove::uniform(ProverResponse::default()));
    let partial = ProverStrategy { moves };
    let last = out_info.prover_turns.len() - 1;
    let state = state_before(&out, &partial, Some(last))?;
    let held = out_info.held[last].clone();
    let fix = realign(&state, &held, flag, flag_copy)?;
    let mut strategy = partial;
    strategy.moves[last] = ProverMove::uniform(ProverResponse::ops(fix));

    let report = CompileReport::new(Transform::PerfectCompleteness { c }, spec, &out);
    Ok((out, strategy, report))
}

/// [`perfect_completeness_with`] tuned to the exact honest acceptance.
pub fn perfect_completeness(
    spec: &ProtocolSpec,
    honest: &ProverStrategy,
) -> Result<(ProtocolSpec, ProverStrategy, CompileReport)> {
    let c = acceptance_probability(spec, honest)?;
    perfect_completeness_with(spec, honest, c)
}

/// Ops on `held` that send the flag-0 part of `state` to `|0...0>` and the
/// flag-1 part to the basis state with only `copy` set.
fn realign(state: &[C64], held: &[usize], flag: usize, copy: usize) -> Result<Vec<ProverOp>> {
    let h = held.len();
    let mut accept = vec![C64::new(0.0, 0.0); 1 << h];
    let mut reject = accept.clone();
    let mut seen = None;
    for (g, amp) in state.iter().enumerate() {
        if amp.norm_sqr() < 1e-30 {
            continue;
        }
        // unheld qubits other than the flag are classical in this branch
        let rest = g & !held.iter().fold(1usize << flag, |m, &q| m | 1 << q);
        if *seen.get_or_insert(rest) != rest {
            return Err(Error::Validation("honest state is entangled with node registers".into()));
        }
        let local = held
            .iter()
            .enumerate()
            .fold(0, |acc, (j, &q)| acc | ((g >> q) & 1) << j);
        if (g >> flag) & 1 == 0 {
            accept[local] = *amp;
        } else {
            reject[local] = *amp;
        }
    }
    let local: Vec<usize> = (0..h).collect();
    let mut ops = Vec::new();
    if kernel::norm_sqr(&accept) > 1e-24 {
        let prep = ProverOp::prepare(local.clone(), &accept)?;
        prep.apply_adjoint(&mut reject);
        ops.push(ProverOp::prepare(held.to_vec(), &accept)?.adjoint());
    }
    let rn = kernel::norm_sqr(&reject).sqrt();
    if rn > 1e-12 {
        let pos = held
            .iter()
            .position(|&q| q == copy)
            .ok_or_else(|| Error::Validation("prover does not hold the flag copy".into()))?;
        let b = 1usize << pos;
        let phase = if reject[b].norm() > 1e-300 {
            reject[b] / reject[b].norm()
        } else {
            C64::new(1.0, 0.0)
        };
        let mut w: Vec<C64> = reject.iter().map(|a| a / rn).collect();
        w[b] -= phase;
        let wn = kernel::norm_sqr(&w).sqrt();
        if wn > 1e-12 {
            for x in &mut w {
                *x /= wn;
            }
            ops.push(ProverOp::Reflect {
                qubits: held.to_vec(),
                vector: w,
                phase: C64::new(1.0, 0.0),
                controls: Vec::new(),
            });
        }
        ops.push(ProverOp::Gate {
            gate: Gate::diagonal(&[C64::new(1.0, 0.0), phase.conj()]),
            targets: vec![copy],
            controls: held.iter().filter(|&&q| q != copy).map(|&q| (q, false)).collect(),
        });
    }
    Ok(ops)
}
