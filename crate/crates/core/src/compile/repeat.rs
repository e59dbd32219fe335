use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{check_pair, CompileReport, Transform};
use crate::error::{Error, Result};
use crate::network::{register_name, Owner, RegisterLayout};
use crate::protocol::{
    Check, ClassicalVar, InitialState, NodeCheck, ProtocolSpec, ProverResponse, ProverStrategy,
    ProverTurn, Turn, VerificationPhase, VerifierStep, VerifierTurn,
};
use crate::qcore::QUBIT_CEILING;

/// How the copies' verdicts are combined.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepetitionMode {
    /// Every node accepts iff it accepts in every copy.
    And,
    /// Node 0 reads all outcomes and accepts iff most copies were accepted.
    Majority,
}

struct Copy {
    qubits: Vec<usize>,
    vars: Vec<usize>,
    names: HashMap<String, String>,
}

impl Copy {
    fn name(&self, n: &str) -> String {
        self.names[n].clone()
    }

    fn step(&self, s: &VerifierStep) -> VerifierStep {
        let q = |x: &usize| self.qubits[*x];
        match s {
            VerifierStep::Gate(op) => {
                let mut op = op.clone();
                op.targets = op.targets.iter().map(q).collect();
                op.controls = op.controls.iter().map(|&(c, b)| (self.qubits[c], b)).collect();
                op.condition = op.condition.map(|c| c.remap_vars(&self.vars));
                VerifierStep::Gate(op)
            }
            VerifierStep::Measure { node, qubit, var } => VerifierStep::Measure {
                node: *node,
                qubit: q(qubit),
                var: self.vars[*var],
            },
            VerifierStep::MeasureParity { node, qubits, var } => VerifierStep::MeasureParity {
                node: *node,
                qubits: qubits.iter().map(q).collect(),
                var: self.vars[*var],
            },
            VerifierStep::Coin { var } => VerifierStep::Coin {
                var: self.vars[*var],
            },
            VerifierStep::Exchange { a, b } => VerifierStep::Exchange {
                a: self.name(a),
                b: self.name(b),
            },
        }
    }

    fn check(&self, c: &Check) -> Check {
        c.remap_qubits(&self.qubits).remap_vars(&self.vars)
    }
}

/// At least `k` of `parts` hold.
fn at_least(k: usize, parts: &[Check]) -> Check {
    if k == 0 {
        return Check::Const(true);
    }
    if parts.len() < k {
        return Check::Const(false);
    }
    Check::or(vec![
        Check::and(vec![parts[0].clone(), at_least(k - 1, &parts[1..])]),
        at_least(k, &parts[1..]),
    ])
}

/// Runs `copies` instances side by side in the same turns.
pub fn parallel_repeat(
    spec: &ProtocolSpec,
    honest: &ProverStrategy,
    copies: usize,
    mode: RepetitionMode,
) -> Result<(ProtocolSpec, ProverStrategy, CompileReport)> {
    if copies == 0 {
        return Err(Error::Config("parallel repetition needs at least one copy".into()));
    }
    let info = check_pair(spec, honest)?;
    let n = spec.graph.node_count();
    let p = spec.prover_qubits();
    let nv = spec.vars.len();

    let mut layout = RegisterLayout::new();
    layout.push("P", &[], copies * p, Owner::Prover);
    let mut maps = Vec::with_capacity(copies);
    for i in 0..copies {
        let mut qubits = vec![0; spec.total_qubits()];
        let mut names = HashMap::new();
        for r in spec.layout.registers() {
            let start = if r.base == "P" && r.nodes.is_empty() {
                names.insert(r.name(), "P".to_string());
                i * p
            } else {
                let base = format!("{}.{i}", r.base);
                let id = layout.push(&base, &r.nodes, r.len, r.owner);
                names.insert(r.name(), register_name(&base, &r.nodes));
                layout.register(id).start
            };
            for (j, q) in r.qubits().enumerate() {
                qubits[q] = start + j;
            }
        }
        maps.push(Copy {
            qubits,
            vars: (0..nv).map(|v| i * nv + v).collect(),
            names,
        });
    }
    layout.check_ceiling(QUBIT_CEILING)?;

    let vars = (0..copies)
        .flat_map(|i| {
            spec.vars.iter().map(move |v| ClassicalVar {
                name: format!("{}.{i}", v.name),
                ..v.clone()
            })
        })
        .collect();
    let send = |names: &[String]| -> Vec<String> {
        let mut out: Vec<String> = maps
            .iter()
            .flat_map(|m| names.iter().map(|x| m.name(x)))
            .collect();
        out.dedup();
        out
    };
    let turns = spec
        .turns
        .iter()
        .map(|t| match t {
            Turn::Prover(pt) => Turn::Prover(ProverTurn {
                send: send(&pt.send),
                replies: maps
                    .iter()
                    .flat_map(|m| pt.replies.iter().map(|&v| m.vars[v]))
                    .collect(),
            }),
            Turn::Verifier(vt) => Turn::Verifier(VerifierTurn {
                steps: maps
                    .iter()
                    .flat_map(|m| vt.steps.iter().map(|s| m.step(s)))
                    .collect(),
                send: send(&vt.send),
                reveal: maps
                    .iter()
                    .flat_map(|m| vt.reveal.iter().map(|&v| m.vars[v]))
                    .collect(),
            }),
        })
        .collect();

    let v = &spec.verification;
    let per_node = |m: &Copy, u: usize| {
        Check::and(
            v.checks
                .iter()
                .filter(|c| c.node == u)
                .map(|c| m.check(&c.check))
                .collect(),
        )
    };
    let (checks, global_readout) = match mode {
        RepetitionMode::And => (
            (0..n)
                .map(|u| NodeCheck {
                    node: u,
                    check: Check::and(maps.iter().map(|m| per_node(m, u)).collect()),
                })
                .collect(),
            v.global_readout,
        ),
        RepetitionMode::Majority => {
            let verdicts: Vec<Check> = maps
                .iter()
                .map(|m| Check::and((0..n).map(|u| per_node(m, u)).collect()))
                .collect();
            (
                vec![NodeCheck {
                    node: 0,
                    check: at_least(copies / 2 + 1, &verdicts),
                }],
                true,
            )
        }
    };
    let out = ProtocolSpec {
        name: format!("{}x{copies}", spec.name),
        graph: spec.graph.clone(),
        layout,
        vars,
        turns,
        verification: VerificationPhase {
            steps: maps
                .iter()
                .flat_map(|m| v.steps.iter().map(|s| m.step(s)))
                .collect(),
            broadcast: maps
                .iter()
                .flat_map(|m| v.broadcast.iter().map(|&(u, q)| (u, m.qubits[q])))
                .collect(),
            checks,
            global_readout,
        },
        initial: maps
            .iter()
            .flat_map(|m| {
                spec.initial.iter().map(|s| InitialState {
                    qubits: s.qubits.iter().map(|&q| m.qubits[q]).collect(),
                    amplitudes: s.amplitudes.clone(),
                })
            })
            .collect(),
        communication: spec.communication,
        min_prover_qubits: copies * spec.min_prover_qubits,
    };
    let out_info = out.validate()?;

    let strategy = ProverStrategy::from_fn(&out, &out_info, |ord, values| {
        let known: HashMap<usize, u32> = out_info.views[ord]
            .iter()
            .copied()
            .zip(values.iter().copied())
            .collect();
        let mut response = ProverResponse::default();
        for (i, m) in maps.iter().enumerate() {
            let own: Vec<u32> = info.views[ord]
                .iter()
                .map(|&var| known[&(i * nv + var)])
                .collect();
            let r = honest.moves[ord].response(info.view_index(spec, ord, &own));
            response
                .ops
                .extend(r.ops.iter().map(|o| o.remap(&m.qubits)));
            response.replies.extend_from_slice(&r.replies);
        }
        response
    });
    let report = CompileReport::new(Transform::ParallelRepeat { copies, mode }, spec, &out);
    Ok((out, strategy, report))
}
