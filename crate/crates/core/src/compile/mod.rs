//! Protocol-to-protocol transformations.

mod corpus;
mod dam;
mod halving;
mod perfect;
mod repeat;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::Owner;
use crate::protocol::{
    Check, LocalOp, ProtocolSpec, ProverResponse, ProverStrategy, ProverTurn, SpecInfo, Turn,
    VerifierStep, VerifierTurn, Visitor, Walker,
};
use crate::qcore::{kernel, C64};

pub use corpus::{tilted_spec, CompileCorpusEntry, compile_corpus};
pub use dam::dam_to_dqip;
pub use halving::{halve_turns_private, halve_turns_shared, reduce_turns_shared, seven_to_five};
pub use perfect::{perfect_completeness, perfect_completeness_with};
pub use repeat::{parallel_repeat, RepetitionMode};

/// Which transformation produced a spec.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Transform {
    DamToDqip,
    PadTurns,
    HalveShared { ell: usize },
    HalvePrivate { ell: usize },
    SevenToFive,
    PerfectCompleteness { c: f64 },
    ParallelRepeat { copies: usize, mode: RepetitionMode },
}

/// Turn counts, register accounting and predicted values of a transform.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompileReport {
    pub transform: Transform,
    pub input_turns: usize,
    pub output_turns: usize,
    /// Largest prover-to-node delivery per node, in qubits.
    pub input_message_qubits: Vec<usize>,
    pub output_message_qubits: Vec<usize>,
    /// Node-homed qubits that never return to the prover.
    pub input_private_qubits: Vec<usize>,
    pub output_private_qubits: Vec<usize>,
}

/// Predicted completeness and soundness of a transform's output.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub completeness: f64,
    /// `None` where no bound is known at this scale.
    pub soundness: Option<f64>,
}

impl CompileReport {
    pub(crate) fn new(transform: Transform, input: &ProtocolSpec, output: &ProtocolSpec) -> Self {
        let (im, ip) = accounting(input);
        let (om, op) = accounting(output);
        CompileReport {
            transform,
            input_turns: input.num_turns(),
            output_turns: output.num_turns(),
            input_message_qubits: im,
            output_message_qubits: om,
            input_private_qubits: ip,
            output_private_qubits: op,
        }
    }

    /// Output values given the input's completeness `c` and soundness `s`.
    pub fn predict(&self, c: f64, s: f64) -> Prediction {
        match &self.transform {
            Transform::DamToDqip | Transform::PadTurns => Prediction {
                completeness: c,
                soundness: Some(s),
            },
            Transform::HalveShared { .. } | Transform::HalvePrivate { .. } | Transform::SevenToFive => {
                Prediction {
                    completeness: (1.0 + c) / 2.0,
                    soundness: Some((1.0 + s.sqrt()) / 2.0),
                }
            }
            Transform::PerfectCompleteness { c: target } => {
                let delta = target - s;
                Prediction {
                    completeness: 1.0,
                    soundness: (delta > 0.0).then(|| 1.0 - delta * delta),
                }
            }
            Transform::ParallelRepeat { copies, mode } => match mode {
                RepetitionMode::And => Prediction {
                    completeness: c.powi(*copies as i32),
                    soundness: None,
                },
                RepetitionMode::Majority => Prediction {
                    completeness: majority_probability(c, *copies),
                    soundness: None,
                },
            },
        }
    }
}

/// Probability that more than half of `t` independent trials succeed.
fn majority_probability(p: f64, t: usize) -> f64 {
    let mut total = 0.0;
    for k in t / 2 + 1..=t {
        let mut binom = 1.0;
        for i in 0..k {
            binom *= (t - i) as f64 / (i + 1) as f64;
        }
        total += binom * p.powi(k as i32) * (1.0 - p).powi((t - k) as i32);
    }
    total
}

/// Per-node message and private sizes of a spec.
pub fn accounting(spec: &ProtocolSpec) -> (Vec<usize>, Vec<usize>) {
    let n = spec.graph.node_count();
    let layout = &spec.layout;
    let home = |name: &str| {
        layout
            .find(name)
            .and_then(|i| layout.register(i).nodes.first().copied())
    };
    let mut message = vec![0; n];
    let mut returned = vec![false; layout.registers().len()];
    for t in &spec.turns {
        match t {
            Turn::Prover(p) => {
                let mut per = vec![0; n];
                for name in &p.send {
                    if let (Some(u), Some(i)) = (home(name), layout.find(name)) {
                        per[u] += layout.register(i).len;
                    }
                }
                for u in 0..n {
                    message[u] = message[u].max(per[u]);
                }
            }
            Turn::Verifier(v) => {
                for name in &v.send {
                    if let Some(i) = layout.find(name) {
                        returned[i] = true;
                    }
                }
            }
        }
    }
    let mut private = vec![0; n];
    for (i, r) in layout.registers().iter().enumerate() {
        if returned[i] {
            continue;
        }
        let homed = match r.owner {
            Owner::Node(u) => Some(u),
            Owner::Prover => r.nodes.first().copied(),
        };
        if let Some(u) = homed {
            private[u] += r.len;
        }
    }
    (message, private)
}

/// Registers passed back and forth in every turn of a spec whose interaction
/// is purely unitary. Errors name the offending feature.
pub(crate) fn circulating_registers(spec: &ProtocolSpec, what: &str) -> Result<Vec<String>> {
    if !spec.initial.is_empty() {
        return Err(Error::Unsupported(format!("{what} needs a spec without input states")));
    }
    let mut circulating: Option<Vec<String>> = None;
    for (i, t) in spec.turns.iter().enumerate() {
        let send = match t {
            Turn::Prover(p) => {
                if !p.replies.is_empty() {
                    return Err(Error::Unsupported(format!(
                        "{what}: turn {} has classical replies",
                        i + 1
                    )));
                }
                &p.send
            }
            Turn::Verifier(v) => {
                if !v.reveal.is_empty() {
                    return Err(Error::Unsupported(format!(
                        "{what}: turn {} reveals classical values",
                        i + 1
                    )));
                }
                for s in &v.steps {
                    match s {
                        VerifierStep::Gate(op) if op.condition.is_none() => {}
                        _ => {
                            return Err(Error::Unsupported(format!(
                                "{what}: turn {} is not a plain unitary",
                                i + 1
                            )))
                        }
                    }
                }
                &v.send
            }
        };
        let mut sorted = send.clone();
        sorted.sort();
        match &circulating {
            None => circulating = Some(sorted),
            Some(c) if *c == sorted => {}
            Some(_) => {
                return Err(Error::Unsupported(format!(
                    "{what}: turn {} moves a different register set",
                    i + 1
                )))
            }
        }
    }
    Ok(circulating.unwrap_or_default())
}

/// The honest strategy as one response per turn, without replies.
pub(crate) fn plain_responses(strategy: &ProverStrategy, what: &str) -> Result<Vec<ProverResponse>> {
    strategy
        .moves
        .iter()
        .map(|m| {
            if m.responses.len() != 1 || !m.responses[0].replies.is_empty() {
                Err(Error::Unsupported(format!(
                    "{what} needs an honest strategy with one response per turn"
                )))
            } else {
                Ok(m.responses[0].clone())
            }
        })
        .collect()
}

/// Gates of verifier turn `turn` (1-based).
pub(crate) fn turn_gates(spec: &ProtocolSpec, turn: usize) -> Vec<LocalOp> {
    match &spec.turns[turn - 1] {
        Turn::Verifier(v) => v
            .steps
            .iter()
            .filter_map(|s| match s {
                VerifierStep::Gate(op) => Some(op.clone()),
                _ => None,
            })
            .collect(),
        Turn::Prover(_) => Vec::new(),
    }
}

fn with_condition(mut op: LocalOp, cond: Check) -> LocalOp {
    op.condition = Some(match op.condition.take() {
        Some(c) => Check::and(vec![c, cond]),
        None => cond,
    });
    op
}

/// `ops` as steps, each gated by `cond(node)`.
pub(crate) fn forward_steps(ops: &[LocalOp], cond: &impl Fn(usize) -> Check) -> Vec<VerifierStep> {
    ops.iter()
        .map(|op| VerifierStep::Gate(with_condition(op.clone(), cond(op.node))))
        .collect()
}

/// The inverse of `ops` as steps, each gated by `cond(node)`.
pub(crate) fn backward_steps(ops: &[LocalOp], cond: &impl Fn(usize) -> Check) -> Vec<VerifierStep> {
    ops.iter()
        .rev()
        .map(|op| {
            let mut inv = op.clone();
            inv.gate = op.gate.adjoint();
            VerifierStep::Gate(with_condition(inv, cond(op.node)))
        })
        .collect()
}

/// Verification steps with every gate additionally gated by `cond(node)`;
/// measurements and exchanges are kept unconditional.
pub(crate) fn gated_verification(spec: &ProtocolSpec, cond: &impl Fn(usize) -> Check) -> Vec<VerifierStep> {
    spec.verification
        .steps
        .iter()
        .map(|s| match s {
            VerifierStep::Gate(op) => VerifierStep::Gate(with_condition(op.clone(), cond(op.node))),
            other => other.clone(),
        })
        .collect()
}

/// Qubits of registers that start at node `u`.
pub(crate) fn private_qubits(spec: &ProtocolSpec, u: usize) -> Vec<usize> {
    spec.layout
        .registers()
        .iter()
        .filter(|r| r.owner == Owner::Node(u))
        .flat_map(|r| r.qubits())
        .collect()
}

/// The original check of node `u`, or `true` if it has none.
pub(crate) fn node_check(spec: &ProtocolSpec, u: usize) -> Check {
    Check::and(
        spec.verification
            .checks
            .iter()
            .filter(|c| c.node == u)
            .map(|c| c.check.clone())
            .collect(),
    )
}

struct Capture {
    ordinal: Option<usize>,
    state: Option<Vec<C64>>,
}

impl<'a> Visitor<'a> for Capture {
    fn prover(&mut self, ordinal: usize, _view: usize, amps: &[C64], _weight: f64, _trail: usize) {
        if self.ordinal == Some(ordinal) && self.state.is_none() && kernel::norm_sqr(amps) > 1e-18 {
            self.state = Some(amps.to_vec());
        }
    }

    fn verification_start(&mut self, amps: &[C64], _weight: f64, _vars: &[u32]) {
        if self.ordinal.is_none() && self.state.is_none() && kernel::norm_sqr(amps) > 1e-18 {
            self.state = Some(amps.to_vec());
        }
    }
}

/// Global state just before prover turn `ordinal` (or before verification
/// for `None`) along the first nonzero branch that reaches it.
pub(crate) fn state_before(
    spec: &ProtocolSpec,
    strategy: &ProverStrategy,
    ordinal: Option<usize>,
) -> Result<Vec<C64>> {
    let walker = Walker::new(spec, strategy)?;
    let mut cap = Capture {
        ordinal,
        state: None,
    };
    walker.run(&mut cap);
    cap.state
        .ok_or_else(|| Error::Validation("no branch reaches the requested turn".into()))
}

/// Appends identity turn pairs until the protocol has `target` turns. The pairs
/// return and redeliver the registers of the last prover turn.
pub fn pad_turns(
    spec: &ProtocolSpec,
    honest: &ProverStrategy,
    target: usize,
) -> Result<(ProtocolSpec, ProverStrategy, CompileReport)> {
    let k = spec.num_turns();
    if target < k || (target - k) % 2 != 0 {
        return Err(Error::Shape(format!("cannot pad {k} turns to {target}")));
    }
    let last = spec
        .turns
        .iter()
        .rev()
        .find_map(|t| match t {
            Turn::Prover(p) => Some(p.send.clone()),
            Turn::Verifier(_) => None,
        })
        .ok_or_else(|| Error::Shape("padding needs a prover turn".into()))?;
    let mut out = spec.clone();
    let mut strategy = honest.clone();
    for _ in 0..(target - k) / 2 {
        out.turns.push(Turn::Verifier(VerifierTurn {
            steps: Vec::new(),
            send: last.clone(),
            reveal: Vec::new(),
        }));
        out.turns.push(Turn::Prover(ProverTurn {
            send: last.clone(),
            replies: Vec::new(),
        }));
        strategy
            .moves
            .push(crate::protocol::ProverMove::uniform(ProverResponse::default()));
    }
    out.name = format!("{}+pad{}", spec.name, target);
    let report = CompileReport::new(Transform::PadTurns, spec, &out);
    Ok((out, strategy, report))
}

/// Validates a protocol/strategy pair and returns the protocol's static facts.
pub(crate) fn check_pair(spec: &ProtocolSpec, strategy: &ProverStrategy) -> Result<SpecInfo> {
    let info = spec.validate()?;
    strategy.validate(spec, &info)?;
    Ok(info)
}
