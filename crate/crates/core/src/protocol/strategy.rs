use serde::{Deserialize, Serialize};

use super::spec::{ProtocolSpec, SpecInfo, Turn};
use crate::error::{Error, Result};
use crate::qcore::{check_targets, kernel, unitarity_tolerance, Gate, C64, NORM_TOL};

/// One elementary prover action.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProverOp {
    Gate {
        gate: Gate,
        targets: Vec<usize>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        controls: Vec<(usize, bool)>,
    },
    /// `phase * (I - 2|w><w|)` on `qubits`; cheap state preparation.
    Reflect {
        qubits: Vec<usize>,
        vector: Vec<C64>,
        phase: C64,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        controls: Vec<(usize, bool)>,
    },
}

impl ProverOp {
    pub fn gate(gate: Gate, targets: Vec<usize>) -> Self {
        ProverOp::Gate {
            gate,
            targets,
            controls: Vec::new(),
        }
    }

    /// A unitary on `qubits` that maps `|0...0>` to the normalized `target`.
    pub fn prepare(qubits: Vec<usize>, target: &[C64]) -> Result<Self> {
        if target.len() != 1 << qubits.len() {
            return Err(Error::Layout("preparation vector has the wrong length".into()));
        }
        let norm = kernel::norm_sqr(target).sqrt();
        if norm == 0.0 {
            return Err(Error::Validation("cannot prepare the zero vector".into()));
        }
        let t0 = target[0] / norm;
        let phase = if t0.norm() > 1e-300 {
            t0 / t0.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        // (I - 2ww†) e0 = xi / phase for w ∝ e0 - xi / phase
        let mut w: Vec<C64> = target.iter().map(|a| -(a / norm) / phase).collect();
        w[0] += 1.0;
        let wn = kernel::norm_sqr(&w).sqrt();
        if wn < 1e-12 {
            let mut d = vec![C64::new(1.0, 0.0); target.len()];
            d[0] = phase;
            return Ok(ProverOp::gate(Gate::diagonal(&d), qubits));
        }
        for x in &mut w {
            *x /= wn;
        }
        Ok(ProverOp::Reflect {
            qubits,
            vector: w,
            phase,
            controls: Vec::new(),
        })
    }

    /// Every qubit the op touches.
    pub fn qubits(&self) -> Vec<usize> {
        let (t, c) = match self {
            ProverOp::Gate {
                targets, controls, ..
            } => (targets, controls),
            ProverOp::Reflect {
                qubits, controls, ..
            } => (qubits, controls),
        };
        t.iter().copied().chain(c.iter().map(|x| x.0)).collect()
    }

    pub(crate) fn apply(&self, amps: &mut [C64]) {
        match self {
            ProverOp::Gate {
                gate,
                targets,
                controls,
            } => kernel::apply_matrix(amps, gate.matrix(), targets, controls),
            ProverOp::Reflect {
                qubits,
                vector,
                phase,
                controls,
            } => kernel::apply_reflection(amps, vector, *phase, qubits, controls),
        }
    }

    pub(crate) fn apply_adjoint(&self, amps: &mut [C64]) {
        match self {
            ProverOp::Gate {
                gate,
                targets,
                controls,
            } => kernel::apply_matrix(amps, &gate.matrix().adjoint(), targets, controls),
            ProverOp::Reflect {
                qubits,
                vector,
                phase,
                controls,
            } => kernel::apply_reflection(amps, vector, phase.conj(), qubits, controls),
        }
    }

    pub fn adjoint(&self) -> ProverOp {
        match self {
            ProverOp::Gate {
                gate,
                targets,
                controls,
            } => ProverOp::Gate {
                gate: gate.adjoint(),
                targets: targets.clone(),
                controls: controls.clone(),
            },
            ProverOp::Reflect {
                qubits,
                vector,
                phase,
                controls,
            } => ProverOp::Reflect {
                qubits: qubits.clone(),
                vector: vector.clone(),
                phase: phase.conj(),
                controls: controls.clone(),
            },
        }
    }

    /// Adds quantum controls.
    pub fn controlled_by(mut self, extra: &[(usize, bool)]) -> ProverOp {
        match &mut self {
            ProverOp::Gate { controls, .. } | ProverOp::Reflect { controls, .. } => {
                controls.extend_from_slice(extra)
            }
        }
        self
    }

    pub(crate) fn remap(&self, map: &[usize]) -> ProverOp {
        let rc = |cs: &[(usize, bool)]| cs.iter().map(|&(q, b)| (map[q], b)).collect();
        match self {
            ProverOp::Gate {
                gate,
                targets,
                controls,
            } => ProverOp::Gate {
                gate: gate.clone(),
                targets: targets.iter().map(|&q| map[q]).collect(),
                controls: rc(controls),
            },
            ProverOp::Reflect {
                qubits,
                vector,
                phase,
                controls,
            } => ProverOp::Reflect {
                qubits: qubits.iter().map(|&q| map[q]).collect(),
                vector: vector.clone(),
                phase: *phase,
                controls: rc(controls),
            },
        }
    }
}

/// What the prover does for one view of one turn.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ProverResponse {
    #[serde(default)]
    pub ops: Vec<ProverOp>,
    /// Values of the turn's reply variables, in declaration order.
    #[serde(default)]
    pub replies: Vec<u32>,
}

impl ProverResponse {
    pub fn ops(ops: Vec<ProverOp>) -> Self {
        ProverResponse {
            ops,
            replies: Vec::new(),
        }
    }

    /// Inverse of the ops, with no replies.
    pub fn adjoint_ops(&self) -> Vec<ProverOp> {
        self.ops.iter().rev().map(ProverOp::adjoint).collect()
    }
}

/// Responses indexed by view; a single response applies to every view.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ProverMove {
    pub responses: Vec<ProverResponse>,
}

impl ProverMove {
    pub fn uniform(response: ProverResponse) -> Self {
        ProverMove {
            responses: vec![response],
        }
    }

    pub fn response(&self, view: usize) -> &ProverResponse {
        if self.responses.len() == 1 {
            &self.responses[0]
        } else {
            &self.responses[view]
        }
    }
}

/// One move per prover turn.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ProverStrategy {
    pub moves: Vec<ProverMove>,
}

impl ProverStrategy {
    /// Does nothing and answers 0 everywhere.
    pub fn trivial(spec: &ProtocolSpec) -> Self {
        let moves = spec
            .turns
            .iter()
            .filter_map(|t| match t {
                Turn::Prover(p) => Some(ProverMove::uniform(ProverResponse {
                    ops: Vec::new(),
                    replies: vec![0; p.replies.len()],
                })),
                Turn::Verifier(_) => None,
            })
            .collect();
        ProverStrategy { moves }
    }

    /// Builds a strategy from `f(ordinal, view_values)`, tabulated over all views.
    pub fn from_fn(
        spec: &ProtocolSpec,
        info: &SpecInfo,
        mut f: impl FnMut(usize, &[u32]) -> ProverResponse,
    ) -> Self {
        let moves = (0..info.prover_turns.len())
            .map(|t| {
                let responses = (0..info.view_counts[t])
                    .map(|v| f(t, &info.view_values(spec, t, v)))
                    .collect();
                ProverMove { responses }
            })
            .collect();
        ProverStrategy { moves }
    }

    /// Checks shape, locality and unitarity against a validated spec.
    pub fn validate(&self, spec: &ProtocolSpec, info: &SpecInfo) -> Result<()> {
        if self.moves.len() != info.prover_turns.len() {
            return Err(Error::Validation(format!(
                "strategy has {} moves for {} prover turns",
                self.moves.len(),
                info.prover_turns.len()
            )));
        }
        for (t, mv) in self.moves.iter().enumerate() {
            let turn = info.prover_turns[t];
            let reply_vars = match &spec.turns[turn] {
                Turn::Prover(p) => &p.replies,
                Turn::Verifier(_) => unreachable!(),
            };
            if mv.responses.len() != 1 && mv.responses.len() != info.view_counts[t] {
                return Err(Error::Validation(format!(
                    "prover turn {} has {} responses for {} views",
                    turn + 1,
                    mv.responses.len(),
                    info.view_counts[t]
                )));
            }
            for r in &mv.responses {
                if r.replies.len() != reply_vars.len() {
                    return Err(Error::Validation(format!(
                        "prover turn {} must set {} replies",
                        turn + 1,
                        reply_vars.len()
                    )));
                }
                for (&val, &var) in r.replies.iter().zip(reply_vars) {
                    if val >= spec.vars[var].domain {
                        return Err(Error::Validation(format!(
                            "reply {val} outside the domain of {}",
                            spec.vars[var].name
                        )));
                    }
                }
                for op in &r.ops {
                    let qs = op.qubits();
                    check_targets(&qs, spec.total_qubits())?;
                    if let Some(&q) = qs.iter().find(|q| !info.held[t].contains(q)) {
                        let reg = spec
                            .layout
                            .register_of(q)
                            .map(|i| spec.layout.register(i).name())
                            .unwrap_or_default();
                        return Err(Error::protocol(
                            turn + 1,
                            format!("prover acts on register {reg} it does not hold"),
                        ));
                    }
                    match op {
                        ProverOp::Gate { gate, targets, .. } => {
                            if gate.arity() != targets.len() {
                                return Err(Error::Layout("prover gate arity mismatch".into()));
                            }
                            if gate.unitarity_error() > unitarity_tolerance(gate.dim()) {
                                return Err(Error::Validation(format!("prover gate is not unitary ({:.3e}, dim {})", gate.unitarity_error(), gate.dim())));
                            }
                        }
                        ProverOp::Reflect {
                            qubits,
                            vector,
                            phase,
                            ..
                        } => {
                            if vector.len() != 1 << qubits.len()
                                || (kernel::norm_sqr(vector) - 1.0).abs() > NORM_TOL
                                || (phase.norm() - 1.0).abs() > NORM_TOL
                            {
                                return Err(Error::Validation("malformed prover reflection".into()));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn remap_qubits(&self, map: &[usize]) -> ProverStrategy {
        ProverStrategy {
            moves: self
                .moves
                .iter()
                .map(|m| ProverMove {
                    responses: m
                        .responses
                        .iter()
                        .map(|r| ProverResponse {
                            ops: r.ops.iter().map(|o| o.remap(map)).collect(),
                            replies: r.replies.clone(),
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    /// Appends `op` to every response of the last move.
    pub fn then_last(mut self, op: ProverOp) -> Self {
        if let Some(m) = self.moves.last_mut() {
            for r in &mut m.responses {
                r.ops.push(op.clone());
            }
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prepare_maps_zero_to_target() {
        let targets = [
            vec![C64::new(0.0, 0.0), C64::new(0.0, 1.0)],
            vec![C64::new(0.6, 0.0), C64::new(0.0, -0.8)],
            vec![C64::new(0.0, 0.6), C64::new(0.8, 0.0)],
            vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            vec![C64::new(-1.0, 0.0), C64::new(0.0, 0.0)],
        ];
        for t in targets {
            let op = ProverOp::prepare(vec![0], &t).unwrap();
            let mut amps = vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
            op.apply(&mut amps);
            for (a, b) in amps.iter().zip(&t) {
                assert!((a - b).norm() < 1e-12, "{amps:?} vs {t:?}");
            }
            op.apply_adjoint(&mut amps);
            assert!((amps[0] - 1.0).norm() < 1e-12);
        }
    }
}
