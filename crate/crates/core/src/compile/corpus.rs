use super::dam_to_dqip;
use crate::dam::toy_protocols;
use crate::error::Result;
use crate::network::{register_name, NetworkGraph, Owner, RegisterLayout};
use crate::protocol::{
    Check, LocalOp, NodeCheck, ProtocolSpec, ProverStrategy, ProverTurn, Turn, VerificationPhase,
    VerifierStep,
};
use crate::qcore::Gate;

/// A protocol on a yes- and a no-instance with known values.
#[derive(Clone, Debug)]
pub struct CompileCorpusEntry {
    pub name: String,
    pub yes: ProtocolSpec,
    pub honest: ProverStrategy,
    pub no: ProtocolSpec,
    /// Optimal acceptance on `yes`, attained by `honest`.
    pub completeness: f64,
    /// Optimal acceptance on `no`.
    pub soundness: f64,
}

/// One-turn protocol on a 2-node path. Node 0 rotates its output qubit by
/// `angle`, after copying its message into it when `uses_message` is set;
/// node 1 demands a zero message. Honest acceptance is `cos^2(angle / 2)`,
/// which is also optimal for `angle <= pi / 2`.
pub fn tilted_spec(angle: f64, uses_message: bool) -> Result<(ProtocolSpec, ProverStrategy)> {
    let graph = NetworkGraph::path(2);
    let mut layout = RegisterLayout::new();
    layout.push("P", &[], 0, Owner::Prover);
    let out = layout.push("V", &[0], 1, Owner::Node(0));
    let m0 = layout.push("M", &[0], 1, Owner::Prover);
    let m1 = layout.push("M", &[1], 1, Owner::Prover);
    let (out, m0, m1) = (
        layout.register(out).start,
        layout.register(m0).start,
        layout.register(m1).start,
    );
    let mut steps = Vec::new();
    if uses_message {
        steps.push(VerifierStep::Gate(LocalOp::new(0, Gate::cnot(), vec![m0, out])));
    }
    steps.push(VerifierStep::Gate(LocalOp::new(0, Gate::ry(angle), vec![out])));
    let spec = ProtocolSpec {
        name: format!("tilted-{angle:.4}"),
        graph,
        turns: vec![Turn::Prover(ProverTurn {
            send: vec![register_name("M", &[0]), register_name("M", &[1])],
            replies: Vec::new(),
        })],
        verification: VerificationPhase {
            steps,
            broadcast: Vec::new(),
            checks: vec![
                NodeCheck {
                    node: 0,
                    check: Check::qubit_zero(out),
                },
                NodeCheck {
                    node: 1,
                    check: Check::qubit_zero(m1),
                },
            ],
            global_readout: false,
        },
        layout,
        vars: Vec::new(),
        initial: Vec::new(),
        communication: false,
        min_prover_qubits: 0,
    };
    spec.validate()?;
    let honest = ProverStrategy::trivial(&spec);
    Ok((spec, honest))
}

/// Rotation angle with `cos^2(angle / 2) = p`.
pub(crate) fn angle_for(p: f64) -> f64 {
    2.0 * p.sqrt().clamp(0.0, 1.0).acos()
}

/// Compiled classical toys plus quantum tilted protocols.
pub fn compile_corpus() -> Result<Vec<CompileCorpusEntry>> {
    let mut out = Vec::new();
    for e in toy_protocols()? {
        let (yes, honest, _) = dam_to_dqip(&e.protocol, &e.yes_instance)?;
        let (no, _, _) = dam_to_dqip(&e.protocol, &e.no_instance)?;
        out.push(CompileCorpusEntry {
            name: e.protocol.name.clone(),
            yes,
            honest,
            no,
            completeness: e.completeness,
            soundness: e.soundness,
        });
    }
    for c in [0.6, 0.75, 1.0] {
        let (yes, honest) = tilted_spec(angle_for(c), true)?;
        let s = 0.1;
        let (no, _) = tilted_spec(angle_for(s), false)?;
        out.push(CompileCorpusEntry {
            name: format!("tilted-{c}"),
            yes,
            honest,
            no,
            completeness: c,
            soundness: s,
        });
    }
    Ok(out)
}
