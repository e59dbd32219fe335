//! Distributed closeness testing: a SWAP test on two network-distributed
//! states, controlled by a GHZ state the prover must first certify.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ghz::{ghz_state, GhzProtocolParams, Pghz};
use crate::network::{register_name, NetworkGraph, Owner, RegisterLayout};
use crate::protocol::{
    Check, InitialState, LocalOp, NodeCheck, ProtocolSpec, ProverOp, ProverResponse,
    ProverStrategy, ProverTurn, Turn, VerificationPhase, VerifierStep, VerifierTurn,
};
use crate::prover::{seesaw_optimize_from, OptimizerConfig};
use crate::qcore::{haar_random_state, Gate, QuantumState, QUBIT_CEILING};

/// Two states split across the nodes: node `u` holds `qubits_per_node[u]`
/// qubits of each, node 0 the lowest ones.
#[derive(Clone, Debug, PartialEq)]
pub struct DqctInstance {
    pub graph: NetworkGraph,
    pub qubits_per_node: Vec<usize>,
    pub psi: QuantumState,
    pub phi: QuantumState,
}

impl DqctInstance {
    pub fn new(
        graph: NetworkGraph,
        qubits_per_node: Vec<usize>,
        psi: QuantumState,
        phi: QuantumState,
    ) -> Result<Self> {
        if qubits_per_node.len() != graph.node_count() {
            return Err(Error::Config(format!(
                "{} qubit counts for {} nodes",
                qubits_per_node.len(),
                graph.node_count()
            )));
        }
        if qubits_per_node.contains(&0) {
            return Err(Error::Config("every node needs at least one input qubit".into()));
        }
        let total: usize = qubits_per_node.iter().sum();
        if psi.num_qubits() != total || phi.num_qubits() != total {
            return Err(Error::Layout(format!(
                "inputs on {} and {} qubits, expected {total}",
                psi.num_qubits(),
                phi.num_qubits()
            )));
        }
        Ok(DqctInstance {
            graph,
            qubits_per_node,
            psi,
            phi,
        })
    }

    /// Independent Haar-random inputs.
    pub fn random(graph: NetworkGraph, qubits_per_node: Vec<usize>, seed: u64) -> Result<Self> {
        let total = qubits_per_node.iter().sum();
        let psi = haar_random_state(total, seed.wrapping_mul(2))?;
        let phi = haar_random_state(total, seed.wrapping_mul(2).wrapping_add(1))?;
        Self::new(graph, qubits_per_node, psi, phi)
    }

    /// `|<psi|phi>|^2`.
    pub fn overlap(&self) -> f64 {
        self.psi.inner(&self.phi).map(|z| z.norm_sqr()).unwrap_or(0.0)
    }

    /// SWAP-test acceptance `1/2 + |<psi|phi>|^2 / 2`.
    pub fn swap_test_value(&self) -> f64 {
        0.5 + 0.5 * self.overlap()
    }

    /// Trace distance of the two pure inputs.
    pub fn distance(&self) -> f64 {
        (1.0 - self.overlap()).max(0.0).sqrt()
    }
}

/// Upper bound on the input distance implied by acceptance `1 - 1/z`:
/// `sqrt(2/z) + epsilon`.
pub fn closeness_bound(acceptance: f64, epsilon: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&acceptance) {
        return Err(Error::Validation(format!("acceptance {acceptance} outside [0, 1]")));
    }
    if !(epsilon >= 0.0) {
        return Err(Error::Validation(format!("epsilon {epsilon} is negative")));
    }
    Ok((2.0 * (1.0 - acceptance)).sqrt() + epsilon)
}

/// Input and controlled-swap registers shared by both variants.
struct SwapStage {
    leader: usize,
    out: Vec<usize>,
    first: Vec<Vec<usize>>,
    second: Vec<Vec<usize>>,
    flag: usize,
}

impl SwapStage {
    fn new(instance: &DqctInstance, out: Vec<usize>, layout: &mut RegisterLayout) -> Self {
        let n = instance.graph.node_count();
        let mut reg = |base: &str, u: usize, len: usize| {
            let id = layout.push(base, &[u], len, Owner::Node(u));
            layout.register(id).qubits().collect::<Vec<_>>()
        };
        let first = (0..n).map(|u| reg("R1", u, instance.qubits_per_node[u])).collect();
        let second = (0..n).map(|u| reg("R2", u, instance.qubits_per_node[u])).collect();
        let leader = 0;
        let flag = reg("Bp", leader, 1)[0];
        SwapStage {
            leader,
            out,
            first,
            second,
            flag,
        }
    }

    fn initial(&self, instance: &DqctInstance) -> Vec<InitialState> {
        vec![
            InitialState {
                qubits: self.first.concat(),
                amplitudes: instance.psi.amplitudes().to_vec(),
            },
            InitialState {
                qubits: self.second.concat(),
                amplitudes: instance.phi.amplitudes().to_vec(),
            },
        ]
    }

    /// Leader copies its control bit, then every node swaps its halves under its control bit.
    fn steps(&self) -> Vec<VerifierStep> {
        let mut steps = vec![VerifierStep::Gate(LocalOp::new(
            self.leader,
            Gate::cnot(),
            vec![self.out[self.leader], self.flag],
        ))];
        for (u, (a, b)) in self.first.iter().zip(&self.second).enumerate() {
            for (&x, &y) in a.iter().zip(b) {
                steps.push(VerifierStep::Gate(LocalOp::new(
                    u,
                    Gate::cswap(),
                    vec![self.out[u], x, y],
                )));
            }
        }
        steps
    }

    fn controls(&self) -> Vec<String> {
        (0..self.out.len()).map(|u| register_name("B", &[u])).collect()
    }

    fn verification(&self, mut checks: Vec<Check>) -> VerificationPhase {
        for (u, c) in checks.iter_mut().enumerate() {
            let mut parts = vec![std::mem::replace(c, Check::Const(true)), Check::qubit_zero(self.out[u])];
            if u == self.leader {
                parts.push(Check::qubit_zero(self.flag));
            }
            *c = Check::and(parts);
        }
        VerificationPhase {
            steps: vec![
                VerifierStep::Gate(LocalOp::new(
                    self.leader,
                    Gate::cnot(),
                    vec![self.flag, self.out[self.leader]],
                )),
                VerifierStep::Gate(LocalOp::new(self.leader, Gate::h(), vec![self.flag])),
            ],
            broadcast: Vec::new(),
            checks: checks
                .into_iter()
                .enumerate()
                .map(|(node, check)| NodeCheck { node, check })
                .collect(),
            global_readout: false,
        }
    }

    /// Uncomputes the control register into the leader's qubit.
    fn fan_in(&self) -> Vec<ProverOp> {
        (0..self.out.len())
            .filter(|&v| v != self.leader)
            .map(|v| ProverOp::gate(Gate::cnot(), vec![self.out[self.leader], self.out[v]]))
            .collect()
    }
}

/// Closeness test whose control GHZ state is certified in the same five turns.
pub fn build_pdqct(
    instance: &DqctInstance,
    ghz: &GhzProtocolParams,
) -> Result<(ProtocolSpec, ProverStrategy)> {
    ghz.validate(&instance.graph)?;
    let mut layout = RegisterLayout::new();
    layout.push("P", &[], 0, Owner::Prover);
    let g = Pghz::new(&instance.graph, ghz.copies, &mut layout);
    let stage = SwapStage::new(instance, g.out.clone(), &mut layout);
    layout.check_ceiling(QUBIT_CEILING)?;

    let mut turns = g.turns();
    if let Turn::Verifier(v) = &mut turns[3] {
        v.steps.extend(stage.steps());
        v.send = stage.controls();
    }
    if let Turn::Prover(p) = &mut turns[4] {
        p.send = stage.controls();
    }
    let spec = ProtocolSpec {
        name: format!("pdqct-n{}-c{}", instance.graph.node_count(), ghz.copies),
        graph: instance.graph.clone(),
        layout,
        vars: g.vars.clone(),
        turns,
        verification: stage.verification(g.checks()),
        initial: stage.initial(instance),
        communication: false,
        min_prover_qubits: 0,
    };
    let info = spec.validate()?;
    let honest = ProverStrategy::from_fn(&spec, &info, |ord, values| {
        let known = info.views[ord].iter().copied().zip(values.iter().copied()).collect();
        let mut r = g.honest(ord, &known);
        if ord == 2 {
            r.ops.extend(stage.fan_in());
        }
        r
    });
    Ok((spec, honest))
}

/// Two-turn closeness test with the control GHZ state handed to the nodes
/// by the verifier, isolating the SWAP-test stage.
pub fn build_ideal_pdqct(instance: &DqctInstance) -> Result<(ProtocolSpec, ProverStrategy)> {
    let n = instance.graph.node_count();
    let mut layout = RegisterLayout::new();
    layout.push("P", &[], 0, Owner::Prover);
    let out: Vec<usize> = (0..n)
        .map(|u| {
            let id = layout.push("B", &[u], 1, Owner::Node(u));
            layout.register(id).start
        })
        .collect();
    let stage = SwapStage::new(instance, out.clone(), &mut layout);
    layout.check_ceiling(QUBIT_CEILING)?;
    let mut initial = vec![InitialState {
        qubits: out,
        amplitudes: ghz_state(n)?.amplitudes().to_vec(),
    }];
    initial.extend(stage.initial(instance));
    let spec = ProtocolSpec {
        name: format!("pdqct-ideal-n{n}"),
        graph: instance.graph.clone(),
        layout,
        vars: Vec::new(),
        turns: vec![
            Turn::Verifier(VerifierTurn {
                steps: stage.steps(),
                send: stage.controls(),
                reveal: Vec::new(),
            }),
            Turn::Prover(ProverTurn {
                send: stage.controls(),
                replies: Vec::new(),
            }),
        ],
        verification: stage.verification(vec![Check::Const(true); n]),
        initial,
        communication: false,
        min_prover_qubits: 0,
    };
    spec.validate()?;
    let honest = ProverStrategy {
        moves: vec![crate::protocol::ProverMove::uniform(ProverResponse::ops(stage.fan_in()))],
    };
    Ok((spec, honest))
}

/// Outcome of an adversarial search against the closeness test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DqctSoundness {
    pub best_acceptance: f64,
    pub honest_acceptance: f64,
    /// `1/2 + |<psi|phi>|^2 / 2 + sqrt(2 epsilon)`.
    pub ceiling: f64,
    pub distance: f64,
    /// [`closeness_bound`] at the best acceptance found.
    pub bound: f64,
    pub epsilon: f64,
    /// `distance <= bound + 1e-6`.
    pub implication_holds: bool,
}

/// Runs the see-saw search from the honest prover and Haar-random starts.
/// With `ghz = None` the control state is ideal and `epsilon = 0`.
pub fn soundness_probe(
    instance: &DqctInstance,
    ghz: Option<&GhzProtocolParams>,
    config: &OptimizerConfig,
) -> Result<DqctSoundness> {
    let (spec, honest, epsilon) = match ghz {
        Some(p) => {
            let (s, h) = build_pdqct(instance, p)?;
            (s, h, p.epsilon)
        }
        None => {
            let (s, h) = build_ideal_pdqct(instance)?;
            (s, h, 0.0)
        }
    };
    let honest_acceptance = crate::protocol::acceptance_probability(&spec, &honest)?;
    let trace = seesaw_optimize_from(&spec, config, Some(&honest))?;
    let best = trace.best_acceptance.clamp(0.0, 1.0);
    let bound = closeness_bound(best, epsilon)?;
    let distance = instance.distance();
    Ok(DqctSoundness {
        best_acceptance: trace.best_acceptance,
        honest_acceptance,
        ceiling: instance.swap_test_value() + (2.0 * epsilon).sqrt(),
        distance,
        bound,
        epsilon,
        implication_holds: distance <= bound + 1e-6,
    })
}
