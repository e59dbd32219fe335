use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::ghz_state;
use crate::error::{Error, Result};
use crate::network::{register_name, spanning_tree, NetworkGraph, Owner, RegisterLayout, SpanningTreeLabels};
use crate::protocol::{
    accepted_reduced_state, Check, ClassicalVar, LocalOp, NodeCheck, ProtocolSpec, ProverOp,
    ProverResponse, ProverStrategy, ProverTurn, Turn, VarOwner, VerificationPhase, VerifierStep,
    VerifierTurn,
};
use crate::qcore::{Gate, QUBIT_CEILING};

/// Size and target quality of a GHZ certification run. `epsilon` and `delta`
/// only annotate reports: the number of copies sufficient for them depends
/// on an unspecified constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GhzProtocolParams {
    pub nodes: usize,
    /// Test copies; one more copy becomes the output.
    pub copies: usize,
    pub epsilon: f64,
    pub delta: f64,
    #[serde(default)]
    pub seed: u64,
}

impl GhzProtocolParams {
    pub fn validate(&self, graph: &NetworkGraph) -> Result<()> {
        if self.copies == 0 {
            return Err(Error::Config("at least one test copy is needed".into()));
        }
        for (name, x) in [("epsilon", self.epsilon), ("delta", self.delta)] {
            if !(x > 0.0 && x < 1.0) {
                return Err(Error::Config(format!("{name} = {x} outside (0, 1)")));
            }
        }
        if self.nodes != graph.node_count() {
            return Err(Error::Config(format!(
                "{} nodes requested on a {}-node graph",
                self.nodes,
                graph.node_count()
            )));
        }
        if self.nodes < 2 {
            return Err(Error::Validation("GHZ certification needs 2 or more nodes".into()));
        }
        if graph.distances_from(0).contains(&usize::MAX) {
            return Err(Error::Validation("the network is disconnected".into()));
        }
        Ok(())
    }
}

/// Registers, variables and schedule of the GHZ certification, reusable by
/// protocols that consume its output.
#[derive(Clone, Debug)]
pub(crate) struct Pghz {
    pub leader: usize,
    pub copies: usize,
    pub graph: NetworkGraph,
    pub tree: SpanningTreeLabels,
    /// `copy[u][i]`: node `u`'s qubit of copy `i`.
    pub copy: Vec<Vec<usize>>,
    /// Output qubit per node.
    pub out: Vec<usize>,
    pub vars: Vec<ClassicalVar>,
    tree_vars: Vec<Option<(usize, usize)>>,
    test_coins: Vec<usize>,
    target_coin: usize,
    test: Vec<Vec<usize>>,
    target: Vec<usize>,
    outcome: Vec<Vec<usize>>,
    parity: Vec<Vec<usize>>,
}

impl Pghz {
    /// Adds the copy and output registers to `layout`.
    pub fn new(graph: &NetworkGraph, copies: usize, layout: &mut RegisterLayout) -> Self {
        let n = graph.node_count();
        let leader = 0;
        let mut copy = Vec::with_capacity(n);
        let mut out = Vec::with_capacity(n);
        for u in 0..n {
            let id = layout.push("R", &[u], copies + 1, Owner::Prover);
            copy.push(layout.register(id).qubits().collect());
        }
        for u in 0..n {
            let id = layout.push("B", &[u], 1, Owner::Node(u));
            out.push(layout.register(id).start);
        }

        let mut vars = Vec::new();
        let mut var = |name: String, owner: usize, domain: u32| {
            vars.push(ClassicalVar {
                name,
                owner: VarOwner::Node(owner),
                domain,
            });
            vars.len() - 1
        };
        let nd = n as u32;
        let tree_vars: Vec<Option<(usize, usize)>> = (0..n)
            .map(|u| {
                (u != leader).then(|| (var(format!("parent[{u}]"), u, nd), var(format!("depth[{u}]"), u, nd)))
            })
            .collect();
        let test_coins: Vec<usize> = (0..copies).map(|j| var(format!("b_test[{j}]"), leader, 2)).collect();
        let target_coin = var("b_target".into(), leader, copies as u32 + 1);
        let mut test = vec![Vec::new(); n];
        let mut target = vec![0; n];
        for u in 0..n {
            if u == leader {
                test[u] = test_coins.clone();
                target[u] = target_coin;
            } else {
                test[u] = (0..copies).map(|j| var(format!("b_test[{j}]@{u}"), u, 2)).collect();
                target[u] = var(format!("b_target@{u}"), u, copies as u32 + 1);
            }
        }
        let outcome = (0..n)
            .map(|u| (0..=copies).map(|i| var(format!("o[{u}][{i}]"), u, 2)).collect())
            .collect();
        let parity = (0..n)
            .map(|u| {
                if u == leader {
                    Vec::new()
                } else {
                    (0..copies).map(|j| var(format!("s[{u}][{j}]"), u, 2)).collect()
                }
            })
            .collect();
        Pghz {
            leader,
            copies,
            graph: graph.clone(),
            tree: spanning_tree(graph, leader),
            copy,
            out,
            vars,
            tree_vars,
            test_coins,
            target_coin,
            test,
            target,
            outcome,
            parity,
        }
    }

    fn n(&self) -> usize {
        self.graph.node_count()
    }

    fn non_leaders(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n()).filter(move |&u| u != self.leader)
    }

    /// Copy holding the `j`-th test when copy `target` is the output.
    fn tested_copy(j: usize, target: usize) -> usize {
        if j < target {
            j
        } else {
            j + 1
        }
    }

    /// Outcome bit of node `u` in test `j`.
    fn observed(&self, u: usize, j: usize) -> Check {
        Check::or(
            (0..=self.copies)
                .map(|t| {
                    Check::and(vec![
                        Check::var_eq(self.target[u], t as u32),
                        Check::bit(self.outcome[u][Self::tested_copy(j, t)]),
                    ])
                })
                .collect(),
        )
    }

    /// Node `u` measures copy `i` in X. The leader uses X in the parity test
    /// and Z in the equality test; everyone else does the opposite.
    fn measures_x(&self, u: usize, i: usize) -> Check {
        let x_bit = u32::from(u != self.leader);
        Check::or(
            (0..=self.copies)
                .filter(|&t| t != i)
                .map(|t| {
                    let j = if i < t { i } else { i - 1 };
                    Check::and(vec![
                        Check::var_eq(self.target[u], t as u32),
                        Check::var_eq(self.test[u][j], x_bit),
                    ])
                })
                .collect(),
        )
    }

    fn copy_registers(&self) -> Vec<String> {
        (0..self.n()).map(|u| register_name("R", &[u])).collect()
    }

    pub fn turns(&self) -> Vec<Turn> {
        let n = self.n();
        let tree_replies = self
            .tree_vars
            .iter()
            .flatten()
            .flat_map(|&(p, d)| [p, d])
            .collect();
        let mut coins: Vec<usize> = self.test_coins.clone();
        coins.push(self.target_coin);
        let echo = self
            .non_leaders()
            .flat_map(|u| {
                let mut v = self.test[u].clone();
                v.push(self.target[u]);
                v
            })
            .collect();

        let mut steps = Vec::new();
        for u in 0..n {
            for i in 0..=self.copies {
                let q = self.copy[u][i];
                steps.push(VerifierStep::Gate(
                    LocalOp::new(u, Gate::swap(), vec![q, self.out[u]])
                        .when(Check::var_eq(self.target[u], i as u32)),
                ));
                steps.push(VerifierStep::Gate(
                    LocalOp::new(u, Gate::h(), vec![q]).when(self.measures_x(u, i)),
                ));
                steps.push(VerifierStep::Measure {
                    node: u,
                    qubit: q,
                    var: self.outcome[u][i],
                });
            }
            if u != self.leader {
                steps.push(VerifierStep::Gate(LocalOp::new(u, Gate::h(), vec![self.out[u]])));
            }
        }

        vec![
            Turn::Prover(ProverTurn {
                send: self.copy_registers(),
                replies: tree_replies,
            }),
            Turn::Verifier(VerifierTurn {
                steps: coins.iter().map(|&var| VerifierStep::Coin { var }).collect(),
                send: Vec::new(),
                reveal: coins,
            }),
            Turn::Prover(ProverTurn {
                send: Vec::new(),
                replies: echo,
            }),
            Turn::Verifier(VerifierTurn {
                steps,
                send: Vec::new(),
                reveal: self.outcome.iter().flatten().copied().collect(),
            }),
            Turn::Prover(ProverTurn {
                send: Vec::new(),
                replies: self.non_leaders().flat_map(|u| self.parity[u].clone()).collect(),
            }),
        ]
    }

    /// Local verdict of every node on the classical record.
    pub fn checks(&self) -> Vec<Check> {
        let n = self.n();
        let width = self.copies as u32 + 1;
        (0..n)
            .map(|u| {
                let nbrs = self.graph.neighbors(u);
                let mut parts = Vec::new();
                // the leader's choices reached everyone
                for &v in nbrs {
                    for j in 0..self.copies {
                        parts.push(Check::vars_equal(self.test[u][j], self.test[v][j], 2));
                    }
                    parts.push(Check::vars_equal(self.target[u], self.target[v], width));
                }
                if let Some((parent, depth)) = self.tree_vars[u] {
                    let mut options = Vec::new();
                    for &p in nbrs {
                        for d in 1..n {
                            let above = match self.tree_vars[p] {
                                None => Check::Const(d == 1),
                                Some((_, dp)) => Check::var_eq(dp, d as u32 - 1),
                            };
                            options.push(Check::and(vec![
                                Check::var_eq(parent, p as u32),
                                Check::var_eq(depth, d as u32),
                                above,
                            ]));
                        }
                    }
                    parts.push(Check::or(options));
                }
                for j in 0..self.copies {
                    let mut sum = vec![self.observed(u, j)];
                    for &v in nbrs {
                        if let Some((pv, _)) = self.tree_vars[v] {
                            sum.push(Check::and(vec![
                                Check::var_eq(pv, u as u32),
                                Check::bit(self.parity[v][j]),
                            ]));
                        }
                    }
                    let total = Check::xor(sum);
                    let parity_ok = if u == self.leader {
                        Check::not(total)
                    } else {
                        Check::equal(Check::bit(self.parity[u][j]), total)
                    };
                    parts.push(Check::implies(Check::var_eq(self.test[u][j], 0), parity_ok));
                    let agree = Check::and(
                        nbrs.iter()
                            .map(|&v| Check::equal(self.observed(u, j), self.observed(v, j)))
                            .collect(),
                    );
                    parts.push(Check::implies(Check::var_eq(self.test[u][j], 1), agree));
                }
                Check::and(parts)
            })
            .collect()
    }

    /// Honest move `ordinal`, reading disclosed values through `known`.
    pub fn honest(&self, ordinal: usize, known: &HashMap<usize, u32>) -> ProverResponse {
        match ordinal {
            0 => {
                let mut ops = Vec::new();
                for i in 0..=self.copies {
                    for u in 0..self.n() {
                        ops.push(ProverOp::gate(Gate::h(), vec![self.copy[u][i]]));
                    }
                    for u in self.non_leaders() {
                        ops.push(ProverOp::gate(
                            Gate::cz(),
                            vec![self.copy[self.leader][i], self.copy[u][i]],
                        ));
                    }
                }
                let replies = self
                    .non_leaders()
                    .flat_map(|u| {
                        [
                            self.tree.parent[u].expect("connected network") as u32,
                            self.tree.distance[u] as u32,
                        ]
                    })
                    .collect();
                ProverResponse { ops, replies }
            }
            1 => {
                let mut replies = Vec::new();
                for _ in self.non_leaders() {
                    replies.extend(self.test_coins.iter().map(|v| known[v]));
                    replies.push(known[&self.target_coin]);
                }
                ProverResponse {
                    ops: Vec::new(),
                    replies,
                }
            }
            _ => {
                let t = known[&self.target_coin] as usize;
                let mut replies = Vec::new();
                for u in self.non_leaders() {
                    for j in 0..self.copies {
                        let c = Self::tested_copy(j, t);
                        let s = self
                            .tree
                            .subtree(u)
                            .iter()
                            .fold(0, |acc, &w| acc ^ known[&self.outcome[w][c]]);
                        replies.push(s);
                    }
                }
                ProverResponse {
                    ops: Vec::new(),
                    replies,
                }
            }
        }
    }
}

/// The five-turn GHZ certification on `graph`, with its honest prover.
/// On acceptance the `B` registers carry a GHZ state.
pub fn build_pghz(
    graph: &NetworkGraph,
    params: &GhzProtocolParams,
) -> Result<(ProtocolSpec, ProverStrategy)> {
    params.validate(graph)?;
    let mut layout = RegisterLayout::new();
    layout.push("P", &[], 0, Owner::Prover);
    let g = Pghz::new(graph, params.copies, &mut layout);
    layout.check_ceiling(QUBIT_CEILING)?;
    let spec = ProtocolSpec {
        name: format!("pghz-n{}-c{}", params.nodes, params.copies),
        graph: graph.clone(),
        layout,
        vars: g.vars.clone(),
        turns: g.turns(),
        verification: VerificationPhase {
            steps: Vec::new(),
            broadcast: Vec::new(),
            checks: g
                .checks()
                .into_iter()
                .enumerate()
                .map(|(node, check)| NodeCheck { node, check })
                .collect(),
            global_readout: false,
        },
        initial: Vec::new(),
        communication: false,
        min_prover_qubits: 0,
    };
    let info = spec.validate()?;
    let honest = ProverStrategy::from_fn(&spec, &info, |ord, values| {
        let known = info.views[ord].iter().copied().zip(values.iter().copied()).collect();
        g.honest(ord, &known)
    });
    Ok((spec, honest))
}

/// Output qubits `B[0], B[1], ...` of a GHZ certification spec.
pub fn ghz_output_qubits(spec: &ProtocolSpec) -> Result<Vec<usize>> {
    (0..spec.graph.node_count())
        .map(|u| {
            let id = spec.layout.id(&register_name("B", &[u]))?;
            Ok(spec.layout.register(id).start)
        })
        .collect()
}

/// Acceptance probability and `<GHZ|rho|GHZ>` of the output conditioned on
/// acceptance.
pub fn ghz_output_fidelity(spec: &ProtocolSpec, strategy: &ProverStrategy) -> Result<(f64, f64)> {
    let out = ghz_output_qubits(spec)?;
    let (p, rho) = accepted_reduced_state(spec, strategy, &out)?;
    let target = ghz_state(out.len())?;
    let v = nalgebra::DVector::from_column_slice(target.amplitudes());
    Ok((p, (v.adjoint() * rho.matrix() * &v)[(0, 0)].re))
}
