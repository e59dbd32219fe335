use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::expr::{Atom, Check};
use crate::error::{Error, Result};
use crate::network::{NetworkGraph, Owner, RegisterLayout};
use crate::qcore::{check_targets, Gate, C64, NORM_TOL};

/// Holder of a classical variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarOwner {
    Node(usize),
    /// Known to every node (shared randomness).
    Shared,
}

/// A classical value produced during the run: a coin, a measurement outcome
/// or a reply from the prover. Values range over `0..domain`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassicalVar {
    pub name: String,
    pub owner: VarOwner,
    pub domain: u32,
}

/// A gate applied by one node, optionally quantum-controlled and optionally
/// conditioned on classical values the node knows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalOp {
    pub node: usize,
    pub gate: Gate,
    pub targets: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub controls: Vec<(usize, bool)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition: Option<Check>,
}

impl LocalOp {
    pub fn new(node: usize, gate: Gate, targets: Vec<usize>) -> Self {
        LocalOp {
            node,
            gate,
            targets,
            controls: Vec::new(),
            condition: None,
        }
    }

    pub fn controlled(mut self, controls: Vec<(usize, bool)>) -> Self {
        self.controls = controls;
        self
    }

    pub fn when(mut self, condition: Check) -> Self {
        self.condition = Some(condition);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerifierStep {
    Gate(LocalOp),
    /// Computational-basis measurement of one qubit into a binary variable.
    Measure { node: usize, qubit: usize, var: usize },
    /// Projective measurement of the Z-parity of several qubits.
    MeasureParity {
        node: usize,
        qubits: Vec<usize>,
        var: usize,
    },
    /// Uniform draw of a classical variable.
    Coin { var: usize },
    /// Exchanges the contents of two equally sized registers held by
    /// adjacent nodes (the `W[u,v]` swap).
    Exchange { a: String, b: String },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ProverTurn {
    /// Registers handed to their home nodes at the end of the turn.
    #[serde(default)]
    pub send: Vec<String>,
    /// Classical variables the prover sets in this turn.
    #[serde(default)]
    pub replies: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VerifierTurn {
    #[serde(default)]
    pub steps: Vec<VerifierStep>,
    /// Registers returned to the prover at the end of the turn.
    #[serde(default)]
    pub send: Vec<String>,
    /// Classical variables disclosed to the prover.
    #[serde(default)]
    pub reveal: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Turn {
    Prover(ProverTurn),
    Verifier(VerifierTurn),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeCheck {
    pub node: usize,
    pub check: Check,
}

/// Final local computation, exchange and readout. Each node accepts iff its
/// check holds on the computational-basis outcomes of the qubits it reads.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VerificationPhase {
    #[serde(default)]
    pub steps: Vec<VerifierStep>,
    /// `(node, qubit)`: the node announces the outcome of a qubit it holds.
    #[serde(default)]
    pub broadcast: Vec<(usize, usize)>,
    pub checks: Vec<NodeCheck>,
    /// Lets checks read every node's data; models a convergecast along a
    /// spanning tree.
    #[serde(default)]
    pub global_readout: bool,
}

/// Product input placed on `qubits` before the first turn.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialState {
    pub qubits: Vec<usize>,
    pub amplitudes: Vec<C64>,
}

/// A complete interaction script.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSpec {
    pub name: String,
    pub graph: NetworkGraph,
    pub layout: RegisterLayout,
    #[serde(default)]
    pub vars: Vec<ClassicalVar>,
    pub turns: Vec<Turn>,
    pub verification: VerificationPhase,
    #[serde(default)]
    pub initial: Vec<InitialState>,
    /// Allows node-to-node exchange before the verification phase.
    #[serde(default)]
    pub communication: bool,
    /// Private prover qubits the honest strategy relies on.
    #[serde(default)]
    pub min_prover_qubits: usize,
}

/// Static facts derived while validating a spec.
#[derive(Clone, Debug, PartialEq)]
pub struct SpecInfo {
    /// Turn index of each prover turn.
    pub prover_turns: Vec<usize>,
    /// Qubits the prover holds while acting in each prover turn.
    pub held: Vec<Vec<usize>>,
    /// Qubits the prover hands over in each prover turn.
    pub sent: Vec<Vec<usize>>,
    /// Variables disclosed before each prover turn, in disclosure order.
    pub views: Vec<Vec<usize>>,
    /// Number of distinct views per prover turn.
    pub view_counts: Vec<usize>,
    /// Holder of every qubit at the end of the run.
    pub final_owner: Vec<Owner>,
    /// Qubits read by the checks, sorted.
    pub check_qubits: Vec<usize>,
}

impl SpecInfo {
    /// Mixed-radix index of the view formed by `values` (first var lowest).
    pub fn view_index(&self, spec: &ProtocolSpec, ordinal: usize, values: &[u32]) -> usize {
        let mut idx = 0;
        let mut radix = 1;
        for (k, &var) in self.views[ordinal].iter().enumerate() {
            idx += values[k] as usize * radix;
            radix *= spec.vars[var].domain as usize;
        }
        idx
    }

    /// Inverse of [`SpecInfo::view_index`].
    pub fn view_values(&self, spec: &ProtocolSpec, ordinal: usize, mut index: usize) -> Vec<u32> {
        self.views[ordinal]
            .iter()
            .map(|&var| {
                let d = spec.vars[var].domain as usize;
                let v = (index % d) as u32;
                index /= d;
                v
            })
            .collect()
    }

    /// True when the prover's qubits are still untouched at this turn.
    pub fn is_fresh(&self, spec: &ProtocolSpec, ordinal: usize) -> bool {
        self.prover_turns[ordinal] == 0
            && !spec
                .initial
                .iter()
                .any(|s| s.qubits.iter().any(|q| self.held[ordinal].contains(q)))
    }
}

fn turn_label(i: Option<usize>) -> String {
    match i {
        Some(i) => format!("{}", i + 1),
        None => "verification".into(),
    }
}

struct Checker<'a> {
    spec: &'a ProtocolSpec,
    qubit_reg: Vec<usize>,
    owners: Vec<Owner>,
    assigned: Vec<bool>,
    revealed: Vec<usize>,
}

impl<'a> Checker<'a> {
    fn err(&self, turn: Option<usize>, detail: String) -> Error {
        Error::protocol(turn_label(turn), detail)
    }

    fn holder(&self, q: usize) -> Owner {
        self.owners[self.qubit_reg[q]]
    }

    fn reg_name_of(&self, q: usize) -> String {
        self.spec.layout.register(self.qubit_reg[q]).name()
    }

    fn require_held(&self, turn: Option<usize>, node: usize, qubits: &[usize]) -> Result<()> {
        for &q in qubits {
            if q >= self.qubit_reg.len() {
                return Err(self.err(turn, format!("qubit {q} outside the layout")));
            }
            if self.holder(q) != Owner::Node(node) {
                return Err(self.err(
                    turn,
                    format!(
                        "node {node} acts on register {} held by {:?}",
                        self.reg_name_of(q),
                        self.holder(q)
                    ),
                ));
            }
        }
        Ok(())
    }

    fn knows(&self, node: usize, var: usize) -> bool {
        match self.spec.vars[var].owner {
            VarOwner::Shared => true,
            VarOwner::Node(u) => u == node,
        }
    }

    fn require_var(&self, turn: Option<usize>, var: usize) -> Result<()> {
        if var >= self.spec.vars.len() {
            return Err(self.err(turn, format!("unknown variable {var}")));
        }
        Ok(())
    }

    fn check_condition(&self, turn: Option<usize>, node: usize, cond: &Check) -> Result<()> {
        for a in cond.atoms() {
            match *a {
                Atom::Qubit(_) => {
                    return Err(self.err(turn, "classical conditions cannot read qubits".into()))
                }
                Atom::Var { var, .. } => {
                    self.require_var(turn, var)?;
                    if !self.assigned[var] {
                        return Err(self.err(
                            turn,
                            format!("variable {} used before it is set", self.spec.vars[var].name),
                        ));
                    }
                    if !self.knows(node, var) {
                        return Err(self.err(
                            turn,
                            format!("node {node} cannot read variable {}", self.spec.vars[var].name),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    fn assign(&mut self, turn: Option<usize>, var: usize) -> Result<()> {
        self.require_var(turn, var)?;
        if self.assigned[var] {
            return Err(self.err(
                turn,
                format!("variable {} assigned twice", self.spec.vars[var].name),
            ));
        }
        self.assigned[var] = true;
        Ok(())
    }

    fn own_binary_var(&self, turn: Option<usize>, node: usize, var: usize) -> Result<()> {
        self.require_var(turn, var)?;
        let v = &self.spec.vars[var];
        if v.owner != VarOwner::Node(node) || v.domain != 2 {
            return Err(self.err(
                turn,
                format!("outcome variable {} must be a bit owned by node {node}", v.name),
            ));
        }
        Ok(())
    }

    fn step(&mut self, turn: Option<usize>, step: &VerifierStep, in_verification: bool) -> Result<()> {
        let graph = &self.spec.graph;
        match step {
            VerifierStep::Gate(op) => {
                if op.node >= graph.node_count() {
                    return Err(self.err(turn, format!("unknown node {}", op.node)));
                }
                if op.gate.arity() != op.targets.len() {
                    return Err(Error::Layout(format!(
                        "gate of arity {} on {} targets",
                        op.gate.arity(),
                        op.targets.len()
                    )));
                }
                let mut all = op.targets.clone();
                all.extend(op.controls.iter().map(|c| c.0));
                check_targets(&all, self.spec.layout.total_qubits())?;
                self.require_held(turn, op.node, &all)?;
                if let Some(c) = &op.condition {
                    self.check_condition(turn, op.node, c)?;
                }
            }
            VerifierStep::Measure { node, qubit, var } => {
                self.require_held(turn, *node, &[*qubit])?;
                self.own_binary_var(turn, *node, *var)?;
                self.assign(turn, *var)?;
            }
            VerifierStep::MeasureParity { node, qubits, var } => {
                check_targets(qubits, self.spec.layout.total_qubits())?;
                let remote_ok = in_verification || self.spec.communication;
                for &q in qubits {
                    let ok = match self.holder(q) {
                        Owner::Node(v) if v == *node => true,
                        Owner::Node(v) => remote_ok && graph.has_edge(*node, v),
                        Owner::Prover => false,
                    };
                    if !ok {
                        return Err(self.err(
                            turn,
                            format!(
                                "node {node} cannot measure register {} held by {:?}",
                                self.reg_name_of(q),
                                self.holder(q)
                            ),
                        ));
                    }
                }
                self.own_binary_var(turn, *node, *var)?;
                self.assign(turn, *var)?;
            }
            VerifierStep::Coin { var } => {
                self.require_var(turn, *var)?;
                if self.spec.vars[*var].domain == 0 {
                    return Err(self.err(turn, "coin with empty domain".into()));
                }
                self.assign(turn, *var)?;
            }
            VerifierStep::Exchange { a, b } => {
                if !in_verification && !self.spec.communication {
                    return Err(self.err(
                        turn,
                        "register exchange before the verification phase needs communication"
                            .into(),
                    ));
                }
                let ra = self.spec.layout.id(a)?;
                let rb = self.spec.layout.id(b)?;
                let (la, lb) = (
                    self.spec.layout.register(ra).len,
                    self.spec.layout.register(rb).len,
                );
                if la != lb {
                    return Err(self.err(turn, format!("cannot exchange {a} and {b}: sizes differ")));
                }
                match (self.owners[ra], self.owners[rb]) {
                    (Owner::Node(u), Owner::Node(v)) if u == v || graph.has_edge(u, v) => {}
                    (x, y) => {
                        return Err(self.err(
                            turn,
                            format!("cannot exchange {a} ({x:?}) and {b} ({y:?})"),
                        ))
                    }
                }
            }
        }
        Ok(())
    }
}

impl ProtocolSpec {
    pub fn num_turns(&self) -> usize {
        self.turns.len()
    }

    pub fn num_prover_turns(&self) -> usize {
        self.turns
            .iter()
            .filter(|t| matches!(t, Turn::Prover(_)))
            .count()
    }

    pub fn total_qubits(&self) -> usize {
        self.layout.total_qubits()
    }

    pub fn prover_qubits(&self) -> usize {
        self.layout.find("P").map(|i| self.layout.register(i).len).unwrap_or(0)
    }

    /// Index of a variable by name.
    pub fn var(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    /// Checks the interaction model and returns derived facts.
    pub fn validate(&self) -> Result<SpecInfo> {
        let layout = &self.layout;
        let n = self.graph.node_count();
        let total = layout.total_qubits();
        let mut qubit_reg = vec![0; total];
        for (i, r) in layout.registers().iter().enumerate() {
            for q in r.qubits() {
                qubit_reg[q] = i;
            }
        }
        for r in layout.registers() {
            if let Owner::Node(u) = r.owner {
                if u >= n {
                    return Err(Error::Layout(format!("register {} owned by unknown node", r.name())));
                }
            }
        }
        let k = self.turns.len();
        for (i, t) in self.turns.iter().enumerate() {
            let want_prover = (k % 2 == 1) == (i % 2 == 0);
            let is_prover = matches!(t, Turn::Prover(_));
            if want_prover != is_prover {
                return Err(Error::protocol(
                    turn_label(Some(i)),
                    format!(
                        "a {k}-turn protocol needs a {} turn here",
                        if want_prover { "prover" } else { "verifier" }
                    ),
                ));
            }
        }
        let mut used = BTreeSet::new();
        for s in &self.initial {
            check_targets(&s.qubits, total)?;
            if s.amplitudes.len() != 1usize << s.qubits.len() {
                return Err(Error::Validation("initial state has the wrong length".into()));
            }
            let norm: f64 = s.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > NORM_TOL {
                return Err(Error::Validation(format!("initial state has norm {norm}")));
            }
            for &q in &s.qubits {
                if !used.insert(q) {
                    return Err(Error::Layout(format!("qubit {q} initialized twice")));
                }
            }
        }

        let mut ck = Checker {
            spec: self,
            qubit_reg,
            owners: layout.registers().iter().map(|r| r.owner).collect(),
            assigned: vec![false; self.vars.len()],
            revealed: Vec::new(),
        };
        let mut info = SpecInfo {
            prover_turns: Vec::new(),
            held: Vec::new(),
            sent: Vec::new(),
            views: Vec::new(),
            view_counts: Vec::new(),
            final_owner: Vec::new(),
            check_qubits: Vec::new(),
        };
        for (i, t) in self.turns.iter().enumerate() {
            let turn = Some(i);
            match t {
                Turn::Prover(p) => {
                    let held: Vec<usize> = (0..total)
                        .filter(|&q| ck.holder(q) == Owner::Prover)
                        .collect();
                    let mut sent = Vec::new();
                    for name in &p.send {
                        let id = layout.id(name)?;
                        let r = layout.register(id);
                        if ck.owners[id] != Owner::Prover {
                            return Err(ck.err(turn, format!("prover sends {name} which it does not hold")));
                        }
                        let home = *r.nodes.first().ok_or_else(|| {
                            ck.err(turn, format!("register {name} has no home node"))
                        })?;
                        ck.owners[id] = Owner::Node(home);
                        sent.extend(r.qubits());
                    }
                    for &var in &p.replies {
                        ck.require_var(turn, var)?;
                        if !matches!(self.vars[var].owner, VarOwner::Node(_)) {
                            return Err(ck.err(turn, "prover replies must go to a node".into()));
                        }
                        ck.assign(turn, var)?;
                    }
                    let view = ck.revealed.clone();
                    let count = view
                        .iter()
                        .map(|&v| self.vars[v].domain as usize)
                        .product::<usize>();
                    info.prover_turns.push(i);
                    info.held.push(held);
                    info.sent.push(sent);
                    info.views.push(view);
                    info.view_counts.push(count);
                }
                Turn::Verifier(v) => {
                    for s in &v.steps {
                        ck.step(turn, s, false)?;
                    }
                    for name in &v.send {
                        let id = layout.id(name)?;
                        if !matches!(ck.owners[id], Owner::Node(_)) {
                            return Err(ck.err(turn, format!("{name} is not held by a node")));
                        }
                        ck.owners[id] = Owner::Prover;
                    }
                    for &var in &v.reveal {
                        ck.require_var(turn, var)?;
                        if !ck.assigned[var] {
                            return Err(ck.err(
                                turn,
                                format!("cannot reveal unset variable {}", self.vars[var].name),
                            ));
                        }
                        ck.revealed.push(var);
                    }
                }
            }
        }
        let ver = &self.verification;
        for s in &ver.steps {
            ck.step(None, s, true)?;
        }
        for &(v, q) in &ver.broadcast {
            ck.require_held(None, v, &[q])?;
        }
        let mut check_qubits = BTreeSet::new();
        for c in &ver.checks {
            let u = c.node;
            if u >= n {
                return Err(ck.err(None, format!("check for unknown node {u}")));
            }
            for a in c.check.atoms() {
                match *a {
                    Atom::Qubit(q) => {
                        if q >= total {
                            return Err(ck.err(None, format!("check reads qubit {q} outside the layout")));
                        }
                        check_qubits.insert(q);
                        if ver.global_readout {
                            continue;
                        }
                        let own = ck.holder(q) == Owner::Node(u);
                        let heard = ver
                            .broadcast
                            .iter()
                            .any(|&(v, bq)| bq == q && self.graph.has_edge(u, v));
                        if !own && !heard {
                            return Err(ck.err(
                                None,
                                format!("node {u} reads register {} it cannot see", ck.reg_name_of(q)),
                            ));
                        }
                    }
                    Atom::Var { var, value } => {
                        ck.require_var(None, var)?;
                        if value >= self.vars[var].domain {
                            return Err(ck.err(None, format!("value {value} outside the domain of {}", self.vars[var].name)));
                        }
                        if !ck.assigned[var] {
                            return Err(ck.err(
                                None,
                                format!("check reads unset variable {}", self.vars[var].name),
                            ));
                        }
                        if ver.global_readout {
                            continue;
                        }
                        let visible = match self.vars[var].owner {
                            VarOwner::Shared => true,
                            VarOwner::Node(w) => w == u || self.graph.has_edge(u, w),
                        };
                        if !visible {
                            return Err(ck.err(
                                None,
                                format!("node {u} cannot see variable {}", self.vars[var].name),
                            ));
                        }
                    }
                }
            }
        }
        info.final_owner = (0..total).map(|q| ck.holder(q)).collect();
        info.check_qubits = check_qubits.into_iter().collect();
        Ok(info)
    }

    /// Rewrites every qubit reference through `map`, over a new layout.
    pub fn remap_qubits(&self, layout: RegisterLayout, map: &[usize]) -> ProtocolSpec {
        let rq = |qs: &[usize]| qs.iter().map(|&q| map[q]).collect::<Vec<_>>();
        let rc = |cs: &[(usize, bool)]| cs.iter().map(|&(q, b)| (map[q], b)).collect::<Vec<_>>();
        let step = |s: &VerifierStep| match s {
            VerifierStep::Gate(op) => VerifierStep::Gate(LocalOp {
                node: op.node,
                gate: op.gate.clone(),
                targets: rq(&op.targets),
                controls: rc(&op.controls),
                condition: op.condition.clone(),
            }),
            VerifierStep::Measure { node, qubit, var } => VerifierStep::Measure {
                node: *node,
                qubit: map[*qubit],
                var: *var,
            },
            VerifierStep::MeasureParity { node, qubits, var } => VerifierStep::MeasureParity {
                node: *node,
                qubits: rq(qubits),
                var: *var,
            },
            other => other.clone(),
        };
        let turns = self
            .turns
            .iter()
            .map(|t| match t {
                Turn::Prover(p) => Turn::Prover(p.clone()),
                Turn::Verifier(v) => Turn::Verifier(VerifierTurn {
                    steps: v.steps.iter().map(step).collect(),
                    send: v.send.clone(),
                    reveal: v.reveal.clone(),
                }),
            })
            .collect();
        let ver = &self.verification;
        ProtocolSpec {
            name: self.name.clone(),
            graph: self.graph.clone(),
            layout,
            vars: self.vars.clone(),
            turns,
            verification: VerificationPhase {
                steps: ver.steps.iter().map(step).collect(),
                broadcast: ver.broadcast.iter().map(|&(v, q)| (v, map[q])).collect(),
                checks: ver
                    .checks
                    .iter()
                    .map(|c| NodeCheck {
                        node: c.node,
                        check: c.check.remap_qubits(map),
                    })
                    .collect(),
                global_readout: ver.global_readout,
            },
            initial: self
                .initial
                .iter()
                .map(|s| InitialState {
                    qubits: rq(&s.qubits),
                    amplitudes: s.amplitudes.clone(),
                })
                .collect(),
            communication: self.communication,
            min_prover_qubits: self.min_prover_qubits,
        }
    }

    /// Resizes the prover's private register `P`, which must come first in
    /// the layout. Returns the new spec and the old-to-new qubit map.
    pub fn with_prover_qubits(&self, size: usize) -> Result<(ProtocolSpec, Vec<usize>)> {
        let old = self.prover_qubits();
        if size < old {
            return Err(Error::Config(format!(
                "cannot shrink the prover register from {old} to {size} qubits"
            )));
        }
        let p = self.layout.find("P");
        if p != Some(0) && old > 0 {
            return Err(Error::Layout("register P must be first to be resized".into()));
        }
        let mut layout = RegisterLayout::new();
        let mut map = vec![usize::MAX; self.total_qubits()];
        for (i, r) in self.layout.registers().iter().enumerate() {
            let len = if Some(i) == p { size } else { r.len };
            let start = layout.total_qubits();
            layout.push(&r.base, &r.nodes, len, r.owner);
            for (k, q) in r.qubits().enumerate() {
                if k < len {
                    map[q] = start + k;
                }
            }
        }
        if p.is_none() {
            // no P register yet: prepend one
            let mut with_p = RegisterLayout::new();
            with_p.push("P", &[], size, Owner::Prover);
            for r in layout.registers() {
                with_p.push(&r.base, &r.nodes, r.len, r.owner);
            }
            for m in &mut map {
                *m += size;
            }
            layout = with_p;
        }
        layout.check_ceiling(crate::qcore::QUBIT_CEILING)?;
        Ok((self.remap_qubits(layout, &map), map))
    }

    /// Renames node `u` to `perm[u]` and reorders the layout accordingly.
    /// Returns the new spec and the old-to-new qubit map.
    pub fn relabel_nodes(&self, perm: &[usize]) -> Result<(ProtocolSpec, Vec<usize>)> {
        let n = self.graph.node_count();
        if perm.len() != n || (0..n).any(|u| !perm.contains(&u)) {
            return Err(Error::Validation("node relabeling must be a permutation".into()));
        }
        let mut relabeled = self.layout.clone();
        relabeled.relabel_nodes(perm);
        // new order: registers without nodes first, then by (new node ids, base)
        let mut order: Vec<usize> = (0..relabeled.registers().len()).collect();
        order.sort_by_key(|&i| {
            let r = relabeled.register(i);
            (r.nodes.clone(), i)
        });
        let (layout, map) = relabeled.reordered(&order);
        let edges: Vec<(usize, usize)> = self
            .graph
            .edges()
            .iter()
            .map(|&(a, b)| (perm[a], perm[b]))
            .collect();
        let mut inputs = vec![Vec::new(); n];
        for u in 0..n {
            inputs[perm[u]] = self.graph.input(u).to_vec();
        }
        let graph = crate::network::build_network(n, &edges, inputs)?;
        let mut out = self.remap_qubits(layout, &map);
        out.graph = graph;
        for v in &mut out.vars {
            if let VarOwner::Node(u) = v.owner {
                v.owner = VarOwner::Node(perm[u]);
            }
        }
        let fix_step = |s: &mut VerifierStep| match s {
            VerifierStep::Gate(op) => op.node = perm[op.node],
            VerifierStep::Measure { node, .. } | VerifierStep::MeasureParity { node, .. } => {
                *node = perm[*node]
            }
            VerifierStep::Exchange { a, b } => {
                *a = rename(a, perm);
                *b = rename(b, perm);
            }
            VerifierStep::Coin { .. } => {}
        };
        for t in &mut out.turns {
            match t {
                Turn::Prover(p) => p.send = p.send.iter().map(|s| rename(s, perm)).collect(),
                Turn::Verifier(v) => {
                    v.steps.iter_mut().for_each(fix_step);
                    v.send = v.send.iter().map(|s| rename(s, perm)).collect();
                }
            }
        }
        out.verification.steps.iter_mut().for_each(fix_step);
        for b in &mut out.verification.broadcast {
            b.0 = perm[b.0];
        }
        for c in &mut out.verification.checks {
            c.node = perm[c.node];
        }
        Ok((out, map))
    }
}

/// Applies a node permutation to a register name such as `W[0,1]`.
fn rename(name: &str, perm: &[usize]) -> String {
    match name.find('[') {
        Some(i) if name.ends_with(']') => {
            let ids: Vec<String> = name[i + 1..name.len() - 1]
                .split(',')
                .map(|s| perm[s.trim().parse::<usize>().expect("node id")].to_string())
                .collect();
            format!("{}[{}]", &name[..i], ids.join(","))
        }
        _ => name.to_string(),
    }
}
