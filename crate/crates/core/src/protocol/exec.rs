//! Exact and sampled execution of a protocol script.
//!
//! Coins and mid-protocol measurements branch; each branch carries an
//! unnormalized amplitude vector and a classical weight, so the acceptance
//! probability is `sum_leaf weight * |Π_acc amps|^2`.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::ops::Range;
use std::rc::Rc;

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::expr::{Atom, Check};
use super::spec::{ProtocolSpec, SpecInfo, Turn, VerifierStep};
use super::strategy::{ProverOp, ProverStrategy};
use crate::error::{Error, Result};
use crate::qcore::{kernel, rng, DensityOperator, C64, QUBIT_CEILING};

/// Branches lighter than this are dropped.
const PRUNE: f64 = 1e-30;
/// Largest number of qubits the acceptance test may read at once.
const MAX_CHECK_QUBITS: usize = 20;
/// Largest layout for which the dense verification operator is built.
pub const PROJECTOR_QUBIT_LIMIT: usize = 10;

/// How verifier coins are realized.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoinPolicy {
    /// Average over coin values with their probabilities.
    #[default]
    Branch,
    /// Draw each coin bit by measuring half of a freshly made Bell pair.
    BellPair,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    Exact,
    Sampled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub protocol: String,
    pub nodes: usize,
    pub turns: usize,
    pub total_qubits: usize,
    pub prover_qubits: usize,
    /// Branches reaching the final readout (exact mode).
    pub leaves: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub acceptance_probability: f64,
    pub mode: RunMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    /// Wilson 95% interval.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wilson: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Probability that each node's own check passes.
    pub node_acceptance: Vec<f64>,
    pub metadata: RunMetadata,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub derived: BTreeMap<String, f64>,
}

/// Wilson score interval at z = 1.96.
pub fn wilson_interval(successes: u64, trials: u64) -> [f64; 2] {
    let z = 1.96f64;
    let n = trials as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let center = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    [(center - half).max(0.0), (center + half).min(1.0)]
}

/// Accept/reject table over the outcomes of the check qubits.
pub(crate) struct AcceptTable {
    pub all: Vec<bool>,
    /// `nodes[u][pattern]`.
    pub nodes: Vec<Vec<bool>>,
}

/// Compiled acceptance predicate.
pub(crate) struct Acceptance {
    qubits: Vec<usize>,
    checks: Vec<(usize, Check)>,
    node_count: usize,
    var_deps: Vec<usize>,
    cache: RefCell<HashMap<Vec<u32>, Rc<AcceptTable>>>,
}

impl Acceptance {
    pub fn new(spec: &ProtocolSpec, info: &SpecInfo) -> Result<Self> {
        let qubits = info.check_qubits.clone();
        if qubits.len() > MAX_CHECK_QUBITS {
            return Err(Error::Capacity {
                what: "qubits read by the checks".into(),
                requested: qubits.len() as u64,
                limit: MAX_CHECK_QUBITS as u64,
            });
        }
        let mut var_deps: Vec<usize> = spec
            .verification
            .checks
            .iter()
            .flat_map(|c| c.check.vars())
            .collect();
        var_deps.sort_unstable();
        var_deps.dedup();
        Ok(Acceptance {
            qubits,
            checks: spec
                .verification
                .checks
                .iter()
                .map(|c| (c.node, c.check.clone()))
                .collect(),
            node_count: spec.graph.node_count(),
            var_deps,
            cache: RefCell::new(HashMap::new()),
        })
    }

    pub fn qubits(&self) -> &[usize] {
        &self.qubits
    }

    pub fn table(&self, vars: &[u32]) -> Rc<AcceptTable> {
        let key: Vec<u32> = self.var_deps.iter().map(|&v| vars[v]).collect();
        if let Some(t) = self.cache.borrow().get(&key) {
            return t.clone();
        }
        let k = self.qubits.len();
        let pos = |q: usize| self.qubits.binary_search(&q).expect("check qubit");
        let mut nodes = vec![vec![true; 1 << k]; self.node_count];
        for pattern in 0..1usize << k {
            for (u, check) in &self.checks {
                if !nodes[*u][pattern] {
                    continue;
                }
                let ok = check.eval(&mut |a| match *a {
                    Atom::Qubit(q) => (pattern >> pos(q)) & 1 == 1,
                    Atom::Var { var, value } => vars[var] == value,
                });
                if !ok {
                    nodes[*u][pattern] = false;
                }
            }
        }
        let all = (0..1usize << k)
            .map(|p| nodes.iter().all(|n| n[p]))
            .collect();
        let t = Rc::new(AcceptTable { all, nodes });
        self.cache.borrow_mut().insert(key, t.clone());
        t
    }

    /// `Π_acc amps`.
    pub fn project(&self, amps: &[C64], table: &AcceptTable) -> Vec<C64> {
        amps.iter()
            .enumerate()
            .map(|(i, &a)| {
                if table.all[kernel::gather_bits(i, &self.qubits)] {
                    a
                } else {
                    C64::new(0.0, 0.0)
                }
            })
            .collect()
    }

    /// Accepted mass overall and per node.
    pub fn mass(&self, amps: &[C64], table: &AcceptTable) -> (f64, Vec<f64>) {
        let mut total = 0.0;
        let mut per = vec![0.0; self.node_count];
        for (i, a) in amps.iter().enumerate() {
            let p = a.norm_sqr();
            if p == 0.0 {
                continue;
            }
            let pat = kernel::gather_bits(i, &self.qubits);
            if table.all[pat] {
                total += p;
            }
            for (u, n) in table.nodes.iter().enumerate() {
                if n[pat] {
                    per[u] += p;
                }
            }
        }
        (total, per)
    }
}

/// Record of operations since the start, for applying adjoints backwards.
#[derive(Clone)]
pub(crate) enum TrailOp<'a> {
    Matrix {
        matrix: &'a DMatrix<C64>,
        targets: &'a [usize],
        controls: &'a [(usize, bool)],
    },
    Prover(&'a [ProverOp]),
    Project(usize, bool),
    Parity(&'a [usize], bool),
    Swap(Range<usize>, Range<usize>),
    Scale(f64),
}

/// Applies the adjoints of `trail[from..]` to `v`, last first.
pub(crate) fn unwind(trail: &[TrailOp], from: usize, v: &mut [C64]) {
    for op in trail[from..].iter().rev() {
        match op {
            TrailOp::Matrix {
                matrix,
                targets,
                controls,
            } => kernel::apply_matrix(v, &matrix.adjoint(), targets, controls),
            TrailOp::Prover(ops) => {
                for o in ops.iter().rev() {
                    o.apply_adjoint(v);
                }
            }
            TrailOp::Project(q, b) => kernel::project_bit(v, *q, *b),
            TrailOp::Parity(qs, b) => kernel::project_parity(v, qs, *b),
            TrailOp::Swap(a, b) => swap_blocks(v, a.clone(), b.clone()),
            TrailOp::Scale(s) => v.iter_mut().for_each(|x| *x *= *s),
        }
    }
}

fn swap_qubits(amps: &mut [C64], a: usize, b: usize) {
    let (ba, bb) = (1usize << a, 1usize << b);
    for i in 0..amps.len() {
        if i & ba != 0 && i & bb == 0 {
            amps.swap(i, i ^ ba ^ bb);
        }
    }
}

fn swap_blocks(amps: &mut [C64], a: Range<usize>, b: Range<usize>) {
    for (x, y) in a.zip(b) {
        swap_qubits(amps, x, y);
    }
}

pub(crate) enum Instr<'a> {
    Step(&'a VerifierStep),
    Exchange(Range<usize>, Range<usize>),
    Prover(usize),
    VerificationStart,
}

/// Information handed to a visitor at each leaf.
pub(crate) struct Leaf<'a, 'b> {
    pub amps: &'b [C64],
    pub weight: f64,
    pub vars: &'b [u32],
    pub trail: &'b [TrailOp<'a>],
    pub table: Rc<AcceptTable>,
}

pub(crate) trait Visitor<'a> {
    /// Called before the prover acts; the prover's ops will sit at
    /// `trail[trail_len]`.
    fn prover(&mut self, _ordinal: usize, _view: usize, _amps: &[C64], _weight: f64, _trail_len: usize) {}
    fn verification_start(&mut self, _amps: &[C64], _weight: f64, _vars: &[u32]) {}
    fn leaf(&mut self, _leaf: &Leaf<'a, '_>) {}
}

/// Recursive driver over all branches.
pub(crate) struct Walker<'a> {
    pub spec: &'a ProtocolSpec,
    pub info: SpecInfo,
    pub strategy: &'a ProverStrategy,
    pub acceptance: Acceptance,
    program: Vec<Instr<'a>>,
    pub policy: CoinPolicy,
    pub prune: bool,
}

impl<'a> Walker<'a> {
    pub fn new(spec: &'a ProtocolSpec, strategy: &'a ProverStrategy) -> Result<Self> {
        let info = spec.validate()?;
        strategy.validate(spec, &info)?;
        spec.layout.check_ceiling(QUBIT_CEILING)?;
        let acceptance = Acceptance::new(spec, &info)?;
        let mut program = Vec::new();
        let mut ordinal = 0;
        let push_steps = |program: &mut Vec<Instr<'a>>, steps: &'a [VerifierStep]| -> Result<()> {
            for s in steps {
                program.push(match s {
                    VerifierStep::Exchange { a, b } => {
                        let ra = spec.layout.register(spec.layout.id(a)?).qubits();
                        let rb = spec.layout.register(spec.layout.id(b)?).qubits();
                        Instr::Exchange(ra, rb)
                    }
                    other => Instr::Step(other),
                });
            }
            Ok(())
        };
        for t in &spec.turns {
            match t {
                Turn::Prover(_) => {
                    program.push(Instr::Prover(ordinal));
                    ordinal += 1;
                }
                Turn::Verifier(v) => push_steps(&mut program, &v.steps)?,
            }
        }
        program.push(Instr::VerificationStart);
        push_steps(&mut program, &spec.verification.steps)?;
        Ok(Walker {
            spec,
            info,
            strategy,
            acceptance,
            program,
            policy: CoinPolicy::Branch,
            prune: true,
        })
    }

    pub fn initial(&self) -> Vec<C64> {
        initial_amplitudes(self.spec)
    }

    pub fn run(&self, visitor: &mut impl Visitor<'a>) {
        self.run_from(self.initial(), visitor)
    }

    pub fn run_from(&self, amps: Vec<C64>, visitor: &mut impl Visitor<'a>) {
        let mut vars = vec![0u32; self.spec.vars.len()];
        let mut trail = Vec::new();
        self.walk(0, amps, 1.0, &mut vars, &mut trail, visitor);
    }

    fn view_of(&self, ordinal: usize, vars: &[u32]) -> usize {
        let values: Vec<u32> = self.info.views[ordinal].iter().map(|&v| vars[v]).collect();
        self.info.view_index(self.spec, ordinal, &values)
    }

    fn walk(
        &self,
        mut pc: usize,
        mut amps: Vec<C64>,
        weight: f64,
        vars: &mut Vec<u32>,
        trail: &mut Vec<TrailOp<'a>>,
        visitor: &mut impl Visitor<'a>,
    ) {
        let mark = trail.len();
        while pc < self.program.len() {
            match &self.program[pc] {
                Instr::VerificationStart => visitor.verification_start(&amps, weight, vars),
                Instr::Exchange(a, b) => {
                    swap_blocks(&mut amps, a.clone(), b.clone());
                    trail.push(TrailOp::Swap(a.clone(), b.clone()));
                }
                Instr::Prover(ord) => {
                    let view = self.view_of(*ord, vars);
                    visitor.prover(*ord, view, &amps, weight, trail.len());
                    let resp = self.strategy.moves[*ord].response(view);
                    for op in &resp.ops {
                        op.apply(&mut amps);
                    }
                    trail.push(TrailOp::Prover(&resp.ops));
                    if let Turn::Prover(p) = &self.spec.turns[self.info.prover_turns[*ord]] {
                        for (&var, &val) in p.replies.iter().zip(&resp.replies) {
                            vars[var] = val;
                        }
                    }
                }
                Instr::Step(step) => match step {
                    VerifierStep::Gate(op) => {
                        let on = op
                            .condition
                            .as_ref()
                            .map_or(true, |c| eval_vars(c, vars));
                        if on {
                            kernel::apply_matrix(&mut amps, op.gate.matrix(), &op.targets, &op.controls);
                            trail.push(TrailOp::Matrix {
                                matrix: op.gate.matrix(),
                                targets: &op.targets,
                                controls: &op.controls,
                            });
                        }
                    }
                    VerifierStep::Measure { qubit, var, .. } => {
                        for val in 0..2u32 {
                            let mut b = amps.clone();
                            kernel::project_bit(&mut b, *qubit, val == 1);
                            if self.prune && kernel::norm_sqr(&b) < PRUNE {
                                continue;
                            }
                            vars[*var] = val;
                            trail.push(TrailOp::Project(*qubit, val == 1));
                            self.walk(pc + 1, b, weight, vars, trail, visitor);
                            trail.pop();
                        }
                        trail.truncate(mark);
                        return;
                    }
                    VerifierStep::MeasureParity { qubits, var, .. } => {
                        for val in 0..2u32 {
                            let mut b = amps.clone();
                            kernel::project_parity(&mut b, qubits, val == 1);
                            if self.prune && kernel::norm_sqr(&b) < PRUNE {
                                continue;
                            }
                            vars[*var] = val;
                            trail.push(TrailOp::Parity(qubits, val == 1));
                            self.walk(pc + 1, b, weight, vars, trail, visitor);
                            trail.pop();
                        }
                        trail.truncate(mark);
                        return;
                    }
                    VerifierStep::Coin { var } => {
                        let d = self.spec.vars[*var].domain;
                        match self.policy {
                            CoinPolicy::BellPair if d.is_power_of_two() => {
                                let bits = d.trailing_zeros();
                                let scale = bell_pair_scale(bits);
                                for val in 0..d {
                                    let mut b = amps.clone();
                                    b.iter_mut().for_each(|x| *x *= scale);
                                    vars[*var] = val;
                                    trail.push(TrailOp::Scale(scale));
                                    self.walk(pc + 1, b, weight, vars, trail, visitor);
                                    trail.pop();
                                }
                            }
                            _ => {
                                for val in 0..d {
                                    vars[*var] = val;
                                    self.walk(pc + 1, amps.clone(), weight / d as f64, vars, trail, visitor);
                                }
                            }
                        }
                        trail.truncate(mark);
                        return;
                    }
                    VerifierStep::Exchange { .. } => unreachable!("resolved when compiling"),
                },
            }
            pc += 1;
        }
        let table = self.acceptance.table(vars);
        visitor.leaf(&Leaf {
            amps: &amps,
            weight,
            vars,
            trail,
            table,
        });
        trail.truncate(mark);
    }
}

/// Amplitude factor left on a branch after drawing `bits` coin bits from
/// Bell pairs: each pair is prepared, both halves are measured, and the
/// pair is discarded.
fn bell_pair_scale(bits: u32) -> f64 {
    let mut pair = vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)];
    kernel::apply_matrix(&mut pair, crate::qcore::Gate::h().matrix(), &[0], &[]);
    kernel::apply_matrix(&mut pair, crate::qcore::Gate::cnot().matrix(), &[0, 1], &[]);
    // any fixed outcome: both halves agree, amplitude 1/sqrt(2)
    kernel::project_bit(&mut pair, 0, true);
    kernel::project_bit(&mut pair, 1, true);
    let amp = pair[3].norm();
    amp.powi(bits as i32)
}

fn eval_vars(c: &Check, vars: &[u32]) -> bool {
    c.eval(&mut |a| match *a {
        Atom::Var { var, value } => vars[var] == value,
        Atom::Qubit(_) => false,
    })
}

/// `|0...0>` with the declared input blocks placed on their qubits.
pub fn initial_amplitudes(spec: &ProtocolSpec) -> Vec<C64> {
    let n = spec.total_qubits();
    let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
    let mut mask = 0usize;
    for s in &spec.initial {
        for &q in &s.qubits {
            mask |= 1 << q;
        }
    }
    for (i, a) in amps.iter_mut().enumerate() {
        if i & !mask != 0 {
            continue;
        }
        let mut v = C64::new(1.0, 0.0);
        for s in &spec.initial {
            v *= s.amplitudes[kernel::gather_bits(i, &s.qubits)];
        }
        *a = v;
    }
    amps
}

fn metadata(spec: &ProtocolSpec, leaves: u64) -> RunMetadata {
    RunMetadata {
        protocol: spec.name.clone(),
        nodes: spec.graph.node_count(),
        turns: spec.num_turns(),
        total_qubits: spec.total_qubits(),
        prover_qubits: spec.prover_qubits(),
        leaves,
    }
}

#[derive(Default)]
struct Accumulate {
    total: f64,
    per_node: Vec<f64>,
    leaves: u64,
}

struct ExactVisitor<'w> {
    acceptance: &'w Acceptance,
    acc: Accumulate,
}

impl<'a, 'w> Visitor<'a> for ExactVisitor<'w> {
    fn leaf(&mut self, leaf: &Leaf<'a, '_>) {
        let (t, per) = self.acceptance.mass(leaf.amps, &leaf.table);
        self.acc.total += leaf.weight * t;
        if self.acc.per_node.is_empty() {
            self.acc.per_node = vec![0.0; per.len()];
        }
        for (x, p) in self.acc.per_node.iter_mut().zip(per) {
            *x += leaf.weight * p;
        }
        self.acc.leaves += 1;
    }
}

/// Acceptance probability by exhaustive branching.
pub fn execute_exact(
    spec: &ProtocolSpec,
    strategy: &ProverStrategy,
    policy: CoinPolicy,
) -> Result<RunReport> {
    let mut walker = Walker::new(spec, strategy)?;
    walker.policy = policy;
    let mut v = ExactVisitor {
        acceptance: &walker.acceptance,
        acc: Accumulate::default(),
    };
    walker.run(&mut v);
    let acc = v.acc;
    let per_node = if acc.per_node.is_empty() {
        vec![0.0; spec.graph.node_count()]
    } else {
        acc.per_node
    };
    Ok(RunReport {
        acceptance_probability: acc.total.clamp(0.0, 1.0),
        mode: RunMode::Exact,
        trials: None,
        wilson: None,
        seed: None,
        node_acceptance: per_node.into_iter().map(|p| p.clamp(0.0, 1.0)).collect(),
        metadata: metadata(spec, acc.leaves),
        derived: BTreeMap::new(),
    })
}

/// Acceptance probability only.
pub fn acceptance_probability(spec: &ProtocolSpec, strategy: &ProverStrategy) -> Result<f64> {
    Ok(execute_exact(spec, strategy, CoinPolicy::Branch)?.acceptance_probability)
}

fn sample_index(amps: &[C64], rng: &mut ChaCha8Rng) -> usize {
    let total = kernel::norm_sqr(amps);
    let mut r = rng.random::<f64>() * total;
    let mut last = 0;
    for (i, a) in amps.iter().enumerate() {
        let p = a.norm_sqr();
        if p > 0.0 {
            last = i;
            if r < p {
                return i;
            }
            r -= p;
        }
    }
    last
}

/// Monte-Carlo run: coins, measurements and the final readout are sampled.
pub fn execute_sampled(
    spec: &ProtocolSpec,
    strategy: &ProverStrategy,
    trials: u64,
    seed: u64,
) -> Result<RunReport> {
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let walker = Walker::new(spec, strategy)?;
    let init = walker.initial();
    let mut rng = rng(seed);
    let n = spec.graph.node_count();
    let mut accepted = 0u64;
    let mut node_hits = vec![0u64; n];
    for _ in 0..trials {
        let mut amps = init.clone();
        let mut vars = vec![0u32; spec.vars.len()];
        for instr in &walker.program {
            match instr {
                Instr::VerificationStart => {}
                Instr::Exchange(a, b) => swap_blocks(&mut amps, a.clone(), b.clone()),
                Instr::Prover(ord) => {
                    let view = walker.view_of(*ord, &vars);
                    let resp = strategy.moves[*ord].response(view);
                    for op in &resp.ops {
                        op.apply(&mut amps);
                    }
                    if let Turn::Prover(p) = &spec.turns[walker.info.prover_turns[*ord]] {
                        for (&var, &val) in p.replies.iter().zip(&resp.replies) {
                            vars[var] = val;
                        }
                    }
                }
                Instr::Step(step) => match step {
                    VerifierStep::Gate(op) => {
                        if op.condition.as_ref().map_or(true, |c| eval_vars(c, &vars)) {
                            kernel::apply_matrix(&mut amps, op.gate.matrix(), &op.targets, &op.controls);
                        }
                    }
                    VerifierStep::Measure { qubit, var, .. } => {
                        let idx = sample_index(&amps, &mut rng);
                        let bit = (idx >> qubit) & 1 == 1;
                        kernel::project_bit(&mut amps, *qubit, bit);
                        renormalize(&mut amps);
                        vars[*var] = bit as u32;
                    }
                    VerifierStep::MeasureParity { qubits, var, .. } => {
                        let idx = sample_index(&amps, &mut rng);
                        let bit = qubits.iter().filter(|&&q| (idx >> q) & 1 == 1).count() % 2 == 1;
                        kernel::project_parity(&mut amps, qubits, bit);
                        renormalize(&mut amps);
                        vars[*var] = bit as u32;
                    }
                    VerifierStep::Coin { var } => {
                        vars[*var] = rng.random_range(0..spec.vars[*var].domain);
                    }
                    VerifierStep::Exchange { .. } => unreachable!("resolved when compiling"),
                },
            }
        }
        let table = walker.acceptance.table(&vars);
        let idx = sample_index(&amps, &mut rng);
        let pat = kernel::gather_bits(idx, walker.acceptance.qubits());
        if table.all[pat] {
            accepted += 1;
        }
        for (u, t) in table.nodes.iter().enumerate() {
            if t[pat] {
                node_hits[u] += 1;
            }
        }
    }
    Ok(RunReport {
        acceptance_probability: accepted as f64 / trials as f64,
        mode: RunMode::Sampled,
        trials: Some(trials),
        wilson: Some(wilson_interval(accepted, trials)),
        seed: Some(seed),
        node_acceptance: node_hits
            .into_iter()
            .map(|h| h as f64 / trials as f64)
            .collect(),
        metadata: metadata(spec, 0),
        derived: BTreeMap::new(),
    })
}

fn renormalize(amps: &mut [C64]) {
    let n = kernel::norm_sqr(amps).sqrt();
    if n > 0.0 {
        amps.iter_mut().for_each(|a| *a /= n);
    }
}

/// A terminal branch: classical record and unnormalized final state.
#[derive(Clone, Debug, PartialEq)]
pub struct FinalBranch {
    pub weight: f64,
    pub vars: Vec<u32>,
    pub amplitudes: Vec<C64>,
    /// `weight * |Π_acc amplitudes|^2`.
    pub accepted_mass: f64,
}

struct Collect<'w> {
    acceptance: &'w Acceptance,
    accepted_only: bool,
    out: Vec<FinalBranch>,
}

impl<'a, 'w> Visitor<'a> for Collect<'w> {
    fn leaf(&mut self, leaf: &Leaf<'a, '_>) {
        let projected = self.acceptance.project(leaf.amps, &leaf.table);
        let mass = leaf.weight * kernel::norm_sqr(&projected);
        self.out.push(FinalBranch {
            weight: leaf.weight,
            vars: leaf.vars.to_vec(),
            amplitudes: if self.accepted_only {
                projected
            } else {
                leaf.amps.to_vec()
            },
            accepted_mass: mass,
        });
    }
}

/// All terminal branches before the acceptance projection.
pub fn final_branches(spec: &ProtocolSpec, strategy: &ProverStrategy) -> Result<Vec<FinalBranch>> {
    collect(spec, strategy, false)
}

fn collect(spec: &ProtocolSpec, strategy: &ProverStrategy, accepted_only: bool) -> Result<Vec<FinalBranch>> {
    let walker = Walker::new(spec, strategy)?;
    let mut v = Collect {
        acceptance: &walker.acceptance,
        accepted_only,
        out: Vec::new(),
    };
    walker.run(&mut v);
    Ok(v.out)
}

/// Acceptance probability and the normalized state of `keep` conditioned on
/// acceptance. `keep` must avoid the qubits the checks read.
pub fn accepted_reduced_state(
    spec: &ProtocolSpec,
    strategy: &ProverStrategy,
    keep: &[usize],
) -> Result<(f64, DensityOperator)> {
    crate::qcore::check_targets(keep, spec.total_qubits())?;
    let branches = collect(spec, strategy, true)?;
    let dim = 1usize << keep.len();
    let mut rho = DMatrix::<C64>::zeros(dim, dim);
    let mut p = 0.0;
    for b in &branches {
        p += b.accepted_mass;
        rho += kernel::partial_outer(&b.amplitudes, &b.amplitudes, keep) * C64::new(b.weight, 0.0);
    }
    if p <= PRUNE {
        return Err(Error::Validation("the run never accepts".into()));
    }
    rho /= C64::new(p, 0.0);
    Ok((p, DensityOperator::from_matrix(keep.len(), rho)?))
}

/// A branch as it enters the verification phase.
#[derive(Clone, Debug, PartialEq)]
pub struct PreVerification {
    pub weight: f64,
    pub vars: Vec<u32>,
    pub amplitudes: Vec<C64>,
}

struct PreCollect(Vec<PreVerification>);

impl<'a> Visitor<'a> for PreCollect {
    fn verification_start(&mut self, amps: &[C64], weight: f64, vars: &[u32]) {
        self.0.push(PreVerification {
            weight,
            vars: vars.to_vec(),
            amplitudes: amps.to_vec(),
        });
    }
}

/// Branches at the start of the verification phase. Their weighted
/// expectations of [`verification_operator`] sum to the acceptance.
pub fn pre_verification_states(
    spec: &ProtocolSpec,
    strategy: &ProverStrategy,
) -> Result<Vec<PreVerification>> {
    let walker = Walker::new(spec, strategy)?;
    let mut v = PreCollect(Vec::new());
    walker.run(&mut v);
    Ok(v.0)
}

/// The accept projector pulled back through the verification phase:
/// `U† Π_acc U` where `U` collects the phase's gates and register swaps.
/// Checks and gate conditions may read only variables fixed before the
/// phase; their values come from `vars`.
pub fn verification_operator(spec: &ProtocolSpec, vars: &[u32]) -> Result<DMatrix<C64>> {
    let info = spec.validate()?;
    let n = spec.total_qubits();
    if n > PROJECTOR_QUBIT_LIMIT {
        return Err(Error::Capacity {
            what: "qubits in the dense verification projector".into(),
            requested: n as u64,
            limit: PROJECTOR_QUBIT_LIMIT as u64,
        });
    }
    if vars.len() != spec.vars.len() {
        return Err(Error::Validation(format!(
            "expected {} variable values, got {}",
            spec.vars.len(),
            vars.len()
        )));
    }
    let acceptance = Acceptance::new(spec, &info)?;
    let table = acceptance.table(vars);
    let dim = 1usize << n;
    let mut u = DMatrix::<C64>::identity(dim, dim);
    for s in &spec.verification.steps {
        let mut col = |f: &dyn Fn(&mut [C64])| {
            for j in 0..dim {
                let mut c: Vec<C64> = u.column(j).iter().copied().collect();
                f(&mut c);
                u.set_column(j, &nalgebra::DVector::from_vec(c));
            }
        };
        match s {
            VerifierStep::Gate(op) => {
                if op.condition.as_ref().map_or(true, |c| eval_vars(c, vars)) {
                    col(&|c| kernel::apply_matrix(c, op.gate.matrix(), &op.targets, &op.controls));
                }
            }
            VerifierStep::Exchange { a, b } => {
                let ra = spec.layout.register(spec.layout.id(a)?).qubits();
                let rb = spec.layout.register(spec.layout.id(b)?).qubits();
                col(&|c| swap_blocks(c, ra.clone(), rb.clone()));
            }
            _ => {
                return Err(Error::Unsupported(
                    "verification operator needs a measurement-free verification phase".into(),
                ))
            }
        }
    }
    let d = DMatrix::from_fn(dim, dim, |i, j| {
        if i == j && table.all[kernel::gather_bits(i, acceptance.qubits())] {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    Ok(u.adjoint() * d * u)
}

/// [`verification_operator`] for protocols without classical variables.
pub fn verification_projector(spec: &ProtocolSpec) -> Result<DMatrix<C64>> {
    verification_operator(spec, &vec![0; spec.vars.len()])
}
