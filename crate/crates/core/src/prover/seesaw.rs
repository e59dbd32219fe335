use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::{
    unwind, Leaf, ProtocolSpec, ProverMove, ProverOp, ProverResponse, ProverStrategy, SpecInfo,
    Turn, Visitor, Walker,
};
use crate::qcore::{haar_unitary_with, kernel, rng, Gate, C64};

/// Held-register size above which dense polar updates are refused.
const POLAR_QUBIT_LIMIT: usize = 9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    /// Size of the prover's private register during the search.
    pub prover_qubits: usize,
    pub sweeps: usize,
    pub restarts: usize,
    pub seed: u64,
    pub convergence_tol: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            prover_qubits: 1,
            sweeps: 40,
            restarts: 4,
            seed: 0,
            convergence_tol: 1e-9,
        }
    }
}

impl OptimizerConfig {
    fn check(&self) -> Result<()> {
        if self.sweeps == 0 || self.restarts == 0 || !(self.convergence_tol > 0.0) {
            return Err(Error::Config(
                "sweeps and restarts must be at least 1 and the tolerance positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestartTrace {
    /// `honest` or `haar`.
    pub start: String,
    /// Acceptance at the start and after every sweep.
    pub acceptance: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerTrace {
    pub restarts: Vec<RestartTrace>,
    pub best_acceptance: f64,
    /// Strategy for the protocol resized to `prover_qubits`.
    pub best_strategy: ProverStrategy,
    pub prover_qubits: usize,
}

impl OptimizerTrace {
    /// Smallest per-sweep change over all restarts (negative = decrease).
    pub fn min_increment(&self) -> f64 {
        self.restarts
            .iter()
            .flat_map(|r| r.acceptance.windows(2).map(|w| w[1] - w[0]))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Linearization of the acceptance around the current turn unitary: for
/// each view, `X = sum_leaf w * partial_outer(psi_pre, A† Π y, held)`.
struct Linearize<'w> {
    walker: &'w Walker<'w>,
    target: usize,
    held: Vec<usize>,
    psi: Vec<C64>,
    mark: usize,
    view: usize,
    x: Vec<DMatrix<C64>>,
    value: f64,
}

impl<'a, 'w> Visitor<'a> for Linearize<'w> {
    fn prover(&mut self, ordinal: usize, view: usize, amps: &[C64], _w: f64, trail_len: usize) {
        if ordinal == self.target {
            self.psi = amps.to_vec();
            self.mark = trail_len + 1;
            self.view = view;
        }
    }

    fn leaf(&mut self, leaf: &Leaf<'a, '_>) {
        let mut y = self.walker.acceptance.project(leaf.amps, &leaf.table);
        self.value += leaf.weight * kernel::norm_sqr(&y);
        unwind(leaf.trail, self.mark, &mut y);
        self.x[self.view] += kernel::partial_outer(&self.psi, &y, &self.held) * C64::new(leaf.weight, 0.0);
    }
}

/// Unitary maximizing `Re tr(U X)`: the polar factor of `X†`.
fn polar(x: &DMatrix<C64>) -> DMatrix<C64> {
    let svd = x.adjoint().svd(true, true);
    // the singular vectors of a rank-deficient X can come back far from
    // orthonormal; any unitary completion is optimal there
    let u = orthonormalize(svd.u.expect("u"));
    let v = orthonormalize(svd.v_t.expect("v_t").adjoint());
    u * v.adjoint()
}

/// Q factor of `m` with the phases that keep it closest to `m`.
fn orthonormalize(m: DMatrix<C64>) -> DMatrix<C64> {
    let qr = m.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..q.ncols() {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            let ph = d / d.norm();
            for i in 0..q.nrows() {
                q[(i, j)] *= ph;
            }
        }
    }
    q
}

fn expand(mv: &ProverMove, views: usize) -> Vec<ProverResponse> {
    (0..views).map(|v| mv.response(v).clone()).collect()
}

fn reply_vars(spec: &ProtocolSpec, info: &SpecInfo, t: usize) -> Vec<usize> {
    match &spec.turns[info.prover_turns[t]] {
        Turn::Prover(p) => p.replies.clone(),
        Turn::Verifier(_) => Vec::new(),
    }
}

fn evaluate(spec: &ProtocolSpec, s: &ProverStrategy) -> Result<f64> {
    crate::protocol::acceptance_probability(spec, s)
}

/// One unitary update of turn `t`; returns the updated strategy.
fn update_turn(
    spec: &ProtocolSpec,
    info: &SpecInfo,
    strategy: &ProverStrategy,
    t: usize,
) -> Result<ProverStrategy> {
    let held = info.held[t].clone();
    if held.is_empty() {
        return Ok(strategy.clone());
    }
    if held.len() > POLAR_QUBIT_LIMIT {
        return Err(Error::Capacity {
            what: "qubits held by the prover in one turn".into(),
            requested: held.len() as u64,
            limit: POLAR_QUBIT_LIMIT as u64,
        });
    }
    let views = info.view_counts[t];
    let dim = 1usize << held.len();
    let walker = Walker::new(spec, strategy)?;
    let mut lin = Linearize {
        walker: &walker,
        target: t,
        held: held.clone(),
        psi: Vec::new(),
        mark: 0,
        view: 0,
        x: vec![DMatrix::zeros(dim, dim); views],
        value: 0.0,
    };
    walker.run(&mut lin);
    let fresh = info.is_fresh(spec, t);
    let mut responses = expand(&strategy.moves[t], views);
    for (v, x) in lin.x.iter().enumerate() {
        if x.norm() < 1e-14 {
            continue;
        }
        let ops = if fresh {
            let xi: Vec<C64> = x.row(0).iter().map(|c| c.conj()).collect();
            vec![ProverOp::prepare(held.clone(), &xi)?]
        } else {
            vec![ProverOp::gate(Gate::from_matrix_unchecked(held.len(), polar(x))?, held.clone())]
        };
        responses[v].ops = ops;
    }
    let mut out = strategy.clone();
    out.moves[t] = ProverMove { responses };
    Ok(out)
}

/// Coordinate ascent over the classical replies of turn `t`.
fn update_replies(
    spec: &ProtocolSpec,
    info: &SpecInfo,
    strategy: &ProverStrategy,
    t: usize,
    current: f64,
) -> Result<(ProverStrategy, f64)> {
    let vars = reply_vars(spec, info, t);
    if vars.is_empty() {
        return Ok((strategy.clone(), current));
    }
    let views = info.view_counts[t];
    let mut best = strategy.clone();
    best.moves[t] = ProverMove {
        responses: expand(&strategy.moves[t], views),
    };
    let mut best_val = current;
    for v in 0..views {
        for (slot, &var) in vars.iter().enumerate() {
            for val in 0..spec.vars[var].domain {
                if best.moves[t].responses[v].replies[slot] == val {
                    continue;
                }
                let mut cand = best.clone();
                cand.moves[t].responses[v].replies[slot] = val;
                let p = evaluate(spec, &cand)?;
                if p > best_val + 1e-12 {
                    best = cand;
                    best_val = p;
                }
            }
        }
    }
    Ok((best, best_val))
}

fn haar_start(spec: &ProtocolSpec, info: &SpecInfo, rng: &mut ChaCha8Rng) -> Result<ProverStrategy> {
    let mut moves = Vec::new();
    for t in 0..info.prover_turns.len() {
        let vars = reply_vars(spec, info, t);
        let mut responses = Vec::new();
        for _ in 0..info.view_counts[t] {
            let ops = if info.held[t].is_empty() {
                Vec::new()
            } else {
                vec![ProverOp::gate(
                    haar_unitary_with(info.held[t].len(), rng)?,
                    info.held[t].clone(),
                )]
            };
            let replies = vars
                .iter()
                .map(|&v| rng.random_range(0..spec.vars[v].domain))
                .collect();
            responses.push(ProverResponse { ops, replies });
        }
        moves.push(ProverMove { responses });
    }
    Ok(ProverStrategy { moves })
}

/// See-saw search with Haar-random restarts only.
pub fn seesaw_optimize(spec: &ProtocolSpec, config: &OptimizerConfig) -> Result<OptimizerTrace> {
    seesaw_optimize_from(spec, config, None)
}

/// See-saw search; when `honest` is given (for `spec` as passed in), the
/// first restart starts from it.
pub fn seesaw_optimize_from(
    spec: &ProtocolSpec,
    config: &OptimizerConfig,
    honest: Option<&ProverStrategy>,
) -> Result<OptimizerTrace> {
    config.check()?;
    if spec.num_prover_turns() == 0 {
        return Err(Error::Shape("the protocol has no prover turn".into()));
    }
    if config.prover_qubits < spec.min_prover_qubits {
        return Err(Error::Config(format!(
            "prover register of {} qubits cannot hold the {} the protocol needs",
            config.prover_qubits, spec.min_prover_qubits
        )));
    }
    let (work, honest) = if config.prover_qubits == spec.prover_qubits() {
        (spec.clone(), honest.cloned())
    } else {
        let (s, map) = spec.with_prover_qubits(config.prover_qubits)?;
        (s, honest.map(|h| h.remap_qubits(&map)))
    };
    let info = work.validate()?;
    let mut rng = rng(config.seed);
    let mut best: Option<(f64, ProverStrategy)> = None;
    let mut traces = Vec::new();
    for r in 0..config.restarts {
        let (start, mut strategy) = match (&honest, r) {
            (Some(h), 0) => ("honest", h.clone()),
            _ => ("haar", haar_start(&work, &info, &mut rng)?),
        };
        let mut value = evaluate(&work, &strategy)?;
        let mut history = vec![value];
        for _ in 0..config.sweeps {
            for t in 0..info.prover_turns.len() {
                let cand = update_turn(&work, &info, &strategy, t)?;
                let p = evaluate(&work, &cand)?;
                // the update cannot decrease the value beyond round-off
                if p >= value - 1e-12 {
                    strategy = cand;
                    value = p;
                }
                let (s, p) = update_replies(&work, &info, &strategy, t, value)?;
                strategy = s;
                value = p;
            }
            let prev = *history.last().unwrap();
            history.push(value);
            if value - prev < config.convergence_tol {
                break;
            }
        }
        if best.as_ref().map_or(true, |(b, _)| value > *b) {
            best = Some((value, strategy));
        }
        traces.push(RestartTrace {
            start: start.into(),
            acceptance: history,
        });
    }
    let (best_acceptance, best_strategy) = best.expect("at least one restart");
    Ok(OptimizerTrace {
        restarts: traces,
        best_acceptance,
        best_strategy,
        prover_qubits: config.prover_qubits,
    })
}
