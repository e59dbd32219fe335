use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::protocol::{
    initial_amplitudes, Leaf, ProtocolSpec, ProverMove, ProverResponse, ProverStrategy, Turn,
    Visitor, Walker,
};
use crate::qcore::{hermitian_eigenvalues, kernel, C64};

/// Ceiling on `2^|message| * leaves * 2^n` stored amplitudes.
const MAX_STORED: usize = 1 << 27;

struct Leaves<'w> {
    walker: &'w Walker<'w>,
    out: Vec<(f64, Vec<C64>)>,
}

impl<'a, 'w> Visitor<'a> for Leaves<'w> {
    fn leaf(&mut self, leaf: &Leaf<'a, '_>) {
        self.out
            .push((leaf.weight, self.walker.acceptance.project(leaf.amps, &leaf.table)));
    }
}

/// Best acceptance over all provers of a protocol whose only prover turn
/// comes first: the top eigenvalue of `K = sum_leaf w Y† Π Y`, maximized
/// over the classical replies of that turn.
pub fn exact_single_message_max(spec: &ProtocolSpec) -> Result<f64> {
    let info = spec.validate()?;
    if info.prover_turns != [0] {
        return Err(Error::Shape(
            "needs exactly one prover turn, placed first".into(),
        ));
    }
    let message = info.sent[0].clone();
    if spec
        .initial
        .iter()
        .any(|s| s.qubits.iter().any(|q| message.contains(q)))
    {
        return Err(Error::Shape("message qubits must start in |0>".into()));
    }
    let dim = 1usize << message.len();
    let replies = match &spec.turns[0] {
        Turn::Prover(p) => p.replies.clone(),
        Turn::Verifier(_) => unreachable!(),
    };
    let combos: usize = replies.iter().map(|&v| spec.vars[v].domain as usize).product();
    let base = initial_amplitudes(spec);
    let mut best = 0.0f64;
    for c in 0..combos {
        let mut rest = c;
        let values: Vec<u32> = replies
            .iter()
            .map(|&v| {
                let d = spec.vars[v].domain as usize;
                let x = (rest % d) as u32;
                rest /= d;
                x
            })
            .collect();
        let strategy = ProverStrategy {
            moves: vec![ProverMove::uniform(ProverResponse {
                ops: Vec::new(),
                replies: values,
            })],
        };
        let mut walker = Walker::new(spec, &strategy)?;
        walker.prune = false;
        let mut columns: Vec<Vec<(f64, Vec<C64>)>> = Vec::with_capacity(dim);
        for j in 0..dim {
            // place basis input j on the message qubits
            let offset: usize = message
                .iter()
                .enumerate()
                .filter(|(k, _)| (j >> k) & 1 == 1)
                .map(|(_, &q)| 1usize << q)
                .sum();
            let mut amps = vec![C64::new(0.0, 0.0); base.len()];
            for (i, a) in base.iter().enumerate() {
                if a.norm_sqr() > 0.0 {
                    amps[i | offset] = *a;
                }
            }
            let mut v = Leaves {
                walker: &walker,
                out: Vec::new(),
            };
            walker.run_from(amps, &mut v);
            if dim * v.out.len() * base.len() > MAX_STORED {
                return Err(Error::Capacity {
                    what: "stored leaf amplitudes".into(),
                    requested: (dim * v.out.len() * base.len()) as u64,
                    limit: MAX_STORED as u64,
                });
            }
            columns.push(v.out);
        }
        let leaves = columns[0].len();
        let mut k = DMatrix::<C64>::zeros(dim, dim);
        for l in 0..leaves {
            let w = columns[0][l].0;
            for i in 0..dim {
                for j in i..dim {
                    let z = kernel::inner(&columns[i][l].1, &columns[j][l].1) * w;
                    k[(i, j)] += z;
                    if i != j {
                        k[(j, i)] += z.conj();
                    }
                }
            }
        }
        let top = hermitian_eigenvalues(&k)
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        best = best.max(top);
    }
    Ok(best.clamp(0.0, 1.0))
}
