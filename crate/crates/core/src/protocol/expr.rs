use serde::{Deserialize, Serialize};

/// Boolean formula over atoms of type `A`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoolExpr<A> {
    Const(bool),
    Atom(A),
    Not(Box<BoolExpr<A>>),
    And(Vec<BoolExpr<A>>),
    Or(Vec<BoolExpr<A>>),
    /// True iff an odd number of operands are true.
    Xor(Vec<BoolExpr<A>>),
}

impl<A> BoolExpr<A> {
    pub fn atom(a: A) -> Self {
        BoolExpr::Atom(a)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(e: BoolExpr<A>) -> Self {
        match e {
            BoolExpr::Const(b) => BoolExpr::Const(!b),
            BoolExpr::Not(inner) => *inner,
            other => BoolExpr::Not(Box::new(other)),
        }
    }

    pub fn and(parts: Vec<BoolExpr<A>>) -> Self {
        let mut keep = Vec::with_capacity(parts.len());
        for p in parts {
            match p {
                BoolExpr::Const(true) => {}
                BoolExpr::Const(false) => return BoolExpr::Const(false),
                BoolExpr::And(inner) => keep.extend(inner),
                other => keep.push(other),
            }
        }
        match keep.len() {
            0 => BoolExpr::Const(true),
            1 => keep.pop().unwrap(),
            _ => BoolExpr::And(keep),
        }
    }

    pub fn or(parts: Vec<BoolExpr<A>>) -> Self {
        let mut keep = Vec::with_capacity(parts.len());
        for p in parts {
            match p {
                BoolExpr::Const(false) => {}
                BoolExpr::Const(true) => return BoolExpr::Const(true),
                BoolExpr::Or(inner) => keep.extend(inner),
                other => keep.push(other),
            }
        }
        match keep.len() {
            0 => BoolExpr::Const(false),
            1 => keep.pop().unwrap(),
            _ => BoolExpr::Or(keep),
        }
    }

    pub fn xor(parts: Vec<BoolExpr<A>>) -> Self {
        let mut flip = false;
        let mut keep = Vec::with_capacity(parts.len());
        for p in parts {
            match p {
                BoolExpr::Const(b) => flip ^= b,
                other => keep.push(other),
            }
        }
        let base = match keep.len() {
            0 => BoolExpr::Const(false),
            1 => keep.pop().unwrap(),
            _ => BoolExpr::Xor(keep),
        };
        if flip {
            Self::not(base)
        } else {
            base
        }
    }

    /// `a == b` as booleans.
    pub fn equal(a: BoolExpr<A>, b: BoolExpr<A>) -> Self {
        Self::not(Self::xor(vec![a, b]))
    }

    pub fn implies(a: BoolExpr<A>, b: BoolExpr<A>) -> Self {
        Self::or(vec![Self::not(a), b])
    }

    pub fn eval(&self, f: &mut impl FnMut(&A) -> bool) -> bool {
        match self {
            BoolExpr::Const(b) => *b,
            BoolExpr::Atom(a) => f(a),
            BoolExpr::Not(e) => !e.eval(f),
            BoolExpr::And(es) => es.iter().all(|e| e.eval(f)),
            BoolExpr::Or(es) => es.iter().any(|e| e.eval(f)),
            BoolExpr::Xor(es) => es.iter().fold(false, |acc, e| acc ^ e.eval(f)),
        }
    }

    pub fn atoms(&self) -> Vec<&A> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a A>) {
        match self {
            BoolExpr::Const(_) => {}
            BoolExpr::Atom(a) => out.push(a),
            BoolExpr::Not(e) => e.collect_atoms(out),
            BoolExpr::And(es) | BoolExpr::Or(es) | BoolExpr::Xor(es) => {
                for e in es {
                    e.collect_atoms(out);
                }
            }
        }
    }

    pub fn map<B>(&self, f: &mut impl FnMut(&A) -> BoolExpr<B>) -> BoolExpr<B> {
        match self {
            BoolExpr::Const(b) => BoolExpr::Const(*b),
            BoolExpr::Atom(a) => f(a),
            BoolExpr::Not(e) => BoolExpr::not(e.map(f)),
            BoolExpr::And(es) => BoolExpr::and(es.iter().map(|e| e.map(f)).collect()),
            BoolExpr::Or(es) => BoolExpr::or(es.iter().map(|e| e.map(f)).collect()),
            BoolExpr::Xor(es) => BoolExpr::xor(es.iter().map(|e| e.map(f)).collect()),
        }
    }
}

/// Atoms of verifier checks and classical conditions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Atom {
    /// The final computational-basis outcome of this qubit is 1.
    Qubit(usize),
    /// Classical variable `var` holds `value`.
    Var { var: usize, value: u32 },
}

pub type Check = BoolExpr<Atom>;

impl BoolExpr<Atom> {
    pub fn qubit(q: usize) -> Self {
        BoolExpr::Atom(Atom::Qubit(q))
    }

    pub fn qubit_zero(q: usize) -> Self {
        Self::not(Self::qubit(q))
    }

    pub fn var_eq(var: usize, value: u32) -> Self {
        BoolExpr::Atom(Atom::Var { var, value })
    }

    /// A binary variable read as a boolean.
    pub fn bit(var: usize) -> Self {
        Self::var_eq(var, 1)
    }

    /// Two variables with a common domain hold the same value.
    pub fn vars_equal(a: usize, b: usize, domain: u32) -> Self {
        if domain == 2 {
            return Self::equal(Self::bit(a), Self::bit(b));
        }
        Self::or(
            (0..domain)
                .map(|v| Self::and(vec![Self::var_eq(a, v), Self::var_eq(b, v)]))
                .collect(),
        )
    }

    /// All listed qubits read 0.
    pub fn all_zero(qubits: impl IntoIterator<Item = usize>) -> Self {
        Self::and(qubits.into_iter().map(Self::qubit_zero).collect())
    }

    pub fn qubits(&self) -> Vec<usize> {
        let mut q: Vec<usize> = self
            .atoms()
            .into_iter()
            .filter_map(|a| match a {
                Atom::Qubit(q) => Some(*q),
                _ => None,
            })
            .collect();
        q.sort_unstable();
        q.dedup();
        q
    }

    pub fn vars(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .atoms()
            .into_iter()
            .filter_map(|a| match a {
                Atom::Var { var, .. } => Some(*var),
                _ => None,
            })
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn remap_qubits(&self, map: &[usize]) -> Self {
        self.map(&mut |a| match a {
            Atom::Qubit(q) => Self::qubit(map[*q]),
            other => BoolExpr::Atom(*other),
        })
    }

    pub fn remap_vars(&self, map: &[usize]) -> Self {
        self.map(&mut |a| match a {
            Atom::Var { var, value } => Self::var_eq(map[*var], *value),
            other => BoolExpr::Atom(*other),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructors_simplify() {
        let e: Check = BoolExpr::and(vec![BoolExpr::Const(true), BoolExpr::qubit(3)]);
        assert_eq!(e, BoolExpr::qubit(3));
        let x: Check = BoolExpr::xor(vec![BoolExpr::Const(true), BoolExpr::qubit(1)]);
        assert_eq!(x, BoolExpr::qubit_zero(1));
    }

    #[test]
    fn parity_and_equality() {
        let e: Check = BoolExpr::xor(vec![BoolExpr::qubit(0), BoolExpr::qubit(1), BoolExpr::qubit(2)]);
        for bits in 0..8u32 {
            let val = e.eval(&mut |a| match a {
                Atom::Qubit(q) => (bits >> q) & 1 == 1,
                _ => unreachable!(),
            });
            assert_eq!(val, bits.count_ones() % 2 == 1);
        }
        let eq = Check::vars_equal(0, 1, 3);
        let vals = [2u32, 2u32];
        assert!(eq.eval(&mut |a| match a {
            Atom::Var { var, value } => vals[*var] == *value,
            _ => unreachable!(),
        }));
    }
}
