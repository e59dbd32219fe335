use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::NetworkGraph;
use crate::error::{Error, Result};
use crate::qcore::QUBIT_CEILING;

/// Who holds a register.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Owner {
    Prover,
    Node(usize),
}

/// A contiguous block of qubits. `nodes` holds the node ids that appear in
/// the name, e.g. `W[0,1]` has `base = "W"` and `nodes = [0, 1]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Register {
    pub base: String,
    #[serde(default)]
    pub nodes: Vec<usize>,
    pub start: usize,
    pub len: usize,
    /// Holder before the first turn.
    pub owner: Owner,
}

impl Register {
    pub fn name(&self) -> String {
        register_name(&self.base, &self.nodes)
    }

    pub fn qubits(&self) -> Range<usize> {
        self.start..self.start + self.len
    }
}

pub fn register_name(base: &str, nodes: &[usize]) -> String {
    if nodes.is_empty() {
        base.to_string()
    } else {
        let ids: Vec<String> = nodes.iter().map(|n| n.to_string()).collect();
        format!("{base}[{}]", ids.join(","))
    }
}

/// Named registers tiling `[0, total_qubits)` in allocation order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegisterLayout {
    registers: Vec<Register>,
    total_qubits: usize,
}

impl Default for RegisterLayout {
    fn default() -> Self {
        Self::new()
    }
}

impl RegisterLayout {
    pub fn new() -> Self {
        RegisterLayout {
            registers: Vec::new(),
            total_qubits: 0,
        }
    }

    /// Appends a register and returns its index.
    pub fn push(&mut self, base: &str, nodes: &[usize], len: usize, owner: Owner) -> usize {
        let name = register_name(base, nodes);
        assert!(self.find(&name).is_none(), "duplicate register {name}");
        self.registers.push(Register {
            base: base.to_string(),
            nodes: nodes.to_vec(),
            start: self.total_qubits,
            len,
            owner,
        });
        self.total_qubits += len;
        self.registers.len() - 1
    }

    pub fn check_ceiling(&self, limit: usize) -> Result<()> {
        if self.total_qubits > limit {
            return Err(Error::Capacity {
                what: "register layout qubits".into(),
                requested: self.total_qubits as u64,
                limit: limit as u64,
            });
        }
        Ok(())
    }

    pub fn total_qubits(&self) -> usize {
        self.total_qubits
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn register(&self, id: usize) -> &Register {
        &self.registers[id]
    }

    pub fn find(&self, name: &str) -> Option<usize> {
        self.registers.iter().position(|r| r.name() == name)
    }

    /// Index of a register by name, as an error if missing.
    pub fn id(&self, name: &str) -> Result<usize> {
        self.find(name)
            .ok_or_else(|| Error::Layout(format!("no register named {name}")))
    }

    /// Qubits of a named register (empty if missing or zero-sized).
    pub fn qubits(&self, name: &str) -> Vec<usize> {
        self.find(name)
            .map(|i| self.registers[i].qubits().collect())
            .unwrap_or_default()
    }

    pub fn set_owner(&mut self, id: usize, owner: Owner) {
        self.registers[id].owner = owner;
    }

    /// Register containing `qubit`.
    pub fn register_of(&self, qubit: usize) -> Option<usize> {
        self.registers
            .iter()
            .position(|r| r.qubits().contains(&qubit))
    }

    /// Rebuilds the layout with registers in a new order; returns the layout
    /// and the old-to-new qubit map.
    pub fn reordered(&self, order: &[usize]) -> (RegisterLayout, Vec<usize>) {
        assert_eq!(order.len(), self.registers.len());
        let mut out = RegisterLayout::new();
        let mut map = vec![0; self.total_qubits];
        for &id in order {
            let r = &self.registers[id];
            let start = out.total_qubits;
            out.push(&r.base, &r.nodes, r.len, r.owner);
            for (k, q) in r.qubits().enumerate() {
                map[q] = start + k;
            }
        }
        (out, map)
    }

    /// Renames node ids in register names and owners.
    pub fn relabel_nodes(&mut self, perm: &[usize]) {
        for r in &mut self.registers {
            for n in &mut r.nodes {
                *n = perm[*n];
            }
            if let Owner::Node(u) = r.owner {
                r.owner = Owner::Node(perm[u]);
            }
        }
    }
}

/// Per-register sizes for [`allocate_layout`].
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutSizes {
    pub prover: usize,
    /// Private register size per node.
    pub private: usize,
    /// Message register size per node.
    pub message: usize,
    /// Size of each directed edge register `W[u,v]`.
    pub edge: usize,
    /// Additional registers appended after the standard ones.
    #[serde(default)]
    pub extras: Vec<ExtraRegister>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtraRegister {
    pub base: String,
    #[serde(default)]
    pub nodes: Vec<usize>,
    pub len: usize,
    pub owner: Owner,
}

/// Standard layout: `P`, then per node `V[u]`, `M[u]`, `W[u,v]` for each
/// neighbor `v` in increasing order, then the extras. Message registers start
/// with the prover.
pub fn allocate_layout(graph: &NetworkGraph, sizes: &LayoutSizes) -> Result<RegisterLayout> {
    allocate_layout_with_ceiling(graph, sizes, QUBIT_CEILING)
}

pub fn allocate_layout_with_ceiling(
    graph: &NetworkGraph,
    sizes: &LayoutSizes,
    ceiling: usize,
) -> Result<RegisterLayout> {
    let mut layout = RegisterLayout::new();
    layout.push("P", &[], sizes.prover, Owner::Prover);
    for u in 0..graph.node_count() {
        layout.push("V", &[u], sizes.private, Owner::Node(u));
        layout.push("M", &[u], sizes.message, Owner::Prover);
        if sizes.edge > 0 {
            for &v in graph.neighbors(u) {
                layout.push("W", &[u, v], sizes.edge, Owner::Node(u));
            }
        }
    }
    for e in &sizes.extras {
        if layout.find(&register_name(&e.base, &e.nodes)).is_some() {
            return Err(Error::Layout(format!(
                "duplicate register {}",
                register_name(&e.base, &e.nodes)
            )));
        }
        layout.push(&e.base, &e.nodes, e.len, e.owner);
    }
    layout.check_ceiling(ceiling)?;
    Ok(layout)
}
