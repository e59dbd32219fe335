//! Network topology, register layout and spanning-tree labels.

mod graph;
mod layout;
mod tree;

pub use graph::{build_network, NetworkGraph};
pub use layout::{
    allocate_layout, allocate_layout_with_ceiling, register_name, ExtraRegister, LayoutSizes,
    Owner, Register, RegisterLayout,
};
pub use tree::{spanning_tree, verify_node, verify_spanning_tree, SpanningTreeLabels};
