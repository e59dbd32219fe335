use serde::{Deserialize, Serialize};

use super::{brute_force_value, DamProtocol, DamRule, Randomness};
use crate::error::Result;
use crate::network::NetworkGraph;

/// A catalog protocol with a yes- and a no-instance and their exact values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DamCatalogEntry {
    pub protocol: DamProtocol,
    pub yes_instance: NetworkGraph,
    pub no_instance: NetworkGraph,
    pub completeness: f64,
    pub soundness: f64,
}

fn entry(protocol: DamProtocol, yes: NetworkGraph, no: NetworkGraph) -> Result<DamCatalogEntry> {
    let c = brute_force_value(&protocol, &yes)?.optimal_acceptance;
    let s = brute_force_value(&protocol, &no)?.optimal_acceptance;
    Ok(DamCatalogEntry {
        protocol,
        yes_instance: yes,
        no_instance: no,
        completeness: c,
        soundness: s,
    })
}

/// Small protocols with brute-forced `(c, s)`.
pub fn toy_protocols() -> Result<Vec<DamCatalogEntry>> {
    let bipartite = DamProtocol {
        name: "bipartite-pls".into(),
        turns: 1,
        bits: 1,
        randomness: Randomness::Private,
        rule: DamRule::Bipartite,
    };
    let echo = DamProtocol {
        name: "coin-echo".into(),
        turns: 3,
        bits: 1,
        randomness: Randomness::Private,
        rule: DamRule::CoinEcho,
    };
    let path = NetworkGraph::path(2);
    Ok(vec![
        entry(bipartite, NetworkGraph::cycle(4), NetworkGraph::cycle(3))?,
        entry(
            echo,
            path.with_inputs(vec![vec![true], vec![true]])?,
            path.with_inputs(vec![vec![true], vec![false]])?,
        )?,
    ])
}
