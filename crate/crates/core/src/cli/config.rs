use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::compile::RepetitionMode;
use crate::error::{Error, Result};
use crate::network::{build_network, NetworkGraph};
use crate::prover::OptimizerConfig;

/// One batch experiment, read from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// File stem of the outputs; defaults to the experiment kind.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,
    /// Output directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub mode: Mode,
    /// Shots per sampled run.
    #[serde(default = "default_trials")]
    pub trials: u64,
}

fn default_trials() -> u64 {
    10_000
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Exact,
    /// Also estimate acceptance from `trials` sampled runs.
    Sampled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Experiment {
    Ghz {
        graph: GraphSpec,
        copies: usize,
        #[serde(default = "default_epsilon")]
        epsilon: f64,
        #[serde(default = "default_epsilon")]
        delta: f64,
        #[serde(default)]
        strategy: GhzStrategy,
    },
    Dqct {
        graph: GraphSpec,
        qubits_per_node: Vec<usize>,
        inputs: InputKind,
        #[serde(default = "one")]
        copies: usize,
        #[serde(default = "default_epsilon")]
        epsilon: f64,
        #[serde(default = "default_epsilon")]
        delta: f64,
        /// Hand the nodes a perfect GHZ state instead of certifying one.
        #[serde(default)]
        ideal_control: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        optimizer: Option<OptimizerSettings>,
    },
    CompilePipeline {
        /// Entry of the compile corpus.
        protocol: String,
        steps: Vec<PipelineStep>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        optimizer: Option<OptimizerSettings>,
    },
    Optimize {
        protocol: String,
        #[serde(default)]
        instance: Instance,
        optimizer: OptimizerSettings,
    },
    DamBruteForce {
        protocol: String,
    },
    QcoreProperties {
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default = "default_max_qubits")]
        max_qubits: usize,
    },
}

fn default_epsilon() -> f64 {
    0.1
}

fn one() -> usize {
    1
}

fn default_samples() -> usize {
    500
}

fn default_max_qubits() -> usize {
    3
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Ghz { .. } => "ghz",
            Experiment::Dqct { .. } => "dqct",
            Experiment::CompilePipeline { .. } => "compile-pipeline",
            Experiment::Optimize { .. } => "optimize",
            Experiment::DamBruteForce { .. } => "dam-brute-force",
            Experiment::QcoreProperties { .. } => "qcore-properties",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSpec {
    Path { nodes: usize },
    Cycle { nodes: usize },
    Star { nodes: usize },
    Custom { nodes: usize, edges: Vec<(usize, usize)> },
}

impl GraphSpec {
    pub fn build(&self) -> Result<NetworkGraph> {
        let line = |n: usize| (1..n).map(|i| (i - 1, i)).collect::<Vec<_>>();
        match self {
            GraphSpec::Path { nodes } => build_network(*nodes, &line(*nodes), Vec::new()),
            GraphSpec::Cycle { nodes } => {
                if *nodes < 3 {
                    return Err(Error::Config("a cycle needs at least 3 nodes".into()));
                }
                let mut e = line(*nodes);
                e.push((nodes - 1, 0));
                build_network(*nodes, &e, Vec::new())
            }
            GraphSpec::Star { nodes } => {
                let e: Vec<_> = (1..*nodes).map(|i| (0, i)).collect();
                build_network(*nodes, &e, Vec::new())
            }
            GraphSpec::Custom { nodes, edges } => build_network(*nodes, edges, Vec::new()),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GhzStrategy {
    #[default]
    Honest,
    /// Sends `|0...0>` on every copy.
    Unentangled,
    /// Honest states, flipped first parity label.
    WrongParity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    Random,
    Equal,
    Orthogonal,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Instance {
    #[default]
    Yes,
    No,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PipelineStep {
    Pad { turns: usize },
    HalveShared,
    HalvePrivate,
    SevenToFive,
    PerfectCompleteness,
    Repeat { copies: usize, mode: RepetitionMode },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSettings {
    /// Private prover register; defaults to the protocol's own size.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prover_qubits: Option<usize>,
    #[serde(default = "default_sweeps")]
    pub sweeps: usize,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_tol")]
    pub convergence_tol: f64,
}

fn default_sweeps() -> usize {
    30
}

fn default_restarts() -> usize {
    3
}

fn default_tol() -> f64 {
    1e-10
}

impl OptimizerSettings {
    pub fn config(&self, seed: u64, default_qubits: usize) -> OptimizerConfig {
        OptimizerConfig {
            prover_qubits: self.prover_qubits.unwrap_or(default_qubits),
            sweeps: self.sweeps,
            restarts: self.restarts,
            seed,
            convergence_tol: self.convergence_tol,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid experiment config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn stem(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.experiment.kind().to_string())
    }
}

/// Independent seed for one call site, derived from the config seed.
pub fn substream(seed: u64, label: &str) -> u64 {
    // FNV-1a of the label, then a SplitMix64 finalizer
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    let mut z = seed ^ h;
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_config() {
        let c = ExperimentConfig::from_json(
            r#"{"experiment": {"kind": "ghz", "graph": {"family": "path", "nodes": 3}, "copies": 2}}"#,
        )
        .unwrap();
        assert_eq!(c.stem(), "ghz");
        assert_eq!(c.mode, Mode::Exact);
        assert_eq!(c.trials, 10_000);
    }

    #[test]
    fn unknown_fields_are_named() {
        let e = ExperimentConfig::from_json(
            r#"{"experiment": {"kind": "ghz", "graph": {"family": "path", "nodes": 3}, "copies": 2, "colour": 1}}"#,
        )
        .unwrap_err();
        assert_eq!(e.kind(), "config");
        assert!(e.to_string().contains("colour"), "{e}");
    }

    #[test]
    fn substreams_differ() {
        assert_ne!(substream(1, "a"), substream(1, "b"));
        assert_ne!(substream(1, "a"), substream(2, "a"));
        assert_eq!(substream(5, "x"), substream(5, "x"));
    }
}
