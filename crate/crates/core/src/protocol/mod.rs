//! Turn scripts for distributed interactive proofs and their execution.

mod exec;
mod expr;
mod random;
mod spec;
mod strategy;

pub use exec::{
    acceptance_probability, accepted_reduced_state, execute_exact, execute_sampled,
    final_branches, initial_amplitudes, pre_verification_states, verification_operator,
    verification_projector, wilson_interval, CoinPolicy, FinalBranch, PreVerification, RunMetadata,
    RunMode, RunReport, PROJECTOR_QUBIT_LIMIT,
};
pub use expr::{Atom, BoolExpr, Check};
pub use random::{random_spec, random_strategy, RandomSpecConfig};
pub use spec::{
    ClassicalVar, InitialState, LocalOp, NodeCheck, ProtocolSpec, ProverTurn, SpecInfo, Turn,
    VarOwner, VerificationPhase, VerifierStep, VerifierTurn,
};
pub use strategy::{ProverMove, ProverOp, ProverResponse, ProverStrategy};

pub(crate) use exec::{unwind, Leaf, Visitor, Walker};
