//! Partitions of the positive integers and dialogues indexed by ordinals below ω².

pub mod oracle;
pub mod periodic;
pub mod transfinite;

pub use oracle::{limit_agrees_eventually, truncation_oracle, truncation_oracle_from, TruncationReport};
pub use periodic::{BlockDescriptor, BlockKey, InfiniteBlock, PeriodicPartition, ValidityCertificate};
pub use transfinite::{
    detect_shift_certificate, limit_profile, run_transfinite, symbolic_apply_g, ShiftCertificate,
    SymbolicProfile, SymbolicScenario, SymbolicStage, SymbolicTrace,
};
