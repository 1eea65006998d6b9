//! Consensus through communication: partition lattices, message functions,
//! communication graphs and dialogues run to a fixed point, over finite state
//! sets and over eventually periodic partitions of the positive integers.

pub mod engine;
pub mod error;
pub mod fixtures;
pub mod graph;
pub mod harness;
pub mod lattice;
pub mod messages;
pub mod ordinal;
pub mod scenario;
pub mod symbolic;
pub mod trace;

pub use error::{Error, Result};
