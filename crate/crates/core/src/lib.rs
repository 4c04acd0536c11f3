pub mod builder;
pub mod cut_matching;
pub mod decompose;
pub mod dimacs;
pub mod driver;
pub mod error;
pub mod expander;
pub mod flowfile;
pub mod graph;
pub mod hierarchy;
pub mod link_cut;
pub mod oracle;
pub mod profile;
pub mod push_relabel;
pub mod rounding;
pub mod scc;
pub mod shortcut;
pub mod sparse_cut;

pub use error::{Error, Result};
pub use graph::{CapGraph, CutResult, Demand, Edge, ScaledFlow};
