//! Deterministic approximate transshipment.

pub mod error;
pub mod exact;
pub mod gen;
pub mod graph;
pub mod io;
pub mod layers;
pub mod oracle;
pub mod approx;
pub mod boost;
