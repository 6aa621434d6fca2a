pub mod cli;
pub mod corpus;
pub mod dsl;
pub mod error;
pub mod matcher;
pub mod metrics;
pub mod ontology;
pub mod rng;
pub mod semilogic;
pub mod significance;
pub mod synth;
pub mod tracker;

pub use error::{Error, Location, Result};
