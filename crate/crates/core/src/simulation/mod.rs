//! Data generators, sparse-alternative scenarios and experiment harnesses.

mod experiments;
mod generators;
mod scenario;

pub use experiments::*;
pub use generators::*;
pub use scenario::*;
