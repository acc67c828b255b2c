pub mod cli;
pub mod error;
pub mod experiments;
pub mod optics;
pub mod semantics;
pub mod statevec;
pub mod stats;

pub use error::{Error, Result};
