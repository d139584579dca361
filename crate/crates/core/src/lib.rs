pub mod addressing;
pub mod analysis;
pub mod automaton;
pub mod cli;
pub mod error;
pub mod faults;
pub mod simulate;
pub mod tessellation;

pub use error::{Error, Result};
