//! File formats and command implementations for the `pdhg` binary.

pub mod commands;
pub mod io;
pub mod mps;
