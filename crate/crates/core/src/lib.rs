//! Primal-dual hybrid gradient (PDHG) for linear programs, with
//! infeasibility certificates extracted from the iterates, fixed-point
//! diagnostics and an exact rational feasibility oracle for tiny instances.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! timing live in the `pdhg-cli` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod certificates;
pub mod demos;
pub mod error;
pub mod identifiability;
pub mod linalg;
pub mod model;
pub mod operator_lab;
pub mod oracle;
pub mod pdhg;

pub use error::{Error, Result};
pub use linalg::{SparseMatrix, StepSizes};
pub use model::{GeneralFormLp, StandardFormLp, VariableKind};
pub use pdhg::{run, PdhgConfig, PdhgState, SolveOutcome, Status};
