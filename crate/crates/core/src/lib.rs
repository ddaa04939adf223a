//! Certification and learning of local Hamiltonians and their Gibbs states,
//! with exact dense oracles for every quantity the protocols estimate.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod linalg;
pub mod pauli;

pub use error::{Error, Result};
pub mod hamiltonian;
pub mod oracle;
pub mod net;
pub mod stabilizer;
pub mod dynamics;
pub mod identity;
pub mod certifier;
pub mod shadows;
pub mod gibbs;
pub mod constants;
pub mod harness;
