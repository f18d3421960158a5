//! Time-dependent random unitary channels: qubit Pauli channels and their
//! N-level Weyl-covariant generalization, with analytic classifiers for
//! CP-divisibility, information-flow monotonicity, and entropy monotonicity,
//! cross-checked by brute-force numerical oracles.

pub mod denmat;
pub mod error;
pub mod oracle;
pub mod qubit;
pub mod rate;
pub mod report;
pub mod weyl;

pub use error::{Error, Result};
