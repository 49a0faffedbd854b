//! Single-qubit wire cutting with non-maximally entangled resource states.
//!
//! A wire is replaced by a quasiprobability mixture of teleportation through
//! `Phi^k = K(|00> + k|11>)` and a measure-and-prepare flip channel. The
//! crate provides a small density-matrix simulator, the decompositions, a
//! shot-based estimator and a reproducible experiment sweep.

pub mod channels;
pub mod cli;
pub mod error;
pub mod estimator;
pub mod experiment;
pub mod format;
pub mod linalg;
pub mod qpd;
pub mod states;

pub use error::{Error, Result};
