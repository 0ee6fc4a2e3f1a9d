//! Desk-scale simulation of the quantum reductions between Learning With
//! Errors and the extrapolated dihedral coset problem (EDCP).
//!
//! The crate is organized around a sparse complex statevector simulator
//! ([`statevector`]) over a product of one bounded-support integer register
//! and finitely many `Z_N` registers. On top of it sit instance generators
//! for LWE/DCP/EDCP ([`edcp`]), the reduction algorithms in both directions
//! together with all EDCP-variant conversions ([`reductions`]), and
//! brute-force classical solvers that close the verification loop
//! ([`oracles`]). The [`experiments`] module drives seeded, reproducible
//! statistical experiments over all of the above and is what the
//! `dihedral-bridge` CLI and the Python bindings call into.
//!
//! Everything is deterministic given a seed: randomness is always an
//! explicitly passed ChaCha generator, and experiment trials derive their
//! seeds by a splitmix fan-out so results are independent of the worker
//! pool size.

pub mod edcp;
pub mod error;
pub mod experiments;
pub mod gaussian;
pub mod oracles;
pub mod qary;
pub mod reductions;
pub mod rng;
pub mod statevector;
pub mod stats;

pub use error::{Error, Result};
