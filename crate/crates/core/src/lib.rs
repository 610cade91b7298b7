//! Numerics for time-dependent Hamiltonian simulation at desk scale.
//!
//! The central object is the averaged-exponential (qHOP) step: on each
//! segment the time-ordered propagator is replaced by the plain exponential
//! of a quadrature average of `H(t)`, which trades time-ordering for a
//! commutator-sized local error and is insensitive to how fast `H(t)`
//! oscillates. The crate provides that step in the Schrödinger and
//! interaction pictures, the baselines it is compared against (first- and
//! second-order Trotter, first-order truncated Dyson, continuous qDRIFT),
//! matrix-level block-encoding emulation of the select/average circuits,
//! empirical bound checks, and query-count estimators derived from the
//! commutator scaling of the local error.

pub mod block_encoding;
pub mod bounds;
pub mod error;
pub mod hamiltonian;
pub mod operator;
pub mod propagator;
pub mod qdrift;
pub mod quadrature;
pub mod random;
pub mod resources;

pub use error::{Error, Result};
