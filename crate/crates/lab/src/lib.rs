//! Study runner around `qhop_core`: reproduces the desk-scale comparison
//! studies (commutator scaling scan, step-size convergence, grid-size
//! scaling, wavepacket frequency sweep, bound verification) and the
//! formula-level resource estimates, emitting deterministic CSV/JSON.

pub mod config;
pub mod error;
pub mod expr;
pub mod report;
pub mod runner;

pub use config::{Method, RunConfig};
pub use error::{LabError, Result};
pub use report::{Metric, ResultRow, RunOutput};
pub use runner::RunOptions;
