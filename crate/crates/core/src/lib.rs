//! Estimating treatment spillovers on networks when some units have no
//! neighbors.
//!
//! The crate is organised bottom-up:
//!
//! - [`graph`]: undirected interference networks, generators and degree moments.
//! - [`exposure`]: randomized treatment, treated-neighbor counts and fractions.
//! - [`dgp`]: degree-indexed outcome designs and outcome simulation.
//! - [`estimators`]: OLS and the three spillover regressions.
//! - [`oracle`]: closed-form population coefficients and an exhaustive
//!   enumeration oracle for small graphs.
//! - [`montecarlo`]: repeated simulation and aggregation.
//! - [`audit`]: diagnosing an observed dataset for imputation bias.

pub mod audit;
pub mod dgp;
pub mod error;
pub mod estimators;
pub mod exposure;
pub mod graph;
pub mod montecarlo;
pub mod oracle;
pub mod rng;

pub use error::{Error, Result};
