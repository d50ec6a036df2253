//! Energy-minimal base-station placement for microwave backhaul networks.
//!
//! The crate folds location-dependent demand into a single terminal density
//! ([`density`]), evaluates intra-cell and inter-cell transmit power under
//! free-space path loss ([`power`]), optimizes finite placements by alternating
//! cell assignment and closed-form position updates ([`placement`]), and solves
//! the one-dimensional asymptotic placement-density problem ([`continuum`]).
//! [`oracle`] holds brute-force cross-checks that share no code with the
//! solvers.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod continuum;
pub mod density;
pub mod error;
pub mod exec;
pub mod oracle;
pub mod placement;
pub mod power;
pub mod quadrature;
pub mod scenario;

pub use error::{Error, Result};
pub use exec::Execution;
