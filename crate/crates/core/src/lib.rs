//! Hypercontractivity ribbons for bipartite quantum states.
//!
//! The crate computes Schatten-type norms of completely positive maps,
//! the hypercontractivity ribbon of a bipartite density matrix, maximal
//! correlation, and the impossibility tests for local transformations
//! that follow from ribbon monotonicity.
//!
//! ```
//! use qribbon::{channels, correlation};
//!
//! let rho = channels::bell_depolarized(0.5).unwrap();
//! let mu = correlation::max_correlation(&rho).unwrap().mu;
//! assert!((mu - 0.5).abs() < 1e-9);
//! ```

pub mod channels;
pub mod cli;
pub mod correlation;
pub mod error;
pub mod matcore;
pub mod opnorms;
mod optim;
pub mod ribbon;
pub mod rng;
pub mod schatten;
pub mod transform;

pub use channels::{BipartiteState, SuperOp, TildeParams};
pub use error::{Error, Result};
pub use matcore::ComplexMatrix;
pub use opnorms::{Bound, NormEstimate};
pub use schatten::{OptimizerOpts, PValue};
