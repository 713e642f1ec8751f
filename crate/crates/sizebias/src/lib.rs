//! Multivariate size-biased couplings and the concentration bounds they imply.
//!
//! The crate has three layers:
//!
//! * exact machinery over rational arithmetic: finite joint distributions
//!   ([`model`]), directional size biasing, and a brute-force enumeration
//!   oracle ([`oracle`]) that produces exact laws, coupling radii, and tail
//!   probabilities for small models;
//! * coupling constructions: independent coordinates and local dependence
//!   ([`couplings`]), and circular pattern counts in random permutations
//!   ([`patterns`]);
//! * floating-point evaluation of the sub-gaussian tail bounds ([`bounds`])
//!   and a seeded, worker-count-invariant Monte Carlo harness ([`harness`])
//!   that verifies the size-bias identity, the radius bound, and the tail
//!   bounds at scales the oracle cannot reach.
//!
//! All public direction and permutation indices are 1-based.

// positivity guards are written `!(x > 0.0)` so NaN fails them too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod couplings;
pub mod error;
pub mod harness;
pub mod model;
pub mod modelspec;
pub mod oracle;
pub mod patterns;
pub mod rational;

pub use error::Error;
pub use model::{MomentSummary, Pmf};

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
