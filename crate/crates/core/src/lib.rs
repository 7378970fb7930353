//! Exact causal mediation analysis over finite structural causal models.
//!
//! Every quantity is computed by exhaustive enumeration of exogenous
//! configurations: counterfactual joints, nested effects (natural,
//! interventional, separable, joint-mediator and path-specific), the
//! observational identification functionals, and numerical checks of the
//! independence and isolation assumptions those functionals rely on.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! parallel drivers live in the companion `mediation` crate.

#![no_std]

extern crate alloc;

#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod assumptions;
pub mod counterfactual;
pub mod error;
pub mod estimands;
pub mod estimation;
pub mod fixtures;
pub mod flowchart;
pub mod generate;
pub mod graph;
pub mod identification;
pub mod scm;
pub mod search;
pub mod table;

pub use error::{Error, Result};
pub use scm::{FiniteScm, Intervention, Role, ScmBuilder};

/// Absolute tolerance for every equality between exact probabilities.
pub const EPS_NUM: f64 = 1e-9;
