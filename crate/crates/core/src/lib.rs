//! Heisenberg-limited laser models: exact master-equation observables and
//! their linearized closed forms.
//!
//! The generators of the p,λ-, p,q- and p-families act on each diagonal
//! ρ_{n+s,n} of the density matrix independently, so every observable reduces
//! to banded work on a single sector. See [`liouvillian::Liouvillian`].

pub mod analytics;
pub mod banded;
pub mod cli;
pub mod config;
pub mod correlations;
pub mod error;
pub mod filter;
pub mod liouvillian;
pub mod model;
pub mod output;
pub mod pr_ensemble;
pub mod propagate;
pub mod steady;

pub use error::{Error, Result};
pub use liouvillian::{Liouvillian, SectorOperator};
pub use model::{Family, LaserModel, Variant};
pub use steady::NumberDistribution;
