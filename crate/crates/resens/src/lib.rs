//! Differentially private release of conjunctive-query result sizes.
//!
//! The pipeline: parse a conjunctive query (self-joins, inequality and
//! comparison predicates, optional projection), evaluate its boundary
//! multiplicities T_E on an instance, combine them into the residual
//! sensitivity RS, and calibrate general-Cauchy noise to RS/beta.
//! Brute-force oracles ([`oracle`]) provide independent ground truth for
//! every sensitivity quantity on tiny instances.

pub mod agm;
#[cfg(feature = "elastic")]
pub mod elastic;
pub mod engine;
mod error;
pub mod mech;
pub mod oracle;
pub mod query;
pub mod sensitivity;
pub mod store;

pub use error::{Error, Result};
pub use oracle::OracleGuard;
