//! Learning discrete Bayesian networks whose CPTs carry local structure.
//!
//! Networks are scored by minimum description length (or a Dirichlet marginal
//! likelihood) over both the graph and each family's CPT representation: a full
//! table, a default table or a decision tree. Structure search is greedy hill
//! climbing over edge additions, removals and reversals.

pub mod bde;
pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod fixtures;
pub mod localfit;
pub mod mdl;
pub mod model;
pub mod rng;
pub mod search;

pub use error::{Error, Result};
