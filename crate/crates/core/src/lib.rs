//! Lower and upper hitting probabilities for imprecise Markov chains.
//!
//! An imprecise Markov chain is described by a credal set of transition
//! matrices with separately specified rows. This crate computes the tight
//! lower and upper probabilities of ever reaching a target set, classifies
//! the states whose bounds are trivially zero, and provides independent
//! oracles and random instance generators for checking the algorithms.

pub mod credal;
pub mod error;
pub mod experiments;
pub mod imprecise;
pub mod instance;
pub mod markov;
pub mod oracle;
pub mod precise;
pub mod reachability;

pub use error::{Error, Result};
