//! Noisy majority-vote maps on the Cantor set.
//!
//! The crate is split the way the computations are: [`meanfield`] holds the
//! scalar fixed-point analysis, [`maps`] the procedural map algebra,
//! [`engine`] the seeded Monte Carlo, [`oracle`] exact small-scale answers
//! and [`scan`] the phase-diagram sweep built on top of them.

pub mod binomial;
pub mod engine;
pub mod error;
pub mod maps;
pub mod meanfield;
pub mod oracle;
pub mod rational;
pub mod scan;

pub use error::{Error, Result};
