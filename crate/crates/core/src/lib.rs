//! Verification toolkit for explicit principal half-eigenpairs of the Pucci
//! maximal operator on double-pyramidal domains in three dimensions.

pub mod cli;
pub mod eigenfield;
pub mod error;
pub mod fdsolve;
pub mod geometry;
pub mod measure;
pub mod quad;
pub mod rng;
pub mod symmat;
pub mod verifier;

pub use error::{Error, Result};
