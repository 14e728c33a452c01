//! Numerical laboratory for strictly hyperbolic systems with singular coefficients.

pub mod assoc;
pub mod epsnets;
pub mod error;
pub mod evolve;
pub mod garding;
pub mod mollify;
pub mod problems;
pub mod reduction;
pub mod symbolgrid;
pub mod symmetriser;

pub use error::{HypnetError, Result};
