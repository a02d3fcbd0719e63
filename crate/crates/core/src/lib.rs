//! Exact and Monte Carlo indistinguishability metrics for random permutations
//! (total variation, separation, nCPA and CCA advantage), finite Markov chain
//! tools, and the swap-or-not shuffle with its tilde relaxation.

pub mod bounds;
pub mod cca;
pub mod cli;
pub mod error;
pub mod gf2;
pub mod markov;
pub mod mc;
pub mod perm;
pub mod prob;
pub mod report;
pub mod swapnot;

pub use error::{Error, Result};
pub use prob::{Dist, Probability, Rational};
