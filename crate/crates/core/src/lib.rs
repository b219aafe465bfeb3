//! Markov gap `h = S_R - I` of free-fermion lattice ground states.
//!
//! [`gaussian`] evaluates entropies, reflected entropy and the Markov gap from covariance
//! matrices; [`models`] builds Hofstadter-type ground states; [`geometry`] lays out the
//! tripartition and smoother supports; [`optimizer`] lowers `h` over Gaussian smoother
//! unitaries; [`oracle`] is a brute-force state-vector reference for cross-checks.

pub mod error;
pub mod experiment;
pub mod gaussian;
pub mod geometry;
pub mod linalg;
pub mod models;
pub mod optimizer;
pub mod oracle;
pub mod random;

pub use error::{Error, Result};
pub use gaussian::{CovarianceMatrix, ModeMask};
