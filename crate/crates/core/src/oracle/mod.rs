//! Brute-force many-body reference implementation used to cross-check the covariance
//! formalism.

mod compare;
pub mod dense;
pub mod states;

pub use compare::{compare_random_slater, Comparison};
pub use dense::{
    dense_gap_parts, dense_markov_gap, dense_rdm, dense_reflected_entropy, slater_statevector, DenseDensity,
    DenseGapParts, DenseState, Statistics,
};
pub use states::{ghz, random_sots, toric_sots_state, triangle_state, w_state, Tripartite};
