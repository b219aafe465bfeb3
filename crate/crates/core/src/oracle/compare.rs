use rand::seq::SliceRandom;
use rand::Rng;

use super::dense::{dense_gap_parts, slater_statevector};
use crate::error::Result;
use crate::gaussian::{markov_gap_parts, CovarianceMatrix, GapParts, ModeMask, ENTROPY_EPS};
use crate::random::{random_orbitals, seeded_rng};

/// Gaussian and dense entropies of one random Slater state.
#[derive(Clone, Debug)]
pub struct Comparison {
    pub n_modes: usize,
    pub a: ModeMask,
    pub b: ModeMask,
    pub gaussian: GapParts,
    pub dense: GapParts,
}

impl Comparison {
    /// Largest absolute difference over `S_A, S_B, S_AB, S_R, I, h`.
    pub fn max_deviation(&self) -> f64 {
        let (g, d) = (&self.gaussian, &self.dense);
        [
            g.s_a - d.s_a,
            g.s_b - d.s_b,
            g.s_ab - d.s_ab,
            g.reflected - d.reflected,
            g.mutual_information() - d.mutual_information(),
            g.markov_gap() - d.markov_gap(),
        ]
        .iter()
        .fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Random Slater state on 6 to 8 modes with random regions A and B of up to 3 modes.
pub fn compare_random_slater(seed: u64) -> Result<Comparison> {
    let mut rng = seeded_rng(seed);
    let n = rng.random_range(6..=8);
    let filled = rng.random_range(1..n);
    let psi = random_orbitals(n, filled, &mut rng);
    let mut modes: Vec<usize> = (0..n).collect();
    modes.shuffle(&mut rng);
    let na = rng.random_range(1..=3);
    let nb = rng.random_range(1..=3);
    let a = ModeMask::from_indices(modes[..na].iter().copied());
    let b = ModeMask::from_indices(modes[na..na + nb].iter().copied());
    let gaussian = markov_gap_parts(&CovarianceMatrix::from_orbitals(&psi)?, &a, &b, ENTROPY_EPS)?;
    let d = dense_gap_parts(&slater_statevector(&psi)?, &a, &b)?;
    let dense = GapParts { s_a: d.s_a, s_b: d.s_b, s_ab: d.s_ab, reflected: d.reflected };
    Ok(Comparison { n_modes: n, a, b, gaussian, dense })
}
