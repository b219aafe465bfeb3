//! Named qubit states used as Markov-gap fixtures.

use ndarray::Array1;
use num_complex::Complex64;
use rand::Rng;

use super::dense::{DenseState, Statistics};
use crate::error::Result;
use crate::gaussian::ModeMask;
use crate::random::random_complex_matrix;

/// A pure state with a labelled tripartition.
#[derive(Clone, Debug)]
pub struct Tripartite {
    pub state: DenseState,
    pub a: ModeMask,
    pub b: ModeMask,
    pub c: ModeMask,
}

pub fn ghz(n: usize) -> Result<DenseState> {
    let mut amps = Array1::zeros(1usize << n);
    amps[0] = Complex64::new(1.0, 0.0);
    amps[(1usize << n) - 1] = Complex64::new(1.0, 0.0);
    DenseState::normalized(n, amps, Statistics::Qubit)
}

pub fn w_state(n: usize) -> Result<DenseState> {
    let mut amps = Array1::zeros(1usize << n);
    for i in 0..n {
        amps[1usize << i] = Complex64::new(1.0, 0.0);
    }
    DenseState::normalized(n, amps, Statistics::Qubit)
}

/// Single-qubit parties A = {0}, B = {1}, C = {2}.
pub fn single_qubit_parties() -> (ModeMask, ModeMask, ModeMask) {
    (
        ModeMask::from_indices([0]),
        ModeMask::from_indices([1]),
        ModeMask::from_indices([2]),
    )
}

/// Three Bell pairs on six qubits: A = {0, 5}, B = {1, 2}, C = {3, 4}, with pairs
/// (0,1), (2,3), (4,5).
pub fn triangle_state() -> Result<Tripartite> {
    let mut amps = Array1::zeros(1 << 6);
    for bits in 0..8usize {
        let (p, q, r) = (bits & 1, bits >> 1 & 1, bits >> 2 & 1);
        let idx = p | p << 1 | q << 2 | q << 3 | r << 4 | r << 5;
        amps[idx] = Complex64::new(1.0, 0.0);
    }
    Ok(Tripartite {
        state: DenseState::normalized(6, amps, Statistics::Qubit)?,
        a: ModeMask::from_indices([0, 5]),
        b: ModeMask::from_indices([1, 2]),
        c: ModeMask::from_indices([3, 4]),
    })
}

/// Number of qubits in each of the six toric-code boundary segments.
const SEGMENT: usize = 3;

/// Six-qubit pair block `|XY(s)>` between the right segment of X (qubits `base..base+3`)
/// and the left segment of Y (qubits `base+3..base+6`), as (qubit, value) assignments
/// for the branch `(s, q)`.
fn pair_bits(base: usize, s: usize, q: usize) -> usize {
    let vals = [s, q, q ^ s];
    let mut bits = 0;
    for (k, &v) in vals.iter().enumerate() {
        bits |= v << (base + k);
        bits |= v << (base + SEGMENT + k);
    }
    bits
}

/// Reduced toric-code ground state on 18 qubits: three pair blocks AB, BC, CA, each made
/// of an `s` pair plus `q` and `q xor s` pairs summed over `q`, glued by a shared `s`.
///
/// Qubits `0..6` hold (A_R, B_L), `6..12` hold (B_R, C_L), `12..18` hold (C_R, A_L).
pub fn toric_sots_state() -> Result<Tripartite> {
    let mut amps = Array1::zeros(1usize << 18);
    for s in 0..2 {
        for q in 0..8usize {
            let idx = pair_bits(0, s, q & 1) | pair_bits(6, s, q >> 1 & 1) | pair_bits(12, s, q >> 2 & 1);
            amps[idx] += Complex64::new(1.0, 0.0);
        }
    }
    Ok(Tripartite {
        state: DenseState::normalized(18, amps, Statistics::Qubit)?,
        a: ModeMask::from_indices((0..3).chain(15..18)),
        b: ModeMask::from_indices((3..9).collect::<Vec<_>>()),
        c: ModeMask::from_indices((9..15).collect::<Vec<_>>()),
    })
}

/// `|XY(s)>` on its own six qubits, for orthogonality checks.
pub fn toric_pair_block(s: usize) -> Result<DenseState> {
    let mut amps = Array1::zeros(1 << 6);
    for q in 0..2 {
        amps[pair_bits(0, s, q)] = Complex64::new(1.0, 0.0);
    }
    DenseState::normalized(6, amps, Statistics::Qubit)
}

/// Random sum of triangle states: each party holds a branch qubit (copies of a shared
/// classical label `s`) plus one qubit per pair leg; for each branch the three legs carry
/// independent random two-qubit states, weighted by random branch amplitudes.
///
/// Layout: A = {0, 3, 8}, B = {1, 4, 5}, C = {2, 6, 7}; pairs (3,4) AB, (5,6) BC, (7,8) CA.
pub fn random_sots<R: Rng + ?Sized>(rng: &mut R) -> Result<Tripartite> {
    let mut amps = Array1::<Complex64>::zeros(1 << 9);
    let weights = random_complex_matrix(2, 1, rng);
    for s in 0..2usize {
        let pairs: Vec<_> = (0..3).map(|_| random_complex_matrix(2, 2, rng)).collect();
        let pos = [(3, 4), (5, 6), (7, 8)];
        for bits in 0..64usize {
            let mut amp = weights[[s, 0]];
            let mut idx = s | s << 1 | s << 2;
            for (k, &(i, j)) in pos.iter().enumerate() {
                let (u, v) = (bits >> (2 * k) & 1, bits >> (2 * k + 1) & 1);
                amp *= pairs[k][[u, v]];
                idx |= u << i | v << j;
            }
            amps[idx] += amp;
        }
    }
    Ok(Tripartite {
        state: DenseState::normalized(9, amps, Statistics::Qubit)?,
        a: ModeMask::from_indices([0, 3, 8]),
        b: ModeMask::from_indices([1, 4, 5]),
        c: ModeMask::from_indices([2, 6, 7]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::dense::dense_markov_gap;
    use crate::random::seeded_rng;
    use std::f64::consts::LN_2;

    #[test]
    fn ghz_has_no_gap() {
        let (a, b, _) = single_qubit_parties();
        assert!(dense_markov_gap(&ghz(3).unwrap(), &a, &b).unwrap().abs() < 1e-10);
    }

    #[test]
    fn triangle_has_no_gap() {
        let t = triangle_state().unwrap();
        let h = dense_markov_gap(&t.state, &t.a, &t.b).unwrap();
        assert!(h.abs() < 1e-10);
    }

    #[test]
    fn w_state_regression() {
        let (a, b, _) = single_qubit_parties();
        let h = dense_markov_gap(&w_state(3).unwrap(), &a, &b).unwrap();
        assert!(h > 0.1);
        assert!((h - W_STATE_GAP).abs() < 1e-10, "{h:.16}");
    }

    /// Frozen output of the dense oracle for the three-qubit W state.
    const W_STATE_GAP: f64 = 0.394_899_304_632_295_7;

    #[test]
    fn toric_pair_blocks_are_orthogonal() {
        let b0 = toric_pair_block(0).unwrap();
        let b1 = toric_pair_block(1).unwrap();
        assert!(b0.inner(&b1).norm() < 1e-15);
    }

    #[test]
    fn random_sots_have_no_gap() {
        let mut rng = seeded_rng(4);
        for _ in 0..5 {
            let t = random_sots(&mut rng).unwrap();
            assert!(dense_markov_gap(&t.state, &t.a, &t.b).unwrap().abs() < 1e-9);
        }
    }

    #[test]
    fn toric_regions_have_equal_entropy() {
        let t = toric_sots_state().unwrap();
        let sa = t.state.entanglement_entropy(&t.a).unwrap();
        let sb = t.state.entanglement_entropy(&t.b).unwrap();
        let sc = t.state.entanglement_entropy(&t.c).unwrap();
        assert!((sa - sb).abs() < 1e-10 && (sb - sc).abs() < 1e-10);
        // Two q-type legs each contribute log 2, the shared label another log 2.
        assert!((sa - 3.0 * LN_2).abs() < 1e-10, "{sa}");
    }
}
