use markov_gap::gaussian::{self, CovarianceMatrix, ENTROPY_EPS};
use markov_gap::oracle::{dense_gap_parts, dense_rdm, dense_reflected_entropy, slater_statevector};
use markov_gap::random::{random_orbitals, seeded_rng};
use markov_gap::ModeMask;
use rand::seq::SliceRandom;
use rand::Rng;

#[test]
fn gap_parts_agree_on_random_slater_states() {
    let mut rng = seeded_rng(1001);
    for _ in 0..20 {
        let n = rng.random_range(6..=8);
        let filled = rng.random_range(1..n);
        let psi = random_orbitals(n, filled, &mut rng);
        let state = slater_statevector(&psi).unwrap();
        let cov = CovarianceMatrix::from_orbitals(&psi).unwrap();
        let mut modes: Vec<usize> = (0..n).collect();
        modes.shuffle(&mut rng);
        let na = rng.random_range(1..=3);
        let nb = rng.random_range(1..=3);
        let a = ModeMask::from_indices(modes[..na].iter().copied());
        let b = ModeMask::from_indices(modes[na..na + nb].iter().copied());
        let g = gaussian::markov_gap_parts(&cov, &a, &b, ENTROPY_EPS).unwrap();
        let d = dense_gap_parts(&state, &a, &b).unwrap();
        for (x, y) in [(g.s_a, d.s_a), (g.s_b, d.s_b), (g.s_ab, d.s_ab), (g.reflected, d.reflected)] {
            assert!((x - y).abs() < 1e-6, "{x} vs {y}");
        }
        assert!((g.markov_gap() - d.markov_gap()).abs() < 1e-6);
    }
}

#[test]
fn reflected_entropy_agrees_on_three_plus_three_modes() {
    let mut rng = seeded_rng(77);
    for _ in 0..5 {
        let psi = random_orbitals(9, 4, &mut rng);
        let state = slater_statevector(&psi).unwrap();
        let cov = CovarianceMatrix::from_orbitals(&psi).unwrap();
        let ab = ModeMask::range(0, 6);
        let rho = dense_rdm(&state, &ab).unwrap();
        let dense = dense_reflected_entropy(&rho, 3).unwrap();
        let gauss = gaussian::reflected_entropy(&cov.restrict(&ab).unwrap(), &ModeMask::range(0, 3), ENTROPY_EPS).unwrap();
        assert!((dense - gauss).abs() < 1e-6, "{dense} vs {gauss}");
    }
}
