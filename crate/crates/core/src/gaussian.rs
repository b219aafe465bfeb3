//! Entanglement quantities of particle-number conserving Gaussian fermionic states,
//! computed from the covariance matrix `C_ij = <c†_i c_j>`.
//!
//! All entropies are in nats.

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, eigh, eigvalsh, CMat, Eigh};

/// Eigenvalue clamp used for entropy sums.
pub const ENTROPY_EPS: f64 = 1e-12;
/// Eigenvalue clamp used for the logarithm in entanglement Hamiltonians.
pub const HAMILTONIAN_EPS: f64 = 1e-8;

const HERMITIAN_TOL: f64 = 1e-12;
const CORRUPT_TOL: f64 = 1e-6;

/// Ordered set of mode indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModeMask(Vec<usize>);

impl ModeMask {
    /// Checked constructor: indices must be strictly increasing and below `dim`.
    pub fn new(indices: Vec<usize>, dim: usize) -> Result<Self> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Validation("mode mask must be strictly increasing".into()));
        }
        if let Some(&last) = indices.last() {
            if last >= dim {
                return Err(Error::Validation(format!(
                    "mode index {last} out of range for {dim} modes"
                )));
            }
        }
        Ok(Self(indices))
    }

    /// Sorts and deduplicates.
    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        let mut v: Vec<usize> = indices.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Self(v)
    }

    pub fn range(start: usize, end: usize) -> Self {
        Self((start..end).collect())
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, mode: usize) -> bool {
        self.0.binary_search(&mode).is_ok()
    }

    pub fn is_disjoint(&self, other: &ModeMask) -> bool {
        self.0.iter().all(|&m| !other.contains(m))
    }

    pub fn is_subset(&self, other: &ModeMask) -> bool {
        self.0.iter().all(|&m| other.contains(m))
    }

    pub fn union(&self, other: &ModeMask) -> ModeMask {
        Self::from_indices(self.0.iter().chain(other.0.iter()).copied())
    }

    pub fn difference(&self, other: &ModeMask) -> ModeMask {
        Self(self.0.iter().copied().filter(|&m| !other.contains(m)).collect())
    }

    pub fn shifted(&self, offset: usize) -> ModeMask {
        Self(self.0.iter().map(|m| m + offset).collect())
    }

    /// Positions of this mask's modes inside `outer`, i.e. the same modes relabelled
    /// in the index space of `restrict(C, outer)`.
    pub fn relabel_within(&self, outer: &ModeMask) -> Result<ModeMask> {
        self.0
            .iter()
            .map(|m| {
                outer.0.binary_search(m).map_err(|_| {
                    Error::Validation(format!("mode {m} is not part of the enclosing mask"))
                })
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }

    pub fn check_within(&self, dim: usize) -> Result<()> {
        match self.0.last() {
            Some(&last) if last >= dim => Err(Error::Validation(format!(
                "mode index {last} out of range for {dim} modes"
            ))),
            _ => Ok(()),
        }
    }
}

/// Hermitian covariance matrix of a Gaussian state.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceMatrix {
    entries: CMat,
}

impl CovarianceMatrix {
    /// Validates squareness and Hermiticity (to 1e-12) and stores the exactly
    /// Hermitian part. The spectrum is checked lazily by the entropy routines.
    pub fn new(entries: CMat) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::Validation(format!(
                "covariance must be square, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let defect = linalg::hermiticity_defect(&entries);
        if defect.is_nan() || defect > HERMITIAN_TOL {
            return Err(Error::Validation(format!(
                "covariance is not Hermitian (defect {defect:.3e})"
            )));
        }
        Ok(Self {
            entries: linalg::hermitian_part(&entries),
        })
    }

    /// Covariance of the Slater determinant whose orbitals are the (orthonormal)
    /// columns of `orbitals`: `<c†_i c_j> = Σ_k conj(ψ_ik) ψ_jk`.
    pub fn from_orbitals(orbitals: &CMat) -> Result<Self> {
        let gram = linalg::dagger(orbitals).dot(orbitals);
        let k = orbitals.ncols();
        if linalg::max_abs_diff(&gram, &CMat::eye(k)) > 1e-10 {
            return Err(Error::Validation("orbitals are not orthonormal".into()));
        }
        Self::new(linalg::conj(orbitals).dot(&orbitals.t()))
    }

    pub fn diagonal(occupations: &[f64]) -> Self {
        let n = occupations.len();
        let mut m = CMat::zeros((n, n));
        for (i, &o) in occupations.iter().enumerate() {
            m[[i, i]] = o.into();
        }
        Self { entries: m }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMat {
        &self.entries
    }

    pub fn into_entries(self) -> CMat {
        self.entries
    }

    /// Principal submatrix on `mask`, in mask order.
    pub fn restrict(&self, mask: &ModeMask) -> Result<CovarianceMatrix> {
        mask.check_within(self.dim())?;
        Ok(Self {
            entries: linalg::principal_submatrix(&self.entries, mask.indices()),
        })
    }

    /// `max |C² - C|`; zero for pure states.
    pub fn purity_defect(&self) -> f64 {
        linalg::max_abs_diff(&self.entries.dot(&self.entries), &self.entries)
    }

    pub fn is_pure(&self, tol: f64) -> bool {
        self.purity_defect() <= tol
    }

    pub fn spectrum(&self) -> Result<Array1<f64>> {
        eigvalsh(&self.entries)
    }

    /// Block-diagonal covariance of independent subsystems.
    pub fn direct_sum(parts: &[&CovarianceMatrix]) -> CovarianceMatrix {
        let blocks: Vec<&CMat> = parts.iter().map(|c| &c.entries).collect();
        Self {
            entries: linalg::direct_sum(&blocks),
        }
    }

    /// `u C u†`.
    pub fn conjugate_by(&self, u: &CMat) -> Result<CovarianceMatrix> {
        Self::new(u.dot(&self.entries).dot(&linalg::dagger(u)))
    }
}

/// Single-particle entanglement Hamiltonian `log((I - C) / C)`.
#[derive(Clone, Debug)]
pub struct EntanglementHamiltonian {
    entries: CMat,
}

impl EntanglementHamiltonian {
    pub(crate) fn from_entries(entries: CMat) -> Self {
        Self { entries }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMat {
        &self.entries
    }

    pub fn into_entries(self) -> CMat {
        self.entries
    }
}

/// Covariance of the canonical purification,
/// `[[C, K], [K, I - C]]` with `K = sqrt(C (I - C))`. The primed copy of mode `i` is
/// mode `base_dim + i`.
#[derive(Clone, Debug)]
pub struct ReflectedCovariance {
    base_dim: usize,
    entries: CMat,
}

impl ReflectedCovariance {
    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn entries(&self) -> &CMat {
        &self.entries
    }

    pub fn off_diagonal(&self) -> CMat {
        let n = self.base_dim;
        self.entries.slice(ndarray::s![0..n, n..2 * n]).to_owned()
    }

    /// Mask `A ∪ A'` for a mask `A` of the unprimed modes.
    pub fn doubled_mask(&self, a: &ModeMask) -> ModeMask {
        a.union(&a.shifted(self.base_dim))
    }

    /// Covariance restricted to `A ∪ A'`.
    pub fn restrict_doubled(&self, a: &ModeMask) -> Result<CovarianceMatrix> {
        a.check_within(self.base_dim)?;
        let mask = self.doubled_mask(a);
        Ok(CovarianceMatrix {
            entries: linalg::principal_submatrix(&self.entries, mask.indices()),
        })
    }

    pub fn purity_defect(&self) -> f64 {
        linalg::max_abs_diff(&self.entries.dot(&self.entries), &self.entries)
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 1e-4) {
        return Err(Error::Validation(format!("eigenvalue clamp {eps} not in (0, 1e-4]")));
    }
    Ok(())
}

fn check_spectrum(values: &Array1<f64>) -> Result<()> {
    for &v in values {
        if !(-CORRUPT_TOL..=1.0 + CORRUPT_TOL).contains(&v) {
            return Err(Error::CorruptCovariance { value: v });
        }
    }
    Ok(())
}

/// Binary entropy `-λ log λ - (1-λ) log(1-λ)`, with eigenvalues within `eps` of 0 or 1
/// contributing nothing.
pub fn mode_entropy(lambda: f64, eps: f64) -> f64 {
    if lambda <= eps || lambda >= 1.0 - eps {
        0.0
    } else {
        -lambda * lambda.ln() - (1.0 - lambda) * (1.0 - lambda).ln()
    }
}

/// Entropy of a covariance spectrum.
pub fn entropy_of_spectrum(values: &Array1<f64>, eps: f64) -> Result<f64> {
    check_spectrum(values)?;
    Ok(values.iter().map(|&l| mode_entropy(l, eps)).sum())
}

/// `log((1-λ)/λ)` with `λ` clamped into `[eps, 1 - eps]`.
pub fn fermi_log_ratio(lambda: f64, eps: f64) -> f64 {
    let l = lambda.clamp(eps, 1.0 - eps);
    ((1.0 - l) / l).ln()
}

/// Entanglement Hamiltonian from an existing eigendecomposition of `C_A`.
pub fn entanglement_hamiltonian_from_eigh(e: &Eigh, eps: f64) -> Result<EntanglementHamiltonian> {
    check_eps(eps)?;
    check_spectrum(&e.values)?;
    Ok(EntanglementHamiltonian {
        entries: e.map(|l| fermi_log_ratio(l, eps)),
    })
}

pub fn entanglement_hamiltonian(c_a: &CovarianceMatrix, eps: f64) -> Result<EntanglementHamiltonian> {
    check_eps(eps)?;
    let e = eigh(c_a.entries())?;
    entanglement_hamiltonian_from_eigh(&e, eps)
}

/// Von Neumann entropy `-Tr(C log C + (I-C) log(I-C))`.
pub fn entropy(c_a: &CovarianceMatrix, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    entropy_of_spectrum(&c_a.spectrum()?, eps)
}

/// `I(A:B) = S(A) + S(B) - S(AB)`.
pub fn mutual_information(c: &CovarianceMatrix, a: &ModeMask, b: &ModeMask, eps: f64) -> Result<f64> {
    if !a.is_disjoint(b) {
        return Err(Error::Validation("regions A and B overlap".into()));
    }
    let ab = a.union(b);
    Ok(entropy(&c.restrict(a)?, eps)? + entropy(&c.restrict(b)?, eps)?
        - entropy(&c.restrict(&ab)?, eps)?)
}

/// Assemble `[[C, K], [K, I - C]]` from an eigendecomposition of `C_AB`.
pub fn reflected_covariance_from_eigh(e: &Eigh, eps: f64) -> ReflectedCovariance {
    let n = e.values.len();
    let k = e.map(|l| {
        let l = l.clamp(0.0, 1.0);
        if l <= eps || l >= 1.0 - eps {
            0.0
        } else {
            (l * (1.0 - l)).sqrt()
        }
    });
    let c = e.map(|l| l);
    let mut entries = CMat::zeros((2 * n, 2 * n));
    for i in 0..n {
        for j in 0..n {
            let delta = if i == j { linalg::ONE } else { linalg::ZERO };
            entries[[i, j]] = c[[i, j]];
            entries[[i, n + j]] = k[[i, j]];
            entries[[n + i, j]] = k[[i, j]];
            entries[[n + i, n + j]] = delta - c[[i, j]];
        }
    }
    ReflectedCovariance { base_dim: n, entries }
}

/// Covariance of the canonical purification of the state with covariance `C_AB`.
/// Eigenvalues within `eps` of 0 or 1 are treated as pinned and carry no correlation
/// with the copy.
pub fn reflected_covariance(c_ab: &CovarianceMatrix, eps: f64) -> Result<ReflectedCovariance> {
    check_eps(eps)?;
    let e = eigh(c_ab.entries())?;
    check_spectrum(&e.values)?;
    Ok(reflected_covariance_from_eigh(&e, eps))
}

/// `S_R(A:B)`: entropy of `A ∪ A'` in the canonical purification of `C_AB`. `a` indexes
/// modes of `c_ab`; `B` is the complement.
pub fn reflected_entropy(c_ab: &CovarianceMatrix, a: &ModeMask, eps: f64) -> Result<f64> {
    a.check_within(c_ab.dim())?;
    let r = reflected_covariance(c_ab, eps)?;
    entropy(&r.restrict_doubled(a)?, eps)
}

/// Markov gap `h(A:B) = S_R(A:B) - I(A:B)` of the state `C` for disjoint regions.
pub fn markov_gap(c: &CovarianceMatrix, a: &ModeMask, b: &ModeMask, eps: f64) -> Result<f64> {
    Ok(markov_gap_parts(c, a, b, eps)?.markov_gap())
}

/// The individual entropies that make up the Markov gap.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapParts {
    pub s_a: f64,
    pub s_b: f64,
    pub s_ab: f64,
    pub reflected: f64,
}

impl GapParts {
    pub fn mutual_information(&self) -> f64 {
        self.s_a + self.s_b - self.s_ab
    }

    pub fn markov_gap(&self) -> f64 {
        self.reflected - self.mutual_information()
    }
}

pub fn markov_gap_parts(c: &CovarianceMatrix, a: &ModeMask, b: &ModeMask, eps: f64) -> Result<GapParts> {
    check_eps(eps)?;
    if !a.is_disjoint(b) {
        return Err(Error::Validation("regions A and B overlap".into()));
    }
    let ab = a.union(b);
    let c_ab = c.restrict(&ab)?;
    let a_rel = a.relabel_within(&ab)?;
    let e_ab = eigh(c_ab.entries())?;
    check_spectrum(&e_ab.values)?;
    let s_ab = entropy_of_spectrum(&e_ab.values, eps)?;
    let s_a = entropy(&c.restrict(a)?, eps)?;
    let s_b = entropy(&c.restrict(b)?, eps)?;
    let r = reflected_covariance_from_eigh(&e_ab, eps);
    let reflected = entropy(&r.restrict_doubled(&a_rel)?, eps)?;
    Ok(GapParts { s_a, s_b, s_ab, reflected })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, ONE};
    use crate::random::*;
    use num_complex::Complex64;
    use std::f64::consts::LN_2;

    const E: f64 = ENTROPY_EPS;

    #[test]
    fn half_filling_has_zero_entanglement_hamiltonian() {
        let h = entanglement_hamiltonian(&CovarianceMatrix::diagonal(&[0.5, 0.5]), HAMILTONIAN_EPS).unwrap();
        assert!(linalg::max_abs(h.entries()) < 1e-14);
    }

    #[test]
    fn fermi_dirac_inverse() {
        let lam = 1.0 / (1.0 + std::f64::consts::E);
        let h = entanglement_hamiltonian(&CovarianceMatrix::diagonal(&[lam]), HAMILTONIAN_EPS).unwrap();
        assert!((h.entries()[[0, 0]].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn entanglement_hamiltonian_round_trip() {
        let mut rng = seeded_rng(1);
        let c = random_mixed_covariance(4, 0.05, &mut rng);
        let h = entanglement_hamiltonian(&c, HAMILTONIAN_EPS).unwrap();
        // Independent reconstruction: (I + exp(h))^{-1} through its own eigensolve.
        let back = eigh(h.entries()).unwrap().map(|x| 1.0 / (1.0 + x.exp()));
        assert!(max_abs_diff(&back, c.entries()) < 1e-10);
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&CovarianceMatrix::diagonal(&[0.0, 1.0, 0.0]), E).unwrap(), 0.0);
        assert!((entropy(&CovarianceMatrix::diagonal(&[0.5]), E).unwrap() - LN_2).abs() < 1e-15);
        let s = entropy(&CovarianceMatrix::diagonal(&[0.1, 0.9]), E).unwrap();
        assert!((s - 0.650_165_946_782_896_4).abs() < 1e-12, "{s}");
    }

    #[test]
    fn corrupt_and_invalid_inputs() {
        let c = CovarianceMatrix::diagonal(&[1.1]);
        assert!(matches!(entropy(&c, E), Err(Error::CorruptCovariance { .. })));
        assert!(matches!(
            entanglement_hamiltonian(&c, HAMILTONIAN_EPS),
            Err(Error::CorruptCovariance { .. })
        ));
        let mut m = CMat::eye(2);
        m[[0, 1]] = Complex64::new(0.1, 0.0);
        assert!(CovarianceMatrix::new(m).is_err());
        assert!(entropy(&CovarianceMatrix::diagonal(&[0.5]), 0.0).is_err());
        assert!(entropy(&CovarianceMatrix::diagonal(&[0.5]), 1e-3).is_err());
    }

    #[test]
    fn tiny_negative_eigenvalues_are_tolerated() {
        let c = CovarianceMatrix::diagonal(&[-1e-9, 1.0 + 1e-9]);
        assert_eq!(entropy(&c, E).unwrap(), 0.0);
    }

    #[test]
    fn mutual_information_examples() {
        let c = CovarianceMatrix::diagonal(&[0.3, 0.7]);
        let i = mutual_information(&c, &ModeMask::range(0, 1), &ModeMask::range(1, 2), E).unwrap();
        assert!(i.abs() < 1e-12);

        // Single particle shared by two modes: C = [[1/2, 1/2], [1/2, 1/2]].
        let c = CovarianceMatrix::new(CMat::from_elem((2, 2), ONE * 0.5)).unwrap();
        let i = mutual_information(&c, &ModeMask::range(0, 1), &ModeMask::range(1, 2), E).unwrap();
        assert!((i - 2.0 * LN_2).abs() < 1e-12);

        assert!(mutual_information(&c, &ModeMask::range(0, 2), &ModeMask::range(1, 2), E).is_err());
    }

    #[test]
    fn reflected_covariance_examples() {
        let r = reflected_covariance(&CovarianceMatrix::diagonal(&[0.0, 1.0]), E).unwrap();
        let expect = CovarianceMatrix::diagonal(&[0.0, 1.0, 1.0, 0.0]);
        assert!(max_abs_diff(r.entries(), expect.entries()) < 1e-15);

        let r = reflected_covariance(&CovarianceMatrix::diagonal(&[0.5]), E).unwrap();
        assert!(max_abs_diff(r.entries(), &CMat::from_elem((2, 2), ONE * 0.5)) < 1e-15);

        let mut rng = seeded_rng(5);
        let c = random_mixed_covariance(3, 0.01, &mut rng);
        let r = reflected_covariance(&c, E).unwrap();
        assert!(r.purity_defect() < 1e-9);
        // K is Hermitian positive semidefinite.
        let k = CovarianceMatrix::new(r.off_diagonal()).unwrap();
        assert!(k.spectrum().unwrap().iter().all(|&x| x > -1e-12));
    }

    #[test]
    fn reflected_entropy_examples() {
        let mut rng = seeded_rng(9);
        let c = random_pure_covariance(4, 2, &mut rng);
        let a = ModeMask::range(0, 2);
        let sr = reflected_entropy(&c, &a, E).unwrap();
        let sa = entropy(&c.restrict(&a).unwrap(), E).unwrap();
        assert!((sr - 2.0 * sa).abs() < 1e-8);

        let c = CovarianceMatrix::diagonal(&[0.5, 0.5]);
        assert!(reflected_entropy(&c, &ModeMask::range(0, 1), E).unwrap().abs() < 1e-10);
    }

    #[test]
    fn markov_gap_vanishes_for_pure_ab() {
        let mut rng = seeded_rng(21);
        for n in 2..7 {
            let c = random_pure_covariance(n, n / 2, &mut rng);
            let split = n / 2;
            let h = markov_gap(&c, &ModeMask::range(0, split), &ModeMask::range(split, n), E).unwrap();
            assert!(h.abs() < 1e-8, "n={n} h={h}");
        }
    }

    #[test]
    fn nonnegative_gap_and_parts_consistent() {
        let mut rng = seeded_rng(4);
        let c = random_pure_covariance(7, 3, &mut rng);
        let a = ModeMask::from_indices([0, 3]);
        let b = ModeMask::from_indices([1, 5]);
        let parts = markov_gap_parts(&c, &a, &b, E).unwrap();
        let i = mutual_information(&c, &a, &b, E).unwrap();
        assert!((parts.mutual_information() - i).abs() < 1e-12);
        let c_ab = c.restrict(&a.union(&b)).unwrap();
        let sr = reflected_entropy(&c_ab, &a.relabel_within(&a.union(&b)).unwrap(), E).unwrap();
        assert!((parts.reflected - sr).abs() < 1e-12);
        assert!(parts.markov_gap() > -1e-8);
    }

    #[test]
    fn mode_mask_rules() {
        assert!(ModeMask::new(vec![0, 2, 1], 4).is_err());
        assert!(ModeMask::new(vec![0, 0], 4).is_err());
        assert!(ModeMask::new(vec![0, 4], 4).is_err());
        let m = ModeMask::new(vec![1, 3], 4).unwrap();
        assert_eq!(m.union(&ModeMask::range(0, 2)).indices(), &[0, 1, 3]);
        assert_eq!(m.relabel_within(&ModeMask::range(1, 4)).unwrap().indices(), &[0, 2]);
        assert!(m.relabel_within(&ModeMask::range(0, 2)).is_err());
    }
}
