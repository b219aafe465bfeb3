//! Exact state vectors over the occupation-number basis.
//!
//! Basis index bit `i` is the occupation of mode `i`. For fermions the basis state with
//! occupied modes `o_1 < o_2 < ...` is `c†_{o_1} c†_{o_2} ... |0>`, so `c†_j` picks up
//! the sign `(-1)^(number of occupied modes below j)`.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::ModeMask;
use crate::linalg::{self, eigh, eigvalsh, CMat, ZERO};

pub const MAX_FERMION_MODES: usize = 14;
pub const MAX_QUBITS: usize = 18;
/// Largest total mode count of any intermediate vector (the doubled purification).
const MAX_WORKING_MODES: usize = 26;
/// Spectral weights below this are dropped from dense entropies and square roots.
const SPECTRAL_FLOOR: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Statistics {
    Fermionic,
    Qubit,
}

#[derive(Clone, Debug)]
pub struct DenseState {
    n_modes: usize,
    amplitudes: Array1<Complex64>,
    statistics: Statistics,
}

#[inline]
fn below_parity(basis: usize, mode: usize) -> bool {
    (basis & ((1usize << mode) - 1)).count_ones() % 2 == 1
}

impl DenseState {
    pub fn new(n_modes: usize, amplitudes: Array1<Complex64>, statistics: Statistics) -> Result<Self> {
        if n_modes > MAX_WORKING_MODES {
            return Err(Error::Validation(format!("{n_modes} modes exceed the dense cap")));
        }
        if amplitudes.len() != 1usize << n_modes {
            return Err(Error::Validation(format!(
                "{} amplitudes for {n_modes} modes",
                amplitudes.len()
            )));
        }
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::Validation(format!("state norm {norm} != 1")));
        }
        Ok(Self { n_modes, amplitudes, statistics })
    }

    /// Normalizes before validating.
    pub fn normalized(n_modes: usize, mut amplitudes: Array1<Complex64>, statistics: Statistics) -> Result<Self> {
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Validation("zero vector".into()));
        }
        amplitudes.mapv_inplace(|z| z / norm);
        Self::new(n_modes, amplitudes, statistics)
    }

    pub fn vacuum(n_modes: usize, statistics: Statistics) -> Result<Self> {
        let mut amps = Array1::zeros(1usize << n_modes);
        amps[0] = Complex64::new(1.0, 0.0);
        Self::new(n_modes, amps, statistics)
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn amplitudes(&self) -> &Array1<Complex64> {
        &self.amplitudes
    }

    pub fn statistics(&self) -> Statistics {
        self.statistics
    }

    pub fn inner(&self, other: &DenseState) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Permute modes: new mode `k` is old mode `order[k]`. Fermionic amplitudes pick up
    /// the sign of reordering the creation string.
    pub fn reorder(&self, order: &[usize]) -> Result<DenseState> {
        let n = self.n_modes;
        let mut seen = vec![false; n];
        if order.len() != n || order.iter().any(|&m| m >= n || std::mem::replace(&mut seen[m], true)) {
            return Err(Error::Validation("reorder needs a permutation of all modes".into()));
        }
        let fermionic = self.statistics == Statistics::Fermionic;
        let mut out = Array1::zeros(self.amplitudes.len());
        for (old, &amp) in self.amplitudes.iter().enumerate() {
            if amp == ZERO {
                continue;
            }
            let mut new = 0usize;
            let mut inversions = 0u32;
            // Walk occupied modes in the new order; count previously seen larger modes.
            let mut seen_mask = 0usize;
            for (k, &m) in order.iter().enumerate() {
                if old >> m & 1 == 1 {
                    new |= 1 << k;
                    if fermionic {
                        inversions += (seen_mask >> (m + 1)).count_ones();
                    }
                    seen_mask |= 1 << m;
                }
            }
            out[new] = if inversions % 2 == 1 { -amp } else { amp };
        }
        Ok(DenseState {
            n_modes: n,
            amplitudes: out,
            statistics: self.statistics,
        })
    }

    /// Ordering that lists `keep` first (in mask order) followed by the rest.
    fn keep_first_order(&self, keep: &ModeMask) -> Result<Vec<usize>> {
        keep.check_within(self.n_modes)?;
        let mut order: Vec<usize> = keep.indices().to_vec();
        order.extend((0..self.n_modes).filter(|m| !keep.contains(*m)));
        Ok(order)
    }

    /// Amplitudes as a `2^(n-k) x 2^k` matrix, row = traced modes, column = kept modes.
    fn split_matrix(&self, keep: &ModeMask) -> Result<Array2<Complex64>> {
        let order = self.keep_first_order(keep)?;
        let st = self.reorder(&order)?;
        let k = keep.len();
        st.amplitudes
            .into_shape_with_order((1usize << (self.n_modes - k), 1usize << k))
            .map_err(|e| Error::Numeric(e.to_string()))
    }

    /// Entanglement entropy of `keep` from the smaller Gram matrix of the bipartition.
    pub fn entanglement_entropy(&self, keep: &ModeMask) -> Result<f64> {
        let m = self.split_matrix(keep)?;
        let gram = if m.ncols() <= m.nrows() {
            m.t().dot(&m.mapv(|z| z.conj()))
        } else {
            m.dot(&linalg::dagger(&m))
        };
        let vals = eigvalsh(&linalg::hermitian_part(&gram))?;
        Ok(shannon(vals.iter().copied()))
    }

    /// `<c†_i c_j>` (or `<σ+_i σ-_j>`-free qubit analogue is not provided: fermions only).
    pub fn covariance(&self) -> Result<CMat> {
        if self.statistics != Statistics::Fermionic {
            return Err(Error::Validation("covariance needs fermionic statistics".into()));
        }
        let n = self.n_modes;
        let lowered: Vec<Array1<Complex64>> = (0..n).map(|j| annihilate(&self.amplitudes, j)).collect();
        Ok(CMat::from_shape_fn((n, n), |(i, j)| {
            lowered[i].iter().zip(lowered[j].iter()).map(|(a, b)| a.conj() * b).sum()
        }))
    }
}

fn shannon<I: Iterator<Item = f64>>(probs: I) -> f64 {
    probs
        .filter(|&p| p > SPECTRAL_FLOOR)
        .map(|p| -p * p.ln())
        .sum()
}

/// `c†_j` applied to a fermionic amplitude vector.
pub fn create(amps: &Array1<Complex64>, j: usize) -> Array1<Complex64> {
    let mut out = Array1::zeros(amps.len());
    for (b, &a) in amps.iter().enumerate() {
        if a != ZERO && b >> j & 1 == 0 {
            out[b | 1 << j] = if below_parity(b, j) { -a } else { a };
        }
    }
    out
}

/// `c_j` applied to a fermionic amplitude vector.
pub fn annihilate(amps: &Array1<Complex64>, j: usize) -> Array1<Complex64> {
    let mut out = Array1::zeros(amps.len());
    for (b, &a) in amps.iter().enumerate() {
        if a != ZERO && b >> j & 1 == 1 {
            out[b & !(1 << j)] = if below_parity(b, j) { -a } else { a };
        }
    }
    out
}

/// `Π_j (Σ_i ψ_ij c†_i) |0>` for orbitals in the columns of `orbitals`; the columns are
/// orthonormalized first.
pub fn slater_statevector(orbitals: &CMat) -> Result<DenseState> {
    let n = orbitals.nrows();
    if n > MAX_FERMION_MODES {
        return Err(Error::Validation(format!(
            "{n} modes exceed the dense fermion cap of {MAX_FERMION_MODES}"
        )));
    }
    let mut psi = orbitals.clone();
    linalg::orthonormalize_columns(&mut psi)?;
    let mut amps = Array1::zeros(1usize << n);
    amps[0] = Complex64::new(1.0, 0.0);
    // Rightmost factor acts first.
    for col in psi.columns().into_iter().rev() {
        let mut next = Array1::zeros(amps.len());
        for (i, &w) in col.iter().enumerate() {
            if w != ZERO {
                next.scaled_add(w, &create(&amps, i));
            }
        }
        amps = next;
    }
    DenseState::normalized(n, amps, Statistics::Fermionic)
}

/// Density matrix over the basis of its own modes.
#[derive(Clone, Debug)]
pub struct DenseDensity {
    n_modes: usize,
    matrix: CMat,
    statistics: Statistics,
}

impl DenseDensity {
    pub fn new(n_modes: usize, matrix: CMat, statistics: Statistics) -> Result<Self> {
        let dim = 1usize << n_modes;
        if matrix.dim() != (dim, dim) {
            return Err(Error::Validation(format!("density must be {dim}x{dim}")));
        }
        let trace: f64 = matrix.diag().iter().map(|z| z.re).sum();
        if (trace - 1.0).abs() > 1e-10 {
            return Err(Error::Validation(format!("density trace {trace} != 1")));
        }
        if linalg::hermiticity_defect(&matrix) > 1e-10 {
            return Err(Error::Validation("density is not Hermitian".into()));
        }
        Ok(Self {
            n_modes,
            matrix: linalg::hermitian_part(&matrix),
            statistics,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn statistics(&self) -> Statistics {
        self.statistics
    }

    pub fn spectrum(&self) -> Result<Array1<f64>> {
        let vals = eigvalsh(&self.matrix)?;
        if let Some(&min) = vals.iter().find(|&&v| v < -1e-10) {
            return Err(Error::Numeric(format!("density has negative eigenvalue {min:.3e}")));
        }
        Ok(vals)
    }

    pub fn entropy(&self) -> Result<f64> {
        Ok(shannon(self.spectrum()?.iter().copied()))
    }

    pub fn sqrt(&self) -> Result<CMat> {
        let e = eigh(&self.matrix)?;
        if let Some(&min) = e.values.iter().find(|&&v| v < -1e-10) {
            return Err(Error::Numeric(format!("density has negative eigenvalue {min:.3e}")));
        }
        Ok(e.map(|v| if v > SPECTRAL_FLOOR { v.sqrt() } else { 0.0 }))
    }
}

/// Reduced density matrix of `keep` (modes relabelled `0..keep.len()` in mask order).
pub fn dense_rdm(state: &DenseState, keep: &ModeMask) -> Result<DenseDensity> {
    let m = state.split_matrix(keep)?;
    // rho[a][a'] = Σ_b M[b][a] conj(M[b][a'])
    let rho = m.t().dot(&m.mapv(|z| z.conj()));
    DenseDensity::new(keep.len(), rho, state.statistics)
}

/// Maximally entangled reference `Π_i (c†_i + c†_{n+i}) / √2 |0>` for fermions (the
/// copy of an occupied mode is empty), `⊗_i (|00> + |11>) / √2` for qubits.
fn reference_amplitude(n: usize, x: usize, statistics: Statistics) -> (usize, f64) {
    let mask = (1usize << n) - 1;
    match statistics {
        Statistics::Qubit => (x, 1.0),
        Statistics::Fermionic => {
            // Expanding the product in mode order i = 0..n picks c†_i (x_i = 1) or c†_{n+i}.
            // Normal-ordering to (system modes, copy modes) moves each chosen system
            // operator left past the copy operators chosen for lower i.
            let mut sign = 1.0;
            let mut copies_before = 0u32;
            for i in 0..n {
                if x >> i & 1 == 1 {
                    if copies_before % 2 == 1 {
                        sign = -sign;
                    }
                } else {
                    copies_before += 1;
                }
            }
            (!x & mask, sign)
        }
    }
}

/// Canonical purification `(√ρ ⊗ 1)|Ω>` (rescaled to unit norm) as a state on the
/// `2n` modes `(AB, A'B')`.
fn canonical_purification(sqrt_rho: &CMat, n: usize, statistics: Statistics) -> Result<DenseState> {
    let dim = 1usize << n;
    let mut amps = Array1::<Complex64>::zeros(dim * dim);
    for x in 0..dim {
        let (copy, sign) = reference_amplitude(n, x, statistics);
        let base = copy << n;
        for xp in 0..dim {
            let v = sqrt_rho[[xp, x]];
            if v != ZERO {
                amps[xp | base] = v * sign;
            }
        }
    }
    DenseState::normalized(2 * n, amps, statistics)
}

fn reflected_from_sqrt(sqrt_rho: &CMat, n: usize, n_a: usize, statistics: Statistics) -> Result<f64> {
    let purified = canonical_purification(sqrt_rho, n, statistics)?;
    let a = ModeMask::range(0, n_a);
    purified.entanglement_entropy(&a.union(&a.shifted(n)))
}

/// Reflected entropy of `rho_ab`, with `A` the first `n_a` modes of its ordering.
pub fn dense_reflected_entropy(rho_ab: &DenseDensity, n_a: usize) -> Result<f64> {
    if n_a > rho_ab.n_modes {
        return Err(Error::Validation("A larger than AB".into()));
    }
    if rho_ab.n_modes > 14 {
        return Err(Error::Validation("reflected entropy capped at 14 modes".into()));
    }
    let sqrt_rho = rho_ab.sqrt()?;
    reflected_from_sqrt(&sqrt_rho, rho_ab.n_modes, n_a, rho_ab.statistics)
}

/// All entropies entering the Markov gap, computed densely.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DenseGapParts {
    pub s_a: f64,
    pub s_b: f64,
    pub s_ab: f64,
    pub reflected: f64,
}

impl DenseGapParts {
    pub fn mutual_information(&self) -> f64 {
        self.s_a + self.s_b - self.s_ab
    }

    pub fn markov_gap(&self) -> f64 {
        self.reflected - self.mutual_information()
    }
}

/// `S(A), S(B), S(AB), S_R(A:B)` of a pure state for disjoint regions `a`, `b`.
pub fn dense_gap_parts(state: &DenseState, a: &ModeMask, b: &ModeMask) -> Result<DenseGapParts> {
    if !a.is_disjoint(b) {
        return Err(Error::Validation("regions A and B overlap".into()));
    }
    let n = state.n_modes;
    a.check_within(n)?;
    b.check_within(n)?;
    let ab_len = a.len() + b.len();
    if ab_len > 14 {
        return Err(Error::Validation("AB capped at 14 modes".into()));
    }
    let mut order: Vec<usize> = a.indices().iter().chain(b.indices()).copied().collect();
    order.extend((0..n).filter(|m| !a.contains(*m) && !b.contains(*m)));
    let st = state.reorder(&order)?;
    let a_new = ModeMask::range(0, a.len());
    let b_new = ModeMask::range(a.len(), ab_len);
    let ab_new = ModeMask::range(0, ab_len);
    let s_a = st.entanglement_entropy(&a_new)?;
    let s_b = st.entanglement_entropy(&b_new)?;
    let s_ab = st.entanglement_entropy(&ab_new)?;

    // Rows: environment, columns: AB. rho = M^T conj(M).
    let m = st.split_matrix(&ab_new)?;
    let sqrt_rho = if m.nrows() < m.ncols() {
        // Low-rank route: with G = conj(M) M^T = W g W†, sqrt(rho) = Z Z† where
        // Z = M^T W g^(-1/4).
        let mt = m.t().to_owned();
        let gram = m.mapv(|z| z.conj()).dot(&mt);
        let e = eigh(&linalg::hermitian_part(&gram))?;
        let keep: Vec<usize> = (0..e.values.len()).filter(|&k| e.values[k] > SPECTRAL_FLOOR).collect();
        let mut w = CMat::zeros((gram.nrows(), keep.len()));
        for (c, &k) in keep.iter().enumerate() {
            let s = e.values[k].powf(-0.25);
            for r in 0..gram.nrows() {
                w[[r, c]] = e.vectors[[r, k]] * s;
            }
        }
        let z = mt.dot(&w);
        z.dot(&linalg::dagger(&z))
    } else {
        let rho = m.t().dot(&m.mapv(|z| z.conj()));
        DenseDensity::new(ab_len, rho, st.statistics)?.sqrt()?
    };
    let reflected = reflected_from_sqrt(&sqrt_rho, ab_len, a.len(), st.statistics)?;
    Ok(DenseGapParts { s_a, s_b, s_ab, reflected })
}

pub fn dense_markov_gap(state: &DenseState, a: &ModeMask, b: &ModeMask) -> Result<f64> {
    Ok(dense_gap_parts(state, a, b)?.markov_gap())
}
