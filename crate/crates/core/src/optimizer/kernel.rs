//! Derivatives of the Markov gap with respect to the two-party covariance.
//!
//! Every kernel `K` here satisfies `dF = Re Tr(dC K)` for the corresponding functional
//! `F` of `C_AB`.

use crate::error::{Error, Result};
use crate::gaussian::{
    entanglement_hamiltonian_from_eigh, entropy_of_spectrum, reflected_covariance_from_eigh, CovarianceMatrix,
    EntanglementHamiltonian, GapParts, ModeMask, ENTROPY_EPS,
};
use crate::linalg::{self, dagger, eigh, eigvalsh, embed, principal_submatrix, CMat, Eigh, I};

/// Denominators below this make a kernel element count as pinned (zero).
const PINNED_DENOMINATOR: f64 = 1e-10;

fn check_split(c_ab: &CovarianceMatrix, a: &ModeMask, b: Option<&ModeMask>) -> Result<()> {
    a.check_within(c_ab.dim())?;
    if let Some(b) = b {
        b.check_within(c_ab.dim())?;
        if !a.is_disjoint(b) {
            return Err(Error::Validation("regions A and B overlap".into()));
        }
    }
    Ok(())
}

fn block_eigh(c: &CMat, mask: &ModeMask) -> Result<Eigh> {
    eigh(&principal_submatrix(c, mask.indices()))
}

/// `h_A (+) h_B - h_AB` on the modes of `c_ab`, which should be exactly `A u B`.
pub fn mutual_info_kernel(
    c_ab: &CovarianceMatrix,
    a: &ModeMask,
    b: &ModeMask,
    eps: f64,
) -> Result<EntanglementHamiltonian> {
    check_split(c_ab, a, Some(b))?;
    let e_ab = eigh(c_ab.entries())?;
    let (_, k) = mutual_info_parts(c_ab.entries(), &e_ab, a, b, eps)?;
    Ok(EntanglementHamiltonian::from_entries(k))
}

/// Returns `(S_A, S_B)` and the mutual-information kernel.
fn mutual_info_parts(c: &CMat, e_ab: &Eigh, a: &ModeMask, b: &ModeMask, eps: f64) -> Result<((f64, f64), CMat)> {
    let n = c.nrows();
    let e_a = block_eigh(c, a)?;
    let e_b = block_eigh(c, b)?;
    let h_a = entanglement_hamiltonian_from_eigh(&e_a, eps)?;
    let h_b = entanglement_hamiltonian_from_eigh(&e_b, eps)?;
    let h_ab = entanglement_hamiltonian_from_eigh(e_ab, eps)?;
    let k = embed(h_a.entries(), a.indices(), n) + embed(h_b.entries(), b.indices(), n) - h_ab.entries();
    let s_a = entropy_of_spectrum(&e_a.values, ENTROPY_EPS)?;
    let s_b = entropy_of_spectrum(&e_b.values, ENTROPY_EPS)?;
    Ok(((s_a, s_b), k))
}

/// Kernel of the reflected entropy `S_R(A:B)` of `c_ab`.
pub fn reflected_kernel(c_ab: &CovarianceMatrix, a: &ModeMask, eps: f64) -> Result<CMat> {
    check_split(c_ab, a, None)?;
    let e_ab = eigh(c_ab.entries())?;
    Ok(reflected_parts(&e_ab, a, eps)?.1)
}

/// Divided difference of `sqrt(r (1 - r))` between `r_a` and `r_b`, written without the
/// cancellation-prone difference quotient.
fn sqrt_variance_slope(ra: f64, rb: f64, eps: f64) -> f64 {
    let q = |r: f64| {
        let r = r.clamp(0.0, 1.0);
        if r < eps || r > 1.0 - eps {
            0.0
        } else {
            (r * (1.0 - r)).sqrt()
        }
    };
    let den = q(ra) + q(rb);
    if den < PINNED_DENOMINATOR {
        0.0
    } else {
        (1.0 - ra.clamp(0.0, 1.0) - rb.clamp(0.0, 1.0)) / den
    }
}

/// Returns `S_R` and its kernel.
fn reflected_parts(e_ab: &Eigh, a: &ModeMask, eps: f64) -> Result<(f64, CMat)> {
    let n = e_ab.values.len();
    let na = a.len();
    let cr = reflected_covariance_from_eigh(e_ab, ENTROPY_EPS);
    let block = cr.restrict_doubled(a)?;
    let e_aa = eigh(block.entries())?;
    let s_r = entropy_of_spectrum(&e_aa.values, ENTROPY_EPS)?;
    let h = entanglement_hamiltonian_from_eigh(&e_aa, eps)?;
    let h = h.entries();
    let sub = |r0: usize, c0: usize| CMat::from_shape_fn((na, na), |(i, j)| h[[r0 + i, c0 + j]]);
    let (h00, h01, h10, h11) = (sub(0, 0), sub(0, na), sub(na, 0), sub(na, na));
    let idx = a.indices();
    let diag_part = embed(&(&h00 - &h11), idx, n);
    let off = embed(&(&h01 + &h10), idx, n);

    let u = &e_ab.vectors;
    let mut rotated = dagger(u).dot(&off).dot(u);
    let r = &e_ab.values;
    for ((al, be), z) in rotated.indexed_iter_mut() {
        *z *= sqrt_variance_slope(r[al], r[be], ENTROPY_EPS);
    }
    Ok((s_r, diag_part + u.dot(&rotated).dot(&dagger(u))))
}

/// Markov gap of `C_AB` together with the kernel `h_R - h_I`.
#[derive(Clone, Debug)]
pub struct GapKernel {
    pub parts: GapParts,
    pub kernel: CMat,
}

/// `A` and `B` index `c_ab`, whose modes must be exactly `A u B`.
pub fn gap_kernel(c_ab: &CovarianceMatrix, a: &ModeMask, b: &ModeMask, eps: f64) -> Result<GapKernel> {
    check_split(c_ab, a, Some(b))?;
    let e_ab = eigh(c_ab.entries())?;
    let ((s_a, s_b), k_i) = mutual_info_parts(c_ab.entries(), &e_ab, a, b, eps)?;
    let s_ab = entropy_of_spectrum(&e_ab.values, ENTROPY_EPS)?;
    let (reflected, k_r) = reflected_parts(&e_ab, a, eps)?;
    Ok(GapKernel {
        parts: GapParts { s_a, s_b, s_ab, reflected },
        kernel: k_r - k_i,
    })
}

/// Value-only Markov gap (no eigenvectors beyond what the reflected covariance needs).
pub fn gap_value(c_ab: &CMat, a: &ModeMask, b: &ModeMask) -> Result<GapParts> {
    let e_ab = eigh(c_ab)?;
    let s_ab = entropy_of_spectrum(&e_ab.values, ENTROPY_EPS)?;
    let s_a = entropy_of_spectrum(&eigvalsh(&principal_submatrix(c_ab, a.indices()))?, ENTROPY_EPS)?;
    let s_b = entropy_of_spectrum(&eigvalsh(&principal_submatrix(c_ab, b.indices()))?, ENTROPY_EPS)?;
    let cr = reflected_covariance_from_eigh(&e_ab, ENTROPY_EPS);
    let block = cr.restrict_doubled(a)?;
    let reflected = entropy_of_spectrum(&eigvalsh(block.entries())?, ENTROPY_EPS)?;
    Ok(GapParts { s_a, s_b, s_ab, reflected })
}

/// `-(i [C, H])` restricted to `support`, where `H` is `kernel` placed on `ab` inside `c`.
pub fn descent_generator(c: &CMat, kernel: &CMat, ab: &[usize], support: &[usize]) -> CMat {
    // Only rows/columns in `support` are needed: G = -i (C H - H C).
    let n = c.nrows();
    let h = embed(kernel, ab, n);
    let c_rows = CMat::from_shape_fn((support.len(), n), |(r, j)| c[[support[r], j]]);
    let h_rows = CMat::from_shape_fn((support.len(), n), |(r, j)| h[[support[r], j]]);
    let ch = c_rows.dot(&h);
    let hc = h_rows.dot(c);
    let g = CMat::from_shape_fn((support.len(), support.len()), |(r, s)| {
        -I * (ch[[r, support[s]]] - hc[[r, support[s]]])
    });
    linalg::hermitian_part(&g)
}

/// Hermitian generator supported on a set of modes of the optimized block.
#[derive(Clone, Debug)]
pub struct Generator {
    pub support: ModeMask,
    pub x: CMat,
}

impl Generator {
    pub fn zero(support: ModeMask) -> Self {
        let n = support.len();
        Self { support, x: CMat::zeros((n, n)) }
    }

    pub fn norm(&self) -> f64 {
        linalg::frobenius_norm(&self.x)
    }
}

/// Generator of steepest descent of `h(A:B)` on `support` for the covariance `c_abs`.
/// `a`, `b` and `support` index `c_abs`.
pub fn gradient_generator(
    c_abs: &CovarianceMatrix,
    a: &ModeMask,
    b: &ModeMask,
    support: &ModeMask,
    eps: f64,
) -> Result<Generator> {
    support.check_within(c_abs.dim())?;
    let ab = a.union(b);
    let c_ab = c_abs.restrict(&ab)?;
    let gk = gap_kernel(&c_ab, &a.relabel_within(&ab)?, &b.relabel_within(&ab)?, eps)?;
    let x = descent_generator(c_abs.entries(), &gk.kernel, ab.indices(), support.indices());
    Ok(Generator { support: support.clone(), x })
}

/// Time-reversal-symmetric part `(X + S conj(X) S) / 2` of a generator; `s` is the
/// time-reversal matrix on the generator's support (`S^2 = -1`).
pub fn project_tr(x: &Generator, s: &CMat) -> Result<Generator> {
    if s.dim() != x.x.dim() {
        return Err(Error::Validation("time-reversal matrix does not match the generator support".into()));
    }
    let mapped = s.dot(&linalg::conj(&x.x)).dot(s);
    Ok(Generator {
        support: x.support.clone(),
        x: (&x.x + &mapped).mapv(|z| z * 0.5),
    })
}

/// `e^{i X dt} C e^{-i X dt}` with `X` acting on the generator's support.
pub fn apply_unitary(c: &CovarianceMatrix, x: &Generator, dt: f64) -> Result<CovarianceMatrix> {
    x.support.check_within(c.dim())?;
    let u = eigh(&x.x)?.exp_i(dt);
    CovarianceMatrix::new(conjugate_on(c.entries(), &u, x.support.indices()))
}

/// `U C U†` for `U` equal to `u` on `idx` and the identity elsewhere.
pub fn conjugate_on(c: &CMat, u: &CMat, idx: &[usize]) -> CMat {
    let n = c.nrows();
    let k = idx.len();
    let mut out = c.clone();
    // Rows in idx: out[idx, :] = u * c[idx, :]
    let rows = CMat::from_shape_fn((k, n), |(r, j)| c[[idx[r], j]]);
    let new_rows = u.dot(&rows);
    for (r, &i) in idx.iter().enumerate() {
        for j in 0..n {
            out[[i, j]] = new_rows[[r, j]];
        }
    }
    // Columns in idx: out[:, idx] = out[:, idx] * u†
    let cols = CMat::from_shape_fn((n, k), |(i, s)| out[[i, idx[s]]]);
    let new_cols = cols.dot(&dagger(u));
    for i in 0..n {
        for (s, &j) in idx.iter().enumerate() {
            out[[i, j]] = new_cols[[i, s]];
        }
    }
    linalg::hermitian_part(&out)
}
