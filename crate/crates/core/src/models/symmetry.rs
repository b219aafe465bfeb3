use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gaussian::{CovarianceMatrix, ModeMask};
use crate::geometry::Lattice;
use crate::linalg::{self, CMat};

/// Interleave per-layer covariances into the site-major stacked ordering
/// (`mode = site * layers + layer`). Layers are uncorrelated.
pub fn stack(layers: &[&CovarianceMatrix]) -> Result<CovarianceMatrix> {
    let Some(first) = layers.first() else {
        return Err(Error::Validation("nothing to stack".into()));
    };
    let sites = first.dim();
    if layers.iter().any(|c| c.dim() != sites) {
        return Err(Error::Validation("stacked layers must have equal dimension".into()));
    }
    let n_layers = layers.len();
    let mut out = CMat::zeros((sites * n_layers, sites * n_layers));
    for (l, c) in layers.iter().enumerate() {
        for i in 0..sites {
            for j in 0..sites {
                out[[i * n_layers + l, j * n_layers + l]] = c.entries()[[i, j]];
            }
        }
    }
    CovarianceMatrix::new(out)
}

/// Site-local `[[0, -1], [1, 0]]` over (layer 0, layer 1) on the given modes, which must
/// contain both layers of every site they touch.
pub fn tr_operator_on(lattice: &Lattice, mask: &ModeMask) -> Result<CMat> {
    if lattice.layers != 2 {
        return Err(Error::Validation(format!(
            "time reversal needs exactly two layers, lattice has {}",
            lattice.layers
        )));
    }
    mask.check_within(lattice.n_modes())?;
    let idx = mask.indices();
    let mut s = CMat::zeros((idx.len(), idx.len()));
    for (r, &m) in idx.iter().enumerate() {
        let partner = m ^ 1;
        let Some(c) = idx.iter().position(|&o| o == partner) else {
            return Err(Error::Validation(format!(
                "mode set is not closed under layer exchange (mode {m} lacks its partner)"
            )));
        };
        // Column for layer 0 maps to +layer 1; column for layer 1 maps to -layer 0.
        let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
        s[[r, c]] = Complex64::new(sign, 0.0);
    }
    Ok(s)
}

/// Time-reversal matrix on the whole two-layer lattice.
pub fn tr_operator(lattice: &Lattice) -> Result<CMat> {
    tr_operator_on(lattice, &ModeMask::range(0, lattice.n_modes()))
}

/// `max |S conj(M) S^-1 - M|`.
pub fn tr_violation(s: &CMat, m: &CMat) -> f64 {
    let s_inv = linalg::dagger(s);
    linalg::max_abs_diff(&s.dot(&linalg::conj(m)).dot(&s_inv), m)
}
