use std::f64::consts::PI;

use ndarray::Array1;
use num_complex::Complex64;

use super::ModelSpec;
use crate::error::{Error, Result};
use crate::linalg::{dagger, eigh, CMat};

/// `q x q` magnetic Bloch Hamiltonian of a single layer.
///
/// `h_nm = (-2t cos(k_x + n k_0) + mu) delta_nm - t e^{i k_y} delta_{n+p,m} - t e^{-i k_y} delta_{n-p,m}`
/// with band-index arithmetic mod `q` and `k_0 = 2 pi / q` (indices from 0 here).
pub fn bloch_hamiltonian(spec: &ModelSpec, kx: f64, ky: f64) -> CMat {
    let q = spec.q;
    let k0 = 2.0 * PI / q as f64;
    let t = spec.t;
    let mut h = CMat::zeros((q, q));
    for n in 0..q {
        h[[n, n]] += Complex64::new(-2.0 * t * (kx + n as f64 * k0).cos() + spec.mu, 0.0);
        let up = (n as i64 + spec.p).rem_euclid(q as i64) as usize;
        let down = (n as i64 - spec.p).rem_euclid(q as i64) as usize;
        h[[n, up]] += Complex64::from_polar(-t, ky);
        h[[n, down]] += Complex64::from_polar(-t, -ky);
    }
    h
}

/// Band structure on the finite momentum grid `k_x = 2 pi i / (q n_x)`, `k_y = 2 pi j / n_y`.
#[derive(Clone, Debug)]
pub struct BlochSolution {
    pub q: usize,
    pub nkx: usize,
    pub nky: usize,
    /// Indexed by `ix * nky + iy`; ascending.
    pub energies: Vec<Array1<f64>>,
    /// Column `l` is the band-`l` eigenvector.
    pub vectors: Vec<CMat>,
}

impl BlochSolution {
    pub fn k0(&self) -> f64 {
        2.0 * PI / self.q as f64
    }

    pub fn momentum(&self, ix: usize, iy: usize) -> (f64, f64) {
        (
            2.0 * PI * ix as f64 / (self.q * self.nkx) as f64,
            2.0 * PI * iy as f64 / self.nky as f64,
        )
    }

    fn index(&self, ix: usize, iy: usize) -> usize {
        ix * self.nky + iy
    }

    /// Rows `(k_x, k_y, e_1, ..., e_q)` in grid order.
    pub fn rows(&self) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(self.energies.len());
        for ix in 0..self.nkx {
            for iy in 0..self.nky {
                let (kx, ky) = self.momentum(ix, iy);
                let mut row = vec![kx, ky];
                row.extend(self.energies[self.index(ix, iy)].iter());
                out.push(row);
            }
        }
        out
    }

    /// `(min, max)` energy of one band over the grid.
    pub fn band_extent(&self, band: usize) -> (f64, f64) {
        self.energies
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| (lo.min(e[band]), hi.max(e[band])))
    }

    /// Smallest energy separation between `bands` and the remaining bands at equal momentum.
    pub fn direct_gap(&self, bands: &[usize]) -> f64 {
        let mut gap = f64::INFINITY;
        for e in &self.energies {
            for l in 0..self.q {
                if bands.contains(&l) {
                    continue;
                }
                for &b in bands {
                    gap = gap.min((e[l] - e[b]).abs());
                }
            }
        }
        gap
    }
}

pub fn solve_bands(spec: &ModelSpec, nkx: usize, nky: usize) -> Result<BlochSolution> {
    spec.validate()?;
    if nkx < 2 || nky < 2 {
        return Err(Error::Validation("band grid needs at least 2 points per direction".into()));
    }
    let mut sol = BlochSolution {
        q: spec.q,
        nkx,
        nky,
        energies: Vec::with_capacity(nkx * nky),
        vectors: Vec::with_capacity(nkx * nky),
    };
    for ix in 0..nkx {
        for iy in 0..nky {
            let (kx, ky) = sol.momentum(ix, iy);
            let e = eigh(&bloch_hamiltonian(spec, kx, ky))?;
            sol.energies.push(e.values);
            sol.vectors.push(e.vectors);
        }
    }
    Ok(sol)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChernResult {
    pub chern: i64,
    /// Distance of the summed Berry flux / 2 pi from the nearest integer.
    pub residue: f64,
    pub min_direct_gap: f64,
}

/// Minimum direct gap below which a band set counts as touching its complement.
const GAP_TOL: f64 = 1e-6;

/// Chern number of a band set from plaquette Berry fluxes on the solution's grid.
///
/// Band vectors at `k_x + 2 pi / q` equal those at `k_x` with the sublattice index
/// shifted by one, which closes the grid into a torus without extra gauge fixing.
pub fn chern_number(sol: &BlochSolution, bands: &[usize]) -> Result<ChernResult> {
    if bands.is_empty() || bands.iter().any(|&b| b >= sol.q) {
        return Err(Error::Validation("band set must be a non-empty subset of the bands".into()));
    }
    let gap = sol.direct_gap(bands);
    if gap < GAP_TOL {
        return Err(Error::GapClosing(format!(
            "bands {bands:?} touch the rest of the spectrum (direct gap {gap:.2e})"
        )));
    }
    let q = sol.q;
    let frame = |ix: usize, iy: usize| -> CMat {
        let wrapped_x = ix / sol.nkx;
        let v = &sol.vectors[sol.index(ix % sol.nkx, iy % sol.nky)];
        CMat::from_shape_fn((q, bands.len()), |(n, c)| v[[(n + wrapped_x) % q, bands[c]]])
    };
    let link = |a: &CMat, b: &CMat| -> Result<Complex64> {
        let d = det(&dagger(a).dot(b));
        if d.norm() < 1e-12 {
            return Err(Error::GapClosing("vanishing overlap between neighbouring momenta".into()));
        }
        Ok(d / d.norm())
    };
    let mut total = 0.0;
    for ix in 0..sol.nkx {
        for iy in 0..sol.nky {
            let v00 = frame(ix, iy);
            let v10 = frame(ix + 1, iy);
            let v11 = frame(ix + 1, iy + 1);
            let v01 = frame(ix, iy + 1);
            let loop_product = link(&v00, &v10)? * link(&v10, &v11)? * link(&v11, &v01)? * link(&v01, &v00)?;
            total += loop_product.arg();
        }
    }
    let c = total / (2.0 * PI);
    Ok(ChernResult {
        chern: c.round() as i64,
        residue: (c - c.round()).abs(),
        min_direct_gap: gap,
    })
}

/// Determinant by partial-pivot LU; the band sets here are at most a few columns wide.
fn det(m: &CMat) -> Complex64 {
    let n = m.nrows();
    let mut a = m.clone();
    let mut d = Complex64::new(1.0, 0.0);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[[i, col]].norm().total_cmp(&a[[j, col]].norm()))
            .unwrap();
        if a[[pivot, col]].norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if pivot != col {
            for k in 0..n {
                a.swap([pivot, k], [col, k]);
            }
            d = -d;
        }
        let p = a[[col, col]];
        d *= p;
        for r in col + 1..n {
            let f = a[[r, col]] / p;
            for k in col..n {
                let v = a[[col, k]];
                a[[r, k]] -= f * v;
            }
        }
    }
    d
}
