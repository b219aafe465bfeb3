use std::f64::consts::PI;

use num_complex::Complex64;

use super::bands::solve_bands;
use super::ModelSpec;
use crate::error::{Error, Result};
use crate::gaussian::{CovarianceMatrix, ModeMask};
use crate::geometry::Lattice;
use crate::linalg::CMat;

/// `<c†_{x,y} c_{x',y'}>` of one layer as a function of `x mod q` and the periodic
/// displacement `(x - x', y - y')`.
#[derive(Clone, Debug)]
struct CorrelationTable {
    q: usize,
    width: usize,
    height: usize,
    /// Indexed `[(a * width + dx) * height + dy]`.
    values: Vec<Complex64>,
}

impl CorrelationTable {
    fn build(spec: &ModelSpec, width: usize, height: usize) -> Result<Self> {
        let q = spec.q;
        let nkx = width / q;
        let sol = solve_bands(spec, nkx, height)?;
        let k0 = sol.k0();

        // Occupied-band projector per momentum, folded with the sublattice phases:
        // fold[a][a'][k] = sum_{n,n'} e^{-i n k0 a} e^{i n' k0 a'} sum_occ V*_{nl} V_{n'l}.
        let n_k = nkx * height;
        let mut fold = vec![Complex64::new(0.0, 0.0); q * q * n_k];
        let phase = |m: usize| Complex64::from_polar(1.0, k0 * m as f64);
        for (k, (energies, v)) in sol.energies.iter().zip(&sol.vectors).enumerate() {
            let occupied: Vec<usize> = match spec.filled_bands {
                Some(nb) => (0..nb).collect(),
                None => (0..q).filter(|&l| energies[l] < 0.0).collect(),
            };
            if occupied.is_empty() {
                continue;
            }
            // w[a][l] = sum_n e^{i n k0 a} V_{nl}
            let w: Vec<Vec<Complex64>> = (0..q)
                .map(|a| {
                    occupied
                        .iter()
                        .map(|&l| (0..q).map(|n| phase(n * a % q) * v[[n, l]]).sum())
                        .collect()
                })
                .collect();
            for a in 0..q {
                for ap in 0..q {
                    let s: Complex64 = w[a].iter().zip(&w[ap]).map(|(x, y)| x.conj() * y).sum();
                    fold[(a * q + ap) * n_k + k] = s;
                }
            }
        }

        // Fourier sums over k_x then k_y.
        let kx_phase: Vec<Complex64> = (0..width)
            .map(|m| Complex64::from_polar(1.0, -2.0 * PI * m as f64 / width as f64))
            .collect();
        let ky_phase: Vec<Complex64> = (0..height)
            .map(|m| Complex64::from_polar(1.0, -2.0 * PI * m as f64 / height as f64))
            .collect();
        let norm = 1.0 / (width * height) as f64;
        let mut values = vec![Complex64::new(0.0, 0.0); q * width * height];
        let mut partial = vec![Complex64::new(0.0, 0.0); height];
        for a in 0..q {
            for dx in 0..width {
                let ap = (a + q - dx % q) % q;
                let block = &fold[(a * q + ap) * n_k..(a * q + ap + 1) * n_k];
                partial.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
                for ix in 0..nkx {
                    let ph = kx_phase[ix * dx % width];
                    let row = &block[ix * height..(ix + 1) * height];
                    for (p, &f) in partial.iter_mut().zip(row) {
                        *p += ph * f;
                    }
                }
                let out = &mut values[(a * width + dx) * height..(a * width + dx + 1) * height];
                for (dy, o) in out.iter_mut().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (iy, &p) in partial.iter().enumerate() {
                        acc += ky_phase[iy * dy % height] * p;
                    }
                    *o = acc * norm;
                }
            }
        }
        Ok(Self { q, width, height, values })
    }

    fn get(&self, x: usize, y: usize, xp: usize, yp: usize) -> Complex64 {
        let dx = (x + self.width - xp) % self.width;
        let dy = (y + self.height - yp) % self.height;
        self.values[((x % self.q) * self.width + dx) * self.height + dy]
    }
}

/// Ground state of a (possibly layered) model on a periodic lattice; covariance entries
/// are looked up on demand, so subsystem blocks of large lattices are cheap.
#[derive(Clone, Debug)]
pub struct GroundState {
    lattice: Lattice,
    tables: Vec<CorrelationTable>,
}

impl GroundState {
    pub fn new(spec: &ModelSpec, lattice: &Lattice) -> Result<Self> {
        spec.validate()?;
        if lattice.layers != spec.n_layers() {
            return Err(Error::Validation(format!(
                "lattice has {} layers but the model has {}",
                lattice.layers,
                spec.n_layers()
            )));
        }
        if lattice.width % spec.q != 0 {
            return Err(Error::Validation(format!(
                "lattice width {} is not a multiple of q = {}",
                lattice.width, spec.q
            )));
        }
        let tables = (0..spec.n_layers())
            .map(|l| CorrelationTable::build(&spec.layer(l), lattice.width, lattice.height))
            .collect::<Result<_>>()?;
        Ok(Self { lattice: *lattice, tables })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    /// `<c†_i c_j>`.
    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        let (x, y, l) = self.lattice.site_of(i);
        let (xp, yp, lp) = self.lattice.site_of(j);
        if l != lp {
            return Complex64::new(0.0, 0.0);
        }
        self.tables[l].get(x, y, xp, yp)
    }

    pub fn restrict(&self, mask: &ModeMask) -> Result<CovarianceMatrix> {
        mask.check_within(self.lattice.n_modes())?;
        let idx = mask.indices();
        let m = CMat::from_shape_fn((idx.len(), idx.len()), |(r, c)| self.entry(idx[r], idx[c]));
        CovarianceMatrix::new(m)
    }

    pub fn full(&self) -> Result<CovarianceMatrix> {
        self.restrict(&ModeMask::range(0, self.lattice.n_modes()))
    }

    /// Filling fraction `Tr C / N` without building the matrix.
    pub fn filling(&self) -> f64 {
        let n = self.lattice.n_modes();
        (0..n).map(|i| self.entry(i, i).re).sum::<f64>() / n as f64
    }
}

pub fn covariance_real_space(spec: &ModelSpec, lattice: &Lattice) -> Result<CovarianceMatrix> {
    GroundState::new(spec, lattice)?.full()
}

/// Single-particle Hamiltonian `H` with `sum c†_i H_ij c_j` on the periodic lattice, all
/// layers, modes ordered as in [`Lattice::mode_of`]. For direct-diagonalization checks.
pub fn real_space_hamiltonian(spec: &ModelSpec, lattice: &Lattice) -> Result<CMat> {
    spec.validate()?;
    if lattice.layers != spec.n_layers() || lattice.width % spec.q != 0 {
        return Err(Error::Validation("lattice does not fit the model".into()));
    }
    let n = lattice.n_modes();
    let mut h = CMat::zeros((n, n));
    for l in 0..lattice.layers {
        let layer = spec.layer(l);
        let phi = layer.flux();
        let t = layer.t;
        for y in 0..lattice.height {
            for x in 0..lattice.width {
                let here = lattice.mode_of(x, y, l);
                let right = lattice.mode_of((x + 1) % lattice.width, y, l);
                let up = lattice.mode_of(x, (y + 1) % lattice.height, l);
                h[[here, here]] += Complex64::new(layer.mu, 0.0);
                h[[right, here]] += Complex64::new(-t, 0.0);
                h[[here, right]] += Complex64::new(-t, 0.0);
                let hop = Complex64::from_polar(-t, phi * x as f64);
                h[[up, here]] += hop;
                h[[here, up]] += hop.conj();
            }
        }
    }
    Ok(h)
}
