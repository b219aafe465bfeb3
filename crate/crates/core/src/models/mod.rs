//! Hofstadter lattice models and their ground-state covariance matrices.
//!
//! Real-space Hamiltonian of one layer with flux `phi = 2 pi p / q` per plaquette:
//!
//! `H = -t sum_{x,y} (c†_{x+1,y} c_{x,y} + e^{i phi x} c†_{x,y+1} c_{x,y} + h.c.) + mu sum n_{x,y}`
//!
//! on a periodic `width x height` torus (`width` a multiple of `q`). In the magnetic
//! Fourier basis this is the `q x q` Bloch matrix of [`bloch_hamiltonian`].

mod bands;
mod ground_state;
mod symmetry;

pub use bands::{bloch_hamiltonian, chern_number, solve_bands, BlochSolution, ChernResult};
pub use ground_state::{covariance_real_space, real_space_hamiltonian, GroundState};
pub use symmetry::{stack, tr_operator, tr_operator_on, tr_violation};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// One layer of a stack: flux sign relative to the base `p`, optional chemical
/// potential override.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSpec {
    pub p_sign: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub p: i64,
    pub q: usize,
    #[serde(default = "default_hopping")]
    pub t: f64,
    #[serde(default)]
    pub mu: f64,
    /// Fill this many lowest bands instead of the `energy < 0` rule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filled_bands: Option<usize>,
    /// Empty means a single layer with the base parameters.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub layers: Vec<LayerSpec>,
}

fn default_hopping() -> f64 {
    1.0
}

impl ModelSpec {
    pub fn hofstadter(p: i64, q: usize, mu: f64) -> Self {
        Self {
            p,
            q,
            t: 1.0,
            mu,
            filled_bands: None,
            layers: Vec::new(),
        }
    }

    pub fn with_filled_bands(mut self, bands: usize) -> Self {
        self.filled_bands = Some(bands);
        self
    }

    pub fn with_layers(mut self, layers: Vec<LayerSpec>) -> Self {
        self.layers = layers;
        self
    }

    /// Two layers with opposite flux and a shared chemical potential.
    pub fn topological_insulator(p: i64, q: usize, mu: f64) -> Self {
        Self::hofstadter(p, q, mu).with_layers(vec![
            LayerSpec { p_sign: 1, mu: None },
            LayerSpec { p_sign: -1, mu: None },
        ])
    }

    pub fn validate(&self) -> Result<()> {
        if self.q == 0 {
            return Err(Error::Validation("flux denominator q must be >= 1".into()));
        }
        if gcd(self.p.unsigned_abs(), self.q as u64) != 1 {
            return Err(Error::Validation(format!(
                "flux numerator {} and denominator {} are not coprime",
                self.p, self.q
            )));
        }
        if !self.t.is_finite() || !self.mu.is_finite() {
            return Err(Error::Validation("t and mu must be finite".into()));
        }
        if let Some(n) = self.filled_bands {
            if n > self.q {
                return Err(Error::Validation(format!("filled_bands {n} exceeds the {} bands", self.q)));
            }
        }
        for l in &self.layers {
            if l.p_sign != 1 && l.p_sign != -1 {
                return Err(Error::Validation(format!("layer p_sign must be +1 or -1, got {}", l.p_sign)));
            }
            if l.mu.is_some_and(|m| !m.is_finite()) {
                return Err(Error::Validation("layer mu must be finite".into()));
            }
        }
        Ok(())
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len().max(1)
    }

    /// Single-layer description of layer `i`.
    pub fn layer(&self, i: usize) -> ModelSpec {
        let mut out = ModelSpec {
            layers: Vec::new(),
            ..self.clone()
        };
        if let Some(l) = self.layers.get(i) {
            out.p = self.p * l.p_sign;
            if let Some(mu) = l.mu {
                out.mu = mu;
            }
        }
        out
    }

    pub fn flux(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.p as f64 / self.q as f64
    }
}
