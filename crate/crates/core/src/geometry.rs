//! Square-lattice tripartitions and smoother supports.
//!
//! Sites are `(x, y)` with `0 <= x < width`, `0 <= y < height`. Modes are site-major:
//! `mode = (y * width + x) * layers + layer`, so all layers of a site are adjacent.
//!
//! Region A is the `L_A x L_A` square with lower-left site `anchor`; B is the
//! `L_B x L_B` square immediately to its right, bottom-aligned with A. The two
//! trisection points sit at half-integer coordinates on the ends of the shared edge.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{CovarianceMatrix, ModeMask};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lattice {
    pub width: usize,
    pub height: usize,
    pub layers: usize,
}

impl Lattice {
    pub fn new(width: usize, height: usize, layers: usize) -> Result<Self> {
        if width == 0 || height == 0 || layers == 0 {
            return Err(Error::Geometry(format!(
                "lattice {width}x{height} with {layers} layers is empty"
            )));
        }
        Ok(Self { width, height, layers })
    }

    pub fn n_sites(&self) -> usize {
        self.width * self.height
    }

    pub fn n_modes(&self) -> usize {
        self.n_sites() * self.layers
    }

    pub fn mode_of(&self, x: usize, y: usize, layer: usize) -> usize {
        debug_assert!(x < self.width && y < self.height && layer < self.layers);
        (y * self.width + x) * self.layers + layer
    }

    /// Inverse of [`Lattice::mode_of`].
    pub fn site_of(&self, mode: usize) -> (usize, usize, usize) {
        let layer = mode % self.layers;
        let site = mode / self.layers;
        (site % self.width, site / self.width, layer)
    }

    /// All layer modes of the given sites, sorted.
    pub fn modes_of_sites(&self, sites: impl IntoIterator<Item = (usize, usize)>) -> ModeMask {
        let mut modes = Vec::new();
        for (x, y) in sites {
            for l in 0..self.layers {
                modes.push(self.mode_of(x, y, l));
            }
        }
        ModeMask::from_indices(modes)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    A,
    B,
    C,
}

#[derive(Clone, Debug)]
pub struct Tripartition {
    pub lattice: Lattice,
    pub l_a: usize,
    pub l_b: usize,
    pub anchor: (usize, usize),
    pub a: ModeMask,
    pub b: ModeMask,
    pub c: ModeMask,
    /// Upper trisection point.
    pub n: (f64, f64),
    /// Lower trisection point.
    pub s: (f64, f64),
}

impl Tripartition {
    pub fn region_of(&self, mode: usize) -> Region {
        if self.a.contains(mode) {
            Region::A
        } else if self.b.contains(mode) {
            Region::B
        } else {
            Region::C
        }
    }

    pub fn ab(&self) -> ModeMask {
        self.a.union(&self.b)
    }

    /// Length of the shared A-B edge.
    pub fn interface_length(&self) -> usize {
        self.l_a.min(self.l_b)
    }
}

/// Default clearance between the AB block and the lattice edge for smoother radius `r`.
pub fn default_margin(r: usize) -> usize {
    8.max(2 * r)
}

/// Anchor that centers the AB block on the lattice.
pub fn centered_anchor(lat: &Lattice, l_a: usize, l_b: usize) -> (usize, usize) {
    let w = l_a + l_b;
    let h = l_a.max(l_b);
    (lat.width.saturating_sub(w) / 2, lat.height.saturating_sub(h) / 2)
}

/// Smallest square lattice side whose width is a multiple of `q_x` and that fits the AB
/// block with `margin` on every side.
pub fn minimal_square_side(l_a: usize, l_b: usize, margin: usize, q_x: usize) -> usize {
    let need = (l_a + l_b).max(l_a.max(l_b)) + 2 * margin;
    need.div_ceil(q_x.max(1)) * q_x.max(1)
}

pub fn build_tripartition(
    lat: Lattice,
    l_a: usize,
    l_b: usize,
    anchor: (usize, usize),
    margin_min: usize,
) -> Result<Tripartition> {
    if l_a == 0 || l_b == 0 {
        return Err(Error::Geometry("region sizes must be positive".into()));
    }
    let (x0, y0) = anchor;
    let right = x0 + l_a + l_b;
    let top = y0 + l_a.max(l_b);
    if right > lat.width || top > lat.height {
        return Err(Error::Geometry(format!(
            "AB block [{x0}, {right}) x [{y0}, {top}) leaves the {}x{} lattice",
            lat.width, lat.height
        )));
    }
    let margins = [x0, y0, lat.width - right, lat.height - top];
    let worst = *margins.iter().min().unwrap();
    if worst < margin_min {
        return Err(Error::Geometry(format!(
            "margin {worst} to the lattice edge is below the required {margin_min}"
        )));
    }
    let a = lat.modes_of_sites((x0..x0 + l_a).flat_map(|x| (y0..y0 + l_a).map(move |y| (x, y))));
    let bx = x0 + l_a;
    let b = lat.modes_of_sites((bx..bx + l_b).flat_map(|x| (y0..y0 + l_b).map(move |y| (x, y))));
    let c = ModeMask::range(0, lat.n_modes()).difference(&a.union(&b));
    let edge_x = (x0 + l_a) as f64 - 0.5;
    Ok(Tripartition {
        lattice: lat,
        l_a,
        l_b,
        anchor,
        a,
        b,
        c,
        n: (edge_x, (y0 + l_a.min(l_b)) as f64 - 0.5),
        s: (edge_x, y0 as f64 - 0.5),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmootherShape {
    /// Independent disks around N and S.
    TwoCircles,
    /// One unitary on the union of the two disks.
    Joint,
    /// Rectangle of width `2R` along the A-B interface.
    Strip,
}

impl std::fmt::Display for SmootherShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SmootherShape::TwoCircles => "two_circles",
            SmootherShape::Joint => "joint",
            SmootherShape::Strip => "strip",
        })
    }
}

impl std::str::FromStr for SmootherShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two_circles" => Ok(SmootherShape::TwoCircles),
            "joint" => Ok(SmootherShape::Joint),
            "strip" => Ok(SmootherShape::Strip),
            other => Err(Error::Validation(format!("unknown smoother shape {other:?}"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SmootherSupport {
    pub shape: SmootherShape,
    pub radius: usize,
    /// One mask per independent unitary; empty masks are dropped.
    pub masks: Vec<ModeMask>,
}

impl SmootherSupport {
    pub fn union(&self) -> ModeMask {
        self.masks.iter().fold(ModeMask::empty(), |acc, m| acc.union(m))
    }

    pub fn is_empty(&self) -> bool {
        self.masks.iter().all(|m| m.is_empty())
    }
}

fn disk_sites(lat: &Lattice, center: (f64, f64), r: usize) -> Result<Vec<(usize, usize)>> {
    let r2 = (r * r) as f64;
    let ri = r as i64 + 1;
    let (cx, cy) = center;
    let mut sites = Vec::new();
    for dy in -ri..=ri {
        for dx in -ri..=ri {
            let x = (cx + 0.5).floor() as i64 + dx;
            let y = (cy + 0.5).floor() as i64 + dy;
            let (fx, fy) = (x as f64 - cx, y as f64 - cy);
            if fx * fx + fy * fy <= r2 {
                if x < 0 || y < 0 || x >= lat.width as i64 || y >= lat.height as i64 {
                    return Err(Error::Geometry(format!("disk of radius {r} leaves the lattice")));
                }
                sites.push((x as usize, y as usize));
            }
        }
    }
    Ok(sites)
}

pub fn smoother_support(tp: &Tripartition, shape: SmootherShape, r: usize) -> Result<SmootherSupport> {
    let lat = &tp.lattice;
    if r == 0 {
        return Ok(SmootherSupport { shape, radius: 0, masks: Vec::new() });
    }
    let masks = match shape {
        SmootherShape::TwoCircles | SmootherShape::Joint => {
            let north = lat.modes_of_sites(disk_sites(lat, tp.n, r)?);
            let south = lat.modes_of_sites(disk_sites(lat, tp.s, r)?);
            if shape == SmootherShape::Joint {
                vec![north.union(&south)]
            } else {
                if !north.is_disjoint(&south) {
                    return Err(Error::Geometry(format!(
                        "disks of radius {r} around N and S overlap (interface length {})",
                        tp.interface_length()
                    )));
                }
                vec![north, south]
            }
        }
        SmootherShape::Strip => {
            let (cx, top) = tp.n;
            let bottom = tp.s.1;
            let x_lo = (cx - r as f64).ceil() as i64;
            let x_hi = (cx + r as f64).floor() as i64;
            if x_lo < 0 || x_hi >= lat.width as i64 {
                return Err(Error::Geometry(format!("strip of half-width {r} leaves the lattice")));
            }
            let ys = (bottom.ceil() as usize)..=(top.floor() as usize);
            let sites = (x_lo as usize..=x_hi as usize).flat_map(|x| ys.clone().map(move |y| (x, y)));
            vec![lat.modes_of_sites(sites)]
        }
    };
    Ok(SmootherSupport { shape, radius: r, masks })
}

/// Principal submatrix of `c` on `mask`.
pub fn restrict(c: &CovarianceMatrix, mask: &ModeMask) -> Result<CovarianceMatrix> {
    c.restrict(mask)
}
