//! Assembly of a full run: lattice, tripartition, smoother support and the ground-state
//! block that the optimizer works on.

use crate::error::{Error, Result};
use crate::gaussian::{markov_gap_parts, CovarianceMatrix, GapParts, ENTROPY_EPS};
use crate::geometry::{
    build_tripartition, centered_anchor, default_margin, minimal_square_side, smoother_support, Lattice,
    SmootherShape, SmootherSupport, Tripartition,
};
use crate::models::{GroundState, ModelSpec};
use crate::optimizer::Problem;

/// Region sizes and smoother for one run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Layout {
    pub l_a: usize,
    pub l_b: usize,
    pub shape: SmootherShape,
    pub radius: usize,
    /// Clearance between the AB block and the lattice edge; `None` uses [`default_margin`].
    pub margin: Option<usize>,
    /// Lattice `(width, height)`; `None` takes the smallest lattice that fits the margin.
    pub lattice_size: Option<(usize, usize)>,
    /// Lower-left site of A; `None` centers the AB block.
    pub anchor: Option<(usize, usize)>,
}

impl Layout {
    pub fn square(l: usize, shape: SmootherShape, radius: usize) -> Self {
        Self { l_a: l, l_b: l, shape, radius, margin: None, lattice_size: None, anchor: None }
    }

    pub fn margin(&self) -> usize {
        self.margin.unwrap_or_else(|| default_margin(self.radius))
    }

    /// Periodic lattice holding the AB block with the margin on every side; the width is
    /// a multiple of `q`.
    pub fn lattice(&self, spec: &ModelSpec) -> Result<Lattice> {
        if let Some((w, h)) = self.lattice_size {
            return Lattice::new(w, h, spec.n_layers());
        }
        let m = self.margin();
        let width = minimal_square_side(self.l_a, self.l_b, m, spec.q);
        Lattice::new(width, self.l_a.max(self.l_b) + 2 * m, spec.n_layers())
    }

    /// Geometry and mode layout without computing the ground state.
    pub fn plan(&self, spec: &ModelSpec) -> Result<(Tripartition, SmootherSupport, Problem)> {
        spec.validate()?;
        let lat = self.lattice(spec)?;
        let anchor = self.anchor.unwrap_or_else(|| centered_anchor(&lat, self.l_a, self.l_b));
        let tp = build_tripartition(lat, self.l_a, self.l_b, anchor, self.margin())?;
        let support = smoother_support(&tp, self.shape, self.radius)?;
        let problem = Problem::from_geometry(&tp, &support)?;
        Ok((tp, support, problem))
    }
}

#[derive(Clone, Debug)]
pub struct Experiment {
    pub spec: ModelSpec,
    pub layout: Layout,
    pub tripartition: Tripartition,
    pub support: SmootherSupport,
    pub problem: Problem,
    /// Ground-state covariance on `problem.modes()`.
    pub covariance: CovarianceMatrix,
}

impl Experiment {
    /// `time_reversal` attaches the layer-exchange matrices needed for TR-constrained runs.
    pub fn build(spec: &ModelSpec, layout: Layout, time_reversal: bool) -> Result<Self> {
        let (tp, support, mut problem) = layout.plan(spec)?;
        if time_reversal {
            if spec.n_layers() != 2 {
                return Err(Error::Validation("time-reversal constraint needs a two-layer model".into()));
            }
            problem = problem.with_time_reversal(&tp.lattice)?;
        }
        let gs = GroundState::new(spec, &tp.lattice)?;
        let covariance = problem.covariance(|i, j| gs.entry(i, j))?;
        Ok(Self { spec: spec.clone(), layout, tripartition: tp, support, problem, covariance })
    }

    /// Entropies of the unsmoothed state.
    pub fn bare_parts(&self) -> Result<GapParts> {
        let n_ab = self.problem.n_ab();
        let c_ab = self.covariance.restrict(&crate::gaussian::ModeMask::range(0, n_ab))?;
        let ab = self.tripartition.ab();
        markov_gap_parts(&c_ab, &self.tripartition.a.relabel_within(&ab)?, &self.tripartition.b.relabel_within(&ab)?, ENTROPY_EPS)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_sizes() {
        let spec = ModelSpec::hofstadter(1, 4, 2.0);
        let layout = Layout::square(4, SmootherShape::TwoCircles, 1);
        let (tp, support, problem) = layout.plan(&spec).unwrap();
        assert_eq!(tp.lattice.width % 4, 0);
        assert_eq!(problem.n_ab(), 32);
        assert_eq!(problem.dim(), 32 + support.union().difference(&tp.ab()).len());
    }

    #[test]
    fn bare_gap_is_independent_of_smoother() {
        let spec = ModelSpec::hofstadter(1, 4, 2.0);
        let a = Experiment::build(&spec, Layout::square(4, SmootherShape::TwoCircles, 0), false).unwrap();
        let b = Experiment::build(&spec, Layout { margin: Some(8), ..Layout::square(4, SmootherShape::Joint, 2) }, false).unwrap();
        let (ha, hb) = (a.bare_parts().unwrap().markov_gap(), b.bare_parts().unwrap().markov_gap());
        assert!((ha - hb).abs() < 1e-10);
        assert!(Experiment::build(&spec, Layout::square(4, SmootherShape::TwoCircles, 1), true).is_err());
    }
}
