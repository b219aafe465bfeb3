//! Gradient descent of the Markov gap over Gaussian smoother unitaries.
//!
//! The optimized block holds the modes of `A u B` followed by the smoother modes outside
//! `A u B`. Each smoother mask carries its own unitary; all of them are updated together
//! along the steepest-descent generators computed from one shared kernel.

mod kernel;
mod line_search;

pub use kernel::{
    apply_unitary, conjugate_on, descent_generator, gap_kernel, gap_value, gradient_generator, mutual_info_kernel,
    project_tr, reflected_kernel, GapKernel, Generator,
};
pub use line_search::{line_search, LineSearchConfig, LineSearchResult, Refinement};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{CovarianceMatrix, ModeMask, HAMILTONIAN_EPS};
use crate::geometry::{Lattice, SmootherSupport, Tripartition};
use crate::linalg::{self, eigh, principal_submatrix, CMat, Eigh};
use crate::models::tr_operator_on;
use crate::random::{random_hermitian_with_norm, seeded_rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseSchedule {
    Off,
    /// Kick when the line search stalls or the gradient norm plateaus.
    StallOrPlateau,
    /// As above, and also when the gradient tolerance is reached, so that saddle points
    /// with a small gradient are left as well. Stops after repeated failed kicks.
    Saddle,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    /// Stop when the Frobenius norm of the full generator falls below this.
    pub grad_tol: f64,
    pub max_iters: usize,
    pub line_search: LineSearchConfig,
    pub noise_amplitude: f64,
    pub noise_schedule: NoiseSchedule,
    /// A plateau is `plateau_window` iterations over which `h` fell by less than
    /// `plateau_rel * h`.
    pub plateau_window: usize,
    pub plateau_rel: f64,
    /// A kick counts as an escape when `h` later drops this far below its pre-kick value.
    pub escape_tol: f64,
    pub max_failed_kicks: usize,
    pub rng_seed: u64,
    pub tr_constrained: bool,
    /// Eigenvalue clamp for the entanglement Hamiltonians in the gradient.
    pub eps: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            grad_tol: 3e-3,
            max_iters: 2000,
            line_search: LineSearchConfig::default(),
            noise_amplitude: 1e-2,
            noise_schedule: NoiseSchedule::StallOrPlateau,
            plateau_window: 20,
            plateau_rel: 1e-3,
            escape_tol: 1e-4,
            max_failed_kicks: 3,
            rng_seed: 0,
            tr_constrained: false,
            eps: HAMILTONIAN_EPS,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        self.line_search.validate()?;
        let positive = [self.grad_tol, self.plateau_rel, self.escape_tol];
        if positive.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::Validation("grad_tol, plateau_rel and escape_tol must be positive".into()));
        }
        if !(self.noise_amplitude >= 0.0) {
            return Err(Error::Validation("noise_amplitude must be >= 0".into()));
        }
        if !(self.eps > 0.0 && self.eps <= 1e-4) {
            return Err(Error::Validation("eps must lie in (0, 1e-4]".into()));
        }
        if self.plateau_window == 0 {
            return Err(Error::Validation("plateau_window must be >= 1".into()));
        }
        Ok(())
    }

    fn noise_enabled(&self) -> bool {
        !self.tr_constrained && self.noise_amplitude > 0.0 && self.noise_schedule != NoiseSchedule::Off
    }
}

/// One smoother mask inside the optimized block.
#[derive(Clone, Debug)]
struct SupportBlock {
    global: ModeMask,
    /// Block position of each mask mode, in mask order.
    local: Vec<usize>,
    tr: Option<CMat>,
}

/// Mode layout of an optimization: `A u B` first, then the remaining smoother modes.
#[derive(Clone, Debug)]
pub struct Problem {
    modes: Vec<usize>,
    n_ab: usize,
    a: ModeMask,
    b: ModeMask,
    blocks: Vec<SupportBlock>,
}

impl Problem {
    /// `a`, `b` and `supports` use global mode indices. Empty supports are dropped.
    pub fn new(a: &ModeMask, b: &ModeMask, supports: &[ModeMask]) -> Result<Self> {
        if !a.is_disjoint(b) {
            return Err(Error::Validation("regions A and B overlap".into()));
        }
        let supports: Vec<&ModeMask> = supports.iter().filter(|m| !m.is_empty()).collect();
        for (i, s) in supports.iter().enumerate() {
            for t in &supports[i + 1..] {
                if !s.is_disjoint(t) {
                    return Err(Error::Geometry("smoother masks must be disjoint".into()));
                }
            }
        }
        let ab = a.union(b);
        let mut modes: Vec<usize> = ab.indices().to_vec();
        let extra = supports.iter().fold(ModeMask::empty(), |acc, s| acc.union(s)).difference(&ab);
        modes.extend(extra.indices());
        let position = |g: usize| modes.iter().position(|&m| m == g).expect("mode in block");
        let blocks = supports
            .iter()
            .map(|s| SupportBlock {
                global: (*s).clone(),
                local: s.indices().iter().map(|&g| position(g)).collect(),
                tr: None,
            })
            .collect();
        Ok(Self {
            n_ab: ab.len(),
            a: a.relabel_within(&ab)?,
            b: b.relabel_within(&ab)?,
            modes,
            blocks,
        })
    }

    pub fn from_geometry(tp: &Tripartition, support: &SmootherSupport) -> Result<Self> {
        Self::new(&tp.a, &tp.b, &support.masks)
    }

    /// Attach time-reversal matrices for TR-constrained runs on a two-layer lattice.
    pub fn with_time_reversal(mut self, lattice: &Lattice) -> Result<Self> {
        for block in &mut self.blocks {
            block.tr = Some(tr_operator_on(lattice, &block.global)?);
        }
        Ok(self)
    }

    /// Global mode index of each block position.
    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    pub fn dim(&self) -> usize {
        self.modes.len()
    }

    pub fn n_ab(&self) -> usize {
        self.n_ab
    }

    pub fn supports(&self) -> Vec<ModeMask> {
        self.blocks.iter().map(|b| b.global.clone()).collect()
    }

    /// Block covariance from a global entry function.
    pub fn covariance(&self, entry: impl Fn(usize, usize) -> Complex64) -> Result<CovarianceMatrix> {
        let m = &self.modes;
        CovarianceMatrix::new(CMat::from_shape_fn((m.len(), m.len()), |(i, j)| entry(m[i], m[j])))
    }

    /// Block covariance from a covariance over all global modes.
    pub fn restrict(&self, c: &CovarianceMatrix) -> Result<CovarianceMatrix> {
        if let Some(&max) = self.modes.iter().max() {
            if max >= c.dim() {
                return Err(Error::Validation("covariance is smaller than the problem".into()));
            }
        }
        CovarianceMatrix::new(principal_submatrix(c.entries(), &self.modes))
    }

    fn ab_indices(&self) -> Vec<usize> {
        (0..self.n_ab).collect()
    }

    fn value(&self, c: &CMat) -> Result<f64> {
        let ab = principal_submatrix(c, &self.ab_indices());
        Ok(gap_value(&ab, &self.a, &self.b)?.markov_gap())
    }

    /// Markov gap and the per-block descent generators (TR-projected when requested).
    fn gradient(&self, c: &CovarianceMatrix, eps: f64, tr: bool) -> Result<(f64, Vec<CMat>)> {
        let ab = c.restrict(&ModeMask::range(0, self.n_ab))?;
        let gk = gap_kernel(&ab, &self.a, &self.b, eps)?;
        let ab_idx = self.ab_indices();
        let mut gens = Vec::with_capacity(self.blocks.len());
        for block in &self.blocks {
            let x = descent_generator(c.entries(), &gk.kernel, &ab_idx, &block.local);
            let x = if tr {
                let s = block
                    .tr
                    .as_ref()
                    .ok_or_else(|| Error::Validation("time-reversal constraint needs TR matrices".into()))?;
                project_tr(&Generator { support: block.global.clone(), x }, s)?.x
            } else {
                x
            };
            gens.push(x);
        }
        Ok((gk.parts.markov_gap(), gens))
    }

    fn conjugate(&self, c: &CMat, unitaries: &[CMat]) -> CMat {
        let mut out = c.clone();
        for (block, u) in self.blocks.iter().zip(unitaries) {
            out = conjugate_on(&out, u, &block.local);
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub h: f64,
    pub grad_norm: f64,
    /// Step accepted after this row's gradient (0 for stalls and kicks).
    pub step: f64,
    /// `noise` when this row follows a random kick.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaddleEvent {
    pub iteration: usize,
    pub h: f64,
    pub grad_norm: f64,
    pub trigger: String,
    pub amplitude: f64,
    /// Whether `h` later fell below the pre-kick value by the escape tolerance.
    pub escaped: Option<bool>,
}

/// A run of iterations over which `h` changed by less than the plateau tolerance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Plateau {
    pub start_iteration: usize,
    pub end_iteration: usize,
    pub h: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorState {
    pub support: ModeMask,
    /// Accumulated smoother unitary on the support, in mask order.
    pub unitary: CMat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationReport {
    pub initial_h: f64,
    pub final_h: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    pub stop_reason: String,
    pub final_grad_norm: f64,
    pub grad_norm_kind: String,
    pub trace: Vec<TraceRow>,
    pub saddle_events: Vec<SaddleEvent>,
    pub plateaus: Vec<Plateau>,
    pub generators: Vec<GeneratorState>,
}

impl OptimizationReport {
    pub fn trace_is_monotone(&self, tol: f64) -> bool {
        self.trace
            .windows(2)
            .all(|w| w[1].event.is_some() || w[1].h <= w[0].h + tol)
    }
}

/// Minimize the Markov gap of the block covariance `c` (laid out as `problem.modes()`).
pub fn optimize(c: &CovarianceMatrix, problem: &Problem, config: &OptimizerConfig) -> Result<OptimizationReport> {
    optimize_with(c, problem, config, None, |_| {})
}

/// [`optimize`] with an optional warm start (one unitary per support, in mask order) and
/// a per-iteration observer.
pub fn optimize_with(
    c: &CovarianceMatrix,
    problem: &Problem,
    config: &OptimizerConfig,
    warm_start: Option<&[CMat]>,
    mut observer: impl FnMut(&TraceRow),
) -> Result<OptimizationReport> {
    config.validate()?;
    if c.dim() != problem.dim() {
        return Err(Error::Validation(format!(
            "covariance has {} modes, problem block has {}",
            c.dim(),
            problem.dim()
        )));
    }
    let nb = problem.blocks.len();
    let mut unitaries: Vec<CMat> = match warm_start {
        Some(us) => {
            if us.len() != nb || us.iter().zip(&problem.blocks).any(|(u, b)| u.dim() != (b.local.len(), b.local.len())) {
                return Err(Error::Validation("warm-start unitaries do not match the supports".into()));
            }
            us.to_vec()
        }
        None => problem.blocks.iter().map(|b| CMat::eye(b.local.len())).collect(),
    };
    let mut state = CovarianceMatrix::new(problem.conjugate(c.entries(), &unitaries))?;

    let mut report = OptimizationReport {
        initial_h: f64::NAN,
        final_h: f64::NAN,
        iterations: 0,
        evaluations: 0,
        converged: false,
        stop_reason: String::new(),
        final_grad_norm: 0.0,
        grad_norm_kind: "frobenius".into(),
        trace: Vec::new(),
        saddle_events: Vec::new(),
        plateaus: Vec::new(),
        generators: Vec::new(),
    };

    if nb == 0 {
        let h = problem.value(state.entries())?;
        report.evaluations = 1;
        report.initial_h = h;
        report.final_h = h;
        report.converged = true;
        report.stop_reason = "no_support".into();
        let row = TraceRow { iteration: 0, h, grad_norm: 0.0, step: 0.0, event: None };
        observer(&row);
        report.trace.push(row);
        return Ok(report);
    }

    let mut rng = seeded_rng(config.rng_seed);
    let mut amplitude = config.noise_amplitude;
    let noise = config.noise_enabled();
    let mut failed_kicks = 0usize;
    // (event index, h before the kick)
    let mut pending: Option<(usize, f64)> = None;
    let mut last_event_iter = 0usize;
    let mut next_event: Option<String> = None;
    let mut h_history: Vec<f64> = Vec::new();
    // The line search starts from the previously accepted step.
    let mut ls_cfg = config.line_search.clone();

    let mut iteration = 0usize;
    loop {
        let (h, gens) = problem.gradient(&state, config.eps, config.tr_constrained)?;
        report.evaluations += 1;
        let gnorm = gens.iter().map(|g| linalg::frobenius_norm(g).powi(2)).sum::<f64>().sqrt();
        if iteration == 0 {
            report.initial_h = h;
        }
        h_history.push(h);
        report.final_h = h;
        report.final_grad_norm = gnorm;
        report.iterations = iteration;
        report.trace.push(TraceRow { iteration, h, grad_norm: gnorm, step: 0.0, event: next_event.take() });

        if iteration >= config.max_iters {
            report.stop_reason = "max_iterations".into();
            break;
        }

        let plateaued = iteration >= last_event_iter + config.plateau_window && {
            let old = h_history[iteration - config.plateau_window];
            old - h <= config.plateau_rel * h.abs()
        };
        let at_tolerance = gnorm < config.grad_tol;

        let trigger = if at_tolerance {
            (noise && config.noise_schedule == NoiseSchedule::Saddle).then_some("gradient_tolerance")
        } else if plateaued && noise {
            Some("plateau")
        } else {
            None
        };

        let mut kick = |trigger: &str, report: &mut OptimizationReport, state: &mut CovarianceMatrix,
                        unitaries: &mut Vec<CMat>, next_event: &mut Option<String>|
         -> Result<bool> {
            if let Some((idx, before)) = pending.take() {
                let escaped = h < before - config.escape_tol;
                report.saddle_events[idx].escaped = Some(escaped);
                if escaped {
                    amplitude *= 0.5;
                    failed_kicks = 0;
                } else {
                    failed_kicks += 1;
                }
            }
            if failed_kicks >= config.max_failed_kicks {
                return Ok(false);
            }
            let share = amplitude / (nb as f64).sqrt();
            let kicks: Vec<CMat> = problem
                .blocks
                .iter()
                .map(|b| eigh(&random_hermitian_with_norm(b.local.len(), share, &mut rng)).map(|e| e.exp_i(1.0)))
                .collect::<Result<_>>()?;
            *state = CovarianceMatrix::new(problem.conjugate(state.entries(), &kicks))?;
            for (u, k) in unitaries.iter_mut().zip(&kicks) {
                *u = k.dot(u);
            }
            report.saddle_events.push(SaddleEvent {
                iteration,
                h,
                grad_norm: gnorm,
                trigger: trigger.to_string(),
                amplitude,
                escaped: None,
            });
            pending = Some((report.saddle_events.len() - 1, h));
            *next_event = Some("noise".into());
            Ok(true)
        };

        if at_tolerance && trigger.is_none() {
            report.converged = true;
            report.stop_reason = "gradient_tolerance".into();
            break;
        }
        if let Some(t) = trigger {
            if kick(t, &mut report, &mut state, &mut unitaries, &mut next_event)? {
                last_event_iter = iteration;
                observer(report.trace.last().unwrap());
                iteration += 1;
                continue;
            }
            // Out of kicks.
            report.converged = at_tolerance;
            report.stop_reason = if at_tolerance { "gradient_tolerance" } else { "plateau" }.into();
            break;
        }

        let eigs: Vec<Eigh> = gens.iter().map(eigh).collect::<Result<_>>()?;
        let phi = |dt: f64| -> Result<f64> {
            let us: Vec<CMat> = eigs.iter().map(|e| e.exp_i(dt)).collect();
            problem.value(&problem.conjugate(state.entries(), &us))
        };
        let slope = Some(-gnorm * gnorm);
        let mut ls = line_search(&phi, h, slope, &ls_cfg)?;
        report.evaluations += ls.evaluations;
        if ls.stalled && ls_cfg.initial_step != config.line_search.initial_step {
            ls = line_search(&phi, h, slope, &config.line_search)?;
            report.evaluations += ls.evaluations;
        }
        if ls.stalled {
            ls_cfg.initial_step = config.line_search.initial_step;
            if noise && kick("stall", &mut report, &mut state, &mut unitaries, &mut next_event)? {
                last_event_iter = iteration;
                observer(report.trace.last().unwrap());
                iteration += 1;
                continue;
            }
            report.stop_reason = "stalled".into();
            break;
        }
        let us: Vec<CMat> = eigs.iter().map(|e| e.exp_i(ls.dt)).collect();
        state = CovarianceMatrix::new(problem.conjugate(state.entries(), &us))?;
        for (acc, u) in unitaries.iter_mut().zip(&us) {
            *acc = u.dot(acc);
        }
        ls_cfg.initial_step = ls.dt;
        report.trace.last_mut().unwrap().step = ls.dt;
        observer(report.trace.last().unwrap());
        iteration += 1;
    }
    if let Some((idx, before)) = pending {
        report.saddle_events[idx].escaped = Some(report.final_h < before - config.escape_tol);
    }
    report.plateaus = find_plateaus(&report.trace, config.plateau_window, config.plateau_rel);
    report.generators = problem
        .blocks
        .iter()
        .zip(unitaries)
        .map(|(b, u)| GeneratorState { support: b.global.clone(), unitary: u })
        .collect();
    Ok(report)
}

/// Maximal runs where `h` moved by less than `rel * h` across every `window` iterations.
pub fn find_plateaus(trace: &[TraceRow], window: usize, rel: f64) -> Vec<Plateau> {
    let mut out = Vec::new();
    if trace.len() <= window {
        return out;
    }
    let flat: Vec<bool> = (window..trace.len())
        .map(|i| (trace[i].h - trace[i - window].h).abs() <= rel * trace[i - window].h.abs())
        .collect();
    let mut i = 0;
    while i < flat.len() {
        if !flat[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i < flat.len() && flat[i] {
            i += 1;
        }
        let (s, e) = (start, i - 1 + window);
        let mean = trace[s..=e].iter().map(|r| r.h).sum::<f64>() / (e - s + 1) as f64;
        out.push(Plateau { start_iteration: trace[s].iteration, end_iteration: trace[e].iteration, h: mean });
    }
    out
}

/// A Haar-random kick of the given Frobenius size, exposed for tests of escape logic.
pub fn random_kick<R: Rng + ?Sized>(n: usize, amplitude: f64, rng: &mut R) -> Result<CMat> {
    Ok(eigh(&random_hermitian_with_norm(n, amplitude, rng))?.exp_i(1.0))
}
