use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the step is refined once a decreasing step is known.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Refinement {
    /// Bracket the minimum and shrink the bracket by golden section.
    Golden,
    /// One step to the minimum of the parabola through `phi(0)`, `phi'(0)` and the
    /// accepted step. Falls back to golden section when no slope is given.
    Quadratic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LineSearchConfig {
    pub refinement: Refinement,
    pub initial_step: f64,
    pub shrink: f64,
    pub max_backtracks: usize,
    /// Step doublings tried when the initial step already decreases the objective.
    pub max_expansions: usize,
    pub max_bisections: usize,
    /// Required decrease for the first accepted step.
    pub min_decrease: f64,
}

impl Default for LineSearchConfig {
    fn default() -> Self {
        Self {
            refinement: Refinement::Quadratic,
            initial_step: 1.0,
            shrink: 0.5,
            max_backtracks: 30,
            max_expansions: 8,
            max_bisections: 6,
            min_decrease: 1e-12,
        }
    }
}

impl LineSearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.initial_step > 0.0) || !(self.shrink > 0.0 && self.shrink < 1.0) || !(self.min_decrease >= 0.0) {
            return Err(Error::Validation(
                "line search needs initial_step > 0, 0 < shrink < 1, min_decrease >= 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineSearchResult {
    pub dt: f64,
    pub h: f64,
    pub evaluations: usize,
    /// No step decreased the objective; `dt` is 0 and `h` the starting value.
    pub stalled: bool,
}

const GOLDEN: f64 = 0.381_966_011_250_105_1;

/// Minimize `phi` along `dt >= 0` starting from `phi(0) = h0`, with `slope = phi'(0)`
/// when known. The returned value never exceeds `h0`.
///
/// Golden refinement backtracks from the initial step until the objective drops by
/// `min_decrease`, or doubles the step while it keeps dropping, and refines the bracket
/// by golden section. Quadratic refinement backtracks to the interpolated minimum and
/// then takes one interpolation step.
pub fn line_search<F>(mut phi: F, h0: f64, slope: Option<f64>, cfg: &LineSearchConfig) -> Result<LineSearchResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut evaluations = 0;
    let mut eval = |t: f64, n: &mut usize| -> Result<f64> {
        *n += 1;
        let v = phi(t)?;
        if !v.is_finite() {
            return Err(Error::Numeric(format!("objective is not finite at step {t:e}")));
        }
        Ok(v)
    };
    if let (Refinement::Quadratic, Some(s)) = (cfg.refinement, slope) {
        if s < 0.0 {
            return quadratic(&mut eval, h0, s, cfg);
        }
    }

    let mut dt = cfg.initial_step;
    let mut h_dt = eval(dt, &mut evaluations)?;
    // Bracket a < b < c with phi(b) below phi at both ends.
    let (mut a, mut b, mut c, mut fb);
    if h_dt < h0 - cfg.min_decrease {
        let mut prev = 0.0;
        let mut bracket = None;
        for _ in 0..cfg.max_expansions {
            let next = 2.0 * dt;
            let h_next = eval(next, &mut evaluations)?;
            if h_next < h_dt {
                prev = dt;
                (dt, h_dt) = (next, h_next);
            } else {
                bracket = Some((prev, dt, next));
                break;
            }
        }
        let Some(br) = bracket else {
            return Ok(LineSearchResult { dt, h: h_dt, evaluations, stalled: false });
        };
        (a, b, c) = br;
        fb = h_dt;
    } else {
        let mut bracket = None;
        for _ in 0..cfg.max_backtracks {
            let rejected = dt;
            dt *= cfg.shrink;
            h_dt = eval(dt, &mut evaluations)?;
            if h_dt < h0 - cfg.min_decrease {
                bracket = Some((0.0, dt, rejected));
                break;
            }
        }
        let Some(br) = bracket else {
            return Ok(LineSearchResult { dt: 0.0, h: h0, evaluations, stalled: true });
        };
        (a, b, c) = br;
        fb = h_dt;
    }

    for _ in 0..cfg.max_bisections {
        let right = c - b > b - a;
        let x = if right { b + GOLDEN * (c - b) } else { b - GOLDEN * (b - a) };
        let fx = eval(x, &mut evaluations)?;
        if fx < fb {
            if right {
                a = b;
            } else {
                c = b;
            }
            (b, fb) = (x, fx);
        } else if right {
            c = x;
        } else {
            a = x;
        }
    }
    Ok(LineSearchResult { dt: b, h: fb, evaluations, stalled: false })
}

/// Minimizer of the parabola with value `h0` and slope `s` at 0 and value `f` at `t`.
fn parabola_min(h0: f64, s: f64, t: f64, f: f64) -> Option<f64> {
    let curvature = f - h0 - s * t;
    (curvature > 0.0).then(|| -s * t * t / (2.0 * curvature))
}

fn quadratic<E>(eval: &mut E, h0: f64, s: f64, cfg: &LineSearchConfig) -> Result<LineSearchResult>
where
    E: FnMut(f64, &mut usize) -> Result<f64>,
{
    let mut evaluations = 0;
    let mut t = cfg.initial_step;
    let mut f = eval(t, &mut evaluations)?;
    let mut tries = 0;
    while !(f < h0 - cfg.min_decrease) {
        if tries == cfg.max_backtracks {
            return Ok(LineSearchResult { dt: 0.0, h: h0, evaluations, stalled: true });
        }
        tries += 1;
        let guess = parabola_min(h0, s, t, f).unwrap_or(cfg.shrink * t);
        t = guess.clamp(0.1 * t, cfg.shrink * t);
        f = eval(t, &mut evaluations)?;
    }
    match parabola_min(h0, s, t, f) {
        Some(star) => {
            let star = star.clamp(0.25 * t, 4.0 * t);
            if (star - t).abs() > 0.05 * t {
                let fs = eval(star, &mut evaluations)?;
                if fs < f {
                    (t, f) = (star, fs);
                }
            }
        }
        // Objective at or below its tangent: keep doubling while it drops.
        None => {
            for _ in 0..cfg.max_expansions {
                let f2 = eval(2.0 * t, &mut evaluations)?;
                if f2 >= f {
                    break;
                }
                (t, f) = (2.0 * t, f2);
            }
        }
    }
    Ok(LineSearchResult { dt: t, h: f, evaluations, stalled: false })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_minimizer_is_found() {
        for opt in [0.013, 0.37, 1.0, 3.7, 40.0] {
            let f = |t: f64| Ok((t - opt) * (t - opt) + 1.0);
            let cfg = LineSearchConfig { refinement: Refinement::Golden, max_bisections: 12, ..Default::default() };
            let r = line_search(f, f(0.0).unwrap(), None, &cfg).unwrap();
            assert!(!r.stalled);
            assert!((r.dt - opt).abs() <= 0.02 * opt, "{opt}: {}", r.dt);
            assert!(r.h <= f(0.0).unwrap());
        }
    }

    #[test]
    fn flat_objective_stalls() {
        let r = line_search(|_| Ok(2.0), 2.0, None, &LineSearchConfig::default()).unwrap();
        assert!(r.stalled);
        assert_eq!(r.dt, 0.0);
        assert_eq!(r.h, 2.0);
    }

    #[test]
    fn increasing_objective_stalls() {
        let r = line_search(|t| Ok(1.0 + t), 1.0, None, &LineSearchConfig::default()).unwrap();
        assert!(r.stalled);
        // A wrong slope cannot make the search accept an increase.
        let r = line_search(|t| Ok(1.0 + t), 1.0, Some(-1.0), &LineSearchConfig::default()).unwrap();
        assert!(r.stalled);
    }

    #[test]
    fn non_finite_is_an_error() {
        assert!(line_search(|_| Ok(f64::NAN), 1.0, None, &LineSearchConfig::default()).is_err());
    }

    #[test]
    fn quadratic_refinement_is_exact_on_parabolas() {
        for opt in [0.013, 0.37, 1.0, 3.7, 40.0] {
            let f = |t: f64| Ok((t - opt) * (t - opt) + 1.0);
            let r = line_search(f, f(0.0).unwrap(), Some(-2.0 * opt), &LineSearchConfig::default()).unwrap();
            assert!(!r.stalled);
            assert!(r.h < f(0.0).unwrap());
            if (0.05..=4.0).contains(&opt) {
                assert!((r.dt - opt).abs() < 1e-9 * opt, "{opt}: {}", r.dt);
                assert!(r.evaluations <= 3);
            }
        }
    }
}
