//! Randomized checks shared by the property tests and the acceptance harness. Each check
//! draws its instance from a seed and returns a description of the first violation.
#![allow(dead_code)]

use markov_gap::gaussian::{
    self, entanglement_hamiltonian, entropy, markov_gap_parts, reflected_covariance, CovarianceMatrix,
    ENTROPY_EPS, HAMILTONIAN_EPS,
};
use markov_gap::linalg::{self, eigh, CMat};
use markov_gap::optimizer::{
    apply_unitary, gradient_generator, line_search, optimize, project_tr, Generator, LineSearchConfig, NoiseSchedule, Refinement,
    OptimizerConfig, Problem,
};
use markov_gap::oracle::{dense_gap_parts, slater_statevector, DenseState};
use markov_gap::random::{
    random_hermitian_with_norm, random_mixed_covariance, random_orbitals, random_pure_covariance, random_unitary,
    seeded_rng,
};
use markov_gap::ModeMask;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;

pub type Check = std::result::Result<(), String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Random disjoint `A`, `B` of sizes `1..=max` among `n` modes.
fn random_split<R: Rng>(n: usize, max: usize, rng: &mut R) -> (ModeMask, ModeMask, Vec<usize>) {
    let mut modes: Vec<usize> = (0..n).collect();
    modes.shuffle(rng);
    let na = rng.random_range(1..=max);
    let nb = rng.random_range(1..=max.min(n - na));
    let a = ModeMask::from_indices(modes[..na].iter().copied());
    let b = ModeMask::from_indices(modes[na..na + nb].iter().copied());
    (a, b, modes)
}

/// Gaussian formulas against the dense state-vector oracle on a random Slater state.
pub fn oracle_equivalence(seed: u64) -> Check {
    let mut rng = seeded_rng(seed);
    let n = rng.random_range(6..=8);
    let filled = rng.random_range(1..n);
    let psi = random_orbitals(n, filled, &mut rng);
    let state = slater_statevector(&psi).map_err(|e| e.to_string())?;
    let cov = CovarianceMatrix::from_orbitals(&psi).map_err(|e| e.to_string())?;
    let (a, b, _) = random_split(n, 3, &mut rng);
    let g = markov_gap_parts(&cov, &a, &b, ENTROPY_EPS).map_err(|e| e.to_string())?;
    let d = dense_gap_parts(&state, &a, &b).map_err(|e| e.to_string())?;
    let pairs = [
        ("S_A", g.s_a, d.s_a),
        ("S_B", g.s_b, d.s_b),
        ("S_AB", g.s_ab, d.s_ab),
        ("I", g.mutual_information(), d.mutual_information()),
        ("S_R", g.reflected, d.reflected),
        ("h", g.markov_gap(), d.markov_gap()),
    ];
    for (name, x, y) in pairs {
        ensure((x - y).abs() < 1e-6, || format!("seed {seed}: {name} gaussian {x} dense {y}"))?;
    }
    Ok(())
}

/// Relative error between the analytic directional derivative of `h` and a central
/// difference with step `1e-5`, on a random 8-mode pure state.
pub fn gradient_relative_error(seed: u64) -> std::result::Result<f64, String> {
    let mut rng = seeded_rng(seed);
    let n = 8;
    let c = random_pure_covariance(n, rng.random_range(2..=6), &mut rng);
    let (a, b, modes) = random_split(n, 3, &mut rng);
    let k = rng.random_range(2..=n);
    // Unitaries acting only outside A u B leave h unchanged, so include a mode of A.
    let support = ModeMask::from_indices(modes[n - k..].iter().copied().chain([a.indices()[0]]));
    let k = support.len();
    let x = gradient_generator(&c, &a, &b, &support, HAMILTONIAN_EPS).map_err(|e| e.to_string())?;
    if x.norm() < 1e-6 {
        return Err(format!("seed {seed}: vanishing gradient"));
    }
    // Direction mostly along the gradient with a random admixture.
    let y = &x.x.mapv(|z| z / x.norm()) + &random_hermitian_with_norm(k, 0.3, &mut rng);
    let dir = Generator { support, x: y.clone() };
    let analytic = -linalg::trace_product(&x.x, &y);
    let h = |t: f64| -> std::result::Result<f64, String> {
        let moved = apply_unitary(&c, &dir, t).map_err(|e| e.to_string())?;
        gaussian::markov_gap(&moved, &a, &b, ENTROPY_EPS).map_err(|e| e.to_string())
    };
    let delta = 1e-5;
    let numeric = (h(delta)? - h(-delta)?) / (2.0 * delta);
    Ok((numeric - analytic).abs() / analytic.abs())
}

pub fn entanglement_hamiltonian_round_trip(seed: u64) -> Check {
    let mut rng = seeded_rng(seed);
    let n = rng.random_range(1..=8);
    let c = random_mixed_covariance(n, 1e-3, &mut rng);
    let k = entanglement_hamiltonian(&c, HAMILTONIAN_EPS).map_err(|e| e.to_string())?;
    let back = eigh(k.entries()).map_err(|e| e.to_string())?.map(|e| 1.0 / (1.0 + e.exp()));
    let d = linalg::max_abs_diff(&back, c.entries());
    ensure(d < 1e-9, || format!("seed {seed}: round trip defect {d:e}"))
}

pub fn entropy_additivity(seed: u64) -> Check {
    let mut rng = seeded_rng(seed);
    let n1 = rng.random_range(1..=5);
    let n2 = rng.random_range(1..=5);
    let c1 = random_mixed_covariance(n1, 0.0, &mut rng);
    let c2 = if rng.random_bool(0.5) {
        random_pure_covariance(n2, rng.random_range(0..=n2), &mut rng)
    } else {
        random_mixed_covariance(n2, 0.0, &mut rng)
    };
    let s = |c: &CovarianceMatrix| entropy(c, ENTROPY_EPS).map_err(|e| e.to_string());
    let joint = s(&CovarianceMatrix::direct_sum(&[&c1, &c2]))?;
    let sum = s(&c1)? + s(&c2)?;
    ensure((joint - sum).abs() < 1e-10, || format!("seed {seed}: {joint} vs {sum}"))
}

pub fn unitary_invariance(seed: u64) -> Check {
    let mut rng = seeded_rng(seed);
    let n = rng.random_range(1..=8);
    let c = random_mixed_covariance(n, 0.0, &mut rng);
    let u = random_unitary(n, &mut rng);
    let moved = c.conjugate_by(&u).map_err(|e| e.to_string())?;
    let (s0, s1) = (
        entropy(&c, ENTROPY_EPS).map_err(|e| e.to_string())?,
        entropy(&moved, ENTROPY_EPS).map_err(|e| e.to_string())?,
    );
    ensure((s0 - s1).abs() < 1e-9, || format!("seed {seed}: {s0} vs {s1}"))
}

pub fn purification_is_pure(seed: u64) -> Check {
    let mut rng = seeded_rng(seed);
    let n = rng.random_range(1..=8);
    let c = match rng.random_range(0..3) {
        0 => random_pure_covariance(n, rng.random_range(0..=n), &mut rng),
        1 => random_mixed_covariance(n, 0.0, &mut rng),
        // Eigenvalues at exactly 0 and 1 mixed with fractional ones.
        _ => {
            let occ: Vec<f64> = (0..n).map(|i| [0.0, 1.0, rng.random_range(0.0..1.0)][i % 3]).collect();
            CovarianceMatrix::diagonal(&occ).conjugate_by(&random_unitary(n, &mut rng)).map_err(|e| e.to_string())?
        }
    };
    let cr = reflected_covariance(&c, ENTROPY_EPS).map_err(|e| e.to_string())?;
    let d = cr.purity_defect();
    ensure(d <= 1e-7, || format!("seed {seed}: purity defect {d:e}"))
}

pub fn markov_gap_nonnegative(seed: u64) -> Check {
    let mut rng = seeded_rng(seed);
    let n = rng.random_range(2..=8);
    let c = if rng.random_bool(0.5) {
        random_pure_covariance(n, rng.random_range(0..=n), &mut rng)
    } else {
        random_mixed_covariance(n, 0.0, &mut rng)
    };
    let (a, b, _) = random_split(n, n / 2, &mut rng);
    let h = gaussian::markov_gap(&c, &a, &b, ENTROPY_EPS).map_err(|e| e.to_string())?;
    ensure(h >= -1e-8, || format!("seed {seed}: h = {h}"))
}

/// Line search on random one-dimensional objectives never returns a value above `h0`.
pub fn line_search_monotone(seed: u64) -> Check {
    let mut rng = seeded_rng(seed);
    let (amp, freq, slope) = (rng.random_range(0.1..2.0), rng.random_range(0.1..10.0), rng.random_range(-1.0..1.0));
    let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let f = |t: f64| amp * (freq * t + phase).sin() + slope * t;
    let h0 = f(0.0);
    let refinement = if rng.random_bool(0.5) { Refinement::Golden } else { Refinement::Quadratic };
    let cfg = LineSearchConfig { initial_step: rng.random_range(0.01..4.0), refinement, ..Default::default() };
    let slope = amp * freq * phase.cos() + slope;
    let r = line_search(|t| Ok(f(t)), h0, Some(slope), &cfg).map_err(|e| e.to_string())?;
    ensure(r.h <= h0, || format!("seed {seed}: {} > {h0}", r.h))?;
    ensure((f(r.dt) - r.h).abs() < 1e-12, || format!("seed {seed}: reported value does not match step"))?;
    ensure(!r.stalled || r.dt == 0.0, || format!("seed {seed}: stalled with nonzero step"))
}

/// Small random optimization: monotone trace, `h >= -1e-6`, and identical reruns.
pub fn optimizer_determinism(seed: u64) -> Check {
    let mut rng = seeded_rng(seed);
    let n = 9;
    let c = random_pure_covariance(n, rng.random_range(3..=6), &mut rng);
    let (a, b, modes) = random_split(n, 3, &mut rng);
    let rest: Vec<usize> = modes.iter().copied().filter(|m| !a.contains(*m) && !b.contains(*m)).collect();
    let support = ModeMask::from_indices(rest.iter().copied().chain([a.indices()[0], b.indices()[0]]));
    let p = Problem::new(&a, &b, &[support]).map_err(|e| e.to_string())?;
    let block = p.restrict(&c).map_err(|e| e.to_string())?;
    let cfg = OptimizerConfig {
        max_iters: 15,
        rng_seed: seed,
        noise_schedule: NoiseSchedule::Saddle,
        grad_tol: 1e-2,
        ..Default::default()
    };
    let r1 = optimize(&block, &p, &cfg).map_err(|e| e.to_string())?;
    let r2 = optimize(&block, &p, &cfg).map_err(|e| e.to_string())?;
    ensure(r1 == r2, || format!("seed {seed}: reruns differ"))?;
    ensure(r1.trace_is_monotone(0.0), || format!("seed {seed}: h increased on an accepted step"))?;
    ensure(r1.final_h >= -1e-6, || format!("seed {seed}: final h {}", r1.final_h))
}

/// `exp(i P(X))` commutes with time reversal for random `X` on paired modes.
pub fn tr_projection(seed: u64) -> Check {
    let mut rng = seeded_rng(seed);
    let sites = rng.random_range(1..=4);
    let n = 2 * sites;
    let mut s = CMat::zeros((n, n));
    for site in 0..sites {
        s[[2 * site + 1, 2 * site]] = Complex64::new(1.0, 0.0);
        s[[2 * site, 2 * site + 1]] = Complex64::new(-1.0, 0.0);
    }
    let x = Generator { support: ModeMask::range(0, n), x: random_hermitian_with_norm(n, rng.random_range(0.1..5.0), &mut rng) };
    let p = project_tr(&x, &s).map_err(|e| e.to_string())?;
    let twice = project_tr(&p, &s).map_err(|e| e.to_string())?;
    ensure(linalg::max_abs_diff(&twice.x, &p.x) < 1e-12, || format!("seed {seed}: projection not idempotent"))?;
    let u = eigh(&p.x).map_err(|e| e.to_string())?.exp_i(1.0);
    let v = markov_gap::models::tr_violation(&s, &u);
    ensure(v <= 1e-10, || format!("seed {seed}: TR violation {v:e}"))
}

/// Dense entropies do not depend on how modes are ordered inside each region.
pub fn dense_relabeling(seed: u64) -> Check {
    let mut rng = seeded_rng(seed);
    let n = rng.random_range(4..=7);
    let psi = random_orbitals(n, rng.random_range(1..n), &mut rng);
    let state = slater_statevector(&psi).map_err(|e| e.to_string())?;
    let (a, b, _) = random_split(n, 2, &mut rng);
    let base = dense_gap_parts(&state, &a, &b).map_err(|e| e.to_string())?;
    // Shuffle the positions of A's modes among themselves, likewise for B and C.
    let mut order: Vec<usize> = (0..n).collect();
    let c: Vec<usize> = (0..n).filter(|m| !a.contains(*m) && !b.contains(*m)).collect();
    for group in [a.indices().to_vec(), b.indices().to_vec(), c] {
        let mut shuffled = group.clone();
        shuffled.shuffle(&mut rng);
        for (&slot, &mode) in group.iter().zip(&shuffled) {
            order[slot] = mode;
        }
    }
    let moved: DenseState = state.reorder(&order).map_err(|e| e.to_string())?;
    let relabeled = dense_gap_parts(&moved, &a, &b).map_err(|e| e.to_string())?;
    for (x, y) in [(base.s_a, relabeled.s_a), (base.s_b, relabeled.s_b), (base.s_ab, relabeled.s_ab), (base.reflected, relabeled.reflected)] {
        ensure((x - y).abs() < 1e-10, || format!("seed {seed}: {x} vs {y}"))?;
    }
    Ok(())
}
