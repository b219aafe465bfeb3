//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria 5 and 6 run optimizations that take hours; they are skipped unless the
//! binary gets `--long` or `MARKOV_GAP_LONG=1` is set. Use a release build for them:
//! `cargo test --release -p markov-gap --test acceptance -- --long`.

mod support;

use std::f64::consts::LN_2;
use std::time::Instant;

use markov_gap::experiment::{Experiment, Layout};
use markov_gap::geometry::SmootherShape;
use markov_gap::models::{chern_number, solve_bands, ModelSpec};
use markov_gap::optimizer::{optimize_with, OptimizationReport, OptimizerConfig};
use markov_gap::oracle::{dense_gap_parts, toric_sots_state};

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Criterion = fn(bool) -> Outcome;

fn outcome(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn oracle_equivalence(_: bool) -> Outcome {
    let failures: Vec<String> = (0..50).filter_map(|s| support::oracle_equivalence(1000 + s).err()).collect();
    match failures.first() {
        None => Outcome::Pass("50 random Slater states agree with the dense oracle to 1e-6".into()),
        Some(f) => Outcome::Fail(format!("{} of 50 disagree, first: {f}", failures.len())),
    }
}

fn gradient(_: bool) -> Outcome {
    let mut worst = 0.0f64;
    for s in 0..20 {
        match support::gradient_relative_error(2000 + s) {
            Ok(e) => worst = worst.max(e),
            Err(e) => return Outcome::Fail(e),
        }
    }
    outcome(worst < 1e-3, format!("max relative error {worst:.2e} over 20 states (< 1e-3)"))
}

fn toric(_: bool) -> Outcome {
    let result = toric_sots_state().and_then(|t| dense_gap_parts(&t.state, &t.a, &t.b));
    match result {
        Ok(p) => outcome(p.markov_gap().abs() <= 1e-10, format!("h = {:.2e}", p.markov_gap())),
        Err(e) => Outcome::Fail(e.to_string()),
    }
}

fn bare_gap(spec: &ModelSpec, l: usize) -> markov_gap::Result<f64> {
    let layout = Layout { margin: Some(12), ..Layout::square(l, SmootherShape::TwoCircles, 0) };
    Ok(Experiment::build(spec, layout, false)?.bare_parts()?.markov_gap())
}

fn bare(_: bool) -> Outcome {
    let hof = bare_gap(&ModelSpec::hofstadter(1, 4, 2.0), 24);
    let ti = bare_gap(&ModelSpec::topological_insulator(1, 4, 2.0), 24);
    match (hof, ti) {
        (Ok(h), Ok(t)) => outcome(
            (h - 0.3429).abs() <= 0.01 && (t - 0.6857).abs() <= 0.015,
            format!("L=24 Hofstadter h = {h:.4} (0.3429 +- 0.01), TI h = {t:.4} (0.6857 +- 0.015)"),
        ),
        (Err(e), _) | (_, Err(e)) => Outcome::Fail(e.to_string()),
    }
}

fn run(spec: &ModelSpec, layout: Layout, cfg: &OptimizerConfig, label: &str) -> markov_gap::Result<OptimizationReport> {
    let start = Instant::now();
    let exp = Experiment::build(spec, layout, cfg.tr_constrained)?;
    let report = optimize_with(&exp.covariance, &exp.problem, cfg, None, |row| {
        if row.iteration % 50 == 0 {
            eprintln!("    [{label}] iteration {} h = {:.5} |X| = {:.2e}", row.iteration, row.h, row.grad_norm);
        }
    })?;
    eprintln!(
        "    [{label}] h = {:.5} after {} iterations ({}), {:.0?}",
        report.final_h,
        report.iterations,
        report.stop_reason,
        start.elapsed()
    );
    Ok(report)
}

fn capped(max_iters: usize) -> OptimizerConfig {
    OptimizerConfig { max_iters, ..Default::default() }
}

fn optimized_values(long: bool) -> Outcome {
    if !long {
        return Outcome::Skip("long-running; pass --long".into());
    }
    let spec = ModelSpec::hofstadter(1, 4, 2.0);
    let mut values = Vec::new();
    for r in 0..=3 {
        match run(&spec, Layout::square(16, SmootherShape::TwoCircles, r), &capped(300), &format!("R={r}")) {
            Ok(rep) => values.push(rep.final_h),
            Err(e) => return Outcome::Fail(e.to_string()),
        }
    }
    let target = LN_2 / 3.0;
    let last = values[3];
    let monotone = values.windows(2).all(|w| w[1] < w[0]);
    outcome(
        (last - target).abs() <= 0.1 * target && monotone,
        format!(
            "final h over R=0..3: {}; R=3 vs (1/3)ln2 = {target:.4}: {:+.1}%",
            values.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(", "),
            100.0 * (last - target) / target
        ),
    )
}

fn shapes(long: bool) -> Outcome {
    if !long {
        return Outcome::Skip("long-running; pass --long".into());
    }
    let hof = ModelSpec::hofstadter(1, 4, 2.0);
    let ti = ModelSpec::topological_insulator(1, 4, 2.0);
    let joint = run(&hof, Layout::square(16, SmootherShape::Joint, 3), &capped(300), "joint");
    let constrained = run(
        &ti,
        Layout::square(16, SmootherShape::TwoCircles, 3),
        &OptimizerConfig { tr_constrained: true, ..capped(150) },
        "TI TR",
    );
    let free = run(
        &ti,
        Layout::square(16, SmootherShape::TwoCircles, 3),
        &capped(400),
        "TI free",
    );
    let (joint, constrained, free) = match (joint, constrained, free) {
        (Ok(a), Ok(b), Ok(c)) => (a, b, c),
        (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => return Outcome::Fail(e.to_string()),
    };
    let target = 2.0 * LN_2 / 3.0;
    let plateau = free.plateaus.iter().find(|p| (p.h - target).abs() <= 0.1 * target);
    let ok = joint.final_h < 0.02
        && (constrained.final_h - target).abs() <= 0.1 * target
        && free.final_h < 0.05
        && plateau.is_some();
    outcome(
        ok,
        format!(
            "joint h = {:.4} (< 0.02); TI TR-constrained h = {:.4} (2/3 ln2 = {target:.4} +- 10%); \
             TI unconstrained h = {:.4} (< 0.05), plateau near 2/3 ln2: {}",
            joint.final_h,
            constrained.final_h,
            free.final_h,
            plateau.map_or("none".to_string(), |p| format!("h = {:.4} over iterations {}..{}", p.h, p.start_iteration, p.end_iteration)),
        ),
    )
}

fn chern(_: bool) -> Outcome {
    let cases: [(&str, ModelSpec, Vec<usize>, i64); 4] = [
        ("(1,4) lowest band", ModelSpec::hofstadter(1, 4, 2.0), vec![0], 1),
        ("(1,6) lowest two bands", ModelSpec::hofstadter(1, 6, 0.0), vec![0, 1], 2),
        ("TI up layer", ModelSpec::hofstadter(1, 4, 2.0), vec![0], 1),
        ("TI down layer", ModelSpec::hofstadter(-1, 4, 2.0), vec![0], -1),
    ];
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, spec, bands, expect) in cases {
        match solve_bands(&spec, 24, 24).and_then(|sol| chern_number(&sol, &bands)) {
            Ok(r) => {
                ok &= r.chern == expect;
                parts.push(format!("{name}: {}", r.chern));
            }
            Err(e) => return Outcome::Fail(format!("{name}: {e}")),
        }
    }
    outcome(ok, parts.join(", "))
}

fn properties(_: bool) -> Outcome {
    let checks: [(&str, fn(u64) -> support::Check, u64); 10] = [
        ("markov gap >= 0", support::markov_gap_nonnegative, 100),
        ("purification purity", support::purification_is_pure, 100),
        ("entropy additivity", support::entropy_additivity, 100),
        ("unitary invariance", support::unitary_invariance, 100),
        ("entanglement Hamiltonian round trip", support::entanglement_hamiltonian_round_trip, 100),
        ("line search monotone", support::line_search_monotone, 200),
        ("TR projection", support::tr_projection, 50),
        ("optimizer determinism", support::optimizer_determinism, 10),
        ("dense oracle", support::oracle_equivalence, 20),
        ("dense relabeling", support::dense_relabeling, 20),
    ];
    let mut failures = Vec::new();
    for (name, check, n) in checks {
        if let Some(e) = (0..n).find_map(|s| check(8000 + s).err()) {
            failures.push(format!("{name}: {e}"));
        }
    }
    if failures.is_empty() {
        Outcome::Pass(format!("{} property checks hold", checks.len()))
    } else {
        Outcome::Fail(failures.join("; "))
    }
}

fn main() {
    let long = std::env::args().any(|a| a == "--long")
        || std::env::var("MARKOV_GAP_LONG").is_ok_and(|v| v == "1");
    let criteria: [(&str, Criterion); 8] = [
        ("oracle equivalence", oracle_equivalence),
        ("gradient vs finite differences", gradient),
        ("toric code h = 0", toric),
        ("bare Markov gap", bare),
        ("optimized two-circle values", optimized_values),
        ("smoother shape discrimination", shapes),
        ("Chern numbers", chern),
        ("property suite", properties),
    ];
    let mut failed = 0;
    for (i, (name, criterion)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (tag, detail) = match criterion(long) {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Outcome::Skip(d) => ("SKIP", d),
        };
        println!("criterion {} [{tag}] {name}: {detail} ({:.1?})", i + 1, start.elapsed());
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
