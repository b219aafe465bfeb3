use std::f64::consts::LN_2;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use markov_gap::experiment::Experiment;
use markov_gap::gaussian::GapParts;
use markov_gap::linalg::CMat;
use markov_gap::models::{chern_number, solve_bands, tr_operator_on, tr_violation, GroundState, ModelSpec};
use markov_gap::optimizer::{optimize_with, GeneratorState, Plateau, SaddleEvent, TraceRow};
use markov_gap::oracle::{compare_random_slater, dense_gap_parts, toric_sots_state};
use markov_gap::ModeMask;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{parse_values, RunConfig, SweepKey};
use crate::{CliError, Common};

const ORACLE_TOL: f64 = 1e-6;

#[derive(Debug, Serialize)]
struct Entropies {
    s_a: f64,
    s_b: f64,
    s_ab: f64,
    reflected: f64,
    mutual_information: f64,
    markov_gap: f64,
}

impl From<GapParts> for Entropies {
    fn from(p: GapParts) -> Self {
        Self {
            s_a: p.s_a,
            s_b: p.s_b,
            s_ab: p.s_ab,
            reflected: p.reflected,
            mutual_information: p.mutual_information(),
            markov_gap: p.markov_gap(),
        }
    }
}

#[derive(Debug, Serialize)]
struct LatticeInfo {
    width: usize,
    height: usize,
    layers: usize,
    anchor: [usize; 2],
    /// Modes of A u B followed by the smoother modes outside it.
    block_dim: usize,
    ab_modes: usize,
    support_modes: Vec<usize>,
}

#[derive(Debug, Serialize)]
struct Timing {
    seconds: f64,
}

#[derive(Debug, Serialize)]
struct Versions {
    markov_gap: &'static str,
}

/// Entropies in nats; `_log2` fields divide by ln 2.
#[derive(Debug, Serialize)]
struct RunReport {
    config: RunConfig,
    lattice: LatticeInfo,
    bare: Entropies,
    bare_h: f64,
    bare_h_log2: f64,
    initial_h: f64,
    final_h: f64,
    final_h_log2: f64,
    /// `3 h / ln 2`.
    c_plus_estimate: f64,
    iterations: usize,
    evaluations: usize,
    converged: bool,
    stop_reason: String,
    final_grad_norm: f64,
    grad_norm_kind: String,
    saddle_events: Vec<SaddleEvent>,
    plateaus: Vec<Plateau>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace_path: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    generators_path: Option<PathBuf>,
    timing: Timing,
    versions: Versions,
}

pub fn c_plus_estimate(h: f64) -> f64 {
    3.0 * h / LN_2
}

fn resolve(common: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    // The run seed drives the optimizer noise; echo it where it is used.
    cfg.optimizer.rng_seed = cfg.seed;
    if let Some(out) = &common.out {
        cfg.output.dir = out.clone();
    }
    Ok(cfg)
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write_trace(path: &Path, trace: &[TraceRow]) -> Result<(), CliError> {
    let io = |e: csv::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(["iteration", "h", "grad_norm", "step", "event"]).map_err(io)?;
    for row in trace {
        w.write_record([
            row.iteration.to_string(),
            row.h.to_string(),
            row.grad_norm.to_string(),
            row.step.to_string(),
            row.event.clone().unwrap_or_default(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))
}

fn load_warm_start(path: &Path, supports: &[ModeMask]) -> Result<Vec<CMat>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let states: Vec<GeneratorState> =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let matches = states.len() == supports.len() && states.iter().zip(supports).all(|(g, s)| &g.support == s);
    if !matches {
        return Err(CliError::Config(format!("{}: smoother supports differ from this geometry", path.display())));
    }
    Ok(states.into_iter().map(|g| g.unitary).collect())
}

/// One full run writing its outputs into `dir`. Returns the report.
fn execute(cfg: &RunConfig, dir: &Path, force: bool, verbose: bool, label: &str) -> Result<RunReport, CliError> {
    let start = Instant::now();
    let layout = cfg.layout();
    let (_, _, plan) = layout.plan(&cfg.model)?;
    eprintln!("{label}block dimension {} ({} modes in A u B)", plan.dim(), plan.n_ab());
    if plan.dim() > cfg.output.max_dim && !force {
        return Err(CliError::Config(format!(
            "optimized block has {} modes, above output.max_dim = {}; pass --force to run anyway",
            plan.dim(),
            cfg.output.max_dim
        )));
    }
    let opt = cfg.optimizer();
    let exp = Experiment::build(&cfg.model, layout, opt.tr_constrained)?;
    let bare = exp.bare_parts()?;
    let warm = match &cfg.output.warm_start {
        Some(p) => Some(load_warm_start(p, &exp.problem.supports())?),
        None => None,
    };
    let report = optimize_with(&exp.covariance, &exp.problem, &opt, warm.as_deref(), |row| {
        if verbose {
            eprintln!("{label}iteration {} h {:.6} |X| {:.3e} step {:.3e}", row.iteration, row.h, row.grad_norm, row.step);
        }
    })?;

    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let trace_path = cfg.output.trace.then(|| dir.join("trace.csv"));
    if let Some(p) = &trace_path {
        write_trace(p, &report.trace)?;
    }
    let generators_path = cfg.output.generators.then(|| dir.join("generators.json"));
    if let Some(p) = &generators_path {
        write_json(p, &report.generators)?;
    }
    let lat = exp.tripartition.lattice;
    let out = RunReport {
        config: cfg.clone(),
        lattice: LatticeInfo {
            width: lat.width,
            height: lat.height,
            layers: lat.layers,
            anchor: [exp.tripartition.anchor.0, exp.tripartition.anchor.1],
            block_dim: exp.problem.dim(),
            ab_modes: exp.problem.n_ab(),
            support_modes: exp.support.masks.iter().map(ModeMask::len).collect(),
        },
        bare_h: bare.markov_gap(),
        bare_h_log2: bare.markov_gap() / LN_2,
        bare: bare.into(),
        initial_h: report.initial_h,
        final_h: report.final_h,
        final_h_log2: report.final_h / LN_2,
        c_plus_estimate: c_plus_estimate(report.final_h),
        iterations: report.iterations,
        evaluations: report.evaluations,
        converged: report.converged,
        stop_reason: report.stop_reason.clone(),
        final_grad_norm: report.final_grad_norm,
        grad_norm_kind: report.grad_norm_kind.clone(),
        saddle_events: report.saddle_events,
        plateaus: report.plateaus,
        trace_path,
        generators_path,
        timing: Timing { seconds: start.elapsed().as_secs_f64() },
        versions: Versions { markov_gap: env!("CARGO_PKG_VERSION") },
    };
    write_json(&dir.join("report.json"), &out)?;
    Ok(out)
}

pub fn run(common: &Common) -> Result<(), CliError> {
    let cfg = resolve(common)?;
    let report = execute(&cfg, &cfg.output.dir, common.force, common.verbose, "")?;
    println!(
        "bare h = {:.6} ({:.4} ln2), final h = {:.6} ({:.4} ln2), c+ estimate = {:.4}, {} iterations, {}",
        report.bare_h,
        report.bare_h_log2,
        report.final_h,
        report.final_h_log2,
        report.c_plus_estimate,
        report.iterations,
        report.stop_reason
    );
    println!("report: {}", cfg.output.dir.join("report.json").display());
    if !report.converged {
        return Err(CliError::NotConverged(format!(
            "stopped by {} with gradient norm {:.3e} (tolerance {:.1e})",
            report.stop_reason, report.final_grad_norm, cfg.optimizer.grad_tol
        )));
    }
    Ok(())
}

fn value_label(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

pub fn sweep(common: &Common, key: Option<SweepKey>, values: Option<&str>, jobs: usize) -> Result<(), CliError> {
    let base = resolve(common)?;
    let key = key
        .or(base.sweep.as_ref().map(|s| s.key))
        .ok_or_else(|| CliError::Config("no sweep key: pass --key or set sweep.key".into()))?;
    let values = match values {
        Some(text) => parse_values(key, text)?,
        None => base.sweep.as_ref().map(|s| s.values.clone()).unwrap_or_default(),
    };
    // All rows are validated before anything runs.
    let configs: Vec<RunConfig> = values.iter().map(|v| base.with_sweep_value(key, v)).collect::<Result<_, _>>()?;
    let key_name = serde_json::to_value(key).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let rows: Vec<(String, Result<RunReport, CliError>, f64)> = pool.install(|| {
        configs
            .par_iter()
            .zip(values.par_iter())
            .map(|(cfg, v)| {
                let label = value_label(v);
                let dir = base.output.dir.join(format!("{key_name}_{label}"));
                let t = Instant::now();
                let r = execute(cfg, &dir, common.force, common.verbose, &format!("[{key_name}={label}] "));
                (label, r, t.elapsed().as_secs_f64())
            })
            .collect()
    });

    fs::create_dir_all(&base.output.dir)?;
    let path = base.output.dir.join("sweep.csv");
    let io = |e: csv::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(&path).map_err(io)?;
    w.write_record([
        "value", "bare_h", "final_h", "final_h_log2", "c_plus_estimate", "iterations", "converged", "runtime_s", "error",
    ])
    .map_err(io)?;
    let mut first_error = None;
    for (label, result, secs) in rows {
        let record = match result {
            Ok(r) => {
                println!("{key_name} = {label}: bare h = {:.6}, final h = {:.6}", r.bare_h, r.final_h);
                vec![
                    label,
                    r.bare_h.to_string(),
                    r.final_h.to_string(),
                    r.final_h_log2.to_string(),
                    r.c_plus_estimate.to_string(),
                    r.iterations.to_string(),
                    r.converged.to_string(),
                    format!("{secs:.3}"),
                    String::new(),
                ]
            }
            Err(e) => {
                eprintln!("{key_name} = {label}: {e}");
                let msg = e.to_string();
                first_error.get_or_insert(e);
                vec![label, String::new(), String::new(), String::new(), String::new(), String::new(), String::new(), format!("{secs:.3}"), msg]
            }
        };
        w.write_record(&record).map_err(io)?;
    }
    w.flush()?;
    println!("sweep table: {}", path.display());
    first_error.map_or(Ok(()), Err)
}

struct CheckLine {
    name: String,
    passed: bool,
    detail: String,
    /// Category of a failure.
    error: fn(String) -> CliError,
}

fn band_checks(spec: &ModelSpec, k: usize, expected: Option<&[i64]>, lines: &mut Vec<CheckLine>) -> Result<(), CliError> {
    for layer in 0..spec.n_layers() {
        let single = spec.layer(layer);
        let nkx = (k / single.q).max(2);
        let sol = solve_bands(&single, nkx, k.max(2))?;
        let occupied: Vec<usize> = match single.filled_bands {
            Some(n) => (0..n).collect(),
            None => (0..single.q).filter(|&b| sol.band_extent(b).1 < 0.0).collect(),
        };
        let top = occupied.iter().map(|&b| sol.band_extent(b).1).fold(f64::NEG_INFINITY, f64::max);
        let bottom = (0..single.q)
            .filter(|b| !occupied.contains(b))
            .map(|b| sol.band_extent(b).0)
            .fold(f64::INFINITY, f64::min);
        let straddles = single.filled_bands.is_none()
            && (0..single.q).any(|b| {
                let (lo, hi) = sol.band_extent(b);
                lo < 0.0 && hi >= 0.0
            });
        let gap = bottom - top;
        let gapped = !straddles && !(gap <= 1e-6);
        lines.push(CheckLine {
            name: format!("layer {layer} filling is gapped (ground state is a pure projector)"),
            passed: gapped,
            detail: if straddles {
                format!("mu = {} lies inside a band", single.mu)
            } else {
                format!("gap {gap:.4} between filled and empty bands")
            },
            error: CliError::Numeric,
        });
        if occupied.is_empty() || occupied.len() == single.q || !gapped {
            continue;
        }
        let c = chern_number(&sol, &occupied)?;
        let want = expected.map(|e| e[layer]);
        lines.push(CheckLine {
            name: format!("layer {layer} Chern number of bands {occupied:?}"),
            passed: want.is_none_or(|w| w == c.chern),
            detail: match want {
                Some(w) => format!("{:+} (expected {w:+})", c.chern),
                None => format!("{:+}", c.chern),
            },
            error: CliError::Numeric,
        });
    }
    Ok(())
}

pub fn validate(config: &Path) -> Result<(), CliError> {
    let cfg = RunConfig::load(config)?;
    let mut lines = vec![CheckLine { name: "config".into(), passed: true, detail: "valid".into(), error: CliError::Config }];
    let k = cfg.checks.k_points.unwrap_or(24);
    band_checks(&cfg.model, k, cfg.checks.expected_chern.as_deref(), &mut lines)?;

    let layout = cfg.layout();
    match layout.plan(&cfg.model) {
        Err(e) => lines.push(CheckLine { name: "geometry".into(), passed: false, detail: e.to_string(), error: CliError::Geometry }),
        Ok((tp, support, problem)) => {
            lines.push(CheckLine {
                name: "geometry".into(),
                passed: true,
                detail: format!(
                    "{}x{} lattice, margin >= {}, {} smoother modes, block dimension {}",
                    tp.lattice.width,
                    tp.lattice.height,
                    layout.margin(),
                    support.union().len(),
                    problem.dim()
                ),
                error: CliError::Geometry,
            });
            let gs = GroundState::new(&cfg.model, &tp.lattice)?;
            let block = ModeMask::from_indices(problem.modes().iter().copied());
            if tp.lattice.n_modes() <= 2000 {
                let full = gs.full()?;
                let d = full.purity_defect();
                lines.push(CheckLine {
                    name: "covariance purity".into(),
                    passed: d <= 1e-8,
                    detail: format!("max |C^2 - C| = {d:.2e} on the full lattice"),
                    error: CliError::Numeric,
                });
            }
            if cfg.optimizer.tr_constrained {
                let s = tr_operator_on(&tp.lattice, &block)?;
                let v = tr_violation(&s, gs.restrict(&block)?.entries());
                lines.push(CheckLine {
                    name: "time-reversal symmetry".into(),
                    passed: v <= 1e-9,
                    detail: format!("max |S conj(C) S^-1 - C| = {v:.2e}"),
                    error: CliError::Numeric,
                });
            }
        }
    }
    let mut failure = None;
    for line in lines {
        println!("{}: {} ({})", line.name, if line.passed { "pass" } else { "FAIL" }, line.detail);
        if !line.passed && failure.is_none() {
            failure = Some((line.error)(format!("{} failed: {}", line.name, line.detail)));
        }
    }
    failure.map_or(Ok(()), Err)
}

pub fn oracle_check(count: u64, seed: u64, toric: bool) -> Result<(), CliError> {
    let mut worst = 0.0f64;
    let mut failed = 0;
    for s in seed..seed + count {
        let c = compare_random_slater(s)?;
        let d = c.max_deviation();
        worst = worst.max(d);
        if d > ORACLE_TOL {
            failed += 1;
            println!("seed {s}: {} modes, A = {:?}, B = {:?}: deviation {d:.3e}", c.n_modes, c.a.indices(), c.b.indices());
        }
    }
    println!("random Slater states: {}/{count} within {ORACLE_TOL:e} (max deviation {worst:.3e})", count - failed);
    let mut ok = failed == 0;
    if toric {
        let t = toric_sots_state()?;
        let h = dense_gap_parts(&t.state, &t.a, &t.b)?.markov_gap();
        let pass = h.abs() <= 1e-10;
        ok &= pass;
        println!("toric-code state: h = {h:.3e} ({})", if pass { "pass" } else { "FAIL" });
    }
    if ok {
        Ok(())
    } else {
        Err(CliError::Numeric("oracle comparison failed".into()))
    }
}

pub fn bands(config: &Path, out: Option<&Path>, nk: usize) -> Result<(), CliError> {
    let cfg = RunConfig::load(config)?;
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.output.dir.clone());
    fs::create_dir_all(&dir)?;
    let path = dir.join("bands.csv");
    let io = |e: csv::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(&path).map_err(io)?;
    let q = cfg.model.q;
    let mut header = vec!["layer".to_string(), "kx".into(), "ky".into()];
    header.extend((0..q).map(|b| format!("band_{b}")));
    w.write_record(&header).map_err(io)?;
    for layer in 0..cfg.model.n_layers() {
        let spec = cfg.model.layer(layer);
        let sol = solve_bands(&spec, nk.max(2), nk.max(2))?;
        for row in sol.rows() {
            let mut rec = vec![layer.to_string()];
            rec.extend(row.iter().map(f64::to_string));
            w.write_record(&rec).map_err(io)?;
        }
        for b in 0..q {
            let (lo, hi) = sol.band_extent(b);
            let chern = match chern_number(&sol, &[b]) {
                Ok(c) => format!("{:+}", c.chern),
                Err(_) => "undefined (touches another band)".into(),
            };
            println!("layer {layer} band {b}: energy [{lo:.4}, {hi:.4}], Chern {chern}");
        }
    }
    w.flush()?;
    println!("bands: {}", path.display());
    Ok(())
}
