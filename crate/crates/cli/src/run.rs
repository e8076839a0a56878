//! Scenario dispatch, artifact emission, manifests and parameter sweeps.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use monokinetic::convergence::loglog_slope;
use monokinetic::gaussian::integrate_gamma;
use monokinetic::gaussian::energy_residual;
use monokinetic::grid::SpatialGrid;
use monokinetic::lagrangian::{bound_monitor, evolve_lagrangian, riemann_transport_residual, to_lagrangian};
use monokinetic::nls::{gaussian_ansatz_oracle, gaussian_domain, log_lipschitz_gap, propagate};
use monokinetic::observable::Interval;
use monokinetic::wigner::{gaussian_pairing_gaps, gaussian_wigner_field, FieldSource, SweepTable};
use monokinetic::wkb::{convergence_da1, evolve, symmetrizer_check, EvolveOptions, FluidState};
use monokinetic::{Complex64, TrajectoryStatus};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, FieldError, Scenario};
use crate::output::{num, opt, OutputDir};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid configuration")]
    Config(Vec<FieldError>),
    #[error("numerical failure: {0}")]
    Numerical(#[from] monokinetic::Error),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    /// 2 for configuration problems, 3 for numerical failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical(_) => 3,
            RunError::Io(_) => 1,
        }
    }

    fn config(field: &str, message: impl Into<String>) -> Self {
        RunError::Config(vec![FieldError {
            field: field.into(),
            message: message.into(),
        }])
    }
}

/// Headline numbers of one run, primary metric first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub scenario: Scenario,
    pub output_dir: PathBuf,
    pub metrics: Vec<(String, f64)>,
    pub files: Vec<String>,
}

struct Outcome {
    summary: Value,
    metrics: Vec<(String, f64)>,
}

fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

fn versions() -> Value {
    json!({
        "monokinetic": monokinetic::VERSION,
        "monokinetic-cli": env!("CARGO_PKG_VERSION"),
    })
}

fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// Resolves, validates and runs one experiment. Writes `config.toml` (the
/// resolved configuration), the scenario artifacts, `summary.json` and
/// `manifest.json` (hash, versions, wall time). Everything except the
/// manifest is a deterministic function of the configuration.
pub fn run(config: &ExperimentConfig) -> Result<RunReport, RunError> {
    let resolved = config.resolve().map_err(RunError::Config)?;
    let mut out = OutputDir::create(&resolved.output_dir).map_err(|e| {
        RunError::config("output_dir", format!("cannot create {}: {e}", resolved.output_dir.display()))
    })?;
    let toml_text = resolved.to_toml().map_err(|e| RunError::Config(vec![e]))?;
    out.text("config.toml", &toml_text)?;
    let started = unix_now();
    let clock = Instant::now();
    let outcome = dispatch(&resolved, &mut out);
    let wall = clock.elapsed().as_secs_f64();
    let status = match &outcome {
        Ok(_) => json!("ok"),
        Err(e) => json!({ "error": e.to_string() }),
    };
    match &outcome {
        Ok(o) => out.json("summary.json", &o.summary)?,
        Err(e) => out.json("error.json", &json!({ "scenario": resolved.scenario, "error": e.to_string() }))?,
    }
    let mut files = out.files().to_vec();
    files.push("manifest.json".into());
    let manifest = json!({
        "config_sha256": sha256_hex(&toml_text),
        "versions": versions(),
        "started_unix": started,
        "wall_time_seconds": wall,
        "status": status,
        "files": files,
    });
    out.json("manifest.json", &manifest)?;
    let outcome = outcome?;
    Ok(RunReport {
        scenario: resolved.scenario,
        output_dir: resolved.output_dir.clone(),
        metrics: outcome.metrics,
        files: out.files().to_vec(),
    })
}

fn dispatch(c: &ExperimentConfig, out: &mut OutputDir) -> Result<Outcome, RunError> {
    match c.scenario {
        Scenario::Gaussian => run_gaussian(c, out),
        Scenario::Nls => run_nls(c, out),
        Scenario::WignerSweep => run_wigner(c, out),
        Scenario::Euler => run_euler(c, out),
        Scenario::Da1Sweep => run_da1(c, out),
        Scenario::Bound => run_bound(c, out),
    }
}

fn periodic_grid(c: &ExperimentConfig) -> Result<SpatialGrid, RunError> {
    Ok(SpatialGrid::new(0.0, 2.0 * std::f64::consts::PI, c.numerics.n.unwrap_or(128))?)
}

fn run_gaussian(c: &ExperimentConfig, out: &mut OutputDir) -> Result<Outcome, RunError> {
    let params = c.gaussian.unwrap().params();
    let nm = &c.numerics;
    let (eps, tol) = (nm.eps.unwrap_or(0.0), nm.tol.unwrap());
    let traj = integrate_gamma(&params, eps, nm.t_end, tol)?;
    out.csv(
        "trajectory.csv",
        &["t", "gamma", "gamma_dot", "energy_residual"],
        traj.samples.iter().map(|s| {
            vec![num(s.t), num(s.gamma), num(s.gamma_dot), num(energy_residual(s, &params, eps))]
        }),
    )?;
    let max_res = traj.max_energy_residual();
    let mut metrics = vec![("max_energy_residual".to_string(), max_res)];
    let status = match traj.status {
        TrajectoryStatus::BlowupDetected { t_blow } => {
            out.json("blowup.json", &json!({ "status": "blowup", "t_blow": t_blow, "tol": tol }))?;
            metrics.push(("t_blow".into(), t_blow));
            json!({ "status": "blowup", "t_blow": t_blow })
        }
        TrajectoryStatus::Completed => json!({ "status": "completed" }),
    };
    let last = traj.last();
    Ok(Outcome {
        summary: json!({
            "scenario": "gaussian",
            "outcome": status,
            "samples": traj.samples.len(),
            "max_energy_residual": max_res,
            "final": { "t": last.t, "gamma": last.gamma, "gamma_dot": last.gamma_dot },
        }),
        metrics,
    })
}

/// `count` seeded random pairs through the log-Lipschitz inequality.
fn log_gap_spot_check(seed: u64, count: usize) -> Result<usize, RunError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    for _ in 0..count {
        let mut draw = || {
            Complex64::from_polar(
                10f64.powf(rng.random_range(-6.0..6.0)),
                rng.random_range(0.0..std::f64::consts::TAU),
            )
        };
        let (u, v) = (draw(), draw());
        let (lhs, rhs) = log_lipschitz_gap(u, v)?;
        if lhs > rhs * (1.0 + 1e-12) {
            violations += 1;
        }
    }
    Ok(violations)
}

fn run_nls(c: &ExperimentConfig, out: &mut OutputDir) -> Result<Outcome, RunError> {
    let params = c.gaussian.unwrap().params();
    let nm = &c.numerics;
    let (eps, dt, tol, floor) = (nm.eps.unwrap(), nm.dt.unwrap(), nm.tol.unwrap(), nm.floor.unwrap());
    let grid = gaussian_domain(&params, eps, nm.t_end, tol)?;
    let u0 = gaussian_ansatz_oracle(&params, eps, 0.0, tol)?.sample(grid)?;
    let run = propagate(&u0, params.lambda, nm.t_end, dt, floor)?;
    let exact = gaussian_ansatz_oracle(&params, eps, run.t, tol)?.sample(grid)?;
    let rel_err = run.field.l2_distance(&exact) / exact.l2_norm();
    let mass_drift = ((run.field.mass() - u0.mass()) / u0.mass()).abs();
    let xs = grid.points();
    out.csv(
        "field.csv",
        &["x", "re_u", "im_u"],
        xs.iter().zip(&run.field.values).map(|(x, u)| vec![num(*x), num(u.re), num(u.im)]),
    )?;
    out.json(
        "field.json",
        &json!({
            "eps": eps,
            "t": run.t,
            "grid": { "x_min": grid.x_min, "length": grid.length, "n": grid.n },
            "lambda": params.lambda,
            "dt": dt,
        }),
    )?;
    let violations = log_gap_spot_check(c.seed, 10_000)?;
    let min_density = run.min_density.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(Outcome {
        summary: json!({
            "scenario": "nls",
            "steps": run.steps,
            "relative_l2_error": rel_err,
            "mass_drift": mass_drift,
            "min_density": min_density,
            "log_gap_check": { "seed": c.seed, "pairs": 10_000, "violations": violations },
        }),
        metrics: vec![("relative_l2_error".into(), rel_err), ("mass_drift".into(), mass_drift)],
    })
}

fn run_wigner(c: &ExperimentConfig, out: &mut OutputDir) -> Result<Outcome, RunError> {
    let params = c.gaussian.unwrap().params();
    let nm = &c.numerics;
    let eps_list = nm.eps_list.clone().unwrap();
    let tol = nm.tol.unwrap();
    let obs = c.observable.unwrap_or_default();
    let phi = obs.bump();
    let source = match nm.dt_ratio {
        Some(dt_ratio) => FieldSource::Numeric { dt_ratio },
        None => FieldSource::Oracle,
    };
    let rows = gaussian_pairing_gaps(&params, &eps_list, nm.t_end, &phi, source, tol)?;
    let table = SweepTable::from_rows(rows);
    out.csv("sweep.csv", &["eps", "gap"], table.rows.iter().map(|r| vec![num(r.eps), opt(r.gap)]))?;
    // phase-space field at the first ε, restricted to the observable's box
    let field = gaussian_wigner_field(
        &params,
        eps_list[0],
        nm.t_end,
        source,
        Interval::new(obs.x[0], obs.x[1]),
        tol,
    )?;
    let keep: Vec<usize> = (0..field.xi.len())
        .filter(|&k| field.xi[k] >= obs.xi[0] && field.xi[k] <= obs.xi[1])
        .collect();
    out.csv(
        "wigner.csv",
        &["x", "xi", "w"],
        field
            .x
            .iter()
            .enumerate()
            .flat_map(|(i, &x)| keep.iter().map(move |&k| (i, k, x)))
            .map(|(i, k, x)| vec![num(x), num(field.xi[k]), num(field.at(i, k))]),
    )?;
    out.json(
        "wigner.json",
        &json!({ "eps": field.eps, "t": nm.t_end, "nx": field.x.len(), "nxi": keep.len(), "dx": field.dx(), "dxi": field.dxi() }),
    )?;
    let mut metrics = Vec::new();
    if let Some(g) = table.rows.first().and_then(|r| r.gap) {
        metrics.push(("gap".to_string(), g));
    }
    Ok(Outcome {
        summary: json!({
            "scenario": "wigner_sweep",
            "source": source,
            "rows": table.rows,
            "slope": table.slope,
            "monotone": table.monotone(),
        }),
        metrics,
    })
}

fn run_euler(c: &ExperimentConfig, out: &mut OutputDir) -> Result<Outcome, RunError> {
    let p = c.perturbation.unwrap();
    let nm = &c.numerics;
    let init = p.initial_data()?;
    let grid = periodic_grid(c)?;
    let eps = nm.eps.unwrap_or(0.0);
    let opts = EvolveOptions {
        lambda: p.lambda,
        eps,
        t_end: nm.t_end,
        dt: nm.dt.unwrap(),
        snapshot_every: nm.snapshot_every.unwrap(),
    };
    let traj = evolve(&init, grid, opts)?;
    let xs = grid.points();
    let last = traj.last();
    out.csv(
        "state.csv",
        &["x", "a1", "a2", "v"],
        (0..grid.n).map(|j| vec![num(xs[j]), num(last.a1[j]), num(last.a2[j]), num(last.v[j])]),
    )?;
    out.json("state.json", &json!({ "t": last.t, "eps": eps, "lambda": p.lambda }))?;
    out.csv(
        "snapshots.csv",
        &["t", "x", "a1", "a2", "v"],
        traj.snapshots.iter().flat_map(|s| {
            (0..grid.n).map(move |j| vec![num(s.t), num(s.grid.x(j)), num(s.a1[j]), num(s.a2[j]), num(s.v[j])])
        }),
    )?;
    let m0 = traj.snapshots[0].mass();
    let mass_drift = ((last.mass() - m0) / m0).abs();
    let min_density = traj.min_density.iter().copied().fold(f64::INFINITY, f64::min);
    // seeded spot check of the symmetrizer on random non-vacuum states
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let small = SpatialGrid::new(0.0, 1.0, 8)?;
    let (mut asym, mut min_eig) = (0.0_f64, f64::INFINITY);
    for _ in 0..125 {
        let mut draw = |lo: f64, hi: f64| (0..8).map(|_| rng.random_range(lo..hi)).collect::<Vec<f64>>();
        let state = FluidState {
            grid: small,
            a1: draw(0.1, 3.0),
            a2: draw(-3.0, 3.0),
            v: draw(-5.0, 5.0),
            eps,
            t: 0.0,
        };
        let (a, e) = symmetrizer_check(&state, p.lambda);
        asym = asym.max(a);
        min_eig = min_eig.min(e);
    }
    Ok(Outcome {
        summary: json!({
            "scenario": "euler",
            "t": last.t,
            "snapshots": traj.snapshots.len(),
            "mass_drift": mass_drift,
            "min_density": min_density,
            "symmetrizer_check": { "seed": c.seed, "states": 1000, "max_asymmetry": asym, "min_eigenvalue": min_eig },
        }),
        metrics: vec![("min_density".into(), min_density), ("mass_drift".into(), mass_drift)],
    })
}

fn run_da1(c: &ExperimentConfig, out: &mut OutputDir) -> Result<Outcome, RunError> {
    let p = c.perturbation.unwrap();
    let nm = &c.numerics;
    let init = p.initial_data()?;
    let grid = periodic_grid(c)?;
    let eps_list = nm.eps_list.clone().unwrap();
    let table = convergence_da1(&init, grid, p.lambda, &eps_list, nm.t_end, nm.dt.unwrap())?;
    out.csv(
        "da1.csv",
        &["eps", "amplitude_gap", "velocity_gap"],
        table.rows.iter().map(|r| vec![num(r.eps), opt(r.amplitude_gap), opt(r.velocity_gap)]),
    )?;
    let mut metrics = Vec::new();
    if let Some(r) = table.rows.first() {
        if let (Some(a), Some(v)) = (r.amplitude_gap, r.velocity_gap) {
            metrics.push(("amplitude_gap".to_string(), a));
            metrics.push(("velocity_gap".to_string(), v));
        }
    }
    Ok(Outcome {
        summary: json!({
            "scenario": "da1_sweep",
            "rows": table.rows,
            "amplitude_slope": table.amplitude_slope,
            "velocity_slope": table.velocity_slope,
        }),
        metrics,
    })
}

fn run_bound(c: &ExperimentConfig, out: &mut OutputDir) -> Result<Outcome, RunError> {
    let p = c.perturbation.unwrap();
    let nm = &c.numerics;
    let init = p.initial_data()?;
    let grid = periodic_grid(c)?;
    let s = init.sample(grid, 0.0)?;
    let state = to_lagrangian(grid, &s.density(), &s.v, grid.n, 0.0)?;
    let traj = evolve_lagrangian(&state, nm.t_end, nm.dt.unwrap(), nm.snapshot_every.unwrap())?;
    let report = bound_monitor(&traj, state.min_density())?;
    out.json("bound.json", &report)?;
    let last = traj.snapshots.last().unwrap();
    let ms = last.mass_grid.points();
    out.csv(
        "lagrangian.csv",
        &["m", "tau", "u"],
        (0..ms.len()).map(|j| vec![num(ms[j]), num(last.tau[j]), num(last.u[j])]),
    )?;
    let transport = riemann_transport_residual(&traj).ok();
    Ok(Outcome {
        summary: json!({
            "scenario": "bound",
            "M": report.m_bound,
            "sup_alpha_beta": report.sup_alpha_beta,
            "sup_ok": report.sup_ok,
            "tau_linear_ok": report.tau_linear_ok,
            "C_fit": report.c_fit,
            "C_candidate": report.c_candidate,
            "horizon": report.horizon,
            "transport_residual": transport.map(|(a, b)| a.max(b)),
        }),
        metrics: vec![
            ("C_fit".into(), report.c_fit),
            ("sup_alpha_beta".into(), report.sup_alpha_beta),
            ("M".into(), report.m_bound),
        ],
    })
}

/// One row of a parameter sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRowReport {
    pub value: f64,
    pub output_dir: PathBuf,
    pub metrics: BTreeMap<String, f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub axis: String,
    pub rows: Vec<SweepRowReport>,
    /// Columns in CSV order, primary metric first.
    pub metric_names: Vec<String>,
    /// Log-log slope of each metric against the axis, for convergence studies.
    pub slopes: Option<BTreeMap<String, Option<f64>>>,
}

/// Axis/scenario pairs where a log-log slope is meaningful.
pub fn is_convergence_study(scenario: Scenario, axis: &str) -> bool {
    matches!(
        (scenario, axis),
        (Scenario::Nls, "numerics.dt" | "numerics.eps")
            | (Scenario::WignerSweep, "numerics.eps" | "numerics.dt_ratio")
            | (Scenario::Da1Sweep, "numerics.eps")
    )
}

fn row_dir(base: &Path, i: usize) -> PathBuf {
    base.join("rows").join(format!("{i:03}"))
}

/// Runs the scenario once per value (rows in parallel, each in
/// `output_dir/rows/NNN`) and aggregates `sweep.csv` in `output_dir`.
/// Row failures are recorded; the call fails only if the sweep itself is
/// malformed or every row failed.
pub fn sweep(config: &ExperimentConfig, axis: &str, values: &[f64]) -> Result<SweepReport, RunError> {
    if values.is_empty() {
        return Err(RunError::config("values", "must not be empty"));
    }
    let base = config.output_dir.clone();
    let mut configs = Vec::with_capacity(values.len());
    for (i, &v) in values.iter().enumerate() {
        let mut c = config.with_axis(axis, v).map_err(|e| RunError::Config(vec![e]))?;
        c.output_dir = row_dir(&base, i);
        configs.push(c);
    }
    let invalid: Vec<Vec<FieldError>> = configs.iter().filter_map(|c| c.resolve().err()).collect();
    if invalid.len() == configs.len() {
        return Err(RunError::Config(invalid.into_iter().next().unwrap()));
    }
    let mut out = OutputDir::create(&base)
        .map_err(|e| RunError::config("output_dir", format!("cannot create {}: {e}", base.display())))?;
    let toml_text = config.to_toml().map_err(|e| RunError::Config(vec![e]))?;
    out.text("config.toml", &toml_text)?;
    let started = unix_now();
    let clock = Instant::now();
    let results: Vec<Result<RunReport, RunError>> = configs.par_iter().map(run).collect();
    let wall = clock.elapsed().as_secs_f64();

    let mut metric_names: Vec<String> = Vec::new();
    let mut rows = Vec::with_capacity(values.len());
    for ((&value, c), res) in values.iter().zip(&configs).zip(results) {
        match res {
            Ok(rep) => {
                for (name, _) in &rep.metrics {
                    if !metric_names.contains(name) {
                        metric_names.push(name.clone());
                    }
                }
                rows.push(SweepRowReport {
                    value,
                    output_dir: c.output_dir.clone(),
                    metrics: rep.metrics.into_iter().collect(),
                    error: None,
                });
            }
            Err(e) => rows.push(SweepRowReport {
                value,
                output_dir: c.output_dir.clone(),
                metrics: BTreeMap::new(),
                error: Some(match e {
                    RunError::Config(errs) => {
                        errs.iter().map(|f| f.to_string()).collect::<Vec<_>>().join("; ")
                    }
                    other => other.to_string(),
                }),
            }),
        }
    }
    let slopes = is_convergence_study(config.scenario, axis).then(|| {
        metric_names
            .iter()
            .map(|m| {
                let (x, y): (Vec<f64>, Vec<f64>) = rows
                    .iter()
                    .filter_map(|r| r.metrics.get(m).map(|&y| (r.value, y)))
                    .filter(|(x, y)| *x > 0.0 && *y > 0.0)
                    .unzip();
                let s = if x.len() >= 2 { loglog_slope(&x, &y) } else { None };
                (m.clone(), s)
            })
            .collect::<BTreeMap<_, _>>()
    });

    let axis_col = axis.rsplit('.').next().unwrap_or(axis).to_string();
    let mut header: Vec<String> = vec![axis_col];
    header.extend(metric_names.iter().cloned());
    header.push("error".into());
    if slopes.is_some() {
        for (k, m) in metric_names.iter().enumerate() {
            header.push(if k == 0 { "slope".into() } else { format!("slope_{m}") });
        }
    }
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut line = vec![num(r.value)];
            line.extend(metric_names.iter().map(|m| opt(r.metrics.get(m).copied())));
            line.push(r.error.clone().unwrap_or_default());
            if let Some(s) = &slopes {
                line.extend(metric_names.iter().map(|m| opt(s.get(m).copied().flatten())));
            }
            line
        })
        .collect();
    out.csv("sweep.csv", &header_refs, csv_rows)?;
    let report = SweepReport {
        axis: axis.to_string(),
        rows,
        metric_names,
        slopes,
    };
    out.json("sweep.json", &report)?;
    let failed = report.rows.iter().filter(|r| r.error.is_some()).count();
    let mut files = out.files().to_vec();
    files.push("manifest.json".into());
    out.json(
        "manifest.json",
        &json!({
            "config_sha256": sha256_hex(&toml_text),
            "versions": versions(),
            "started_unix": started,
            "wall_time_seconds": wall,
            "axis": axis,
            "values": values,
            "failed_rows": failed,
            "files": files,
        }),
    )?;
    if failed == report.rows.len() {
        return Err(RunError::Numerical(monokinetic::Error::InsufficientData(format!(
            "every sweep row failed; first error: {}",
            report.rows[0].error.as_deref().unwrap_or("")
        ))));
    }
    Ok(report)
}
