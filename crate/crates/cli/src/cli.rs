//! Command-line surface. Each scenario subcommand reads an optional config
//! file and applies flag overrides on top; `sweep` varies one field.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{
    theorem1_gaussian, theorem2_perturbation, ExperimentConfig, Numerics, ObservableSection, Preset, Scenario,
};
use crate::run::{run, sweep, RunError};

#[derive(Debug, Parser)]
#[command(name = "monokinetic", version, about = "Logarithmic NLS, semiclassical limits and monokinetic solutions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reduced ODE for Gaussian data: trajectory, energy residual, blow-up.
    Gaussian(Overrides),
    /// Split-step solution of the ε-scaled equation against the Gaussian ansatz.
    Nls(Overrides),
    /// Wigner pairing gaps against the monokinetic limit over an ε list.
    Wigner(Overrides),
    /// Hyperbolic WKB evolution of the perturbation preset.
    Euler(Overrides),
    /// Amplitude and phase-gradient gaps between ε > 0 and ε = 0 runs.
    Da1(Overrides),
    /// Gradient bound and density lower bound in mass coordinates.
    Bound(Overrides),
    /// Runs a scenario once per value of one numeric field.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Scenario to sweep when no config file is given.
    #[arg(long, value_enum)]
    pub scenario: Option<ScenarioArg>,
    /// Dotted field path, e.g. `numerics.eps` or `gaussian.lambda`.
    #[arg(long)]
    pub axis: String,
    /// Comma-separated values.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    pub values: Vec<f64>,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum ScenarioArg {
    Gaussian,
    Nls,
    Wigner,
    Euler,
    Da1,
    Bound,
}

impl From<ScenarioArg> for Scenario {
    fn from(s: ScenarioArg) -> Self {
        match s {
            ScenarioArg::Gaussian => Scenario::Gaussian,
            ScenarioArg::Nls => Scenario::Nls,
            ScenarioArg::Wigner => Scenario::WignerSweep,
            ScenarioArg::Euler => Scenario::Euler,
            ScenarioArg::Da1 => Scenario::Da1Sweep,
            ScenarioArg::Bound => Scenario::Bound,
        }
    }
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum PresetArg {
    Theorem1,
    Theorem2,
}

/// Flags mirroring the configuration fields; each one overrides the file.
#[derive(Debug, Default, Args)]
#[command(next_help_heading = "Configuration")]
pub struct Overrides {
    /// TOML config file (`.json` for JSON).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub preset: Option<PresetArg>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, allow_negative_numbers = true)]
    pub rho_star: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub sigma0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub omega0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub p0: Option<f64>,
    /// Coupling constant (Gaussian scenarios) or pressure coefficient (periodic ones).
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub density_amplitude: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub phase_amplitude: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub dt: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub dt_ratio: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub tol: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub eps: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub eps_list: Option<Vec<f64>>,
    #[arg(long, allow_negative_numbers = true)]
    pub floor: Option<f64>,
    #[arg(long)]
    pub snapshot_every: Option<usize>,
    /// Observable x-support as `lo,hi`.
    #[arg(long, value_delimiter = ',', num_args = 2, allow_negative_numbers = true)]
    pub observable_x: Option<Vec<f64>>,
    /// Observable ξ-support as `lo,hi`.
    #[arg(long, value_delimiter = ',', num_args = 2, allow_negative_numbers = true)]
    pub observable_xi: Option<Vec<f64>>,
}

fn default_eps(s: Scenario) -> (Option<f64>, Option<Vec<f64>>) {
    match s {
        Scenario::Nls => (Some(0.1), None),
        Scenario::WignerSweep => (None, Some(vec![0.2, 0.1, 0.05, 0.025])),
        Scenario::Da1Sweep => (None, Some(vec![0.1, 0.05, 0.025])),
        Scenario::Gaussian | Scenario::Euler | Scenario::Bound => (None, None),
    }
}

fn default_t_end(s: Scenario) -> f64 {
    match s {
        Scenario::Gaussian => 10.0,
        Scenario::Nls | Scenario::Da1Sweep => 1.0,
        Scenario::WignerSweep => 0.5,
        Scenario::Euler | Scenario::Bound => 2.0,
    }
}

/// Builds the configuration for `scenario` from the optional file and the
/// flags. Without a file the preset matching the scenario is used.
pub fn build_config(scenario: Option<Scenario>, o: &Overrides) -> Result<ExperimentConfig, RunError> {
    let mut c = match &o.config {
        Some(path) => ExperimentConfig::from_file(path).map_err(|e| RunError::Config(vec![e]))?,
        None => {
            let sc = scenario.ok_or_else(|| {
                RunError::Config(vec![crate::config::FieldError {
                    field: "scenario".into(),
                    message: "give --scenario or a --config file".into(),
                }])
            })?;
            let gaussian_like = matches!(sc, Scenario::Gaussian | Scenario::Nls | Scenario::WignerSweep);
            let (eps, eps_list) = default_eps(sc);
            ExperimentConfig {
                scenario: sc,
                preset: Some(if gaussian_like { Preset::Theorem1 } else { Preset::Theorem2 }),
                output_dir: PathBuf::from("out").join(sc.name()),
                seed: 0,
                gaussian: None,
                perturbation: None,
                observable: None,
                numerics: Numerics {
                    t_end: default_t_end(sc),
                    eps,
                    eps_list,
                    ..Numerics::default()
                },
            }
        }
    };
    if let Some(sc) = scenario {
        c.scenario = sc;
    }
    if let Some(p) = o.preset {
        c.preset = Some(match p {
            PresetArg::Theorem1 => Preset::Theorem1,
            PresetArg::Theorem2 => Preset::Theorem2,
        });
    }
    if let Some(d) = &o.output_dir {
        c.output_dir = d.clone();
    }
    if let Some(s) = o.seed {
        c.seed = s;
    }
    let gaussian_like = matches!(c.scenario, Scenario::Gaussian | Scenario::Nls | Scenario::WignerSweep);
    if [o.rho_star, o.sigma0, o.omega0, o.p0].iter().any(Option::is_some) || (gaussian_like && o.lambda.is_some()) {
        let g = c.gaussian.get_or_insert_with(theorem1_gaussian);
        if let Some(v) = o.rho_star {
            g.rho_star = v;
        }
        if let Some(v) = o.sigma0 {
            g.sigma0 = v;
        }
        if let Some(v) = o.omega0 {
            g.omega0 = v;
        }
        if let Some(v) = o.p0 {
            g.p0 = v;
        }
        if gaussian_like {
            if let Some(v) = o.lambda {
                g.lambda = v;
            }
        }
    }
    if o.density_amplitude.is_some() || o.phase_amplitude.is_some() || (!gaussian_like && o.lambda.is_some()) {
        let p = c.perturbation.get_or_insert_with(theorem2_perturbation);
        if let Some(v) = o.density_amplitude {
            p.density_amplitude = v;
        }
        if let Some(v) = o.phase_amplitude {
            p.phase_amplitude = v;
        }
        if !gaussian_like {
            if let Some(v) = o.lambda {
                p.lambda = v;
            }
        }
    }
    let nm = &mut c.numerics;
    if let Some(v) = o.t_end {
        nm.t_end = v;
    }
    nm.n = o.n.or(nm.n);
    nm.dt = o.dt.or(nm.dt);
    nm.dt_ratio = o.dt_ratio.or(nm.dt_ratio);
    nm.tol = o.tol.or(nm.tol);
    nm.eps = o.eps.or(nm.eps);
    nm.floor = o.floor.or(nm.floor);
    nm.snapshot_every = o.snapshot_every.or(nm.snapshot_every);
    if let Some(l) = &o.eps_list {
        nm.eps_list = Some(l.clone());
    }
    if o.observable_x.is_some() || o.observable_xi.is_some() {
        let obs = c.observable.get_or_insert_with(ObservableSection::default);
        if let Some(v) = &o.observable_x {
            obs.x = [v[0], v[1]];
        }
        if let Some(v) = &o.observable_xi {
            obs.xi = [v[0], v[1]];
        }
    }
    Ok(c)
}

fn report_error(e: &RunError) {
    match e {
        RunError::Config(errs) => {
            for f in errs {
                eprintln!("config error: {f}");
            }
        }
        other => eprintln!("{other}"),
    }
}

/// Runs the parsed command and returns the process exit code.
pub fn execute(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Sweep(args) => build_config(args.scenario.map(Into::into), &args.overrides).and_then(|c| {
            let rep = sweep(&c, &args.axis, &args.values)?;
            let failed = rep.rows.iter().filter(|r| r.error.is_some()).count();
            println!(
                "sweep over {} ({} rows, {} failed) written to {}",
                rep.axis,
                rep.rows.len(),
                failed,
                c.output_dir.display()
            );
            for r in rep.rows.iter().filter_map(|r| r.error.as_ref().map(|e| (r.value, e))) {
                eprintln!("row {} failed: {}", r.0, r.1);
            }
            Ok(())
        }),
        cmd => {
            let (sc, o) = match cmd {
                Command::Gaussian(o) => (Scenario::Gaussian, o),
                Command::Nls(o) => (Scenario::Nls, o),
                Command::Wigner(o) => (Scenario::WignerSweep, o),
                Command::Euler(o) => (Scenario::Euler, o),
                Command::Da1(o) => (Scenario::Da1Sweep, o),
                Command::Bound(o) => (Scenario::Bound, o),
                Command::Sweep(_) => unreachable!(),
            };
            build_config(Some(sc), &o).and_then(|c| {
                let rep = run(&c)?;
                let metrics: Vec<String> = rep.metrics.iter().map(|(k, v)| format!("{k}={v:e}")).collect();
                println!("{} -> {} [{}]", rep.scenario.name(), rep.output_dir.display(), metrics.join(", "));
                Ok(())
            })
        }
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            report_error(&e);
            e.exit_code()
        }
    }
}
