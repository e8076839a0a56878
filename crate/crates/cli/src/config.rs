//! Experiment configuration: TOML (or JSON) file format, presets, defaults
//! and field-level validation.
//!
//! Grammar of the TOML form (every key optional unless marked):
//!
//! ```toml
//! scenario = "gaussian"    # required: gaussian | nls | wigner_sweep | euler | da1_sweep | bound
//! preset = "theorem1"      # theorem1 (Gaussian data) | theorem2 (periodic perturbation)
//! output_dir = "out"       # required
//! seed = 0                 # drives the randomized spot checks
//!
//! [gaussian]               # scenarios gaussian, nls, wigner_sweep
//! rho_star = 1.0
//! sigma0 = 1.0
//! omega0 = 0.0
//! p0 = 0.0
//! lambda = 1.0
//!
//! [perturbation]           # scenarios euler, da1_sweep, bound: ρ₀ = 1 + A cos x, Φ₀ = B cos x
//! density_amplitude = 0.1
//! phase_amplitude = 0.1
//! lambda = 1.0
//!
//! [observable]             # wigner_sweep: tensor bump supported in x × ξ
//! x = [-1.0, 1.5]
//! xi = [-2.0, 2.5]
//!
//! [numerics]
//! t_end = 1.0              # required
//! n = 128                  # grid points (periodic scenarios)
//! dt = 0.005
//! dt_ratio = 0.125         # wigner_sweep: propagate the NLS with dt = dt_ratio·ε
//! tol = 1e-10
//! eps = 0.1
//! eps_list = [0.2, 0.1, 0.05]
//! floor = 1e-30
//! snapshot_every = 10
//! ```

use std::fmt;
use std::path::PathBuf;

use monokinetic::gaussian::GaussianParams;
use monokinetic::nls::VACUUM_FLOOR;
use monokinetic::observable::{Interval, TensorBump};
use monokinetic::wkb::InitialData;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Gaussian,
    Nls,
    WignerSweep,
    Euler,
    Da1Sweep,
    Bound,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Gaussian => "gaussian",
            Scenario::Nls => "nls",
            Scenario::WignerSweep => "wigner_sweep",
            Scenario::Euler => "euler",
            Scenario::Da1Sweep => "da1_sweep",
            Scenario::Bound => "bound",
        }
    }

    fn uses_gaussian(self) -> bool {
        matches!(self, Scenario::Gaussian | Scenario::Nls | Scenario::WignerSweep)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Gaussian data `ρ* = σ₀ = λ = 1`, `ω₀ = p₀ = 0`.
    Theorem1,
    /// Constant background with a periodic perturbation, `A = B = 0.1`.
    Theorem2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianSection {
    pub rho_star: f64,
    pub sigma0: f64,
    pub omega0: f64,
    pub p0: f64,
    pub lambda: f64,
}

impl GaussianSection {
    pub fn params(&self) -> GaussianParams {
        GaussianParams {
            rho_star: self.rho_star,
            sigma0: self.sigma0,
            omega0: self.omega0,
            p0: self.p0,
            lambda: self.lambda,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSection {
    pub density_amplitude: f64,
    pub phase_amplitude: f64,
    pub lambda: f64,
}

impl PerturbationSection {
    pub fn initial_data(&self) -> monokinetic::Result<InitialData> {
        InitialData::perturbation(self.density_amplitude, self.phase_amplitude)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableSection {
    pub x: [f64; 2],
    pub xi: [f64; 2],
}

impl ObservableSection {
    pub fn bump(&self) -> TensorBump {
        TensorBump::new(Interval::new(self.x[0], self.x[1]), Interval::new(self.xi[0], self.xi[1]))
    }
}

impl Default for ObservableSection {
    fn default() -> Self {
        ObservableSection {
            x: [-1.0, 1.5],
            xi: [-2.0, 2.5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    pub t_end: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_list: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub floor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<usize>,
}

/// Scalar keys come before tables so the TOML encoding is always valid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gaussian: Option<GaussianSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<PerturbationSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observable: Option<ObservableSection>,
    pub numerics: Numerics,
}

/// One offending field and why.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

fn field_error(field: &str, message: impl Into<String>) -> FieldError {
    FieldError {
        field: field.into(),
        message: message.into(),
    }
}

pub fn theorem1_gaussian() -> GaussianSection {
    GaussianSection {
        rho_star: 1.0,
        sigma0: 1.0,
        omega0: 0.0,
        p0: 0.0,
        lambda: 1.0,
    }
}

pub fn theorem2_perturbation() -> PerturbationSection {
    PerturbationSection {
        density_amplitude: 0.1,
        phase_amplitude: 0.1,
        lambda: 1.0,
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, FieldError> {
        toml::from_str(text).map_err(|e| field_error("config", e.message().to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, FieldError> {
        serde_json::from_str(text).map_err(|e| field_error("config", e.to_string()))
    }

    /// Parses by extension: `.json` as JSON, anything else as TOML.
    pub fn from_file(path: &std::path::Path) -> Result<Self, FieldError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| field_error("config", format!("cannot read {}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e == "json") {
            Self::from_json(&text)
        } else {
            Self::from_toml(&text)
        }
    }

    /// Fails only for values TOML cannot hold (a seed above `i64::MAX`).
    pub fn to_toml(&self) -> Result<String, FieldError> {
        if self.seed > i64::MAX as u64 {
            return Err(field_error("seed", format!("must not exceed {}, got {}", i64::MAX, self.seed)));
        }
        toml::to_string(self).map_err(|e| field_error("config", e.to_string()))
    }

    /// Fills sections from the preset, applies scenario defaults and checks
    /// every field. All problems are reported together.
    pub fn resolve(&self) -> Result<ExperimentConfig, Vec<FieldError>> {
        let mut c = self.clone();
        let sc = c.scenario;
        match c.preset {
            Some(Preset::Theorem1) if c.gaussian.is_none() => c.gaussian = Some(theorem1_gaussian()),
            Some(Preset::Theorem2) if c.perturbation.is_none() => c.perturbation = Some(theorem2_perturbation()),
            _ => {}
        }
        let nm = &mut c.numerics;
        nm.tol.get_or_insert(1e-10);
        match sc {
            Scenario::Gaussian => {
                nm.eps.get_or_insert(0.0);
            }
            Scenario::Nls => {
                nm.floor.get_or_insert(VACUUM_FLOOR);
                if let Some(eps) = nm.eps {
                    nm.dt.get_or_insert(eps / 16.0);
                }
            }
            Scenario::WignerSweep => {
                c.observable.get_or_insert_with(ObservableSection::default);
            }
            Scenario::Euler | Scenario::Da1Sweep | Scenario::Bound => {
                nm.n.get_or_insert(128);
                nm.dt.get_or_insert(0.005);
                if sc == Scenario::Euler {
                    nm.eps.get_or_insert(0.0);
                }
                if sc != Scenario::Da1Sweep {
                    nm.snapshot_every.get_or_insert(10);
                }
            }
        }
        let errors = c.validate();
        if errors.is_empty() {
            Ok(c)
        } else {
            Err(errors)
        }
    }

    fn validate(&self) -> Vec<FieldError> {
        let mut errs = Vec::new();
        let sc = self.scenario;
        let nm = &self.numerics;
        let positive = |errs: &mut Vec<FieldError>, name: &str, v: f64| {
            if !(v > 0.0 && v.is_finite()) {
                errs.push(field_error(name, format!("must be positive and finite, got {v}")));
            }
        };
        positive(&mut errs, "numerics.t_end", nm.t_end);
        if let Some(tol) = nm.tol {
            if !(tol > 0.0 && tol <= 1e-2) {
                errs.push(field_error("numerics.tol", format!("must lie in (0, 1e-2], got {tol}")));
            }
        }
        if let Some(dt) = nm.dt {
            positive(&mut errs, "numerics.dt", dt);
        }
        if let Some(r) = nm.dt_ratio {
            positive(&mut errs, "numerics.dt_ratio", r);
        }
        if let Some(f) = nm.floor {
            if !(f > 0.0 && f < 1.0) {
                errs.push(field_error("numerics.floor", format!("must lie in (0, 1), got {f}")));
            }
        }
        if let Some(n) = nm.n {
            if n < 8 || !n.is_power_of_two() {
                errs.push(field_error("numerics.n", format!("must be a power of two >= 8, got {n}")));
            }
        }
        if nm.snapshot_every == Some(0) {
            errs.push(field_error("numerics.snapshot_every", "must be at least 1"));
        }

        if sc.uses_gaussian() {
            match &self.gaussian {
                None => errs.push(field_error("gaussian", "section required (or preset = \"theorem1\")")),
                Some(g) => {
                    positive(&mut errs, "gaussian.rho_star", g.rho_star);
                    positive(&mut errs, "gaussian.sigma0", g.sigma0);
                    for (name, v) in [("gaussian.omega0", g.omega0), ("gaussian.p0", g.p0)] {
                        if !v.is_finite() {
                            errs.push(field_error(name, "must be finite"));
                        }
                    }
                    if !(g.lambda.is_finite() && g.lambda != 0.0) {
                        errs.push(field_error("gaussian.lambda", format!("must be finite and nonzero, got {}", g.lambda)));
                    }
                    if sc != Scenario::Gaussian && !(g.lambda > 0.0) {
                        errs.push(field_error("gaussian.lambda", "must be positive for this scenario"));
                    }
                }
            }
        } else {
            match &self.perturbation {
                None => errs.push(field_error("perturbation", "section required (or preset = \"theorem2\")")),
                Some(p) => {
                    if !(p.density_amplitude.abs() < 1.0) {
                        errs.push(field_error(
                            "perturbation.density_amplitude",
                            format!("|A| must be below 1, got {}", p.density_amplitude),
                        ));
                    }
                    if !p.phase_amplitude.is_finite() {
                        errs.push(field_error("perturbation.phase_amplitude", "must be finite"));
                    }
                    positive(&mut errs, "perturbation.lambda", p.lambda);
                    if sc == Scenario::Bound && p.lambda != 1.0 {
                        // the Lagrangian module is written for unit pressure coefficient
                        errs.push(field_error("perturbation.lambda", "the bound scenario requires lambda = 1"));
                    }
                }
            }
        }

        match sc {
            Scenario::Gaussian => {
                if let Some(e) = nm.eps {
                    if !(e >= 0.0 && e.is_finite()) {
                        errs.push(field_error("numerics.eps", format!("must be nonnegative, got {e}")));
                    }
                }
            }
            Scenario::Nls => match (nm.eps, nm.dt) {
                (None, _) => errs.push(field_error("numerics.eps", "required for this scenario")),
                (Some(e), dt) => {
                    positive(&mut errs, "numerics.eps", e);
                    if let Some(dt) = dt.filter(|d| *d > 0.0) {
                        let m = nm.t_end / dt;
                        if (m - m.round()).abs() > 1e-9 * m.max(1.0) || m.round() < 1.0 {
                            errs.push(field_error("numerics.dt", "t_end must be an integer multiple of dt"));
                        }
                    }
                }
            },
            Scenario::WignerSweep | Scenario::Da1Sweep => match &nm.eps_list {
                None => errs.push(field_error("numerics.eps_list", "required for this scenario")),
                Some(l) if l.is_empty() => errs.push(field_error("numerics.eps_list", "must not be empty")),
                Some(l) => {
                    if l.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
                        errs.push(field_error("numerics.eps_list", "entries must be positive"));
                    }
                }
            },
            Scenario::Euler => {
                if let Some(e) = nm.eps {
                    if !(e >= 0.0 && e.is_finite()) {
                        errs.push(field_error("numerics.eps", format!("must be nonnegative, got {e}")));
                    }
                }
            }
            Scenario::Bound => {}
        }
        if let Some(o) = &self.observable {
            for (name, iv) in [("observable.x", o.x), ("observable.xi", o.xi)] {
                if !(iv[0] < iv[1] && iv[0].is_finite() && iv[1].is_finite()) {
                    errs.push(field_error(name, "must be an interval [lo, hi] with lo < hi"));
                }
            }
        }
        if self.seed > i64::MAX as u64 {
            errs.push(field_error("seed", format!("must not exceed {}", i64::MAX)));
        }
        if self.output_dir.as_os_str().is_empty() {
            errs.push(field_error("output_dir", "must not be empty"));
        }
        errs
    }
}

/// Field paths accepted by `sweep --axis`.
pub const SWEEP_AXES: &[&str] = &[
    "numerics.t_end",
    "numerics.n",
    "numerics.dt",
    "numerics.dt_ratio",
    "numerics.tol",
    "numerics.eps",
    "numerics.floor",
    "gaussian.rho_star",
    "gaussian.sigma0",
    "gaussian.omega0",
    "gaussian.p0",
    "gaussian.lambda",
    "perturbation.density_amplitude",
    "perturbation.phase_amplitude",
    "perturbation.lambda",
    "seed",
];

impl ExperimentConfig {
    /// Copy with one numeric field replaced. Sweeping `numerics.eps` also sets
    /// `eps_list = [value]` so the list scenarios run one ε per row.
    pub fn with_axis(&self, axis: &str, value: f64) -> Result<ExperimentConfig, FieldError> {
        if !SWEEP_AXES.contains(&axis) {
            return Err(field_error("axis", format!("unknown axis {axis:?}; expected one of {SWEEP_AXES:?}")));
        }
        let mut c = self.clone();
        let nm = &mut c.numerics;
        let integer = |v: f64| -> Result<u64, FieldError> {
            if v >= 0.0 && v.fract() == 0.0 && v < 2f64.powi(53) {
                Ok(v as u64)
            } else {
                Err(field_error(axis, format!("expects a nonnegative integer, got {value}")))
            }
        };
        let gaussian = |c: &mut ExperimentConfig| -> Result<(), FieldError> {
            if c.gaussian.is_none() && c.preset == Some(Preset::Theorem1) {
                c.gaussian = Some(theorem1_gaussian());
            }
            c.gaussian.as_ref().map(|_| ()).ok_or_else(|| field_error(axis, "config has no [gaussian] section"))
        };
        let perturbation = |c: &mut ExperimentConfig| -> Result<(), FieldError> {
            if c.perturbation.is_none() && c.preset == Some(Preset::Theorem2) {
                c.perturbation = Some(theorem2_perturbation());
            }
            c.perturbation
                .as_ref()
                .map(|_| ())
                .ok_or_else(|| field_error(axis, "config has no [perturbation] section"))
        };
        match axis {
            "numerics.t_end" => nm.t_end = value,
            "numerics.n" => nm.n = Some(integer(value)? as usize),
            "numerics.dt" => nm.dt = Some(value),
            "numerics.dt_ratio" => nm.dt_ratio = Some(value),
            "numerics.tol" => nm.tol = Some(value),
            "numerics.eps" => {
                nm.eps = Some(value);
                if matches!(c.scenario, Scenario::WignerSweep | Scenario::Da1Sweep) {
                    nm.eps_list = Some(vec![value]);
                }
            }
            "numerics.floor" => nm.floor = Some(value),
            "seed" => c.seed = integer(value)?,
            a if a.starts_with("gaussian.") => {
                gaussian(&mut c)?;
                let g = c.gaussian.as_mut().unwrap();
                match a {
                    "gaussian.rho_star" => g.rho_star = value,
                    "gaussian.sigma0" => g.sigma0 = value,
                    "gaussian.omega0" => g.omega0 = value,
                    "gaussian.p0" => g.p0 = value,
                    _ => g.lambda = value,
                }
            }
            a => {
                perturbation(&mut c)?;
                let p = c.perturbation.as_mut().unwrap();
                match a {
                    "perturbation.density_amplitude" => p.density_amplitude = value,
                    "perturbation.phase_amplitude" => p.phase_amplitude = value,
                    _ => p.lambda = value,
                }
            }
        }
        Ok(c)
    }
}
