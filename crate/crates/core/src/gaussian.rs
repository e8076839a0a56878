//! Gaussian reduction of the logarithmic Schrödinger / isothermal Euler
//! dynamics.
//!
//! For Gaussian data the whole evolution is carried by a dilation factor γ
//! solving
//!
//! ```text
//! γ'' = ε²σ₀²/γ³ + 2λσ₀/γ,   γ(0) = 1,  γ'(0) = ω₀,
//! ```
//!
//! with ε = 0 giving the limit (Euler) dynamics. This module integrates that
//! ODE, monitors its energy integral, detects the finite-time collapse for
//! λ < 0 and evaluates the explicit Euler fields and the large-time
//! asymptotics.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::centered_difference;
use crate::ode::{Control, Dopri5, OdeError};
use crate::quadrature;
use crate::special::dawson;

/// γ below this value is treated as collapse.
pub const BLOWUP_FLOOR: f64 = 1e-6;

/// Parameters of the Gaussian initial datum `ρ* exp(-σ₀x²)`, `v₀ = ω₀x + p₀`,
/// and the coupling constant λ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    pub rho_star: f64,
    pub sigma0: f64,
    pub omega0: f64,
    pub p0: f64,
    pub lambda: f64,
}

impl GaussianParams {
    pub fn new(rho_star: f64, sigma0: f64, omega0: f64, p0: f64, lambda: f64) -> Result<Self> {
        let p = GaussianParams {
            rho_star,
            sigma0,
            omega0,
            p0,
            lambda,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho_star > 0.0 && self.rho_star.is_finite()) {
            return Err(invalid("rho_star", format!("must be positive, got {}", self.rho_star)));
        }
        if !(self.sigma0 > 0.0 && self.sigma0.is_finite()) {
            return Err(invalid("sigma0", format!("must be positive, got {}", self.sigma0)));
        }
        if !self.omega0.is_finite() {
            return Err(invalid("omega0", "must be finite"));
        }
        if !self.p0.is_finite() {
            return Err(invalid("p0", "must be finite"));
        }
        if self.lambda == 0.0 || !self.lambda.is_finite() {
            return Err(invalid("lambda", format!("must be finite and nonzero, got {}", self.lambda)));
        }
        Ok(())
    }

    /// Total mass `∫ρ₀ = ρ*√(π/σ₀)`, conserved by the flow.
    pub fn mass(&self) -> f64 {
        self.rho_star * (std::f64::consts::PI / self.sigma0).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaState {
    pub t: f64,
    pub gamma: f64,
    pub gamma_dot: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TrajectoryStatus {
    Completed,
    BlowupDetected { t_blow: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaTrajectory {
    pub params: GaussianParams,
    pub eps: f64,
    pub tol: f64,
    pub samples: Vec<GammaState>,
    pub status: TrajectoryStatus,
}

impl GammaTrajectory {
    pub fn last(&self) -> GammaState {
        *self.samples.last().expect("trajectory has at least the initial sample")
    }

    pub fn max_energy_residual(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| energy_residual(s, &self.params, self.eps).abs())
            .fold(0.0, f64::max)
    }

    pub fn t_blow(&self) -> Option<f64> {
        match self.status {
            TrajectoryStatus::BlowupDetected { t_blow } => Some(t_blow),
            TrajectoryStatus::Completed => None,
        }
    }
}

/// Right-hand side γ'' of the reduced ODE.
pub fn gamma_acceleration(gamma: f64, params: &GaussianParams, eps: f64) -> f64 {
    let s = params.sigma0;
    eps * eps * s * s / (gamma * gamma * gamma) + 2.0 * params.lambda * s / gamma
}

fn check_inputs(eps: f64, t_end: f64, tol: f64) -> Result<()> {
    if !(tol > 0.0) {
        return Err(invalid("tol", format!("must be positive, got {tol}")));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(invalid("t_end", format!("must be positive, got {t_end}")));
    }
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(invalid("eps", format!("must be nonnegative, got {eps}")));
    }
    Ok(())
}

/// State at the end of an integration together with the two running
/// integrals `∫γ⁻²` and `∫ln γ` used by the ansatz phase.
pub(crate) struct AugmentedEnd {
    pub state: GammaState,
    pub int_inv_gamma_sq: f64,
    pub int_ln_gamma: f64,
}

struct RawRun {
    samples: Vec<GammaState>,
    end: Vec<f64>,
    status: TrajectoryStatus,
}

fn run(params: &GaussianParams, eps: f64, t_end: f64, tol: f64, augmented: bool) -> Result<RawRun> {
    params.validate()?;
    check_inputs(eps, t_end, tol)?;
    let p = *params;
    let rhs = move |_t: f64, y: &[f64], dy: &mut [f64]| {
        let g = y[0];
        if !(g > 0.0) {
            dy.iter_mut().for_each(|v| *v = f64::NAN);
            return;
        }
        dy[0] = y[1];
        dy[1] = gamma_acceleration(g, &p, eps);
        if dy.len() > 2 {
            dy[2] = 1.0 / (g * g);
            dy[3] = g.ln();
        }
    };
    let y0: Vec<f64> = if augmented {
        vec![1.0, params.omega0, 0.0, 0.0]
    } else {
        vec![1.0, params.omega0]
    };
    let mut samples = vec![GammaState {
        t: 0.0,
        gamma: 1.0,
        gamma_dot: params.omega0,
    }];
    let mut blow: Option<(f64, Vec<f64>)> = None;
    let solver = Dopri5::new(tol);
    let outcome = solver.solve(rhs, 0.0, &y0, t_end, |step| {
        if step.y[0] < BLOWUP_FLOOR {
            // bisect the dense output for γ = floor inside the last step
            let (mut lo, mut hi) = (step.t_old, step.t);
            let width = tol.min(1e-3).max(4.0 * f64::EPSILON * hi.abs());
            while hi - lo > width {
                let mid = 0.5 * (lo + hi);
                if step.dense.eval(mid, 0) < BLOWUP_FLOOR {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            blow = Some((hi, step.dense.eval_all(hi)));
            return Control::Stop;
        }
        samples.push(GammaState {
            t: step.t,
            gamma: step.y[0],
            gamma_dot: step.y[1],
        });
        Control::Continue
    });
    match outcome {
        Ok(out) => {
            if let Some((t_blow, y)) = blow {
                if y[0] > 0.0 && t_blow > samples.last().unwrap().t {
                    samples.push(GammaState {
                        t: t_blow,
                        gamma: y[0],
                        gamma_dot: y[1],
                    });
                }
                Ok(RawRun {
                    samples,
                    end: y,
                    status: TrajectoryStatus::BlowupDetected { t_blow },
                })
            } else {
                Ok(RawRun {
                    samples,
                    end: out.y,
                    status: TrajectoryStatus::Completed,
                })
            }
        }
        Err(OdeError::StepUnderflow { t, y, .. }) if params.lambda < 0.0 && y[0] < 1e-2 => {
            // the step size collapsed where γ'' → -∞: collapse at t
            Ok(RawRun {
                samples,
                end: y,
                status: TrajectoryStatus::BlowupDetected { t_blow: t },
            })
        }
        Err(OdeError::StepUnderflow { t, y, h }) => Err(Error::IntegrationFailure {
            t,
            state: y,
            reason: format!("step size underflow (h = {h:e})"),
        }),
        Err(OdeError::NonFinite { t, y }) => Err(Error::IntegrationFailure {
            t,
            state: y,
            reason: "non-finite state".into(),
        }),
        Err(OdeError::TooManySteps { t, y }) => Err(Error::IntegrationFailure {
            t,
            state: y,
            reason: "step budget exhausted".into(),
        }),
    }
}

/// Integrates the γ^ε ODE on `[0, t_end]` with local error tolerance `tol`.
///
/// Collapse (γ < [`BLOWUP_FLOOR`] or step-size underflow while γ is small)
/// ends the run with [`TrajectoryStatus::BlowupDetected`]; the collapse time
/// is bracketed by bisection on the dense output to width `tol`.
pub fn integrate_gamma(params: &GaussianParams, eps: f64, t_end: f64, tol: f64) -> Result<GammaTrajectory> {
    let raw = run(params, eps, t_end, tol, false)?;
    Ok(GammaTrajectory {
        params: *params,
        eps,
        tol,
        samples: raw.samples,
        status: raw.status,
    })
}

/// γ^ε at a single time together with the phase integrals; fails on collapse.
pub(crate) fn integrate_augmented(params: &GaussianParams, eps: f64, t: f64, tol: f64) -> Result<AugmentedEnd> {
    if t == 0.0 {
        return Ok(AugmentedEnd {
            state: GammaState {
                t: 0.0,
                gamma: 1.0,
                gamma_dot: params.omega0,
            },
            int_inv_gamma_sq: 0.0,
            int_ln_gamma: 0.0,
        });
    }
    let raw = run(params, eps, t, tol, true)?;
    if let TrajectoryStatus::BlowupDetected { t_blow } = raw.status {
        return Err(Error::BlowUp {
            t_blow,
            t_requested: t,
        });
    }
    Ok(AugmentedEnd {
        state: GammaState {
            t,
            gamma: raw.end[0],
            gamma_dot: raw.end[1],
        },
        int_inv_gamma_sq: raw.end[2],
        int_ln_gamma: raw.end[3],
    })
}

/// γ^ε state at time `t` (no intermediate samples kept).
pub fn gamma_at(params: &GaussianParams, eps: f64, t: f64, tol: f64) -> Result<GammaState> {
    integrate_augmented(params, eps, t, tol).map(|a| a.state)
}

/// Deviation from the first integral of the γ^ε ODE:
///
/// `γ'² − 4λσ₀ ln γ + ε²σ₀²/γ² − ε²σ₀² − ω₀²`, which vanishes identically on
/// exact solutions (the ε terms drop out for ε = 0).
pub fn energy_residual(state: &GammaState, params: &GaussianParams, eps: f64) -> f64 {
    let s = params.sigma0;
    let e2s2 = eps * eps * s * s;
    state.gamma_dot * state.gamma_dot - 4.0 * params.lambda * s * state.gamma.ln() + e2s2 / (state.gamma * state.gamma)
        - e2s2
        - params.omega0 * params.omega0
}

/// Lower bound on γ^ε implied by nonnegativity of γ'² in the energy
/// relation (λ > 0 only).
pub fn gamma_lower_bound(params: &GaussianParams, eps: f64) -> Result<f64> {
    if params.lambda <= 0.0 {
        return Err(Error::Domain("the energy lower bound requires lambda > 0".into()));
    }
    let c = 4.0 * params.lambda * params.sigma0;
    if eps == 0.0 {
        return Ok((-params.omega0 * params.omega0 / c).exp());
    }
    let e2s2 = (eps * params.sigma0).powi(2);
    let k = e2s2 + params.omega0 * params.omega0;
    // g(γ) = c ln γ − ε²σ₀²/γ² + k is increasing with g(1) = ω₀² ≥ 0
    let g = |x: f64| c * x.ln() - e2s2 / (x * x) + k;
    let (mut lo, mut hi) = (1e-300_f64, 1.0_f64);
    if g(hi) <= 0.0 {
        return Ok(1.0);
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// The explicit isothermal Euler solution carried by a point of the ε = 0
/// trajectory.
///
/// The velocity uses the centered form `(γ'/γ)(x − p₀t) + p₀`, which is the
/// one compatible with the moving density.
#[derive(Debug, Clone, Copy)]
pub struct GaussianEulerFields {
    pub state: GammaState,
    pub params: GaussianParams,
}

pub fn gaussian_euler_fields(state: &GammaState, params: &GaussianParams) -> GaussianEulerFields {
    GaussianEulerFields {
        state: *state,
        params: *params,
    }
}

impl GaussianEulerFields {
    fn z(&self, x: f64) -> f64 {
        x - self.params.p0 * self.state.t
    }

    pub fn rho(&self, x: f64) -> f64 {
        let g = self.state.gamma;
        let z = self.z(x);
        self.params.rho_star / g * (-self.params.sigma0 * z * z / (g * g)).exp()
    }

    pub fn v(&self, x: f64) -> f64 {
        self.state.gamma_dot / self.state.gamma * self.z(x) + self.params.p0
    }

    /// `(γ'/γ) x + p₀`, the uncentered velocity form.
    pub fn v_uncentered(&self, x: f64) -> f64 {
        self.state.gamma_dot / self.state.gamma * x + self.params.p0
    }

    /// `∂ₓρ` in closed form.
    pub fn drho_dx(&self, x: f64) -> f64 {
        let g = self.state.gamma;
        -2.0 * self.params.sigma0 * self.z(x) / (g * g) * self.rho(x)
    }

    /// `∂ₜρ` in closed form, using γ'' from the ε = 0 ODE.
    pub fn drho_dt(&self, x: f64) -> f64 {
        let GammaState { gamma: g, gamma_dot: gd, .. } = self.state;
        let z = self.z(x);
        let s = self.params.sigma0;
        self.rho(x) * (-gd / g + 2.0 * s * z * self.params.p0 / (g * g) + 2.0 * s * z * z * gd / (g * g * g))
    }

    /// `∂ₜ(ρv)` in closed form.
    pub fn dmomentum_dt(&self, x: f64) -> f64 {
        let GammaState { gamma: g, gamma_dot: gd, .. } = self.state;
        let gdd = gamma_acceleration(g, &self.params, 0.0);
        let z = self.z(x);
        let dv_dt = (gdd / g - gd * gd / (g * g)) * z - gd / g * self.params.p0;
        self.drho_dt(x) * self.v(x) + self.rho(x) * dv_dt
    }

    pub fn sample(&self, xs: &[f64]) -> (Vec<f64>, Vec<f64>) {
        (xs.iter().map(|&x| self.rho(x)).collect(), xs.iter().map(|&x| self.v(x)).collect())
    }
}

/// Sup-norm residuals of the isothermal Euler system
/// `∂ₜρ + ∂ₓ(ρv)` and `∂ₜ(ρv) + ∂ₓ(ρv² + λρ)` with centered differences in x.
///
/// Non-periodic data are checked on interior nodes only.
pub fn residual_isen1(
    rho: &[f64],
    v: &[f64],
    drho_dt: &[f64],
    dmomentum_dt: &[f64],
    dx: f64,
    lambda: f64,
    periodic: bool,
) -> Result<(f64, f64)> {
    let n = rho.len();
    if n < 8 {
        return Err(Error::InsufficientData(format!("grid has {n} points, need at least 8")));
    }
    if v.len() != n || drho_dt.len() != n || dmomentum_dt.len() != n {
        return Err(Error::InsufficientData("field lengths differ".into()));
    }
    let mass_flux: Vec<f64> = rho.iter().zip(v).map(|(r, v)| r * v).collect();
    let mom_flux: Vec<f64> = rho.iter().zip(v).map(|(r, v)| r * v * v + lambda * r).collect();
    let d1 = centered_difference(&mass_flux, dx, periodic);
    let d2 = centered_difference(&mom_flux, dx, periodic);
    let range = if periodic { 0..n } else { 1..n - 1 };
    let mut r1: f64 = 0.0;
    let mut r2: f64 = 0.0;
    for j in range {
        r1 = r1.max((drho_dt[j] + d1[j]).abs());
        r2 = r2.max((dmomentum_dt[j] + d2[j]).abs());
    }
    Ok((r1, r2))
}

fn check_positive_lambda(params: &GaussianParams) -> Result<()> {
    params.validate()?;
    if params.lambda <= 0.0 {
        return Err(Error::Domain(format!(
            "the implicit time relation requires lambda > 0, got {}",
            params.lambda
        )));
    }
    Ok(())
}

/// Time at which γ' reaches `y` on the (monotone, λ > 0) trajectory:
/// `t = (1/2λσ₀) ∫_{ω₀}^{y} exp((s² − ω₀²)/(4λσ₀)) ds`.
fn time_at_velocity(y: f64, params: &GaussianParams) -> f64 {
    let ls = params.lambda * params.sigma0;
    let c = 4.0 * ls;
    let w2 = params.omega0 * params.omega0;
    let r = quadrature::integrate(|s| ((s * s - w2) / c).exp(), params.omega0, y, 0.0, 1e-14);
    r.value / (2.0 * ls)
}

/// Velocity γ' on the ascending branch where γ = `gamma_target`.
fn ascending_velocity(gamma_target: f64, params: &GaussianParams) -> Result<f64> {
    let c = 4.0 * params.lambda * params.sigma0;
    let y2 = params.omega0 * params.omega0 + c * gamma_target.ln();
    if !(gamma_target > 0.0) || y2 < -1e-15 {
        return Err(Error::Domain(format!(
            "gamma = {gamma_target} is below the trajectory minimum {}",
            (-params.omega0 * params.omega0 / c).exp()
        )));
    }
    let y = y2.max(0.0).sqrt();
    if params.omega0 >= 0.0 && gamma_target < 1.0 {
        return Err(Error::Domain(format!(
            "gamma = {gamma_target} < 1 is never reached when omega0 >= 0"
        )));
    }
    Ok(y)
}

/// Time at which the ε = 0 trajectory (λ > 0) reaches `gamma_target`.
///
/// The integral `∫₁^γ dγ'/√(ω₀² + 4λσ₀ ln γ')` is evaluated after the change
/// of variable `y = √(ω₀² + 4λσ₀ ln γ)`, which removes the endpoint
/// singularity at ω₀ = 0. For ω₀ < 0 the trajectory first contracts; the time
/// returned is the one on the expanding branch.
pub fn implicit_time(gamma_target: f64, params: &GaussianParams) -> Result<f64> {
    check_positive_lambda(params)?;
    let y = ascending_velocity(gamma_target, params)?;
    Ok(time_at_velocity(y, params))
}

/// Closed form of [`implicit_time`] through Dawson's integral:
/// `t = (2/√c)(γ F(y/√c) − F(ω₀/√c))` with `c = 4λσ₀`.
pub fn implicit_time_dawson(gamma_target: f64, params: &GaussianParams) -> Result<f64> {
    check_positive_lambda(params)?;
    let y = ascending_velocity(gamma_target, params)?;
    let sc = (4.0 * params.lambda * params.sigma0).sqrt();
    Ok(2.0 / sc * (gamma_target * dawson(y / sc) - dawson(params.omega0 / sc)))
}

/// Inverts the implicit time relation: (γ, γ') at time `t` for λ > 0 and
/// ε = 0, by safeguarded Newton iteration on γ'.
pub fn gamma_from_implicit(t: f64, params: &GaussianParams) -> Result<GammaState> {
    check_positive_lambda(params)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(invalid("t", format!("must be nonnegative, got {t}")));
    }
    let ls = params.lambda * params.sigma0;
    let c = 4.0 * ls;
    let w2 = params.omega0 * params.omega0;
    let gamma_of = |y: f64| ((y * y - w2) / c).exp();
    let mut lo = params.omega0;
    let mut hi = params.omega0.abs().max(1.0);
    while time_at_velocity(hi, params) < t {
        lo = hi;
        hi *= 2.0;
    }
    let mut y = 0.5 * (lo + hi);
    for _ in 0..200 {
        let f = time_at_velocity(y, params) - t;
        if f > 0.0 {
            hi = y;
        } else {
            lo = y;
        }
        let slope = gamma_of(y) / (2.0 * ls);
        let mut next = y - f / slope;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - y).abs() <= 1e-15 * y.abs().max(1.0) || hi - lo <= 1e-15 * hi.abs().max(1.0) {
            y = next;
            break;
        }
        y = next;
    }
    Ok(GammaState {
        t,
        gamma: gamma_of(y),
        gamma_dot: y,
    })
}

/// Leading-order large-time behaviour `(2t√(λσ₀ ln t), 2√(λσ₀ ln t))`.
pub fn asymptotic_gamma(t: f64, params: &GaussianParams) -> Result<(f64, f64)> {
    if params.lambda <= 0.0 {
        return Err(Error::Domain("asymptotics require lambda > 0".into()));
    }
    if !(t > 1.0) {
        return Err(Error::Domain(format!("asymptotics require t > 1, got {t}")));
    }
    let root = (params.lambda * params.sigma0 * t.ln()).sqrt();
    Ok((2.0 * t * root, 2.0 * root))
}
