//! Split-step Fourier solver for the ε-scaled logarithmic Schrödinger
//! equation
//!
//! `iε ∂ₜu + (ε²/2) ∂ₓₓu = λ ln(|u|²) u`
//!
//! on a periodic grid, and the Gaussian-ansatz solution used as its oracle.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gaussian::{integrate_augmented, integrate_gamma, GaussianParams, TrajectoryStatus};
use crate::grid::{SpatialGrid, Spectral};

/// Default clamp inside the logarithm.
pub const VACUUM_FLOOR: f64 = 1e-30;

/// Samples of a wave function on a periodic grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveField {
    pub eps: f64,
    pub grid: SpatialGrid,
    pub values: Vec<Complex64>,
}

impl WaveField {
    pub fn new(eps: f64, grid: SpatialGrid, values: Vec<Complex64>) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(invalid("eps", format!("must be positive, got {eps}")));
        }
        if values.len() != grid.n {
            return Err(invalid(
                "values",
                format!("expected {} samples, got {}", grid.n, values.len()),
            ));
        }
        Ok(WaveField { eps, grid, values })
    }

    pub fn from_fn<F: Fn(f64) -> Complex64>(eps: f64, grid: SpatialGrid, f: F) -> Result<Self> {
        let values = grid.points().into_iter().map(f).collect();
        Self::new(eps, grid, values)
    }

    /// Scaled mass `∫|u|² dx` (rectangle rule, spectrally accurate for
    /// periodic data).
    pub fn mass(&self) -> f64 {
        self.grid.dx() * self.values.iter().map(|u| u.norm_sqr()).sum::<f64>()
    }

    pub fn min_density(&self) -> f64 {
        self.values.iter().map(|u| u.norm_sqr()).fold(f64::INFINITY, f64::min)
    }

    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|u| u.norm_sqr()).collect()
    }

    pub fn l2_norm(&self) -> f64 {
        self.mass().sqrt()
    }

    /// Discrete L² distance to another field on the same grid.
    pub fn l2_distance(&self, other: &WaveField) -> f64 {
        let s: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        (self.grid.dx() * s).sqrt()
    }

    pub fn conj(&self) -> WaveField {
        WaveField {
            eps: self.eps,
            grid: self.grid,
            values: self.values.iter().map(|u| u.conj()).collect(),
        }
    }
}

/// Exact flow of `iε ∂ₜu = λ ln(|u|²) u` over `dt`: a pointwise phase
/// rotation. With `floor = 0` any vanishing sample is a vacuum error.
pub fn nonlinear_step(field: &mut WaveField, lambda: f64, dt: f64, floor: f64) -> Result<()> {
    nonlinear_step_at(field, lambda, dt, floor, f64::NAN)
}

fn nonlinear_step_at(field: &mut WaveField, lambda: f64, dt: f64, floor: f64, t: f64) -> Result<()> {
    if !(floor >= 0.0) {
        return Err(invalid("floor", format!("must be nonnegative, got {floor}")));
    }
    let rate = -dt * lambda / field.eps;
    if floor == 0.0 {
        if let Some(j) = field.values.iter().position(|u| u.norm_sqr() <= 0.0) {
            return Err(Error::Vacuum {
                t,
                x: field.grid.x(j),
                density: field.values[j].norm_sqr(),
            });
        }
    }
    for u in field.values.iter_mut() {
        let d = u.norm_sqr().max(floor);
        *u *= Complex64::from_polar(1.0, rate * d.ln());
    }
    Ok(())
}

/// Exact flow of `iε ∂ₜu = −(ε²/2) ∂ₓₓu` over `dt`.
pub fn kinetic_step(field: &mut WaveField, dt: f64) {
    let sp = Spectral::new(field.grid);
    let mult = kinetic_multiplier(&sp, field.eps, dt);
    apply_multiplier(&sp, &mut field.values, &mult);
}

fn kinetic_multiplier(sp: &Spectral, eps: f64, dt: f64) -> Vec<Complex64> {
    sp.wavenumbers()
        .iter()
        .map(|&k| Complex64::from_polar(1.0, -dt * eps * k * k / 2.0))
        .collect()
}

fn apply_multiplier(sp: &Spectral, values: &mut [Complex64], mult: &[Complex64]) {
    sp.forward(values);
    for (v, m) in values.iter_mut().zip(mult) {
        *v *= m;
    }
    sp.inverse(values);
}

/// Result of a split-step run.
#[derive(Debug, Clone)]
pub struct Propagation {
    pub field: WaveField,
    pub t: f64,
    pub steps: usize,
    /// `min |u|²` seen by each nonlinear substep.
    pub min_density: Vec<f64>,
}

/// Number of steps `m` with `m·dt = t_end`.
pub fn step_count(t_end: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(invalid("dt", format!("must be positive, got {dt}")));
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(invalid("t_end", format!("must be nonnegative, got {t_end}")));
    }
    let m = (t_end / dt).round();
    if (m * dt - t_end).abs() > 1e-9 * t_end.max(1.0) {
        return Err(invalid("dt", format!("t_end = {t_end} is not an integer multiple of dt = {dt}")));
    }
    Ok(m as usize)
}

/// Strang splitting (half kinetic, full nonlinear, half kinetic) from time 0
/// to `t_end`.
pub fn propagate(field: &WaveField, lambda: f64, t_end: f64, dt: f64, floor: f64) -> Result<Propagation> {
    let m = step_count(t_end, dt)?;
    let sp = Spectral::new(field.grid);
    let half = kinetic_multiplier(&sp, field.eps, 0.5 * dt);
    let full = kinetic_multiplier(&sp, field.eps, dt);
    let mut out = field.clone();
    let mut min_density = Vec::with_capacity(m);
    if m > 0 {
        apply_multiplier(&sp, &mut out.values, &half);
    }
    for step in 0..m {
        let t = step as f64 * dt + 0.5 * dt;
        min_density.push(out.min_density());
        nonlinear_step_at(&mut out, lambda, dt, floor, t)?;
        // adjacent half kinetic steps are fused
        let mult = if step + 1 == m { &half } else { &full };
        apply_multiplier(&sp, &mut out.values, mult);
        if out.values.iter().any(|u| !(u.re.is_finite() && u.im.is_finite())) {
            return Err(Error::NonFinite {
                t: (step + 1) as f64 * dt,
                context: format!("wave field after step {} of {m}", step + 1),
            });
        }
    }
    Ok(Propagation {
        field: out,
        t: t_end,
        steps: m,
        min_density,
    })
}

/// Gaussian solution `b exp(−Ω(x−q)²/2 + ip(x−q)/ε + iS/ε)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianAnsatz {
    pub b_abs: f64,
    pub b_phase: f64,
    pub omega: Complex64,
    pub q: f64,
    pub p: f64,
    pub s: f64,
    pub t: f64,
    pub eps: f64,
}

impl GaussianAnsatz {
    pub fn evaluate(&self, x: f64) -> Complex64 {
        let z = x - self.q;
        let i = Complex64::i();
        let expo = -self.omega * (z * z / 2.0) + i * ((self.p * z + self.s) / self.eps);
        Complex64::from_polar(self.b_abs, self.b_phase) * expo.exp()
    }

    pub fn sample(&self, grid: SpatialGrid) -> Result<WaveField> {
        WaveField::from_fn(self.eps, grid, |x| self.evaluate(x))
    }

    /// Exact `|u(x)|²`.
    pub fn density(&self, x: f64) -> f64 {
        let z = x - self.q;
        self.b_abs * self.b_abs * (-self.omega.re * z * z).exp()
    }
}

/// The Gaussian solution at time `t` for initial data
/// `√ρ* exp(−σ₀x²/2 + iω₀x²/(2ε) + ip₀x/ε)`.
///
/// `|b|² = ρ*/γ` in closed form; the phase of `b` is accumulated from the
/// running integrals of `γ⁻²` and `ln γ` carried along the γ^ε trajectory.
pub fn gaussian_ansatz_oracle(params: &GaussianParams, eps: f64, t: f64, tol: f64) -> Result<GaussianAnsatz> {
    if !(eps > 0.0) {
        return Err(invalid("eps", format!("must be positive, got {eps}")));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(invalid("t", format!("must be nonnegative, got {t}")));
    }
    params.validate()?;
    let aug = integrate_augmented(params, eps, t, tol)?;
    let g = aug.state.gamma;
    let gd = aug.state.gamma_dot;
    let phase = -0.5 * eps * params.sigma0 * aug.int_inv_gamma_sq
        - params.lambda / eps * (t * params.rho_star.ln() - aug.int_ln_gamma);
    Ok(GaussianAnsatz {
        b_abs: (params.rho_star / g).sqrt(),
        b_phase: phase,
        omega: Complex64::new(params.sigma0 / (g * g), -gd / (eps * g)),
        q: params.p0 * t,
        p: params.p0,
        s: params.p0 * params.p0 * t / 2.0,
        t,
        eps,
    })
}

/// Periodic grid for the Gaussian problem on `[0, t_max]`: the density at
/// the boundary stays below `1e-16 ρ*` and `dx ≤ ε/8`.
pub fn gaussian_domain(params: &GaussianParams, eps: f64, t_max: f64, tol: f64) -> Result<SpatialGrid> {
    let (g_min, g_max) = if t_max > 0.0 {
        let traj = integrate_gamma(params, eps, t_max, tol)?;
        if let TrajectoryStatus::BlowupDetected { t_blow } = traj.status {
            return Err(Error::BlowUp {
                t_blow,
                t_requested: t_max,
            });
        }
        traj.samples
            .iter()
            .fold((f64::INFINITY, 0.0_f64), |(lo, hi), s| (lo.min(s.gamma), hi.max(s.gamma)))
    } else {
        (1.0, 1.0)
    };
    // (ρ*/γ) exp(−σ₀z²/γ²) < 1e-16 ρ* once σ₀z²/γ² > ln(1e16/γ)
    let decay = (1e16 / g_min.min(1.0)).ln();
    let half = params.p0.abs() * t_max + g_max * (decay / params.sigma0).sqrt();
    SpatialGrid::centered_with_spacing(half * 1.05, eps / 8.0)
}

/// The two sides of the pointwise inequality
/// `|Im[(ln|u|² u − ln|v|² v) conj(u − v)]| ≤ 4|u − v|²`.
pub fn log_lipschitz_gap(u: Complex64, v: Complex64) -> Result<(f64, f64)> {
    if u.norm_sqr() == 0.0 || v.norm_sqr() == 0.0 {
        return Err(Error::Domain("log_lipschitz_gap requires nonzero arguments".into()));
    }
    // Im[(a u − b v)(ū − v̄)] = (b − a) Im(u v̄) with a = ln|u|², b = ln|v|²
    let a = u.norm_sqr().ln();
    let b = v.norm_sqr().ln();
    let lhs = ((b - a) * (u * v.conj()).im).abs();
    Ok((lhs, 4.0 * (u - v).norm_sqr()))
}
