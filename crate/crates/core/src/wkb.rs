//! The symmetrizable hyperbolic system for the WKB amplitude `a = a₁ + i a₂`
//! and velocity `v`:
//!
//! ```text
//! ∂ₜa₁ + v ∂ₓa₁ + (a₁/2) ∂ₓv = −(ε/2) ∂ₓₓa₂
//! ∂ₜa₂ + v ∂ₓa₂ + (a₂/2) ∂ₓv =  (ε/2) ∂ₓₓa₁
//! ∂ₜv  + v ∂ₓv  + 2λ(a₁∂ₓa₁ + a₂∂ₓa₂)/(a₁² + a₂²) = 0
//! ```
//!
//! solved pseudo-spectrally on a periodic grid with classical RK4, together
//! with phase reconstruction, the ε → 0 comparison and the weak residual of
//! the monokinetic Vlasov equation.

use std::sync::Arc;

use nalgebra::{Matrix3, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convergence::loglog_slope;
use crate::error::{invalid, Error, Result};
use crate::gaussian::{gamma_at, gaussian_euler_fields, GammaState, GaussianParams};
use crate::grid::{centered_difference, SpatialGrid, Spectral};
use crate::nls::{propagate, WaveField, VACUUM_FLOOR};
use crate::observable::{Interval, Observable, SpaceTimeObservable};
use crate::quadrature::trapezoid;
use crate::wigner::{convergence_sweep, wigner_transform, MonokineticMeasure, SweepTable, WignerOptions};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Non-vacuum initial data `(ρ₀, Φ₀)` with `inf ρ₀ ≥ rho_floor > 0`.
#[derive(Clone)]
pub struct InitialData {
    pub rho0: ScalarFn,
    pub phi0: ScalarFn,
    pub phi0_prime: ScalarFn,
    pub rho_floor: f64,
}

impl std::fmt::Debug for InitialData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("InitialData").field("rho_floor", &self.rho_floor).finish()
    }
}

impl InitialData {
    pub fn new<R, P, D>(rho0: R, phi0: P, phi0_prime: D, rho_floor: f64) -> Result<Self>
    where
        R: Fn(f64) -> f64 + Send + Sync + 'static,
        P: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(rho_floor > 0.0) {
            return Err(invalid("rho_floor", format!("must be positive, got {rho_floor}")));
        }
        Ok(InitialData {
            rho0: Arc::new(rho0),
            phi0: Arc::new(phi0),
            phi0_prime: Arc::new(phi0_prime),
            rho_floor,
        })
    }

    /// Uniform state `ρ ≡ rho_star`, `Φ₀ = p₀x`.
    pub fn constant(rho_star: f64, p0: f64) -> Result<Self> {
        Self::new(move |_| rho_star, move |x| p0 * x, move |_| p0, rho_star)
    }

    /// `ρ₀ = 1 + A cos x`, `Φ₀ = B cos x` on a 2π-periodic domain.
    pub fn perturbation(density_amplitude: f64, phase_amplitude: f64) -> Result<Self> {
        let a = density_amplitude;
        let b = phase_amplitude;
        if !(a.abs() < 1.0) {
            return Err(invalid("density_amplitude", format!("|A| must be below 1, got {a}")));
        }
        Self::new(
            move |x: f64| 1.0 + a * x.cos(),
            move |x: f64| b * x.cos(),
            move |x: f64| -b * x.sin(),
            1.0 - a.abs(),
        )
    }

    /// Initial fluid state `a₁ = √ρ₀, a₂ = 0, v = Φ₀'`.
    pub fn sample(&self, grid: SpatialGrid, eps: f64) -> Result<FluidState> {
        let xs = grid.points();
        let rho: Vec<f64> = xs.iter().map(|&x| (self.rho0)(x)).collect();
        if let Some(j) = rho.iter().position(|&r| !(r >= self.rho_floor * (1.0 - 1e-12))) {
            return Err(invalid(
                "rho0",
                format!("rho0({}) = {} is below the floor {}", xs[j], rho[j], self.rho_floor),
            ));
        }
        Ok(FluidState {
            grid,
            a1: rho.iter().map(|r| r.sqrt()).collect(),
            a2: vec![0.0; grid.n],
            v: xs.iter().map(|&x| (self.phi0_prime)(x)).collect(),
            eps,
            t: 0.0,
        })
    }

    /// WKB wave function `√ρ₀ e^{iΦ₀/ε}`.
    pub fn wave_field(&self, grid: SpatialGrid, eps: f64) -> Result<WaveField> {
        WaveField::from_fn(eps, grid, |x| Complex64::from_polar((self.rho0)(x).sqrt(), (self.phi0)(x) / eps))
    }
}

/// `(a₁, a₂, v)` on a periodic grid at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluidState {
    pub grid: SpatialGrid,
    pub a1: Vec<f64>,
    pub a2: Vec<f64>,
    pub v: Vec<f64>,
    pub eps: f64,
    pub t: f64,
}

impl FluidState {
    pub fn density(&self) -> Vec<f64> {
        self.a1.iter().zip(&self.a2).map(|(a, b)| a * a + b * b).collect()
    }

    pub fn min_density(&self) -> f64 {
        self.density().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// `∫(a₁² + a₂²) dx`.
    pub fn mass(&self) -> f64 {
        self.grid.dx() * self.density().iter().sum::<f64>()
    }

    fn sup_norm(&self) -> f64 {
        self.a1
            .iter()
            .chain(&self.a2)
            .chain(&self.v)
            .fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Snapshots of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub lambda: f64,
    pub eps: f64,
    pub dt: f64,
    pub rho_floor: f64,
    pub snapshots: Vec<FluidState>,
    /// `min(a₁² + a₂²)` after every step.
    pub min_density: Vec<f64>,
}

impl Trajectory {
    pub fn last(&self) -> &FluidState {
        self.snapshots.last().expect("trajectory has at least the initial snapshot")
    }
}

/// Settings for [`evolve`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions {
    pub lambda: f64,
    pub eps: f64,
    pub t_end: f64,
    /// Requested step; the actual step is `t_end / ceil(t_end / dt)`.
    pub dt: f64,
    /// Store a snapshot every this many steps (the final state is always kept).
    pub snapshot_every: usize,
}

struct Rhs {
    sp: Spectral,
    lambda: f64,
    eps: f64,
}

impl Rhs {
    fn eval(&self, a1: &[f64], a2: &[f64], v: &[f64], out: (&mut [f64], &mut [f64], &mut [f64])) {
        let (d1a1, d2a1) = self.sp.derivatives(a1);
        let (d1a2, d2a2) = self.sp.derivatives(a2);
        let d1v = self.sp.derivative(v);
        let h = 0.5 * self.eps;
        for j in 0..a1.len() {
            let rho = a1[j] * a1[j] + a2[j] * a2[j];
            out.0[j] = -(v[j] * d1a1[j] + 0.5 * a1[j] * d1v[j]) - h * d2a2[j];
            out.1[j] = -(v[j] * d1a2[j] + 0.5 * a2[j] * d1v[j]) + h * d2a1[j];
            out.2[j] = -(v[j] * d1v[j] + 2.0 * self.lambda * (a1[j] * d1a1[j] + a2[j] * d1a2[j]) / rho);
        }
    }
}

/// Largest RK4 step that keeps the spectral eigenvalues of the linearized
/// operator inside the stability region, with a safety factor of 0.5.
pub fn stable_dt(state: &FluidState, lambda: f64) -> f64 {
    let k = state.grid.max_wavenumber();
    let vmax = state.v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let c = vmax + (2.0 * lambda.abs()).sqrt() + 1e-12;
    let adv = 2.8 / (c * k);
    let disp = if state.eps > 0.0 { 2.8 / (0.5 * state.eps * k * k) } else { f64::INFINITY };
    0.5 * adv.min(disp)
}

/// Classical RK4 in time with Fourier derivatives in space.
///
/// Stops with [`Error::VacuumApproach`] when `min(a₁² + a₂²)` drops below
/// `ρ₀*/2`, and with [`Error::Stability`] when the sup-norm more than doubles
/// in one step.
pub fn evolve(init: &InitialData, grid: SpatialGrid, opts: EvolveOptions) -> Result<Trajectory> {
    let state = init.sample(grid, opts.eps)?;
    evolve_from(state, init.rho_floor, opts)
}

pub fn evolve_from(state: FluidState, rho_floor: f64, opts: EvolveOptions) -> Result<Trajectory> {
    if !(opts.eps >= 0.0 && opts.eps.is_finite()) {
        return Err(invalid("eps", format!("must be nonnegative, got {}", opts.eps)));
    }
    if !(opts.lambda > 0.0) {
        return Err(invalid("lambda", format!("must be positive, got {}", opts.lambda)));
    }
    if !(opts.dt > 0.0 && opts.t_end > 0.0) {
        return Err(invalid("dt", "dt and t_end must be positive"));
    }
    if opts.snapshot_every == 0 {
        return Err(invalid("snapshot_every", "must be at least 1"));
    }
    let steps = (opts.t_end / opts.dt - 1e-9).ceil().max(1.0) as usize;
    let dt = opts.t_end / steps as f64;
    let n = state.grid.n;
    let rhs = Rhs {
        sp: Spectral::new(state.grid),
        lambda: opts.lambda,
        eps: opts.eps,
    };
    let guard = 0.5 * rho_floor;
    let mut cur = state;
    cur.eps = opts.eps;
    let mut snapshots = vec![cur.clone()];
    let mut min_density = Vec::with_capacity(steps);
    let mut k = [[vec![0.0; n], vec![0.0; n], vec![0.0; n]], [vec![0.0; n], vec![0.0; n], vec![0.0; n]]];
    let mut acc = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut stage = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for step in 0..steps {
        let before = cur.sup_norm();
        let y = [&cur.a1, &cur.a2, &cur.v];
        for c in 0..3 {
            acc[c].copy_from_slice(y[c]);
        }
        let weights = [1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0];
        let offsets = [0.0, 0.5, 0.5, 1.0];
        for s in 0..4 {
            if s == 0 {
                for c in 0..3 {
                    stage[c].copy_from_slice(y[c]);
                }
            } else {
                for c in 0..3 {
                    for j in 0..n {
                        stage[c][j] = y[c][j] + offsets[s] * dt * k[0][c][j];
                    }
                }
            }
            let [k0, k1, k2] = &mut k[1];
            rhs.eval(&stage[0], &stage[1], &stage[2], (k0, k1, k2));
            for c in 0..3 {
                for j in 0..n {
                    acc[c][j] += weights[s] * dt * k[1][c][j];
                }
            }
            k.swap(0, 1);
        }
        let [a1, a2, v] = &acc;
        cur.a1.copy_from_slice(a1);
        cur.a2.copy_from_slice(a2);
        cur.v.copy_from_slice(v);
        cur.t = (step + 1) as f64 * dt;
        let after = cur.sup_norm();
        if !after.is_finite() {
            return Err(Error::NonFinite {
                t: cur.t,
                context: "fluid state".into(),
            });
        }
        if after > 2.0 * before {
            return Err(Error::Stability {
                t: cur.t,
                before,
                after,
            });
        }
        let m = cur.min_density();
        min_density.push(m);
        if m < guard {
            return Err(Error::VacuumApproach {
                t: cur.t,
                min_density: m,
                guard,
            });
        }
        if (step + 1) % opts.snapshot_every == 0 || step + 1 == steps {
            snapshots.push(cur.clone());
        }
    }
    Ok(Trajectory {
        lambda: opts.lambda,
        eps: opts.eps,
        dt,
        rho_floor,
        snapshots,
        min_density,
    })
}

/// Symmetrizer `S` and flux Jacobian `A` at one state.
pub fn structure_matrices(a1: f64, a2: f64, v: f64, lambda: f64) -> (Matrix3<f64>, Matrix3<f64>) {
    let rho = a1 * a1 + a2 * a2;
    let a = Matrix3::new(
        v,
        0.0,
        a1 / 2.0,
        0.0,
        v,
        a2 / 2.0,
        2.0 * lambda * a1 / rho,
        2.0 * lambda * a2 / rho,
        v,
    );
    let s = Matrix3::from_diagonal(&nalgebra::Vector3::new(1.0, 1.0, rho / (4.0 * lambda)));
    (s, a)
}

/// Largest Frobenius norm of `SA − (SA)ᵀ` over the nodes, and the smallest
/// eigenvalue of `S`.
pub fn symmetrizer_check(state: &FluidState, lambda: f64) -> (f64, f64) {
    let mut asym: f64 = 0.0;
    let mut min_eig = f64::INFINITY;
    for j in 0..state.grid.n {
        let (s, a) = structure_matrices(state.a1[j], state.a2[j], state.v[j], lambda);
        let sa = s * a;
        asym = asym.max((sa - sa.transpose()).norm());
        let eig = SymmetricEigen::new(s).eigenvalues;
        min_eig = min_eig.min(eig.min());
    }
    (asym, min_eig)
}

/// `|⟨Lw, w⟩|` for the discrete operator `L(a₁, a₂) = (−∂ₓₓa₂, ∂ₓₓa₁)` with
/// `w = a₁ + i a₂`.
pub fn skew_check(grid: SpatialGrid, field: &[Complex64]) -> Result<f64> {
    if field.len() != grid.n {
        return Err(invalid("field", "length must match the grid"));
    }
    let sp = Spectral::new(grid);
    let a1: Vec<f64> = field.iter().map(|c| c.re).collect();
    let a2: Vec<f64> = field.iter().map(|c| c.im).collect();
    let l1 = sp.second_derivative(&a2);
    let l2 = sp.second_derivative(&a1);
    let s: f64 = (0..grid.n).map(|j| -l1[j] * a1[j] + l2[j] * a2[j]).sum();
    Ok((s * grid.dx()).abs())
}

/// The phase `Φ^ε(t, ·)` on the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiField {
    pub grid: SpatialGrid,
    pub t: f64,
    pub phi: Vec<f64>,
}

/// `Φ(t,x) = Φ₀(x) − ∫₀ᵗ (v²/2 + λ ln(a₁² + a₂²)) dτ`, trapezoid rule over
/// the stored snapshots.
pub fn reconstruct_phi(traj: &Trajectory, phi0: &(dyn Fn(f64) -> f64 + Sync)) -> Result<Vec<PhiField>> {
    let snaps = &traj.snapshots;
    if snaps.len() < 2 || snaps[0].t != 0.0 {
        return Err(Error::InsufficientData(
            "phase reconstruction needs the initial snapshot and at least one more; lower snapshot_every".into(),
        ));
    }
    let grid = snaps[0].grid;
    let integrand = |s: &FluidState| -> Vec<f64> {
        (0..grid.n)
            .map(|j| 0.5 * s.v[j] * s.v[j] + traj.lambda * (s.a1[j] * s.a1[j] + s.a2[j] * s.a2[j]).ln())
            .collect()
    };
    let base: Vec<f64> = grid.points().iter().map(|&x| phi0(x)).collect();
    let mut acc = vec![0.0; grid.n];
    let mut prev = integrand(&snaps[0]);
    let mut out = vec![PhiField {
        grid,
        t: 0.0,
        phi: base.clone(),
    }];
    for w in snaps.windows(2) {
        let h = w[1].t - w[0].t;
        let next = integrand(&w[1]);
        for j in 0..grid.n {
            acc[j] += 0.5 * h * (prev[j] + next[j]);
        }
        out.push(PhiField {
            grid,
            t: w[1].t,
            phi: (0..grid.n).map(|j| base[j] - acc[j]).collect(),
        });
        prev = next;
    }
    Ok(out)
}

/// `sup |∂ₓΦ − v|`, differentiating the periodic part `Φ − Φ₀` spectrally.
pub fn phase_velocity_mismatch(
    phi: &PhiField,
    state: &FluidState,
    phi0: &(dyn Fn(f64) -> f64 + Sync),
    phi0_prime: &(dyn Fn(f64) -> f64 + Sync),
) -> f64 {
    let xs = phi.grid.points();
    let periodic: Vec<f64> = xs.iter().zip(&phi.phi).map(|(&x, p)| p - phi0(x)).collect();
    let d = Spectral::new(phi.grid).derivative(&periodic);
    xs.iter()
        .enumerate()
        .map(|(j, &x)| (d[j] + phi0_prime(x) - state.v[j]).abs())
        .fold(0.0, f64::max)
}

/// One row of the semiclassical comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Da1Row {
    pub eps: f64,
    /// `sup_{t,x} |a₁ + i a₂ − a|`.
    pub amplitude_gap: Option<f64>,
    /// `sup_{t,x} |v^ε − v|`.
    pub velocity_gap: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Da1Table {
    pub rows: Vec<Da1Row>,
    pub amplitude_slope: Option<f64>,
    pub velocity_slope: Option<f64>,
}

/// Runs every ε in `eps_list` and the ε = 0 reference with identical grid,
/// step and snapshot times, and reports sup-in-(t,x) gaps.
pub fn convergence_da1(
    init: &InitialData,
    grid: SpatialGrid,
    lambda: f64,
    eps_list: &[f64],
    t_end: f64,
    dt: f64,
) -> Result<Da1Table> {
    if eps_list.is_empty() {
        return Err(invalid("eps_list", "must not be empty"));
    }
    let opts = |eps: f64| EvolveOptions {
        lambda,
        eps,
        t_end,
        dt,
        snapshot_every: 1,
    };
    let reference = evolve(init, grid, opts(0.0))?;
    let rows: Vec<Da1Row> = eps_list
        .par_iter()
        .map(|&eps| match evolve(init, grid, opts(eps)) {
            Ok(run) => {
                let (mut ga, mut gv) = (0.0_f64, 0.0_f64);
                for (s, r) in run.snapshots.iter().zip(&reference.snapshots) {
                    for j in 0..grid.n {
                        let da = Complex64::new(s.a1[j] - r.a1[j], s.a2[j] - r.a2[j]).norm();
                        ga = ga.max(da);
                        gv = gv.max((s.v[j] - r.v[j]).abs());
                    }
                }
                Da1Row {
                    eps,
                    amplitude_gap: Some(ga),
                    velocity_gap: Some(gv),
                    error: None,
                }
            }
            Err(e) => Da1Row {
                eps,
                amplitude_gap: None,
                velocity_gap: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    let fit = |sel: fn(&Da1Row) -> Option<f64>| {
        let (e, g): (Vec<f64>, Vec<f64>) = rows.iter().filter_map(|r| sel(r).map(|g| (r.eps, g))).unzip();
        if e.len() >= 2 {
            loglog_slope(&e, &g)
        } else {
            None
        }
    };
    Ok(Da1Table {
        amplitude_slope: fit(|r| r.amplitude_gap),
        velocity_slope: fit(|r| r.velocity_gap),
        rows,
    })
}

/// Density and velocity of an ε = 0 solution sampled on a uniform x-grid at
/// a uniform sequence of times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonokineticTrajectory {
    pub x: Vec<f64>,
    pub times: Vec<f64>,
    pub rho: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub periodic: bool,
}

impl MonokineticTrajectory {
    /// From an ε = 0 run; every snapshot is used.
    pub fn from_wkb(traj: &Trajectory) -> Result<Self> {
        if traj.eps != 0.0 {
            return Err(invalid("traj", "the Vlasov residual needs an eps = 0 trajectory"));
        }
        Ok(MonokineticTrajectory {
            x: traj.snapshots[0].grid.points(),
            times: traj.snapshots.iter().map(|s| s.t).collect(),
            rho: traj.snapshots.iter().map(|s| s.density()).collect(),
            v: traj.snapshots.iter().map(|s| s.v.clone()).collect(),
            periodic: true,
        })
    }

    /// The explicit Gaussian solution sampled at `times` on `x`.
    pub fn gaussian(params: &GaussianParams, x: Vec<f64>, times: Vec<f64>, tol: f64) -> Result<Self> {
        let states: Vec<GammaState> = times
            .par_iter()
            .map(|&t| {
                if t == 0.0 {
                    Ok(GammaState {
                        t,
                        gamma: 1.0,
                        gamma_dot: params.omega0,
                    })
                } else {
                    gamma_at(params, 0.0, t, tol)
                }
            })
            .collect::<Result<_>>()?;
        let (rho, v): (Vec<_>, Vec<_>) = states
            .iter()
            .map(|s| gaussian_euler_fields(s, params).sample(&x))
            .unzip();
        Ok(MonokineticTrajectory {
            x,
            times,
            rho,
            v,
            periodic: false,
        })
    }
}

/// `|∫∫ ρ [∂ₜφ + v ∂ₓφ](t, x, v) − λ (∂ₓρ) ∂ξφ(t, x, v) dx dt|` with a
/// centered-difference `∂ₓρ` and the trapezoid rule in x and t.
pub fn vlasov_residual<O: SpaceTimeObservable + ?Sized>(
    traj: &MonokineticTrajectory,
    phi: &O,
    lambda: f64,
) -> Result<f64> {
    let (nx, nt) = (traj.x.len(), traj.times.len());
    if nx < 3 || nt < 2 {
        return Err(Error::InsufficientData("need at least 3 x-nodes and 2 times".into()));
    }
    let b = phi.support();
    if !traj.periodic {
        b.x.within("x", traj.x[0], traj.x[nx - 1])?;
    }
    phi.time_support().within("t", traj.times[0], traj.times[nt - 1])?;
    let dx = traj.x[1] - traj.x[0];
    let per_time: Vec<f64> = (0..nt)
        .into_par_iter()
        .map(|i| {
            let t = traj.times[i];
            let rho = &traj.rho[i];
            let v = &traj.v[i];
            let drho = centered_difference(rho, dx, traj.periodic);
            let vals: Vec<f64> = (0..nx)
                .map(|j| {
                    let g = phi.gradient(t, traj.x[j], v[j]);
                    rho[j] * (g[0] + v[j] * g[1]) - lambda * drho[j] * g[2]
                })
                .collect();
            if traj.periodic {
                dx * vals.iter().sum::<f64>()
            } else {
                trapezoid(&vals, dx)
            }
        })
        .collect();
    let dt = traj.times[1] - traj.times[0];
    Ok(trapezoid(&per_time, dt).abs())
}

/// The ε = 0 limit measure carried by a fluid state.
pub fn limit_measure(state: &FluidState) -> Result<MonokineticMeasure> {
    MonokineticMeasure::new(state.grid.points(), state.density(), state.v.clone())
}

/// Weak-convergence sweep for WKB data: the Wigner transform of the
/// split-step solution at `t` against the ε = 0 hyperbolic limit.
///
/// The NLS grid uses `nls_points` samples on the periodic domain of `grid`
/// and `dt = ε/8`; the ε = 0 run uses `grid` and `dt_limit`.
pub fn wkb_convergence_sweep<O: Observable + ?Sized>(
    init: &InitialData,
    grid: SpatialGrid,
    lambda: f64,
    eps_list: &[f64],
    t: f64,
    dt_limit: f64,
    nls_points: usize,
    phi: &O,
) -> Result<SweepTable> {
    let limit_run = evolve(
        init,
        grid,
        EvolveOptions {
            lambda,
            eps: 0.0,
            t_end: t,
            dt: dt_limit,
            snapshot_every: usize::MAX,
        },
    )?;
    let limit = limit_measure(limit_run.last())?;
    let nls_grid = SpatialGrid::new(grid.x_min, grid.length, nls_points)?;
    let b = phi.support();
    let pad = 2.0 * nls_grid.dx();
    let x_range = Interval::new(b.x.lo - pad, b.x.hi + pad);
    convergence_sweep(eps_list, phi, &limit, |eps| {
        let u0 = init.wave_field(nls_grid, eps)?;
        let m = (8.0 * t / eps).ceil();
        let u = propagate(&u0, lambda, t, t / m, VACUUM_FLOOR)?.field;
        wigner_transform(
            &u,
            WignerOptions {
                y_window: None,
                x_range: Some(x_range),
            },
        )
    })
}
