//! Isothermal gas dynamics in mass coordinates (the p-system
//! `τ_t − u_m = 0`, `u_t − τ_m/τ² = 0` with `τ = 1/ρ`), its Riemann
//! invariants `s = u − ln τ`, `r = u + ln τ`, their slopes `α = s_m`,
//! `β = r_m`, and a monitor for the one-sided gradient bound and the
//! resulting density lower bound `ρ(t) ≥ ρ₀*/(1 + Ct)`.
//!
//! Everything is written for unit pressure coefficient; data with λ ≠ 1 are
//! brought to that form by [`unit_lambda`].

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{SpatialGrid, Spectral};

/// `(τ, u)` on a uniform periodic mass grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagrangianState {
    pub mass_grid: SpatialGrid,
    pub tau: Vec<f64>,
    pub u: Vec<f64>,
    pub t: f64,
}

impl LagrangianState {
    pub fn new(mass_grid: SpatialGrid, tau: Vec<f64>, u: Vec<f64>, t: f64) -> Result<Self> {
        if tau.len() != mass_grid.n || u.len() != mass_grid.n {
            return Err(invalid("tau/u", "lengths must match the mass grid"));
        }
        if let Some(j) = tau.iter().position(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(invalid("tau", format!("must be positive and finite, got {} at node {j}", tau[j])));
        }
        Ok(LagrangianState { mass_grid, tau, u, t })
    }

    pub fn total_mass(&self) -> f64 {
        self.mass_grid.length
    }

    pub fn min_density(&self) -> f64 {
        1.0 / self.tau.iter().fold(0.0_f64, |m, &t| m.max(t))
    }
}

/// `∫_{x_min}^{x_j} f` for periodic samples, exact for trigonometric
/// polynomials below the Nyquist mode.
fn cumulative_integral(sp: &Spectral, f: &[f64]) -> Vec<f64> {
    let grid = *sp.grid();
    let n = grid.n;
    let mut hat: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    sp.forward(&mut hat);
    let mean = hat[0].re / n as f64;
    let k = sp.wavenumbers();
    for (j, c) in hat.iter_mut().enumerate() {
        *c = if j == 0 || j == n / 2 { Complex64::new(0.0, 0.0) } else { *c / Complex64::new(0.0, k[j]) };
    }
    sp.inverse(&mut hat);
    let base = hat[0].re;
    (0..n)
        .map(|j| mean * (grid.x(j) - grid.x_min) + hat[j].re - base)
        .collect()
}

/// Monotone piecewise-cubic Hermite interpolant (Fritsch–Carlson slopes with
/// the weighted harmonic mean).
#[derive(Debug, Clone)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 3 || y.len() != n {
            return Err(invalid("x/y", "need at least three samples of equal length"));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("x", "must be strictly increasing"));
        }
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut d = vec![0.0; n];
        for i in 1..n - 1 {
            if delta[i - 1] * delta[i] > 0.0 {
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
        }
        let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
            let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
            if s * d0 <= 0.0 {
                0.0
            } else if d0 * d1 <= 0.0 && s.abs() > 3.0 * d0.abs() {
                3.0 * d0
            } else {
                s
            }
        };
        d[0] = end(h[0], h[1], delta[0], delta[1]);
        d[n - 1] = end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        Ok(Pchip { x, y, d })
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let i = self.x.partition_point(|&v| v <= t).clamp(1, n - 1) - 1;
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.y[i] + h10 * h * self.d[i] + h01 * self.y[i + 1] + h11 * h * self.d[i + 1]
    }
}

/// Periodic extension by one period on each side, so end slopes are interior.
fn periodic_pchip(x: &[f64], y: &[f64], period: f64) -> Result<Pchip> {
    let n = x.len();
    let mut xe = Vec::with_capacity(3 * n);
    let mut ye = Vec::with_capacity(3 * n);
    for shift in [-period, 0.0, period] {
        xe.extend(x.iter().map(|v| v + shift));
        ye.extend_from_slice(y);
    }
    Pchip::new(xe, ye)
}

/// Maps Eulerian `(ρ, v)` on a periodic grid to `(τ, u)` on a uniform mass
/// grid with `n_mass` nodes, with the mass origin at `grid.x_min`.
pub fn to_lagrangian(grid: SpatialGrid, rho: &[f64], v: &[f64], n_mass: usize, t: f64) -> Result<LagrangianState> {
    if rho.len() != grid.n || v.len() != grid.n {
        return Err(invalid("rho/v", "lengths must match the grid"));
    }
    if let Some(j) = rho.iter().position(|&r| !(r > 0.0)) {
        return Err(Error::Vacuum {
            t,
            x: grid.x(j),
            density: rho[j],
        });
    }
    let sp = Spectral::new(grid);
    let m = cumulative_integral(&sp, rho);
    let total = grid.dx() * rho.iter().sum::<f64>();
    let mass_grid = SpatialGrid::new(0.0, total, n_mass)?;
    let tau: Vec<f64> = rho.iter().map(|r| 1.0 / r).collect();
    let tau_i = periodic_pchip(&m, &tau, total)?;
    let u_i = periodic_pchip(&m, v, total)?;
    let nodes = mass_grid.points();
    LagrangianState::new(
        mass_grid,
        nodes.iter().map(|&mk| tau_i.eval(mk)).collect(),
        nodes.iter().map(|&mk| u_i.eval(mk)).collect(),
        t,
    )
}

/// Inverse map: `x(m) = x_origin + ∫₀ᵐ τ`, then `(ρ, v)` resampled onto
/// `grid` by the same monotone interpolation.
pub fn to_eulerian(state: &LagrangianState, grid: SpatialGrid, x_origin: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let sp = Spectral::new(state.mass_grid);
    let x: Vec<f64> = cumulative_integral(&sp, &state.tau)
        .into_iter()
        .map(|c| x_origin + c)
        .collect();
    let rho: Vec<f64> = state.tau.iter().map(|t| 1.0 / t).collect();
    let rho_i = periodic_pchip(&x, &rho, grid.length)?;
    let u_i = periodic_pchip(&x, &state.u, grid.length)?;
    let pts = grid.points();
    Ok((pts.iter().map(|&p| rho_i.eval(p)).collect(), pts.iter().map(|&p| u_i.eval(p)).collect()))
}

/// Velocity and time scaling that turns pressure `λρ` into pressure `ρ`:
/// `u' = u/√λ`, `t' = √λ t`.
pub fn unit_lambda(state: &LagrangianState, lambda: f64) -> Result<LagrangianState> {
    if !(lambda > 0.0) {
        return Err(invalid("lambda", format!("must be positive, got {lambda}")));
    }
    let c = lambda.sqrt();
    Ok(LagrangianState {
        mass_grid: state.mass_grid,
        tau: state.tau.clone(),
        u: state.u.iter().map(|u| u / c).collect(),
        t: state.t * c,
    })
}

/// Riemann invariants and their mass-coordinate slopes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiemannFields {
    pub s: Vec<f64>,
    pub r: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl RiemannFields {
    /// `u = (s + r)/2`, `τ = e^{(r − s)/2}`.
    pub fn reconstruct(&self) -> (Vec<f64>, Vec<f64>) {
        let u = self.s.iter().zip(&self.r).map(|(s, r)| 0.5 * (s + r)).collect();
        let tau = self.s.iter().zip(&self.r).map(|(s, r)| (0.5 * (r - s)).exp()).collect();
        (u, tau)
    }

    /// `sup (α, β)` (signed, not absolute).
    pub fn sup(&self) -> f64 {
        self.alpha.iter().chain(&self.beta).fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }

    /// `sup (α, β)` of the trigonometric interpolants, sampled on a grid
    /// `factor` times finer than the nodes.
    pub fn refined_sup(&self, sp: &Spectral, factor: usize) -> f64 {
        sp.upsample(&self.alpha, factor)
            .into_iter()
            .chain(sp.upsample(&self.beta, factor))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sup_abs(&self) -> f64 {
        self.alpha.iter().chain(&self.beta).fold(0.0, |m, &v| m.max(v.abs()))
    }
}

pub fn riemann_fields(state: &LagrangianState) -> RiemannFields {
    riemann_fields_with(&Spectral::new(state.mass_grid), state)
}

fn riemann_fields_with(sp: &Spectral, state: &LagrangianState) -> RiemannFields {
    let s: Vec<f64> = state.u.iter().zip(&state.tau).map(|(u, t)| u - t.ln()).collect();
    let r: Vec<f64> = state.u.iter().zip(&state.tau).map(|(u, t)| u + t.ln()).collect();
    let alpha = sp.derivative(&s);
    let beta = sp.derivative(&r);
    RiemannFields { s, r, alpha, beta }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagrangianTrajectory {
    pub dt: f64,
    pub snapshots: Vec<LagrangianState>,
}

/// Largest stable RK4 step for wave speed `1/τ`, with a safety factor 0.5.
pub fn lagrangian_stable_dt(state: &LagrangianState) -> f64 {
    let speed = state.tau.iter().fold(0.0_f64, |m, &t| m.max(1.0 / t));
    0.5 * 2.8 / (speed * state.mass_grid.max_wavenumber())
}

/// Classical RK4 with spectral `∂_m`. Stops when τ leaves `(0, ∞)` or when
/// `sup(|α|, |β|)` exceeds 10³ times its initial value.
pub fn evolve_lagrangian(
    state: &LagrangianState,
    t_end: f64,
    dt: f64,
    snapshot_every: usize,
) -> Result<LagrangianTrajectory> {
    if !(dt > 0.0 && t_end > 0.0) {
        return Err(invalid("dt", "dt and t_end must be positive"));
    }
    if snapshot_every == 0 {
        return Err(invalid("snapshot_every", "must be at least 1"));
    }
    let steps = (t_end / dt - 1e-9).ceil().max(1.0) as usize;
    let dt = t_end / steps as f64;
    let sp = Spectral::new(state.mass_grid);
    let n = state.mass_grid.n;
    let m0 = riemann_fields_with(&sp, state).sup_abs();
    let limit = 1e3 * m0;
    let rhs = |tau: &[f64], u: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let du = sp.derivative(u);
        let dtau = sp.derivative(tau);
        (du, (0..n).map(|j| dtau[j] / (tau[j] * tau[j])).collect())
    };
    let t0 = state.t;
    let mut cur = state.clone();
    let mut snapshots = vec![cur.clone()];
    for step in 0..steps {
        let (k1t, k1u) = rhs(&cur.tau, &cur.u);
        let stage = |kt: &[f64], ku: &[f64], c: f64| -> (Vec<f64>, Vec<f64>) {
            (
                (0..n).map(|j| cur.tau[j] + c * dt * kt[j]).collect(),
                (0..n).map(|j| cur.u[j] + c * dt * ku[j]).collect(),
            )
        };
        let (t2, u2) = stage(&k1t, &k1u, 0.5);
        let (k2t, k2u) = rhs(&t2, &u2);
        let (t3, u3) = stage(&k2t, &k2u, 0.5);
        let (k3t, k3u) = rhs(&t3, &u3);
        let (t4, u4) = stage(&k3t, &k3u, 1.0);
        let (k4t, k4u) = rhs(&t4, &u4);
        for j in 0..n {
            cur.tau[j] += dt / 6.0 * (k1t[j] + 2.0 * k2t[j] + 2.0 * k3t[j] + k4t[j]);
            cur.u[j] += dt / 6.0 * (k1u[j] + 2.0 * k2u[j] + 2.0 * k3u[j] + k4u[j]);
        }
        cur.t = t0 + (step + 1) as f64 * dt;
        if cur.tau.iter().chain(&cur.u).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                t: cur.t,
                context: "Lagrangian state".into(),
            });
        }
        if let Some(j) = cur.tau.iter().position(|&t| !(t > 0.0)) {
            return Err(Error::Domain(format!(
                "specific volume left (0, inf) at t = {}: tau = {} at node {j}",
                cur.t, cur.tau[j]
            )));
        }
        if m0 > 0.0 {
            let sup = riemann_fields_with(&sp, &cur).sup_abs();
            if sup > limit {
                return Err(Error::GradientBlowUp { t: cur.t, sup, limit });
            }
        }
        if (step + 1) % snapshot_every == 0 || step + 1 == steps {
            snapshots.push(cur.clone());
        }
    }
    Ok(LagrangianTrajectory { dt, snapshots })
}

/// Sup-norm residuals of `∂₊s` and `∂₋r`, with `∂± = ∂ₜ ± τ⁻¹∂_m`, using
/// centered time differences over interior snapshots (uniform spacing
/// required).
pub fn riemann_transport_residual(traj: &LagrangianTrajectory) -> Result<(f64, f64)> {
    let snaps = &traj.snapshots;
    if snaps.len() < 3 {
        return Err(Error::InsufficientData("transport residual needs at least three snapshots".into()));
    }
    let h = snaps[1].t - snaps[0].t;
    if snaps.windows(2).any(|w| ((w[1].t - w[0].t) - h).abs() > 1e-9 * h.max(1.0)) {
        return Err(Error::InsufficientData("snapshots must be uniformly spaced in time".into()));
    }
    let sp = Spectral::new(snaps[0].mass_grid);
    let fields: Vec<RiemannFields> = snaps.iter().map(|s| riemann_fields_with(&sp, s)).collect();
    let (mut rs, mut rr) = (0.0_f64, 0.0_f64);
    for i in 1..snaps.len() - 1 {
        let tau = &snaps[i].tau;
        for j in 0..tau.len() {
            let st = (fields[i + 1].s[j] - fields[i - 1].s[j]) / (2.0 * h);
            let rt = (fields[i + 1].r[j] - fields[i - 1].r[j]) / (2.0 * h);
            rs = rs.max((st + fields[i].alpha[j] / tau[j]).abs());
            rr = rr.max((rt - fields[i].beta[j] / tau[j]).abs());
        }
    }
    Ok((rs, rr))
}

/// Outcome of [`bound_monitor`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    /// `sup_m (α, β)` at the first snapshot (over the refined interpolant).
    #[serde(rename = "M")]
    pub m_bound: f64,
    /// `sup_{t,m} (α, β)` over all snapshots.
    pub sup_alpha_beta: f64,
    /// `sup_alpha_beta ≤ M + 1e-6`.
    pub sup_ok: bool,
    /// Largest `(τ(t,m) − τ(0,m))/t` over nodes and snapshots.
    pub tau_growth_rate: f64,
    /// `τ(t,m) ≤ τ(0,m) + (M + 1e-6) t` at every node and snapshot.
    pub tau_linear_ok: bool,
    /// Smallest `C ≥ 0` with `min ρ(t) ≥ ρ₀*/(1 + Ct)` at every snapshot.
    #[serde(rename = "C_fit")]
    pub c_fit: f64,
    /// `M ρ₀*`, the constant implied by the linear growth of τ.
    pub c_candidate: f64,
    /// The lower bound with `c_candidate` holds at every snapshot.
    pub candidate_ok: bool,
    /// `min ρ(t)` per snapshot.
    pub min_density: Vec<f64>,
    pub times: Vec<f64>,
    /// Last snapshot time.
    pub horizon: f64,
}

/// Suprema are taken over the spectral interpolant on a grid this many
/// times finer, so a peak drifting between nodes is not mistaken for growth.
const SUP_REFINEMENT: usize = 8;

pub fn bound_monitor(traj: &LagrangianTrajectory, rho0_star: f64) -> Result<BoundReport> {
    let snaps = &traj.snapshots;
    if snaps.is_empty() {
        return Err(Error::InsufficientData("empty trajectory".into()));
    }
    if !(rho0_star > 0.0) {
        return Err(invalid("rho0_star", "must be positive"));
    }
    let sp = Spectral::new(snaps[0].mass_grid);
    let t0 = snaps[0].t;
    let m = riemann_fields_with(&sp, &snaps[0]).refined_sup(&sp, SUP_REFINEMENT);
    let mut sup = m;
    let mut rate: f64 = 0.0;
    let mut tau_ok = true;
    let mut c_fit: f64 = 0.0;
    let c_candidate = m.max(0.0) * rho0_star;
    let mut candidate_ok = true;
    let mut min_density = Vec::with_capacity(snaps.len());
    let mut times = Vec::with_capacity(snaps.len());
    for s in snaps {
        let dt = s.t - t0;
        sup = sup.max(riemann_fields_with(&sp, s).refined_sup(&sp, SUP_REFINEMENT));
        let rho_min = s.min_density();
        min_density.push(rho_min);
        times.push(s.t);
        if dt > 0.0 {
            for (a, b) in s.tau.iter().zip(&snaps[0].tau) {
                rate = rate.max((a - b) / dt);
                if *a > b + (m + 1e-6) * dt + 1e-12 {
                    tau_ok = false;
                }
            }
            c_fit = c_fit.max((rho0_star / rho_min - 1.0) / dt);
        }
        if rho_min * (1.0 + c_candidate * dt) < rho0_star * (1.0 - 1e-6) {
            candidate_ok = false;
        }
    }
    Ok(BoundReport {
        m_bound: m,
        sup_alpha_beta: sup,
        sup_ok: sup <= m + 1e-6,
        tau_growth_rate: rate,
        tau_linear_ok: tau_ok,
        c_fit,
        c_candidate,
        candidate_ok,
        min_density,
        times,
        horizon: snaps.last().unwrap().t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn pchip_is_exact_on_lines_and_monotone() {
        let x: Vec<f64> = (0..10).map(|i| i as f64 * 0.3).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v - 1.0).collect();
        let p = Pchip::new(x, y).unwrap();
        assert!((p.eval(1.234) - (2.0 * 1.234 - 1.0)).abs() < 1e-14);
        let step = Pchip::new(vec![0.0, 1.0, 2.0, 3.0], vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        let mut prev = -1.0;
        for i in 0..=300 {
            let v = step.eval(i as f64 * 0.01);
            assert!(v >= prev - 1e-15 && (-1e-15..=1.0 + 1e-15).contains(&v));
            prev = v;
        }
    }

    #[test]
    fn cumulative_integral_of_trig() {
        let g = SpatialGrid::new(0.0, 2.0 * PI, 32).unwrap();
        let sp = Spectral::new(g);
        let f: Vec<f64> = g.points().iter().map(|x| 1.5 + x.cos()).collect();
        let c = cumulative_integral(&sp, &f);
        for (j, x) in g.points().iter().enumerate() {
            assert!((c[j] - (1.5 * x + x.sin())).abs() < 1e-13);
        }
    }

    #[test]
    fn constant_state_maps_and_stays() {
        let g = SpatialGrid::new(0.0, 2.0 * PI, 32).unwrap();
        let st = to_lagrangian(g, &[2.0; 32], &[0.3; 32], 32, 0.0).unwrap();
        assert!((st.total_mass() - 4.0 * PI).abs() < 1e-12);
        assert!(st.tau.iter().all(|t| (t - 0.5).abs() < 1e-14));
        assert!(st.u.iter().all(|u| (u - 0.3).abs() < 1e-14));
        let rf = riemann_fields(&st);
        assert!(rf.alpha.iter().chain(&rf.beta).all(|v| v.abs() < 1e-13));
        let traj = evolve_lagrangian(&st, 1.0, 0.01, 10).unwrap();
        assert!(traj.snapshots.iter().all(|s| s.tau.iter().all(|t| (t - 0.5).abs() < 1e-14)));
        let rep = bound_monitor(&traj, 2.0).unwrap();
        assert!(rep.m_bound.abs() < 1e-13 && rep.c_fit.abs() < 1e-12 && rep.sup_ok && rep.tau_linear_ok);
        let (rs, rr) = riemann_transport_residual(&traj).unwrap();
        assert!(rs < 1e-12 && rr < 1e-12);
    }

    #[test]
    fn riemann_slopes_closed_form() {
        let g = SpatialGrid::new(0.0, 2.0 * PI, 64).unwrap();
        let m = g.points();
        let st = LagrangianState::new(g, m.iter().map(|x| (0.1 * x.cos()).exp()).collect(), vec![0.0; 64], 0.0).unwrap();
        let rf = riemann_fields(&st);
        for (j, x) in m.iter().enumerate() {
            assert!((rf.alpha[j] - 0.1 * x.sin()).abs() < 1e-10);
            assert!((rf.beta[j] + 0.1 * x.sin()).abs() < 1e-10);
        }
        let (u, tau) = rf.reconstruct();
        for j in 0..64 {
            assert!(u[j].abs() < 1e-15 && (tau[j] - st.tau[j]).abs() < 1e-15 * st.tau[j].max(1.0) * 4.0);
        }
    }

    #[test]
    fn rescaling_velocity_and_time() {
        let g = SpatialGrid::new(0.0, 1.0, 4).unwrap();
        let st = LagrangianState::new(g, vec![1.0; 4], vec![2.0; 4], 3.0).unwrap();
        let r = unit_lambda(&st, 4.0).unwrap();
        assert_eq!(r.u, vec![1.0; 4]);
        assert_eq!(r.t, 6.0);
        assert!(unit_lambda(&st, 0.0).is_err());
    }

    #[test]
    fn vacuum_rejected() {
        let g = SpatialGrid::new(0.0, 1.0, 4).unwrap();
        assert!(matches!(
            to_lagrangian(g, &[1.0, 0.0, 1.0, 1.0], &[0.0; 4], 4, 0.0),
            Err(Error::Vacuum { .. })
        ));
    }
}
