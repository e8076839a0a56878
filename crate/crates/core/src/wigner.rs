//! Wigner transforms and weak pairings against the monokinetic limit.
//!
//! The transform follows the unnormalized convention
//! `W(x,ξ) = ∫ e^{iyξ} u(x − εy/2) conj(u(x + εy/2)) dy`, so `∫W dξ = 2π|u|²`.
//! [`pair`] divides by 2π so that it tests the probability-normalized
//! measure `W/(2π)`, which is the one converging to `ρ dx ⊗ δ(ξ − v(x))`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::convergence::loglog_slope;
use crate::error::{invalid, Error, Result};
use crate::gaussian::{gamma_at, gaussian_euler_fields, GaussianParams};
use crate::nls::{gaussian_ansatz_oracle, gaussian_domain, propagate, WaveField, VACUUM_FLOOR};
use crate::observable::{Interval, Observable};
use crate::quadrature::trapezoid;

/// Exponent for truncating Gaussian tails: `e^{-36.84} ≈ 1e-16`.
const TAIL_DECAY: f64 = 36.841_361_487_904_734;

/// Samples `W(xᵢ, ξₖ)` stored row-major (`values[i * xi.len() + k]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpaceField {
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
    pub values: Vec<f64>,
    pub eps: f64,
}

impl PhaseSpaceField {
    pub fn at(&self, i: usize, k: usize) -> f64 {
        self.values[i * self.xi.len() + k]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let m = self.xi.len();
        &self.values[i * m..(i + 1) * m]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn step(axis: &[f64]) -> f64 {
        if axis.len() > 1 {
            axis[1] - axis[0]
        } else {
            1.0
        }
    }

    pub fn dxi(&self) -> f64 {
        Self::step(&self.xi)
    }

    pub fn dx(&self) -> f64 {
        Self::step(&self.x)
    }

    /// `∫W(x,ξ) dξ / 2π` at every x node.
    pub fn marginal(&self) -> Vec<f64> {
        let s = self.dxi() / (2.0 * PI);
        (0..self.x.len()).map(|i| s * self.row(i).iter().sum::<f64>()).collect()
    }

    /// `∫∫ W dx dξ / 2π`.
    pub fn total_mass(&self) -> f64 {
        trapezoid(&self.marginal(), self.dx())
    }
}

/// Options for [`wigner_transform`].
#[derive(Debug, Clone, Copy, Default)]
pub struct WignerOptions {
    /// Full width of the y-window. `None` uses every shift the periodic grid
    /// offers.
    pub y_window: Option<f64>,
    /// Restricts the output to grid columns inside this interval.
    pub x_range: Option<Interval>,
}

/// Discrete Wigner transform of a periodic field.
///
/// Shifts are multiples of the grid spacing, so `y_m = 2m·dx/ε`; for `M`
/// shifts the induced velocity grid is `ξ_k = 2πk/(M Δy)`, `k = −M/2..M/2`.
pub fn wigner_transform(field: &WaveField, opts: WignerOptions) -> Result<PhaseSpaceField> {
    let grid = field.grid;
    let n = grid.n;
    let dx = grid.dx();
    let eps = field.eps;
    let dy = 2.0 * dx / eps;
    let shifts = match opts.y_window {
        None => n,
        Some(w) => {
            if !(w > 0.0) {
                return Err(invalid("y_window", format!("must be positive, got {w}")));
            }
            ((w / dy).ceil() as usize).next_power_of_two().clamp(2, n)
        }
    };
    let columns: Vec<usize> = match opts.x_range {
        None => (0..n).collect(),
        Some(r) => (0..n).filter(|&j| r.contains(grid.x(j))).collect(),
    };
    if columns.is_empty() {
        return Err(invalid("x_range", "contains no grid points"));
    }
    let m = shifts;
    let half = (m / 2) as i64;
    let fft = FftPlanner::new().plan_fft_inverse(m);
    let u = &field.values;
    let wrap = |j: i64| j.rem_euclid(n as i64) as usize;

    let rows: Vec<(Vec<f64>, f64, f64)> = columns
        .par_iter()
        .map(|&i| {
            let mut buf = vec![Complex64::new(0.0, 0.0); m];
            for s in -half..half {
                let f = u[wrap(i as i64 - s)] * u[wrap(i as i64 + s)].conj();
                buf[s.rem_euclid(m as i64) as usize] = f * dy;
            }
            fft.process(&mut buf);
            // fftshift: slot k ↦ ξ index k + M/2
            let mut row = vec![0.0; m];
            let mut residue: f64 = 0.0;
            let mut peak: f64 = 0.0;
            for (k, c) in buf.iter().enumerate() {
                let idx = (k + m / 2) % m;
                row[idx] = c.re;
                residue = residue.max(c.im.abs());
                peak = peak.max(c.re.abs());
            }
            (row, residue, peak)
        })
        .collect();

    let residue = rows.iter().fold(0.0_f64, |a, r| a.max(r.1));
    let peak = rows.iter().fold(0.0_f64, |a, r| a.max(r.2));
    if residue > 1e-8 * peak {
        return Err(Error::NotReal { residue, max: peak });
    }
    let dxi = 2.0 * PI / (m as f64 * dy);
    Ok(PhaseSpaceField {
        x: columns.iter().map(|&j| grid.x(j)).collect(),
        xi: (0..m).map(|k| (k as f64 - (m / 2) as f64) * dxi).collect(),
        values: rows.into_iter().flat_map(|r| r.0).collect(),
        eps,
    })
}

/// Closed-form Wigner transform of the Gaussian solution at time `t`:
///
/// `(ρ*/γ) e^{−σ₀z²/γ²} · (2γ/ε)√(π/σ₀) · exp(−γ²(ξ − (γ'/γ)z − p₀)²/(σ₀ε²))`,
/// `z = x − p₀t`, with γ = γ^ε(t).
pub fn gaussian_wigner_exact(
    params: &GaussianParams,
    eps: f64,
    t: f64,
    x: &[f64],
    xi: &[f64],
    tol: f64,
) -> Result<PhaseSpaceField> {
    if !(eps > 0.0) {
        return Err(invalid("eps", format!("must be positive, got {eps}")));
    }
    let st = gamma_at(params, eps, t, tol)?;
    let (g, gd) = (st.gamma, st.gamma_dot);
    let s0 = params.sigma0;
    let width = 2.0 * g / eps * (PI / s0).sqrt();
    let mut values = Vec::with_capacity(x.len() * xi.len());
    for &xv in x {
        let z = xv - params.p0 * t;
        let rho = params.rho_star / g * (-s0 * z * z / (g * g)).exp();
        let ridge = gd / g * z + params.p0;
        for &k in xi {
            let d = k - ridge;
            values.push(rho * width * (-(g * g) * d * d / (s0 * eps * eps)).exp());
        }
    }
    Ok(PhaseSpaceField {
        x: x.to_vec(),
        xi: xi.to_vec(),
        values,
        eps,
    })
}

/// `(1/2π) ∫∫ W φ dx dξ` by the tensor trapezoid rule.
pub fn pair<O: Observable + ?Sized>(w: &PhaseSpaceField, phi: &O) -> Result<f64> {
    let (nx, nxi) = (w.x.len(), w.xi.len());
    if nx < 2 || nxi < 2 {
        return Err(Error::InsufficientData("pairing needs at least a 2x2 grid".into()));
    }
    let b = phi.support();
    b.x.within("x", w.x[0], w.x[nx - 1])?;
    b.xi.within("xi", w.xi[0], w.xi[nxi - 1])?;
    let xi_lo = w.xi.partition_point(|&v| v < b.xi.lo);
    let xi_hi = w.xi.partition_point(|&v| v <= b.xi.hi);
    let edge = |j: usize, n: usize| if j == 0 || j + 1 == n { 0.5 } else { 1.0 };
    let sum: f64 = (0..nx)
        .into_par_iter()
        .filter(|&i| b.x.contains(w.x[i]))
        .map(|i| {
            let row = w.row(i);
            let mut s = 0.0;
            for k in xi_lo..xi_hi {
                s += edge(k, nxi) * row[k] * phi.value(w.x[i], w.xi[k]);
            }
            edge(i, nx) * s
        })
        .sum();
    Ok(sum * w.dx() * w.dxi() / (2.0 * PI))
}

/// The measure `ρ(x) dx ⊗ δ(ξ − v(x))` sampled on a uniform x-grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonokineticMeasure {
    pub x: Vec<f64>,
    pub rho: Vec<f64>,
    pub v: Vec<f64>,
}

impl MonokineticMeasure {
    pub fn new(x: Vec<f64>, rho: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if x.len() != rho.len() || x.len() != v.len() {
            return Err(invalid("rho/v", "lengths must match the x-grid"));
        }
        if x.len() < 2 {
            return Err(Error::InsufficientData("measure needs at least two nodes".into()));
        }
        if rho.iter().any(|&r| !(r >= 0.0)) {
            return Err(invalid("rho", "must be nonnegative"));
        }
        Ok(MonokineticMeasure { x, rho, v })
    }

    /// Limit measure of the explicit ε = 0 Gaussian solution at time `t`.
    pub fn gaussian(params: &GaussianParams, t: f64, x: Vec<f64>, tol: f64) -> Result<Self> {
        let st = if t == 0.0 {
            crate::gaussian::GammaState {
                t: 0.0,
                gamma: 1.0,
                gamma_dot: params.omega0,
            }
        } else {
            gamma_at(params, 0.0, t, tol)?
        };
        let (rho, v) = gaussian_euler_fields(&st, params).sample(&x);
        Self::new(x, rho, v)
    }

    pub fn mass(&self) -> f64 {
        trapezoid(&self.rho, self.x[1] - self.x[0])
    }
}

/// `∫ ρ(x) φ(x, v(x)) dx` by the trapezoid rule.
pub fn monokinetic_pair<O: Observable + ?Sized>(mu: &MonokineticMeasure, phi: &O) -> Result<f64> {
    let n = mu.x.len();
    phi.support().x.within("x", mu.x[0], mu.x[n - 1])?;
    let vals: Vec<f64> = (0..n).map(|i| mu.rho[i] * phi.value(mu.x[i], mu.v[i])).collect();
    Ok(trapezoid(&vals, mu.x[1] - mu.x[0]))
}

/// One line of a convergence sweep; failed entries keep their message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub eps: f64,
    pub gap: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Least-squares log-log slope of gap against ε over successful rows.
    pub slope: Option<f64>,
}

impl SweepTable {
    /// Fits the log-log slope over the successful rows.
    pub fn from_rows(rows: Vec<SweepRow>) -> Self {
        let (es, gs): (Vec<f64>, Vec<f64>) = rows.iter().filter_map(|r| r.gap.map(|g| (r.eps, g))).unzip();
        let slope = if es.len() >= 2 { loglog_slope(&es, &gs) } else { None };
        SweepTable { rows, slope }
    }

    pub fn gaps(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.gap).collect()
    }

    pub fn monotone(&self) -> bool {
        self.rows.iter().all(|r| r.gap.is_some()) && crate::convergence::strictly_decreasing(&self.gaps())
    }
}

fn check_eps_list(eps_list: &[f64]) -> Result<()> {
    if eps_list.len() < 3 {
        return Err(invalid("eps_list", "needs at least three entries"));
    }
    if eps_list.iter().any(|&e| !(e > 0.0)) || eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("eps_list", "must be positive and strictly decreasing"));
    }
    Ok(())
}

/// Pairing gap `|pair(W^ε, φ) − ⟨μ, φ⟩|` for each ε, without requirements on
/// the list. Entries run in parallel; per-ε failures are recorded in the row.
pub fn pairing_gaps<O, F>(eps_list: &[f64], phi: &O, limit: &MonokineticMeasure, build: F) -> Result<Vec<SweepRow>>
where
    O: Observable + ?Sized,
    F: Fn(f64) -> Result<PhaseSpaceField> + Sync,
{
    let reference = monokinetic_pair(limit, phi)?;
    Ok(eps_list
        .par_iter()
        .map(|&eps| match build(eps).and_then(|w| pair(&w, phi)) {
            Ok(v) => SweepRow {
                eps,
                gap: Some((v - reference).abs()),
                error: None,
            },
            Err(e) => SweepRow {
                eps,
                gap: None,
                error: Some(e.to_string()),
            },
        })
        .collect())
}

/// Convergence sweep over at least three strictly decreasing ε values, with
/// `build` producing the Wigner field.
pub fn convergence_sweep<O, F>(eps_list: &[f64], phi: &O, limit: &MonokineticMeasure, build: F) -> Result<SweepTable>
where
    O: Observable + ?Sized,
    F: Fn(f64) -> Result<PhaseSpaceField> + Sync,
{
    check_eps_list(eps_list)?;
    Ok(SweepTable::from_rows(pairing_gaps(eps_list, phi, limit, build)?))
}

/// How the ε-field is obtained in Gaussian sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldSource {
    /// Sample the Gaussian ansatz at time t.
    Oracle,
    /// Split-step propagation with `dt = dt_ratio · ε`.
    Numeric { dt_ratio: f64 },
}

/// Full y-window outside which the product of shifted Gaussians at time `t`
/// is below `1e-16` of its peak.
pub fn gaussian_y_window(params: &GaussianParams, eps: f64, t: f64, tol: f64) -> Result<f64> {
    let g = gamma_at(params, eps, t, tol)?.gamma.max(1.0);
    let s = g * (TAIL_DECAY / params.sigma0).sqrt();
    Ok(4.0 * s / eps)
}

/// Wigner transform of the ε-field of the Gaussian problem at time `t`,
/// restricted to the columns in `x_range`.
pub fn gaussian_wigner_field(
    params: &GaussianParams,
    eps: f64,
    t: f64,
    source: FieldSource,
    x_range: Interval,
    tol: f64,
) -> Result<PhaseSpaceField> {
    let grid = gaussian_domain(params, eps, t, tol)?;
    let u = match source {
        FieldSource::Oracle => gaussian_ansatz_oracle(params, eps, t, tol)?.sample(grid)?,
        FieldSource::Numeric { dt_ratio } => {
            let u0 = gaussian_ansatz_oracle(params, eps, 0.0, tol)?.sample(grid)?;
            let m = (t / (dt_ratio * eps)).ceil().max(1.0);
            propagate(&u0, params.lambda, t, t / m, VACUUM_FLOOR)?.field
        }
    };
    let opts = WignerOptions {
        y_window: Some(gaussian_y_window(params, eps, t, tol)?),
        x_range: Some(x_range),
    };
    wigner_transform(&u, opts)
}

/// Pairing gaps for Gaussian data against the explicit ε = 0 monokinetic
/// measure, for any list of ε.
pub fn gaussian_pairing_gaps<O: Observable + ?Sized>(
    params: &GaussianParams,
    eps_list: &[f64],
    t: f64,
    phi: &O,
    source: FieldSource,
    tol: f64,
) -> Result<Vec<SweepRow>> {
    let b = phi.support();
    let pad = 0.05 * (b.x.hi - b.x.lo);
    let x_range = Interval::new(b.x.lo - pad, b.x.hi + pad);
    let nodes = 4001;
    let xs: Vec<f64> = (0..nodes)
        .map(|j| b.x.lo + (b.x.hi - b.x.lo) * j as f64 / (nodes - 1) as f64)
        .collect();
    let limit = MonokineticMeasure::gaussian(params, t, xs, tol)?;
    pairing_gaps(eps_list, phi, &limit, |eps| {
        gaussian_wigner_field(params, eps, t, source, x_range, tol)
    })
}

/// Weak-convergence sweep for Gaussian data against the explicit ε = 0
/// monokinetic measure.
pub fn gaussian_convergence_sweep<O: Observable + ?Sized>(
    params: &GaussianParams,
    eps_list: &[f64],
    t: f64,
    phi: &O,
    source: FieldSource,
    tol: f64,
) -> Result<SweepTable> {
    check_eps_list(eps_list)?;
    Ok(SweepTable::from_rows(gaussian_pairing_gaps(params, eps_list, t, phi, source, tol)?))
}
