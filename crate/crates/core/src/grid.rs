//! Uniform periodic grids and Fourier pseudo-spectral operators.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Uniform periodic grid `x_j = x_min + j * length / n`, `j = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    pub x_min: f64,
    pub length: f64,
    pub n: usize,
}

impl SpatialGrid {
    pub fn new(x_min: f64, length: f64, n: usize) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(invalid("length", format!("must be positive, got {length}")));
        }
        if !x_min.is_finite() {
            return Err(invalid("x_min", "must be finite"));
        }
        if n < 2 || !n.is_power_of_two() {
            return Err(invalid("n", format!("must be a power of two >= 2, got {n}")));
        }
        Ok(SpatialGrid { x_min, length, n })
    }

    /// Grid on `[-half_width, half_width)`.
    pub fn centered(half_width: f64, n: usize) -> Result<Self> {
        Self::new(-half_width, 2.0 * half_width, n)
    }

    /// Smallest power-of-two grid on `[-half_width, half_width)` with spacing
    /// at most `dx_max`.
    pub fn centered_with_spacing(half_width: f64, dx_max: f64) -> Result<Self> {
        if !(dx_max > 0.0) {
            return Err(invalid("dx_max", "must be positive"));
        }
        let n = ((2.0 * half_width / dx_max).ceil() as usize).next_power_of_two().max(2);
        Self::centered(half_width, n)
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.n - 1)
    }

    /// Discrete Fourier wavenumber of mode `j` in FFT ordering.
    pub fn wavenumber(&self, j: usize) -> f64 {
        let n = self.n as i64;
        let m = if (j as i64) < n / 2 { j as i64 } else { j as i64 - n };
        2.0 * PI * m as f64 / self.length
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.wavenumber(j)).collect()
    }

    pub fn max_wavenumber(&self) -> f64 {
        PI * self.n as f64 / self.length
    }
}

/// Cached forward/inverse FFT plans for one grid.
#[derive(Clone)]
pub struct Spectral {
    grid: SpatialGrid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    k: Vec<f64>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

impl Spectral {
    pub fn new(grid: SpatialGrid) -> Self {
        let mut planner = FftPlanner::new();
        Spectral {
            grid,
            forward: planner.plan_fft_forward(grid.n),
            inverse: planner.plan_fft_inverse(grid.n),
            k: grid.wavenumbers(),
        }
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.k
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.forward.process(buf);
    }

    /// Normalized inverse transform.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.inverse.process(buf);
        let s = 1.0 / self.grid.n as f64;
        buf.iter_mut().for_each(|v| *v *= s);
    }

    /// Multiplies the Fourier coefficients of `buf` by `symbol(k)`.
    pub fn apply<F: Fn(f64) -> Complex64>(&self, buf: &mut [Complex64], symbol: F) {
        self.forward(buf);
        for (v, &k) in buf.iter_mut().zip(&self.k) {
            *v *= symbol(k);
        }
        self.inverse(buf);
    }

    /// First and second spectral derivatives of a real periodic signal. The
    /// Nyquist mode is dropped from the first derivative.
    pub fn derivatives(&self, f: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.grid.n;
        let mut hat: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut hat);
        let mut d1 = hat.clone();
        for (j, (a, b)) in d1.iter_mut().zip(hat.iter_mut()).enumerate() {
            let k = self.k[j];
            *a *= if j == n / 2 { Complex64::new(0.0, 0.0) } else { Complex64::new(0.0, k) };
            *b *= -k * k;
        }
        self.inverse(&mut d1);
        self.inverse(&mut hat);
        (d1.iter().map(|c| c.re).collect(), hat.iter().map(|c| c.re).collect())
    }

    pub fn derivative(&self, f: &[f64]) -> Vec<f64> {
        let n = self.grid.n;
        let mut hat: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut hat);
        for (j, a) in hat.iter_mut().enumerate() {
            *a *= if j == n / 2 { Complex64::new(0.0, 0.0) } else { Complex64::new(0.0, self.k[j]) };
        }
        self.inverse(&mut hat);
        hat.iter().map(|c| c.re).collect()
    }

    pub fn second_derivative(&self, f: &[f64]) -> Vec<f64> {
        let mut hat: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut hat);
        for (a, &k) in hat.iter_mut().zip(&self.k) {
            *a *= -k * k;
        }
        self.inverse(&mut hat);
        hat.iter().map(|c| c.re).collect()
    }

    /// Evaluates the trigonometric interpolant of the real samples `f` at an
    /// arbitrary point.
    pub fn interpolate(&self, f: &[f64], x: f64) -> f64 {
        let mut hat: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut hat);
        self.interpolate_from_hat(&hat, x)
    }

    /// Trigonometric interpolant of `f` sampled on a grid `factor` times
    /// finer (zero padding in Fourier space, Nyquist mode split evenly).
    pub fn upsample(&self, f: &[f64], factor: usize) -> Vec<f64> {
        let n = self.grid.n;
        if factor <= 1 {
            return f.to_vec();
        }
        let mut hat: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut hat);
        let big = n * factor;
        let zero = Complex64::new(0.0, 0.0);
        let mut padded = vec![zero; big];
        for j in 0..n {
            if n % 2 == 0 && j == n / 2 {
                padded[j] += 0.5 * hat[j];
                padded[big - j] += 0.5 * hat[j];
            } else if j <= n / 2 {
                padded[j] = hat[j];
            } else {
                padded[big - (n - j)] = hat[j];
            }
        }
        FftPlanner::new().plan_fft_inverse(big).process(&mut padded);
        padded.iter().map(|c| c.re / n as f64).collect()
    }

    pub fn interpolate_from_hat(&self, hat: &[Complex64], x: f64) -> f64 {
        let n = self.grid.n;
        let xr = x - self.grid.x_min;
        let mut acc = 0.0;
        for (j, c) in hat.iter().enumerate() {
            let k = self.k[j];
            let w = if j == n / 2 { 0.5 } else { 1.0 };
            let phase = Complex64::from_polar(1.0, k * xr);
            acc += w * (c * phase).re;
            if j == n / 2 {
                let phase = Complex64::from_polar(1.0, -k * xr);
                acc += w * (c * phase).re;
            }
        }
        acc / n as f64
    }
}

/// Second-order centered difference on a uniform grid. Periodic wrap when
/// `periodic`, otherwise second-order one-sided stencils at the ends.
pub fn centered_difference(f: &[f64], h: f64, periodic: bool) -> Vec<f64> {
    let n = f.len();
    let mut d = vec![0.0; n];
    if n < 3 {
        return d;
    }
    for j in 1..n - 1 {
        d[j] = (f[j + 1] - f[j - 1]) / (2.0 * h);
    }
    if periodic {
        d[0] = (f[1] - f[n - 1]) / (2.0 * h);
        d[n - 1] = (f[0] - f[n - 2]) / (2.0 * h);
    } else {
        d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
        d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(SpatialGrid::new(0.0, 1.0, 100).is_err());
        assert!(SpatialGrid::new(0.0, -1.0, 64).is_err());
        assert!(SpatialGrid::new(0.0, 1.0, 64).is_ok());
    }

    #[test]
    fn upsampling_reproduces_trig_polynomials() {
        let g = SpatialGrid::new(0.0, 2.0 * PI, 16).unwrap();
        let f = |x: f64| 0.3 + (2.0 * x).sin() - 0.7 * (5.0 * x).cos() + 0.2 * (8.0 * x).cos();
        let up = Spectral::new(g).upsample(&g.points().iter().map(|&x| f(x)).collect::<Vec<_>>(), 4);
        let fine = SpatialGrid::new(0.0, 2.0 * PI, 64).unwrap();
        for (j, x) in fine.points().iter().enumerate() {
            // the Nyquist cosine is represented by its symmetric interpolant cos(8x)
            assert!((up[j] - f(*x)).abs() < 1e-13, "{x}");
        }
    }

    #[test]
    fn spectral_derivatives_exact_for_trig() {
        let g = SpatialGrid::new(0.0, 2.0 * PI, 32).unwrap();
        let sp = Spectral::new(g);
        let f: Vec<f64> = g.points().iter().map(|x| (3.0 * x).sin() + (x).cos()).collect();
        let (d1, d2) = sp.derivatives(&f);
        for (j, x) in g.points().iter().enumerate() {
            assert!((d1[j] - (3.0 * (3.0 * x).cos() - x.sin())).abs() < 1e-12);
            assert!((d2[j] - (-9.0 * (3.0 * x).sin() - x.cos())).abs() < 1e-11);
        }
        let xi = 0.123;
        assert!((sp.interpolate(&f, xi) - ((3.0 * xi).sin() + xi.cos())).abs() < 1e-13);
    }

    #[test]
    fn wavenumbers_ordering() {
        let g = SpatialGrid::new(0.0, 2.0 * PI, 8).unwrap();
        let k = g.wavenumbers();
        assert_eq!(k, vec![0.0, 1.0, 2.0, 3.0, -4.0, -3.0, -2.0, -1.0]);
    }
}
