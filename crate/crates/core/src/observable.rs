//! Compactly supported test functions on phase space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn around(center: f64, half_width: f64) -> Self {
        Interval {
            lo: center - half_width,
            hi: center + half_width,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    /// Checks that this interval lies inside `[lo, hi]`.
    pub fn within(&self, what: &'static str, lo: f64, hi: f64) -> Result<()> {
        if self.lo < lo || self.hi > hi {
            return Err(Error::Support {
                what,
                lo: self.lo,
                hi: self.hi,
                grid_lo: lo,
                grid_hi: hi,
            });
        }
        Ok(())
    }
}

/// Support box of a phase-space observable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportBox {
    pub x: Interval,
    pub xi: Interval,
}

/// A test function `φ(x, ξ)` vanishing outside its support box.
pub trait Observable: Sync {
    fn value(&self, x: f64, xi: f64) -> f64;
    fn support(&self) -> SupportBox;
}

/// A time-dependent test function `φ(t, x, ξ)` with its gradient.
pub trait SpaceTimeObservable: Sync {
    fn value(&self, t: f64, x: f64, xi: f64) -> f64;
    /// `(∂ₜφ, ∂ₓφ, ∂ξφ)`.
    fn gradient(&self, t: f64, x: f64, xi: f64) -> [f64; 3];
    fn time_support(&self) -> Interval;
    fn support(&self) -> SupportBox;
}

/// Verifies that `obs` vanishes (to 1e-12) along the boundary of its
/// declared support box.
pub fn check_support<O: Observable + ?Sized>(obs: &O) -> Result<()> {
    let b = obs.support();
    let samples = 64;
    let mut worst: f64 = 0.0;
    for i in 0..=samples {
        let s = i as f64 / samples as f64;
        let x = b.x.lo + s * (b.x.hi - b.x.lo);
        let xi = b.xi.lo + s * (b.xi.hi - b.xi.lo);
        worst = worst
            .max(obs.value(x, b.xi.lo).abs())
            .max(obs.value(x, b.xi.hi).abs())
            .max(obs.value(b.x.lo, xi).abs())
            .max(obs.value(b.x.hi, xi).abs());
    }
    if worst > 1e-12 {
        return Err(Error::Domain(format!(
            "observable does not vanish on its support boundary (max |phi| = {worst:e})"
        )));
    }
    Ok(())
}

/// Smooth bump `exp(1 − 1/(1 − s²))` on `|s| < 1`, equal to 1 at the origin.
pub fn bump(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    }
}

pub fn bump_derivative(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        let d = 1.0 - s * s;
        bump(s) * (-2.0 * s / (d * d))
    }
}

/// Product of smooth bumps in x and ξ, scaled by `amplitude`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TensorBump {
    pub x: Interval,
    pub xi: Interval,
    pub amplitude: f64,
}

impl TensorBump {
    pub fn new(x: Interval, xi: Interval) -> Self {
        TensorBump { x, xi, amplitude: 1.0 }
    }

    pub fn scaled(self, factor: f64) -> Self {
        TensorBump {
            amplitude: self.amplitude * factor,
            ..self
        }
    }
}

fn local(iv: &Interval, x: f64) -> (f64, f64) {
    let half = 0.5 * (iv.hi - iv.lo);
    let c = 0.5 * (iv.hi + iv.lo);
    ((x - c) / half, 1.0 / half)
}

impl Observable for TensorBump {
    fn value(&self, x: f64, xi: f64) -> f64 {
        let (sx, _) = local(&self.x, x);
        let (sv, _) = local(&self.xi, xi);
        self.amplitude * bump(sx) * bump(sv)
    }

    fn support(&self) -> SupportBox {
        SupportBox { x: self.x, xi: self.xi }
    }
}

/// Observable defined by a closure with a declared support box.
pub struct FnObservable<F> {
    pub f: F,
    pub support: SupportBox,
}

impl<F: Fn(f64, f64) -> f64 + Sync> Observable for FnObservable<F> {
    fn value(&self, x: f64, xi: f64) -> f64 {
        (self.f)(x, xi)
    }

    fn support(&self) -> SupportBox {
        self.support
    }
}

/// Space-time tensor bump `A b(t) b(x) b(ξ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeBump {
    pub t: Interval,
    pub x: Interval,
    pub xi: Interval,
    pub amplitude: f64,
}

impl SpaceTimeObservable for SpaceTimeBump {
    fn value(&self, t: f64, x: f64, xi: f64) -> f64 {
        let (st, _) = local(&self.t, t);
        let (sx, _) = local(&self.x, x);
        let (sv, _) = local(&self.xi, xi);
        self.amplitude * bump(st) * bump(sx) * bump(sv)
    }

    fn gradient(&self, t: f64, x: f64, xi: f64) -> [f64; 3] {
        let (st, jt) = local(&self.t, t);
        let (sx, jx) = local(&self.x, x);
        let (sv, jv) = local(&self.xi, xi);
        let (bt, bx, bv) = (bump(st), bump(sx), bump(sv));
        let a = self.amplitude;
        [
            a * bump_derivative(st) * jt * bx * bv,
            a * bt * bump_derivative(sx) * jx * bv,
            a * bt * bx * bump_derivative(sv) * jv,
        ]
    }

    fn time_support(&self) -> Interval {
        self.t
    }

    fn support(&self) -> SupportBox {
        SupportBox { x: self.x, xi: self.xi }
    }
}
