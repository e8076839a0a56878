//! One-dimensional numerical laboratory for the logarithmic Schrödinger
//! equation, its semiclassical limit toward the isothermal Euler system, and
//! the monokinetic measure solutions of the associated singular Vlasov
//! equation.
//!
//! Modules:
//! - [`gaussian`]: reduced ODE for Gaussian data, energy integral, blow-up,
//!   explicit Euler fields and large-time asymptotics.
//! - [`nls`]: split-step solver for the ε-scaled logarithmic NLS and the
//!   Gaussian-ansatz oracle.
//! - [`wigner`]: discrete and exact Wigner transforms, weak pairings and
//!   convergence sweeps toward the monokinetic measure.
//! - [`wkb`]: the symmetrizable hyperbolic system for the WKB amplitude and
//!   velocity, for ε ≥ 0.
//! - [`lagrangian`]: p-system, Riemann invariants and the density lower bound.

pub mod convergence;
pub mod error;
pub mod gaussian;
pub mod grid;
pub mod lagrangian;
pub mod nls;
pub mod observable;
pub mod ode;
pub mod quadrature;
pub mod special;
pub mod wigner;
pub mod wkb;

pub use error::{Error, Result};
pub use gaussian::{GammaState, GammaTrajectory, GaussianParams, TrajectoryStatus};
pub use grid::SpatialGrid;
pub use nls::{GaussianAnsatz, WaveField};
pub use wigner::{MonokineticMeasure, PhaseSpaceField};
pub use wkb::{FluidState, InitialData};
pub use num_complex::Complex64;
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
