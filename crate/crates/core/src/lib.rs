//! Strong-stability-preserving integrating-factor Runge–Kutta (SSPIFRK) time
//! integration for semi-discretized hyperbolic problems `u_t = Lu + N(u)`.
//!
//! The linear part `L` is advanced exactly through exponential propagators
//! `e^{τL}`; the nonlinear part is advanced by an explicit SSP Runge–Kutta
//! method written in Shu–Osher form. When the Runge–Kutta method has
//! decreasing abscissas the backward-in-time exponentials can be replaced by
//! exponentials of a downwinded partner operator `L̃`, which restores the
//! strong stability guarantee for time steps up to `C·Δt_FE`.
//!
//! Module map:
//!
//! - [`grid`]: periodic grids, states, total variation and error norms.
//! - [`linops`]: upwind, downwind and Fourier-spectral advection operators.
//! - [`matexp`]: dense Padé and circulant FFT exponentials, plus a cache.
//! - [`weno`]: fifth-order WENO discretization of the Burgers flux.
//! - [`tableaux`]: Shu–Osher tableaux, SSP coefficients and order checks.
//! - [`ifrk`]: the integrating-factor stepper and a plain SSP RK stepper.
//! - [`reference`]: Dormand–Prince 5(4) reference solutions.
//! - [`experiments`]: TV sweeps and convergence studies.

pub mod error;
pub mod experiments;
pub mod grid;
pub mod ifrk;
pub mod linops;
pub mod matexp;
pub mod reference;
pub mod rhs;
pub mod tableaux;
pub mod weno;

pub use error::{Error, Result};
pub use grid::{ErrorNorm, Grid, IcSpec, State};
pub use ifrk::{DownwindMode, StepRecord};
pub use linops::{LinearOperator, OperatorKind, Structure};
pub use matexp::{ExpCache, ExpOperator};
pub use rhs::Rhs;
pub use tableaux::ShuOsherTableau;
