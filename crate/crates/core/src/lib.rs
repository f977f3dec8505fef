//! Radial solutions of the Emden-Fowler equation on hyperbolic space.
//!
//! The library integrates the radial Cauchy problem
//! `u'' + (n-1) coth(r) u' + |u|^(p-1) u = 0`, `u(0) = alpha`, `u'(0) = 0`,
//! detects zeros and critical points, classifies solutions by sign and
//! asymptotic decay law, locates the separatrix amplitude by shooting
//! bisection, and validates the closed-form ground states and the linear
//! mode against the equation residual.
//!
//! Sweeps over amplitude grids run data-parallel with the default
//! `parallel` feature; disabling it yields a sequential fallback with
//! identical results.

pub mod classify;
pub mod diagnostics;
pub mod exact;
pub mod geometry;
pub mod ode;
pub mod parallel;
pub mod serialize;
pub mod verify;

pub use geometry::{classify_regime, Params, Regime, RegimeTag};
pub use ode::{integrate, integrate_euclidean, Event, EventKind, State, Termination, Trajectory};
