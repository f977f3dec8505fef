//! Cauchy problem for the radial equation: regularized right-hand side,
//! adaptive integration with event detection, the Euclidean blow-up
//! reference solver, and curvature rescaling.
//!
//! The equation is `u'' + g(r) u' + f(u) = 0` with `u(0) = alpha`,
//! `u'(0) = 0`, where `g` is the radial damping of the chosen kernel
//! (`(n-1) c coth(cr)` hyperbolic, `(n-1)/r` Euclidean) and `f` is either
//! the power nonlinearity `|u|^(p-1) u` or a linear term `c u`.

mod dopri5;

use crate::geometry::{coth_regularized, Params};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum OdeError {
    #[error("tolerance {0:e} outside the supported range [1e-13, 1e-3]")]
    InvalidTolerance(f64),
    #[error("r_max must be positive and finite, got {0}")]
    InvalidRmax(f64),
    #[error("curvature rescaling does not apply at p = 1")]
    LinearCurvatureRescale,
    #[error(transparent)]
    InvalidProblem(#[from] crate::geometry::GeometryError),
}

/// Point on a trajectory: radius, value, derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    pub r: f64,
    pub u: f64,
    pub v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Zero,
    CriticalPoint,
}

/// Detected root of `u` (kind `Zero`, value = slope `u'`) or of `u'`
/// (kind `CriticalPoint`, value = level `u`), refined on the dense output.
#[derive(Debug, Clone, Copy)]
pub struct Event {
    pub kind: EventKind,
    pub r: f64,
    pub value: f64,
    pub index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    ReachedRmax,
    /// Both `|u|` and `|u'|` fell below the `1e-280` floor.
    Underflow,
    /// Step-size underflow or a guard trip; never surfaced as an error.
    StepFailure,
    /// A requested zero count was reached and integration stopped early.
    EventStop,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::ReachedRmax => "reached-rmax",
            Termination::Underflow => "underflow",
            Termination::StepFailure => "step-failure",
            Termination::EventStop => "event-stop",
        }
    }
}

/// Nonlinearity on the right-hand side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Forcing {
    /// `|u|^(p-1) u`, with `f(0) = 0` (the sublinear branch is not
    /// Lipschitz at zero, so the value is pinned explicitly).
    Power { p: f64 },
    /// `c u`, the linear mode with spectral parameter `c`.
    Linear { c: f64 },
}

impl Forcing {
    pub(crate) fn eval(&self, u: f64) -> f64 {
        match *self {
            Forcing::Power { p } => {
                if u == 0.0 {
                    0.0
                } else {
                    u.signum() * u.abs().powf(p)
                }
            }
            Forcing::Linear { c } => c * u,
        }
    }
}

/// Radial damping kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Kernel {
    Hyperbolic { curvature: f64 },
    Euclidean,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Problem {
    pub n: u32,
    pub kernel: Kernel,
    pub forcing: Forcing,
}

impl Problem {
    fn damping(&self, r: f64) -> f64 {
        let m = (self.n - 1) as f64;
        match self.kernel {
            Kernel::Hyperbolic { curvature } => m * curvature * coth_regularized(curvature * r),
            Kernel::Euclidean => m / r,
        }
    }

    /// Right-hand side `(u', v')`. At `r = 0` exactly, returns the
    /// regular-branch limit `v' = -f(u)/n`.
    pub(crate) fn rhs(&self, r: f64, u: f64, v: f64) -> (f64, f64) {
        let f = self.forcing.eval(u);
        if r == 0.0 {
            return (v, -f / self.n as f64);
        }
        (v, -self.damping(r) * v - f)
    }
}

/// Right-hand side of the unit-curvature hyperbolic problem with power
/// nonlinearity: `du = v`, `dv = -(n-1) coth(r) v - |u|^(p-1) u`.
///
/// Below `r = 1e-8` the cotangent uses its two-term series, and at `r = 0`
/// exactly `dv = -|u|^(p-1) u / n` (regular branch).
pub fn rhs(n: u32, p: f64, state: &State) -> (f64, f64) {
    let problem = Problem {
        n,
        kernel: Kernel::Hyperbolic { curvature: 1.0 },
        forcing: Forcing::Power { p },
    };
    problem.rhs(state.r, state.u, state.v)
}

/// Series startup on `[0, r_start]`: `u = alpha - f(alpha) r^2/(2n)`,
/// `u' = -f(alpha) r / n`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Startup {
    pub r_start: f64,
    pub alpha: f64,
    pub f_alpha: f64,
    pub n: f64,
}

impl Startup {
    pub fn state(&self, r: f64) -> (f64, f64) {
        (
            self.alpha - self.f_alpha * r * r / (2.0 * self.n),
            -self.f_alpha * r / self.n,
        )
    }
}

/// Adaptively sampled solution of the Cauchy problem with detected events.
///
/// Samples are the accepted integrator steps; `eval` interpolates between
/// them with the integrator's dense output (and the series startup near
/// the origin). The first sample is always `(0, alpha, 0)`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub params: Params,
    pub forcing: Forcing,
    pub(crate) kernel: Kernel,
    pub samples: Vec<State>,
    pub events: Vec<Event>,
    pub termination: Termination,
    pub tol: f64,
    pub(crate) startup: Startup,
    pub(crate) segments: Vec<dopri5::DenseSegment>,
}

impl Trajectory {
    pub fn r_end(&self) -> f64 {
        self.samples.last().map(|s| s.r).unwrap_or(0.0)
    }

    /// Dense-output evaluation anywhere on the integrated range.
    pub fn eval(&self, r: f64) -> Option<State> {
        if r < 0.0 || r > self.r_end() {
            return None;
        }
        if r <= self.startup.r_start || self.segments.is_empty() {
            if r > self.startup.r_start {
                return None;
            }
            let (u, v) = self.startup.state(r);
            return Some(State { r, u, v });
        }
        let idx = self.segments.partition_point(|s| s.r0 <= r);
        let seg = &self.segments[idx.saturating_sub(1)];
        let (u, v) = seg.eval(r);
        Some(State { r, u, v })
    }

    pub fn zeros(&self) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(|e| e.kind == EventKind::Zero)
    }

    pub fn critical_points(&self) -> impl Iterator<Item = &Event> {
        self.events
            .iter()
            .filter(|e| e.kind == EventKind::CriticalPoint)
    }

    pub fn zero_count(&self) -> usize {
        self.zeros().count()
    }

    pub fn first_zero(&self) -> Option<f64> {
        self.zeros().next().map(|e| e.r)
    }

    /// Location of the last zero, if any.
    pub fn last_zero(&self) -> Option<f64> {
        self.zeros().last().map(|e| e.r)
    }

    /// `u''` dictated by this trajectory's own equation (kernel and
    /// forcing) at the given state.
    pub fn equation_acceleration(&self, r: f64, u: f64, v: f64) -> f64 {
        let problem = Problem {
            n: self.params.n,
            kernel: self.kernel,
            forcing: self.forcing,
        };
        problem.rhs(r, u, v).1
    }
}

/// Integrate the hyperbolic Cauchy problem described by `params` up to
/// `r_max` at relative tolerance `tol` (valid range `[1e-13, 1e-3]`).
///
/// Solves the curvature-`c` equation directly; `c = 1` is the reference
/// case. Runtime anomalies end up in `Trajectory::termination`, never as
/// errors.
pub fn integrate(params: &Params, r_max: f64, tol: f64) -> Result<Trajectory, OdeError> {
    dopri5::run(
        *params,
        Problem {
            n: params.n,
            kernel: Kernel::Hyperbolic {
                curvature: params.c,
            },
            forcing: Forcing::Power { p: params.p },
        },
        params.alpha,
        r_max,
        tol,
        None,
    )
}

/// Same as [`integrate`] but stops once `max_zeros` zeros have been
/// detected (termination `EventStop`).
pub fn integrate_until_zeros(
    params: &Params,
    r_max: f64,
    tol: f64,
    max_zeros: usize,
) -> Result<Trajectory, OdeError> {
    dopri5::run(
        *params,
        Problem {
            n: params.n,
            kernel: Kernel::Hyperbolic {
                curvature: params.c,
            },
            forcing: Forcing::Power { p: params.p },
        },
        params.alpha,
        r_max,
        tol,
        Some(max_zeros),
    )
}

/// Blow-up reference solver: same contract as [`integrate`] with the
/// hyperbolic cotangent replaced by `1/r`, for either forcing.
pub fn integrate_euclidean(
    n: u32,
    forcing: Forcing,
    alpha: f64,
    r_max: f64,
    tol: f64,
) -> Result<Trajectory, OdeError> {
    let p_tag = match forcing {
        Forcing::Power { p } => p,
        Forcing::Linear { .. } => 1.0,
    };
    let params = Params::new(n, p_tag, alpha)?;
    dopri5::run(
        params,
        Problem {
            n,
            kernel: Kernel::Euclidean,
            forcing,
        },
        alpha,
        r_max,
        tol,
        None,
    )
}

/// Hyperbolic linear mode `u'' + (n-1) coth(r) u' + c u = 0` with
/// `u(0) = alpha`, `u'(0) = 0`.
pub fn integrate_linear(
    n: u32,
    c: f64,
    alpha: f64,
    r_max: f64,
    tol: f64,
) -> Result<Trajectory, OdeError> {
    let params = Params::new(n, 1.0, alpha)?;
    dopri5::run(
        params,
        Problem {
            n,
            kernel: Kernel::Hyperbolic { curvature: 1.0 },
            forcing: Forcing::Linear { c },
        },
        alpha,
        r_max,
        tol,
        None,
    )
}

/// Change of variables between the curvature-`c` equation and the unit
/// one: a unit solution `u` pulls back to `u_c(r) = c^(2/(p-1)) u(c r)`.
#[derive(Debug, Clone, Copy)]
pub struct CurvatureTransform {
    pub c: f64,
    pub p: f64,
}

impl CurvatureTransform {
    fn q(&self) -> f64 {
        2.0 / (self.p - 1.0)
    }

    /// Map a unit-curvature state onto the curvature-`c` instance:
    /// `r -> r/c`, `u -> u c^(2/(p-1))`, `v -> v c^((p+1)/(p-1))`.
    pub fn pull_back(&self, s: &State) -> State {
        let q = self.q();
        State {
            r: s.r / self.c,
            u: s.u * self.c.powf(q),
            v: s.v * self.c.powf(q + 1.0),
        }
    }

    /// Amplitude of the curvature-`c` instance matching a unit amplitude.
    pub fn amplitude_from_unit(&self, alpha_unit: f64) -> f64 {
        alpha_unit * self.c.powf(self.q())
    }
}

/// Reduce a curvature-`c` instance to the unit-curvature one, mapping the
/// amplitude `alpha -> alpha c^(-2/(p-1))`, together with the transform
/// pulling unit trajectories back to the original instance.
///
/// Undefined at `p = 1`, where the scaling trick degenerates.
pub fn rescale_curvature(params: &Params) -> Result<(Params, CurvatureTransform), OdeError> {
    if params.p == 1.0 {
        return Err(OdeError::LinearCurvatureRescale);
    }
    let transform = CurvatureTransform {
        c: params.c,
        p: params.p,
    };
    let alpha_unit = params.alpha * params.c.powf(-transform.q());
    let unit = Params {
        n: params.n,
        p: params.p,
        c: 1.0,
        alpha: alpha_unit,
    };
    Ok((unit, transform))
}

#[cfg(test)]
mod tests;
