//! Dormand-Prince 5(4) stepper with continuous output and event location.
//!
//! Proportional-integral step control; events (roots of `u` and of `u'`)
//! are bracketed on a subsampled dense interpolant and refined by
//! bisection plus one secant polish. Roots feed zero counts that must be
//! exact integers, so bracketing robustness wins over iteration count.

use super::{Event, EventKind, OdeError, Problem, Startup, State, Termination, Trajectory};
use crate::geometry::Params;

// Butcher tableau, Dormand-Prince 5(4).
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [0.2];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
// Difference between the 5th- and embedded 4th-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
// Weights of the 4th-order continuous extension.
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

const SAFETY: f64 = 0.9;
const PI_ALPHA: f64 = 0.7 / 5.0;
const PI_BETA: f64 = 0.4 / 5.0;
const UNDERFLOW_FLOOR: f64 = 1e-280;
// Sublinear runs oscillate ever faster as the amplitude decays (the
// period shrinks like amplitude^((1-p)/2)), so a step budget bounds the
// grind; hitting it surfaces as StepFailure with the range covered so far.
const MAX_STEPS: usize = 1_500_000;
/// Dense-output subsamples per accepted step for the event sweep.
const SCAN_POINTS: usize = 8;

/// Dense-output coefficients for one accepted step on `[r0, r0 + h]`.
#[derive(Debug, Clone)]
pub(crate) struct DenseSegment {
    pub r0: f64,
    pub h: f64,
    cont: [[f64; 5]; 2],
}

impl DenseSegment {
    fn build(r0: f64, h: f64, y0: &[f64; 2], y1: &[f64; 2], k: &[[f64; 2]; 7]) -> Self {
        let mut cont = [[0.0; 5]; 2];
        for j in 0..2 {
            let ydiff = y1[j] - y0[j];
            let bspl = h * k[0][j] - ydiff;
            cont[j][0] = y0[j];
            cont[j][1] = ydiff;
            cont[j][2] = bspl;
            cont[j][3] = ydiff - h * k[6][j] - bspl;
            let mut acc = 0.0;
            for i in 0..7 {
                acc += D[i] * k[i][j];
            }
            cont[j][4] = h * acc;
        }
        DenseSegment { r0, h, cont }
    }

    pub fn eval(&self, r: f64) -> (f64, f64) {
        let th = (r - self.r0) / self.h;
        let th1 = 1.0 - th;
        let e = |c: &[f64; 5]| c[0] + th * (c[1] + th1 * (c[2] + th * (c[3] + th1 * c[4])));
        (e(&self.cont[0]), e(&self.cont[1]))
    }
}

/// Persistent sign tracker for one scalar component across steps.
struct SignTracker {
    r: f64,
    value: f64,
}

impl SignTracker {
    /// Returns a bracket if the sign flipped between the stored point and
    /// `(r, value)`, then advances past any nonzero value.
    fn advance(&mut self, r: f64, value: f64) -> Option<(f64, f64)> {
        let bracket = if value != 0.0 && self.value * value < 0.0 {
            Some((self.r, r))
        } else {
            None
        };
        if value != 0.0 {
            self.r = r;
            self.value = value;
        }
        bracket
    }
}

fn refine_root(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    let tol = 1e-12 * b.abs().max(1.0);
    while b - a > tol {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fa * fm < 0.0 {
            b = m;
            fb = fm;
        } else {
            a = m;
            fa = fm;
        }
    }
    // one secant polish inside the final bracket
    let denom = fb - fa;
    if denom != 0.0 {
        let x = a - fa * (b - a) / denom;
        if x.is_finite() && x >= a && x <= b {
            return x;
        }
    }
    0.5 * (a + b)
}

pub(crate) fn run(
    params: Params,
    problem: Problem,
    alpha: f64,
    r_max: f64,
    tol: f64,
    stop_after_zeros: Option<usize>,
) -> Result<Trajectory, OdeError> {
    if !(1e-13..=1e-3).contains(&tol) {
        return Err(OdeError::InvalidTolerance(tol));
    }
    if !(r_max > 0.0) || !r_max.is_finite() {
        return Err(OdeError::InvalidRmax(r_max));
    }

    let n = problem.n as f64;
    let f_alpha = problem.forcing.eval(alpha);
    let mut r_start = 1e-6f64.max(tol.powf(0.25) * 1e-3);
    if r_start > 0.5 * r_max {
        r_start = 0.5 * r_max;
    }
    let startup = Startup {
        r_start,
        alpha,
        f_alpha,
        n,
    };

    let mut traj = Trajectory {
        params,
        forcing: problem.forcing,
        kernel: problem.kernel,
        samples: vec![State {
            r: 0.0,
            u: alpha,
            v: 0.0,
        }],
        events: Vec::new(),
        // overwritten on every exit path; step-budget exhaustion keeps it
        termination: Termination::StepFailure,
        tol,
        startup,
        segments: Vec::new(),
    };

    // equilibrium: u stays identically zero, no events
    if alpha == 0.0 {
        traj.termination = Termination::Underflow;
        return Ok(traj);
    }

    let (u0, v0) = startup.state(r_start);
    traj.samples.push(State {
        r: r_start,
        u: u0,
        v: v0,
    });

    let mut r = r_start;
    let mut y = [u0, v0];
    let mut k = [[0.0f64; 2]; 7];
    let (du, dv) = problem.rhs(r, y[0], y[1]);
    k[0] = [du, dv];

    let h_max = 1.0f64.min(r_max / 128.0).max(1e-9);
    let mut h = 1e-4f64.min(h_max).min((r_max - r_start).max(1e-12));
    let mut err_prev: f64 = 1.0;
    let mut rejected = false;
    let blowup_level = 10.0 * alpha.abs() + 10.0;

    // trackers start past the origin: u(0) = alpha, and u' first becomes
    // nonzero at r_start (u'(0) = 0 is the initial condition, not an event)
    let mut track_u = SignTracker { r: 0.0, value: alpha };
    let mut track_v = SignTracker {
        r: r_start,
        value: v0,
    };
    let mut zero_count = 0usize;
    let mut stop_now = false;

    for _step in 0..MAX_STEPS {
        if stop_now {
            traj.termination = Termination::EventStop;
            break;
        }
        if r >= r_max - 1e-14 * r_max.max(1.0) {
            traj.termination = Termination::ReachedRmax;
            break;
        }
        h = h.min(h_max).min(r_max - r);
        if h < 1e-14 * r.max(1.0) {
            traj.termination = Termination::StepFailure;
            break;
        }

        // stages 2..6
        let stage = |coeffs: &[f64], k: &[[f64; 2]; 7]| {
            let mut ys = y;
            for (j, a) in coeffs.iter().enumerate() {
                ys[0] += h * a * k[j][0];
                ys[1] += h * a * k[j][1];
            }
            ys
        };
        for (i, row) in [&A2[..], &A3[..], &A4[..], &A5[..], &A6[..]]
            .into_iter()
            .enumerate()
        {
            let ys = stage(row, &k);
            let (du, dv) = problem.rhs(r + C[i + 1] * h, ys[0], ys[1]);
            k[i + 1] = [du, dv];
        }
        let mut y_high = y;
        for i in 0..6 {
            y_high[0] += h * B[i] * k[i][0];
            y_high[1] += h * B[i] * k[i][1];
        }
        let (du, dv) = problem.rhs(r + h, y_high[0], y_high[1]);
        k[6] = [du, dv];

        let mut err_u = 0.0;
        let mut err_v = 0.0;
        for i in 0..7 {
            err_u += E[i] * k[i][0];
            err_v += E[i] * k[i][1];
        }
        err_u *= h;
        err_v *= h;

        let span_u = y[0].abs().max(y_high[0].abs());
        let span_v = y[1].abs().max(y_high[1].abs());
        let scale = span_u.max(span_v);
        let w_u = tol * (span_u + 0.01 * scale) + 1e-300;
        let w_v = tol * (span_v + 0.01 * scale) + 1e-300;
        let err = (err_u.abs() / w_u).max(err_v.abs() / w_v);

        if !err.is_finite() || !y_high[0].is_finite() || !y_high[1].is_finite() {
            rejected = true;
            h *= 0.1;
            continue;
        }

        if err <= 1.0 {
            let seg = DenseSegment::build(r, h, &y, &y_high, &k);

            // event sweep over the dense interpolant
            for i in 1..=SCAN_POINTS {
                let ri = if i == SCAN_POINTS {
                    r + h
                } else {
                    r + h * i as f64 / SCAN_POINTS as f64
                };
                let (ui, vi) = if i == SCAN_POINTS {
                    (y_high[0], y_high[1])
                } else {
                    seg.eval(ri)
                };
                if let Some((a, b)) = track_u.advance(ri, ui) {
                    let root = refine_root(&|x| seg.eval(x).0, a.max(seg.r0), b);
                    let slope = seg.eval(root).1;
                    traj.events.push(Event {
                        kind: EventKind::Zero,
                        r: root,
                        value: slope,
                        index: 0,
                    });
                    zero_count += 1;
                    if let Some(target) = stop_after_zeros {
                        if zero_count >= target {
                            stop_now = true;
                        }
                    }
                }
                if let Some((a, b)) = track_v.advance(ri, vi) {
                    let root = refine_root(&|x| seg.eval(x).1, a.max(seg.r0), b);
                    let level = seg.eval(root).0;
                    traj.events.push(Event {
                        kind: EventKind::CriticalPoint,
                        r: root,
                        value: level,
                        index: 0,
                    });
                }
            }

            traj.segments.push(seg);
            r += h;
            y = y_high;
            k[0] = k[6];
            traj.samples.push(State {
                r,
                u: y[0],
                v: y[1],
            });

            if y[0].abs().max(y[1].abs()) < UNDERFLOW_FLOOR {
                traj.termination = Termination::Underflow;
                break;
            }
            if y[0].abs() > blowup_level {
                traj.termination = Termination::StepFailure;
                break;
            }

            let e_n = err.max(1e-32);
            let mut fac = SAFETY * e_n.powf(-PI_ALPHA) * err_prev.powf(PI_BETA);
            fac = fac.clamp(0.2, if rejected { 1.0 } else { 10.0 });
            h *= fac;
            err_prev = e_n;
            rejected = false;
        } else {
            rejected = true;
            let fac = (SAFETY * err.powf(-0.2)).clamp(0.1, 0.9);
            h *= fac;
        }
    }

    traj.events
        .sort_by(|a, b| a.r.partial_cmp(&b.r).expect("event radii are finite"));
    if let Some(target) = stop_after_zeros {
        // drop anything recorded after the stopping zero
        if let Some(stop_r) = traj
            .events
            .iter()
            .filter(|e| e.kind == EventKind::Zero)
            .nth(target.saturating_sub(1))
            .map(|e| e.r)
        {
            traj.events.retain(|e| e.r <= stop_r);
        }
    }
    for (i, e) in traj.events.iter_mut().enumerate() {
        e.index = i;
    }
    Ok(traj)
}
