//! Closed-form ground states and the linear mode.
//!
//! Three explicit families solve the equation at special subcritical
//! exponents. Their multiplicative constants are not trusted from print:
//! each is re-derived at construction by a one-point residual solve and
//! verified on a grid, and the printed value is flagged when it disagrees
//! (family A's printed constant fails the equation; see
//! `printed_constant_matches`).

use crate::classify::RadialCurve;
use crate::geometry::{coth_regularized, lambda_pair, spectral_gap};
use crate::ode::{integrate_linear, Forcing, OdeError, Trajectory};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExactError {
    #[error("closed-form families require n >= 3, got {0}")]
    UnsupportedDimension(u32),
    #[error("constant validation failed for family {family:?} at n = {n}: residual {residual:e}")]
    ConstantValidation {
        family: Family,
        n: u32,
        residual: f64,
    },
    #[error("spectral parameter must be positive and finite, got {0}")]
    InvalidSpectral(f64),
    #[error("lower bound requires 0 < c < gap, got c = {c} with gap {gap}")]
    NotBelowGap { c: f64, gap: f64 },
    #[error(transparent)]
    Ode(#[from] OdeError),
}

/// The three closed-form exponents: `A: p = n/(n-1)`, `B: p = (n+1)/(n-1)`,
/// `C: p = (n+3)/(n-1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    A,
    B,
    C,
}

impl Family {
    pub fn exponent(&self, n: u32) -> f64 {
        let nf = n as f64;
        match self {
            Family::A => nf / (nf - 1.0),
            Family::B => (nf + 1.0) / (nf - 1.0),
            Family::C => (nf + 3.0) / (nf - 1.0),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Family::A => "A",
            Family::B => "B",
            Family::C => "C",
        }
    }

    /// Constant as printed; family A's value does not satisfy the
    /// equation and is retained only for the mismatch flag.
    pub fn printed_constant(&self, n: u32) -> f64 {
        let nf = n as f64;
        match self {
            Family::A => (nf * nf * (nf - 1.0)).powi(n as i32 - 1),
            Family::B => (nf * (nf - 1.0)).powf((nf - 1.0) / 2.0),
            Family::C => (nf * (nf - 1.0) / (nf + 1.0)).powf((nf - 1.0) / 4.0),
        }
    }

    /// Base profile `g` with analytic first and second derivatives; the
    /// closed form is `U = K g`.
    fn shape(&self, n: u32, r: f64) -> (f64, f64, f64) {
        let s = r.sinh();
        let ch = r.cosh();
        match self {
            Family::A => {
                let m = (n - 1) as f64;
                let z = 1.0 + ch;
                let g = z.powf(-m);
                let dg = -m * z.powf(-m - 1.0) * s;
                let ddg = m * (m + 1.0) * z.powf(-m - 2.0) * s * s - m * z.powf(-m - 1.0) * ch;
                (g, dg, ddg)
            }
            Family::B => {
                let m = (n - 1) as f64;
                let g = ch.powf(-m);
                let dg = -m * ch.powf(-m - 1.0) * s;
                let ddg = m * (m + 1.0) * ch.powf(-m - 2.0) * s * s - m * ch.powf(-m);
                (g, dg, ddg)
            }
            Family::C => {
                let m = (n as f64 - 1.0) / 2.0;
                let b = n as f64 / (n as f64 + 1.0);
                let w = ch * ch - b;
                let dw = 2.0 * s * ch;
                let ddw = 2.0 * (ch * ch + s * s);
                let g = w.powf(-m);
                let dg = -m * w.powf(-m - 1.0) * dw;
                let ddg = m * (m + 1.0) * w.powf(-m - 2.0) * dw * dw - m * w.powf(-m - 1.0) * ddw;
                (g, dg, ddg)
            }
        }
    }
}

/// Analytic ground state `U = K g` with exact derivatives.
///
/// `constant` is the residual-solved multiplier actually used;
/// `printed_constant` is kept alongside with a flag recording whether the
/// two agree.
#[derive(Debug, Clone, Copy)]
pub struct ClosedForm {
    pub family: Family,
    pub n: u32,
    pub p: f64,
    pub constant: f64,
    pub printed_constant: f64,
    pub printed_constant_matches: bool,
}

impl ClosedForm {
    /// `(U, U', U'')` at `r >= 0`.
    pub fn eval(&self, r: f64) -> (f64, f64, f64) {
        let (g, dg, ddg) = self.family.shape(self.n, r);
        (self.constant * g, self.constant * dg, self.constant * ddg)
    }

    pub fn amplitude(&self) -> f64 {
        self.eval(0.0).0
    }
}

impl RadialCurve for ClosedForm {
    fn problem(&self) -> (u32, f64) {
        (self.n, self.p)
    }

    fn span(&self) -> (f64, f64) {
        (0.0, f64::INFINITY)
    }

    fn knots_in(&self, lo: f64, hi: f64, out: &mut Vec<f64>) {
        const COUNT: usize = 512;
        for i in 0..=COUNT {
            out.push(lo + (hi - lo) * i as f64 / COUNT as f64);
        }
    }

    fn value_at(&self, r: f64) -> f64 {
        self.eval(r).0
    }
}

/// Pointwise equation residual `u'' + (n-1) coth(r) u' + f(u)`, with the
/// regularized form `n u'' + f(u)` below `r = 1e-6`.
pub fn equation_residual(n: u32, forcing: Forcing, r: f64, u: f64, du: f64, ddu: f64) -> f64 {
    let f = forcing.eval(u);
    if r < 1e-6 {
        n as f64 * ddu + f
    } else {
        ddu + (n as f64 - 1.0) * coth_regularized(r) * du + f
    }
}

/// Max residual of an `(U, U', U'')` evaluator on the grid.
pub fn residual_check_profile(
    n: u32,
    p: f64,
    eval: impl Fn(f64) -> (f64, f64, f64),
    grid: &[f64],
) -> f64 {
    let forcing = Forcing::Power { p };
    grid.iter()
        .map(|&r| {
            let (u, du, ddu) = eval(r);
            equation_residual(n, forcing, r, u, du, ddu).abs()
        })
        .fold(0.0, f64::max)
}

/// Max residual of a closed form, using its analytic derivatives.
pub fn residual_check_form(form: &ClosedForm, grid: &[f64]) -> f64 {
    residual_check_profile(form.n, form.p, |r| form.eval(r), grid)
}

/// Max residual of a numeric trajectory against its own equation (kernel
/// and forcing taken from the run): `u` and `u'` come from the dense
/// output, `u''` from a central difference of the dense `u'` (step 1e-5),
/// so the check does not collapse onto the integrator's right-hand side.
pub fn residual_check_trajectory(traj: &Trajectory, grid: &[f64]) -> f64 {
    let r_end = traj.r_end();
    let h = 1e-5;
    grid.iter()
        .filter(|&&r| r >= h && r + h <= r_end)
        .map(|&r| {
            let s = traj.eval(r).expect("grid point inside trajectory");
            let vp = traj.eval(r + h).expect("inside").v;
            let vm = traj.eval(r - h).expect("inside").v;
            let ddu = (vp - vm) / (2.0 * h);
            (ddu - traj.equation_acceleration(r, s.u, s.v)).abs()
        })
        .fold(0.0, f64::max)
}

fn validation_grid() -> Vec<f64> {
    (0..200).map(|i| 0.01 + (10.0 - 0.01) * i as f64 / 199.0).collect()
}

/// Construct a closed-form ground state with the residual-solved constant.
///
/// The multiplier `K` is fixed so the residual of `K g` vanishes at
/// `r = 1`, then verified to below `1e-9` on a grid; the printed constant
/// is compared and flagged rather than silently corrected.
pub fn exact_ground_state(n: u32, family: Family) -> Result<ClosedForm, ExactError> {
    if n < 3 {
        return Err(ExactError::UnsupportedDimension(n));
    }
    let p = family.exponent(n);
    let (g, dg, ddg) = family.shape(n, 1.0);
    let linear_part = ddg + (n as f64 - 1.0) * coth_regularized(1.0) * dg;
    // K solves K * linear_part + K^p g^p = 0
    let constant = (-linear_part / g.powf(p)).powf(1.0 / (p - 1.0));
    let printed = family.printed_constant(n);
    let form = ClosedForm {
        family,
        n,
        p,
        constant,
        printed_constant: printed,
        printed_constant_matches: (constant - printed).abs() <= 1e-8 * printed.abs(),
    };
    let residual = residual_check_form(&form, &validation_grid());
    let scale = form.amplitude().powf(p).max(1.0);
    if residual > 1e-9 * scale.max(1.0) {
        return Err(ExactError::ConstantValidation {
            family,
            n,
            residual,
        });
    }
    Ok(form)
}

/// Linear-mode classification against the spectral gap `(n-1)^2/4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearClass {
    PositiveSlowDecay,
    PositiveBorderline,
    OscillatoryInfinite,
}

impl LinearClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            LinearClass::PositiveSlowDecay => "positive-slow-decay",
            LinearClass::PositiveBorderline => "positive-borderline",
            LinearClass::OscillatoryInfinite => "oscillatory-infinite",
        }
    }
}

/// Integrate `u'' + (n-1) coth(r) u' + c u = 0`, `u(0) = 1`, `u'(0) = 0`,
/// and classify by the position of `c` relative to the gap. The gap is
/// computed in exact integer-over-four arithmetic, so the borderline case
/// is an exact comparison.
pub fn linear_solve(
    n: u32,
    c: f64,
    r_max: f64,
    tol: f64,
) -> Result<(Trajectory, LinearClass), ExactError> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(ExactError::InvalidSpectral(c));
    }
    let gap = spectral_gap(n);
    let class = if c < gap {
        LinearClass::PositiveSlowDecay
    } else if c == gap {
        LinearClass::PositiveBorderline
    } else {
        LinearClass::OscillatoryInfinite
    };
    let traj = integrate_linear(n, c, 1.0, r_max, tol)?;
    Ok((traj, class))
}

/// Pointwise lower-bound check for the sub-gap linear mode:
/// `u(r) >= u(0)/(l2 - l1) * (l2 e^(-l1 r) - l1 e^(-l2 r)) - 1e-8`.
#[derive(Debug, Clone, Copy)]
pub struct LowerBoundReport {
    pub holds: bool,
    pub min_margin: f64,
    pub at_r: f64,
}

pub fn linear_lower_bound_check(
    traj: &Trajectory,
    n: u32,
    c: f64,
) -> Result<LowerBoundReport, ExactError> {
    let gap = spectral_gap(n);
    if !(c > 0.0 && c < gap) {
        return Err(ExactError::NotBelowGap { c, gap });
    }
    let (l1, l2) = lambda_pair(n, c).expect("validated against the gap");
    let u0 = traj.samples[0].u;
    let mut min_margin = f64::INFINITY;
    let mut at_r = 0.0;
    for s in &traj.samples {
        let bound = u0 / (l2 - l1) * (l2 * (-l1 * s.r).exp() - l1 * (-l2 * s.r).exp());
        let margin = s.u - (bound - 1e-8);
        if margin < min_margin {
            min_margin = margin;
            at_r = s.r;
        }
    }
    Ok(LowerBoundReport {
        holds: min_margin >= 0.0,
        min_margin,
        at_r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::{fit_points, theta_series, DecayLaw, ThetaVariant};
    use crate::geometry::Params;
    use crate::ode::integrate;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn family_b_amplitude_is_six_at_n3() {
        let form = exact_ground_state(3, Family::B).unwrap();
        assert_relative_eq!(form.amplitude(), 6.0, max_relative = 1e-12);
        assert!(form.printed_constant_matches);
    }

    #[test]
    fn family_c_amplitude_at_n3() {
        let form = exact_ground_state(3, Family::C).unwrap();
        assert_relative_eq!(form.amplitude(), 4.898_979_485_566_356, max_relative = 1e-12);
        assert!(form.printed_constant_matches);
    }

    #[test]
    fn family_a_printed_constant_is_flagged() {
        let form = exact_ground_state(3, Family::A).unwrap();
        // corrected constant [n(n-1)]^(n-1) = 36, amplitude 36/4 = 9
        assert_relative_eq!(form.constant, 36.0, max_relative = 1e-10);
        assert_relative_eq!(form.amplitude(), 9.0, max_relative = 1e-10);
        assert!(!form.printed_constant_matches);
        assert_relative_eq!(form.printed_constant, 324.0, max_relative = 1e-12);
    }

    #[test]
    fn printed_family_a_fails_residual() {
        let good = exact_ground_state(3, Family::A).unwrap();
        let bad = ClosedForm {
            constant: good.printed_constant,
            ..good
        };
        let grid = [1.0];
        assert!(residual_check_form(&bad, &grid) > 1.0);
    }

    #[test]
    fn residuals_families_b_c_across_dimensions() {
        for n in [3u32, 4, 5] {
            for family in [Family::B, Family::C] {
                let form = exact_ground_state(n, family).unwrap();
                let grid = validation_grid();
                let res = residual_check_form(&form, &grid);
                assert!(res < 1e-9, "family {family:?} n={n}: residual {res:e}");
            }
        }
    }

    #[test]
    fn residual_with_central_differences() {
        // u' from a central difference of u, u'' from a central difference
        // of the analytic u'; a second difference of u itself would sit at
        // the eps/h^2 rounding floor (~1e-5 in absolute terms)
        let form = exact_ground_state(3, Family::B).unwrap();
        let h = 1e-5;
        let grid: Vec<f64> = (1..100).map(|i| 0.1 * i as f64).collect();
        let res = residual_check_profile(
            3,
            form.p,
            |r| {
                let (u, _, _) = form.eval(r);
                let du = (form.eval(r + h).0 - form.eval(r - h).0) / (2.0 * h);
                let ddu = (form.eval(r + h).1 - form.eval(r - h).1) / (2.0 * h);
                (u, du, ddu)
            },
            &grid,
        );
        assert!(res < 1e-6, "central-difference residual {res:e}");
    }

    #[test]
    fn zero_function_has_zero_residual() {
        let grid = validation_grid();
        let res = residual_check_profile(3, 2.0, |_| (0.0, 0.0, 0.0), &grid);
        assert_eq!(res, 0.0);
    }

    #[test]
    fn negative_ground_state_also_solves() {
        let form = exact_ground_state(4, Family::B).unwrap();
        let grid = validation_grid();
        let res = residual_check_profile(form.n, form.p, |r| {
            let (u, du, ddu) = form.eval(r);
            (-u, -du, -ddu)
        }, &grid);
        assert!(res < 1e-9, "negated form residual {res:e}");
    }

    #[test]
    fn dimension_two_unsupported() {
        assert!(matches!(
            exact_ground_state(2, Family::B),
            Err(ExactError::UnsupportedDimension(2))
        ));
    }

    #[test]
    fn shooting_tracks_closed_form() {
        let form = exact_ground_state(3, Family::B).unwrap();
        let params = Params::new(3, form.p, form.amplitude()).unwrap();
        let traj = integrate(&params, 6.0, 1e-12).unwrap();
        for k in 1..=60 {
            let r = 6.0 * k as f64 / 60.0;
            let u_num = traj.eval(r).unwrap().u;
            let u_exact = form.eval(r).0;
            let rel = ((u_num - u_exact) / u_exact).abs();
            assert!(rel < 1e-3, "r = {r}: rel {rel:e}");
        }
    }

    #[test]
    fn exponential_rate_from_closed_form_samples() {
        for n in [3u32, 4] {
            let form = exact_ground_state(n, Family::B).unwrap();
            let pts: Vec<(f64, f64)> = (0..=200)
                .map(|i| {
                    let r = 5.0 + 10.0 * i as f64 / 200.0;
                    (r, form.eval(r).0)
                })
                .collect();
            let est = fit_points(&pts, DecayLaw::ExponentialFast, (5.0, 15.0)).unwrap();
            assert_relative_eq!(est.fitted_rate, n as f64 - 1.0, max_relative = 0.01);
        }
    }

    #[test]
    fn linear_classification_boundaries() {
        let (_, class) = linear_solve(3, 0.5, 10.0, 1e-10).unwrap();
        assert_eq!(class, LinearClass::PositiveSlowDecay);
        let (_, class) = linear_solve(3, 1.0, 10.0, 1e-10).unwrap();
        assert_eq!(class, LinearClass::PositiveBorderline);
        let (_, class) = linear_solve(3, 2.0, 10.0, 1e-10).unwrap();
        assert_eq!(class, LinearClass::OscillatoryInfinite);
        assert!(linear_solve(3, -1.0, 10.0, 1e-10).is_err());
    }

    #[test]
    fn linear_below_gap_positive_with_lower_bound() {
        let (traj, _) = linear_solve(3, 0.5, 60.0, 1e-10).unwrap();
        assert_eq!(traj.zero_count(), 0);
        assert!(traj.samples.iter().all(|s| s.u > 0.0));
        let report = linear_lower_bound_check(&traj, 3, 0.5).unwrap();
        assert!(report.holds, "margin {} at r = {}", report.min_margin, report.at_r);

        // equality at the origin: bound(0) = u(0)
        let (l1, l2) = lambda_pair(3, 0.5).unwrap();
        let bound0 = 1.0 / (l2 - l1) * (l2 - l1);
        assert_abs_diff_eq!(bound0, 1.0, epsilon = 1e-15);

        // closer to the gap the bound still holds
        let (traj9, _) = linear_solve(3, 0.9, 60.0, 1e-10).unwrap();
        assert!(linear_lower_bound_check(&traj9, 3, 0.9).unwrap().holds);
    }

    #[test]
    fn linear_theta_settles_at_decay_rate() {
        let (traj, _) = linear_solve(3, 0.5, 55.0, 1e-10).unwrap();
        let series = theta_series(&traj, ThetaVariant::Theta, (49.0, 51.0)).unwrap();
        let (l1, _) = lambda_pair(3, 0.5).unwrap();
        let (_, theta) = series[series.len() / 2];
        assert_abs_diff_eq!(theta, -l1, epsilon = 1e-3);
    }

    #[test]
    fn linear_borderline_comparable_to_polynomial_weight() {
        let (traj, _) = linear_solve(3, 1.0, 40.0, 1e-10).unwrap();
        assert!(traj.samples.iter().all(|s| s.u > 0.0));
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for s in traj.samples.iter().filter(|s| s.r >= 5.0) {
            let ratio = s.u / ((1.0 + s.r) * (-s.r).exp());
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
        assert!(lo > 0.0);
        assert!(hi / lo < 2.0, "ratio band [{lo}, {hi}]");
    }

    #[test]
    fn linear_above_gap_oscillates() {
        let (traj, _) = linear_solve(3, 2.0, 30.0, 1e-10).unwrap();
        assert!(traj.zero_count() >= 5, "zeros: {}", traj.zero_count());
    }

    #[test]
    fn lower_bound_requires_sub_gap() {
        let (traj, _) = linear_solve(3, 2.0, 10.0, 1e-10).unwrap();
        assert!(matches!(
            linear_lower_bound_check(&traj, 3, 2.0),
            Err(ExactError::NotBelowGap { .. })
        ));
    }

    #[test]
    fn trajectory_residual_small_for_closed_form_shooting() {
        let form = exact_ground_state(3, Family::B).unwrap();
        let params = Params::new(3, form.p, form.amplitude()).unwrap();
        let traj = integrate(&params, 6.0, 1e-12).unwrap();
        let grid: Vec<f64> = (1..=50).map(|i| 5.0 * i as f64 / 50.0).collect();
        let res = residual_check_trajectory(&traj, &grid);
        // bounded by the central-difference truncation, not the solver
        assert!(res < 1e-4, "trajectory residual {res:e}");
    }
}
