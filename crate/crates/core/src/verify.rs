//! End-to-end verification checks with pinned tolerances.
//!
//! Each check measures a quantitative claim about the solver pipeline and
//! reports the measured values; the CLI `verify` command and the
//! `acceptance` test target both run these.

use crate::classify::{
    classify_trajectory, count_intersections, find_separatrix, verified_zero_count,
};
use crate::diagnostics::{
    decay_fit, lyapunov_monotone, pohozaev_psi, psi_derivative_check, psi_sign_summary, DecayLaw,
    PsiSign,
};
use crate::exact::{
    exact_ground_state, linear_lower_bound_check, linear_solve, residual_check_form, ClosedForm,
    Family, LinearClass,
};
use crate::geometry::{c_np, find_r_np, lambda_pair, Params};
use crate::ode::{integrate, integrate_euclidean, rescale_curvature, Forcing};
use crate::serialize::{events_json, report_json, sweep_summary_csv, trajectory_csv};

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub details: String,
}

impl CheckResult {
    fn fail(name: &'static str, details: String) -> Self {
        CheckResult {
            name,
            passed: false,
            details,
        }
    }

    fn from(name: &'static str, passed: bool, details: String) -> Self {
        CheckResult {
            name,
            passed,
            details,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {} — {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.details
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    All,
    Separatrix,
    Exact,
    Decay,
    Subcritical,
    Sublinear,
    Functional,
    Euclidean,
    Linear,
    Rescale,
    Determinism,
}

impl Suite {
    pub fn parse(s: &str) -> Option<Suite> {
        Some(match s {
            "all" => Suite::All,
            "separatrix" => Suite::Separatrix,
            "exact" => Suite::Exact,
            "decay" => Suite::Decay,
            "subcritical" => Suite::Subcritical,
            "sublinear" => Suite::Sublinear,
            "functional" => Suite::Functional,
            "euclidean" => Suite::Euclidean,
            "linear" => Suite::Linear,
            "rescale" => Suite::Rescale,
            "determinism" => Suite::Determinism,
            _ => return None,
        })
    }
}

/// Run the selected suite; `All` runs every check in a fixed order.
pub fn run_suite(suite: Suite) -> Vec<CheckResult> {
    let mut out = Vec::new();
    let want = |s: Suite| suite == Suite::All || suite == s;
    if want(Suite::Separatrix) {
        out.push(check_separatrix_value());
    }
    if want(Suite::Exact) {
        out.push(check_closed_form_residuals());
    }
    if want(Suite::Decay) {
        out.push(check_supercritical_decay());
    }
    if want(Suite::Subcritical) {
        out.push(check_subcritical_slow_decay());
        out.push(check_one_zero_band());
        out.push(check_finite_zero_counts());
    }
    if want(Suite::Sublinear) {
        out.push(check_sublinear_oscillation());
    }
    if want(Suite::Functional) {
        out.push(check_functional_monotonicity());
    }
    if want(Suite::Euclidean) {
        out.push(check_euclidean_blowup());
    }
    if want(Suite::Linear) {
        out.push(check_linear_suite());
    }
    if want(Suite::Rescale) {
        out.push(check_curvature_rescaling());
    }
    if want(Suite::Determinism) {
        out.push(check_determinism());
    }
    out
}

fn params(n: u32, p: f64, alpha: f64) -> Params {
    Params::new(n, p, alpha).expect("valid check parameters")
}

/// Separatrix amplitude at (3, 2): 6.00 within 0.01 in at most 60 probes.
pub fn check_separatrix_value() -> CheckResult {
    const NAME: &str = "separatrix-value";
    match find_separatrix(3, 2.0, (1.0, 16.0), 0.005, 1e-10) {
        Ok(res) => {
            let err = (res.alpha_star - 6.0).abs();
            CheckResult::from(
                NAME,
                err <= 0.01 && res.probes <= 60,
                format!(
                    "alpha* = {:.4} (|err| = {:.2e}, tol 0.01), {} probes (max 60)",
                    res.alpha_star, err, res.probes
                ),
            )
        }
        Err(e) => CheckResult::fail(NAME, format!("error: {e}")),
    }
}

/// Closed-form residuals for families B and C at n in {3,4,5} below 1e-9;
/// family A only passes with the corrected constant and the printed one is
/// flagged.
pub fn check_closed_form_residuals() -> CheckResult {
    const NAME: &str = "closed-form-residuals";
    let grid: Vec<f64> = (0..=200).map(|i| 10.0 * i as f64 / 200.0).collect();
    let mut worst: f64 = 0.0;
    let mut details = String::new();
    let mut passed = true;
    for n in [3u32, 4, 5] {
        for family in [Family::B, Family::C] {
            match exact_ground_state(n, family) {
                Ok(form) => {
                    let res = residual_check_form(&form, &grid);
                    worst = worst.max(res);
                    if res >= 1e-9 || !form.printed_constant_matches {
                        passed = false;
                        details.push_str(&format!("{}@n={n} residual {res:.2e}; ", family.as_str()));
                    }
                }
                Err(e) => {
                    passed = false;
                    details.push_str(&format!("{}@n={n}: {e}; ", family.as_str()));
                }
            }
        }
        match exact_ground_state(n, Family::A) {
            Ok(form) => {
                let res = residual_check_form(&form, &grid);
                let printed = ClosedForm {
                    constant: form.printed_constant,
                    ..form
                };
                let printed_res = residual_check_form(&printed, &[1.0]);
                if res >= 1e-9 || form.printed_constant_matches || printed_res <= 1e-3 {
                    passed = false;
                    details.push_str(&format!(
                        "A@n={n}: corrected {res:.2e}, printed flagged = {}, printed residual {printed_res:.2e}; ",
                        !form.printed_constant_matches
                    ));
                }
                worst = worst.max(res);
            }
            Err(e) => {
                passed = false;
                details.push_str(&format!("A@n={n}: {e}; "));
            }
        }
    }
    CheckResult::from(
        NAME,
        passed,
        format!(
            "max corrected-form residual {:.2e} (tol 1e-9); family A printed constant flagged{}",
            worst,
            if details.is_empty() {
                String::new()
            } else {
                format!("; issues: {details}")
            }
        ),
    )
}

/// Supercritical decay at (3, 6, alpha=1, r_max=200): fitted constant and
/// exponent within 5%, and the scaled gap shrinking across checkpoints.
pub fn check_supercritical_decay() -> CheckResult {
    const NAME: &str = "supercritical-decay-constant";
    let target = c_np(3, 6.0).expect("p > 1");
    let traj = match integrate(&params(3, 6.0, 1.0), 200.0, 1e-10) {
        Ok(t) => t,
        Err(e) => return CheckResult::fail(NAME, format!("integration failed: {e}")),
    };
    let est = match decay_fit(&traj, DecayLaw::PolynomialSlow) {
        Ok(e) => e,
        Err(e) => return CheckResult::fail(NAME, format!("fit failed: {e}")),
    };
    let const_err = (est.fitted_constant - target).abs() / target;
    let rate_err = (est.fitted_rate - 0.2).abs() / 0.2;
    let gap = |r: f64| {
        let u = traj.eval(r).expect("inside range").u;
        (r.powf(0.2) * u - target).abs()
    };
    let (g50, g100, g200) = (gap(50.0), gap(100.0), gap(200.0));
    let shrinking = g50 > g100 && g100 > g200;
    CheckResult::from(
        NAME,
        const_err < 0.05 && rate_err < 0.05 && shrinking,
        format!(
            "constant {:.5} vs {:.5} ({:.1}%), rate {:.5} vs 0.2 ({:.1}%), gaps {:.3e} > {:.3e} > {:.3e}: {}",
            est.fitted_constant,
            target,
            100.0 * const_err,
            est.fitted_rate,
            100.0 * rate_err,
            g50,
            g100,
            g200,
            shrinking
        ),
    )
}

/// Slow decay below the separatrix at (3, 2, alpha=1): no zeros,
/// `r u(r)` near 2 at r = 100, one intersection with the exact ground
/// state.
pub fn check_subcritical_slow_decay() -> CheckResult {
    const NAME: &str = "subcritical-slow-decay";
    let traj = match integrate(&params(3, 2.0, 1.0), 100.0, 1e-10) {
        Ok(t) => t,
        Err(e) => return CheckResult::fail(NAME, format!("integration failed: {e}")),
    };
    let zeros = traj.zero_count();
    let ru = traj.eval(100.0).expect("endpoint").u * 100.0;
    let ru_err = (ru - 2.0).abs() / 2.0;
    let form = match exact_ground_state(3, Family::B) {
        Ok(f) => f,
        Err(e) => return CheckResult::fail(NAME, format!("closed form failed: {e}")),
    };
    let crossings = match count_intersections(&traj, &form, None) {
        Ok(c) => c,
        Err(e) => return CheckResult::fail(NAME, format!("intersection count failed: {e}")),
    };
    CheckResult::from(
        NAME,
        zeros == 0 && ru_err < 0.05 && crossings == 1,
        format!(
            "zeros = {zeros} (want 0), r*u(100) = {ru:.4} ({:.1}% off 2, tol 5%), ground-state crossings = {crossings} (want 1)",
            100.0 * ru_err
        ),
    )
}

/// One-zero band at (3, 2, alpha=6.05): exactly one zero and the final
/// branch fitting the negative slow-decay constant within 10%. The
/// post-zero level is tiny, so its decay scale `1/lambda_1` is long and
/// the branch reaches the 10% band only in the r-thousands; the run is
/// smooth and cheap out there.
pub fn check_one_zero_band() -> CheckResult {
    const NAME: &str = "one-zero-band";
    let traj = match integrate(&params(3, 2.0, 6.05), 6000.0, 1e-10) {
        Ok(t) => t,
        Err(e) => return CheckResult::fail(NAME, format!("integration failed: {e}")),
    };
    let zeros = traj.zero_count();
    let report = classify_trajectory(&traj);
    let Some(decay) = report.decay else {
        return CheckResult::fail(NAME, "no decay fit on the final branch".into());
    };
    let err = (decay.fitted_constant + 2.0).abs() / 2.0;
    CheckResult::from(
        NAME,
        zeros == 1 && err < 0.10,
        format!(
            "zeros = {zeros} (want 1), final-branch constant {:.4} vs -2 ({:.1}% off, tol 10%)",
            decay.fitted_constant,
            100.0 * err
        ),
    )
}

/// Finitely many zeros at (3, 2): counts stable under tolerance
/// refinement and no zeros after the last sub-level critical point, with
/// `log|u| + lambda_1 r` bounded below.
pub fn check_finite_zero_counts() -> CheckResult {
    const NAME: &str = "finite-zero-counts";
    let mut details = String::new();
    let mut passed = true;
    for alpha in [10.0, 20.0, 50.0] {
        let p = params(3, 2.0, alpha);
        match verified_zero_count(&p, 60.0, 1e-9) {
            Ok((count, stable)) => {
                if !stable {
                    passed = false;
                    details.push_str(&format!("alpha={alpha}: unstable count; "));
                    continue;
                }
                let traj = match integrate(&p, 60.0, 1e-10) {
                    Ok(t) => t,
                    Err(e) => {
                        passed = false;
                        details.push_str(&format!("alpha={alpha}: {e}; "));
                        continue;
                    }
                };
                let quiet = traj
                    .critical_points()
                    .find(|e| e.value.abs() < 1.0)
                    .copied();
                let Some(quiet) = quiet else {
                    // the tail-bound premise (a critical point below the
                    // level) never materializes on this range; the
                    // substantive claim is then only count stability
                    details.push_str(&format!(
                        "alpha={alpha}: k={count} stable, no sub-level critical point (bound vacuous); "
                    ));
                    continue;
                };
                let after = traj.zeros().filter(|z| z.r > quiet.r).count();
                let (l1, _) = lambda_pair(3, quiet.value.abs()).expect("below the gap");
                let floor = quiet.value.abs().ln() + l1 * quiet.r;
                let bounded = traj
                    .samples
                    .iter()
                    .filter(|s| s.r > quiet.r && s.u != 0.0)
                    .all(|s| s.u.abs().ln() + l1 * s.r >= floor - 1e-3);
                if after != 0 || !bounded {
                    passed = false;
                    details.push_str(&format!(
                        "alpha={alpha}: zeros after quiet point = {after}, bounded = {bounded}; "
                    ));
                } else {
                    details.push_str(&format!("alpha={alpha}: k={count} stable, tail bounded; "));
                }
            }
            Err(e) => {
                passed = false;
                details.push_str(&format!("alpha={alpha}: {e}; "));
            }
        }
    }
    CheckResult::from(NAME, passed, details.trim_end_matches("; ").to_string())
}

/// Sublinear oscillation at (3, 0.5, alpha=1, r_max=60): at least 10
/// zeros, envelope rate within 10% of 4/3, envelope offset bounded below
/// across the last five critical points.
pub fn check_sublinear_oscillation() -> CheckResult {
    const NAME: &str = "sublinear-oscillation";
    let traj = match integrate(&params(3, 0.5, 1.0), 60.0, 1e-10) {
        Ok(t) => t,
        Err(e) => return CheckResult::fail(NAME, format!("integration failed: {e}")),
    };
    let zeros = traj.zero_count();
    let est = match decay_fit(&traj, DecayLaw::SublinearEnvelope) {
        Ok(e) => e,
        Err(e) => return CheckResult::fail(NAME, format!("envelope fit failed: {e}")),
    };
    let target = 4.0 / 3.0;
    let rate_err = (est.fitted_rate - target).abs() / target;
    // for reference: the damping-virial balance of the sublinear
    // oscillator puts the measured envelope at 2(n-1)/(p+3) = 8/7
    let virial = 2.0 * 2.0 / 3.5;
    // boundedness of log|u(rho_k)| + (4/3) rho_k over the critical points
    let offsets: Vec<f64> = traj
        .critical_points()
        .filter(|e| e.value != 0.0)
        .map(|e| e.value.abs().ln() + target * e.r)
        .collect();
    if offsets.len() < 10 {
        return CheckResult::fail(NAME, format!("only {} critical points", offsets.len()));
    }
    let early_floor = offsets[..offsets.len() / 2]
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let late_floor = offsets[offsets.len() - 5..]
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let bounded = late_floor >= early_floor - 0.5;
    CheckResult::from(
        NAME,
        zeros >= 10 && rate_err < 0.10 && bounded,
        format!(
            "zeros = {zeros} (want >= 10), envelope rate {:.4} vs {:.4} ({:.1}% off, tol 10%; virial balance predicts {:.4}), late floor {:.3} vs early {:.3}",
            est.fitted_rate,
            target,
            100.0 * rate_err,
            virial,
            late_floor,
            early_floor
        ),
    )
}

/// One run per regime: F nonincreasing, Psi(0) = 0 with the derivative
/// identity under 1e-4, and the regime-specific Psi sign pattern
/// (including the derivative sign flip at R_np in the subcritical case).
pub fn check_functional_monotonicity() -> CheckResult {
    const NAME: &str = "functional-monotonicity";
    let mut passed = true;
    let mut details = String::new();

    let runs = [
        (6.0, 1.0, PsiSign::Negative),
        (2.0, 1.0, PsiSign::Mixed), // sign handled separately below
        (0.5, 1.0, PsiSign::PositiveNondecreasing),
    ];
    for (p, alpha, want_sign) in runs {
        let traj = match integrate(&params(3, p, alpha), 20.0, 1e-10) {
            Ok(t) => t,
            Err(e) => return CheckResult::fail(NAME, format!("integration failed: {e}")),
        };
        if !lyapunov_monotone(&traj) {
            passed = false;
            details.push_str(&format!("p={p}: F not monotone; "));
        }
        let origin = pohozaev_psi(3, p, &crate::ode::State { r: 0.0, u: alpha, v: 0.0 });
        if origin != 0.0 {
            passed = false;
            details.push_str(&format!("p={p}: Psi(0) = {origin}; "));
        }
        match psi_derivative_check(&traj) {
            Ok(rep) => {
                if rep.max_rel_err >= 1e-4 {
                    passed = false;
                    details.push_str(&format!(
                        "p={p}: Psi identity err {:.2e} at r={:.3}; ",
                        rep.max_rel_err, rep.at_r
                    ));
                } else {
                    details.push_str(&format!("p={p}: Psi id {:.1e}; ", rep.max_rel_err));
                }
            }
            Err(e) => {
                passed = false;
                details.push_str(&format!("p={p}: {e}; "));
            }
        }
        if p != 2.0 {
            let sign = psi_sign_summary(&traj);
            if sign != want_sign {
                passed = false;
                details.push_str(&format!("p={p}: Psi sign {:?}; ", sign));
            }
        } else {
            // subcritical: Psi' flips sign at R_np within one grid step
            let r_np = find_r_np(3, 2.0).expect("subcritical");
            let h = 0.01;
            let psi = |r: f64| pohozaev_psi(3, 2.0, &traj.eval(r).expect("in range"));
            let mut flip = None;
            let mut r = (r_np - 1.0).max(0.2);
            while r + h <= r_np + 1.0 {
                let d = psi(r + h) - psi(r);
                if d < 0.0 {
                    flip = Some(r + 0.5 * h);
                    break;
                }
                r += h;
            }
            match flip {
                Some(rf) if (rf - r_np).abs() <= 2.0 * h => {
                    details.push_str(&format!("Psi' flip at {rf:.4} vs R_np {r_np:.4}; "));
                }
                Some(rf) => {
                    passed = false;
                    details.push_str(&format!("Psi' flip at {rf:.4}, R_np = {r_np:.4}; "));
                }
                None => {
                    passed = false;
                    details.push_str("no Psi' sign flip found near R_np; ");
                }
            }
        }
    }
    CheckResult::from(NAME, passed, details.trim_end_matches("; ").to_string())
}

/// Blow-up scaling: r_alpha * sqrt(alpha) at alpha = 1e4 within 2% of the
/// Euclidean profile's first zero, and the Euclidean solver validated on
/// the classical sinc solution.
pub fn check_euclidean_blowup() -> CheckResult {
    const NAME: &str = "euclidean-blowup-scaling";
    let sinc = match integrate_euclidean(3, Forcing::Linear { c: 1.0 }, 1.0, 10.0, 1e-11) {
        Ok(t) => t,
        Err(e) => return CheckResult::fail(NAME, format!("sinc run failed: {e}")),
    };
    let pi_err = match sinc.first_zero() {
        Some(z) => (z - std::f64::consts::PI).abs(),
        None => return CheckResult::fail(NAME, "sinc run found no zero".into()),
    };
    let reference = match integrate_euclidean(3, Forcing::Power { p: 2.0 }, 1.0, 10.0, 1e-12) {
        Ok(t) => t,
        Err(e) => return CheckResult::fail(NAME, format!("profile run failed: {e}")),
    };
    let Some(s0) = reference.first_zero() else {
        return CheckResult::fail(NAME, "profile run found no zero".into());
    };
    let traj = match integrate(&params(3, 2.0, 1e4), 1.0, 1e-10) {
        Ok(t) => t,
        Err(e) => return CheckResult::fail(NAME, format!("large-amplitude run failed: {e}")),
    };
    let Some(r_alpha) = traj.first_zero() else {
        return CheckResult::fail(NAME, "large-amplitude run found no zero".into());
    };
    let scaled = r_alpha * 1e2;
    let rel = (scaled - s0).abs() / s0;
    CheckResult::from(
        NAME,
        pi_err <= 1e-8 && rel < 0.02,
        format!(
            "sinc zero off pi by {:.2e} (tol 1e-8); r_alpha*sqrt(alpha) = {:.5} vs S0 = {:.5} ({:.2}%, tol 2%)",
            pi_err,
            scaled,
            s0,
            100.0 * rel
        ),
    )
}

/// Linear-mode suite at n = 3: sub-gap positivity with the two-sided
/// bound and the theta limit, borderline comparability, and oscillation
/// above the gap.
pub fn check_linear_suite() -> CheckResult {
    const NAME: &str = "linear-suite";
    let mut passed = true;
    let mut details = String::new();

    // c = 0.5 < gap
    match linear_solve(3, 0.5, 55.0, 1e-10) {
        Ok((traj, class)) => {
            if class != LinearClass::PositiveSlowDecay || traj.zero_count() != 0 {
                passed = false;
                details.push_str("c=0.5: wrong class or zeros; ");
            }
            match linear_lower_bound_check(&traj, 3, 0.5) {
                Ok(rep) if rep.holds => {}
                Ok(rep) => {
                    passed = false;
                    details.push_str(&format!(
                        "c=0.5: lower bound violated by {:.2e} at r={:.2}; ",
                        -rep.min_margin, rep.at_r
                    ));
                }
                Err(e) => {
                    passed = false;
                    details.push_str(&format!("c=0.5: {e}; "));
                }
            }
            let s = traj.eval(50.0).expect("inside range");
            let theta = s.v / s.u;
            let (l1, _) = lambda_pair(3, 0.5).expect("below gap");
            let theta_err = (theta + l1).abs();
            if theta_err > 1e-3 {
                passed = false;
                details.push_str(&format!("c=0.5: theta(50) = {theta:.6} vs {:.6}; ", -l1));
            } else {
                details.push_str(&format!("c=0.5: theta(50) off by {theta_err:.1e}; "));
            }
        }
        Err(e) => {
            passed = false;
            details.push_str(&format!("c=0.5: {e}; "));
        }
    }

    // c = 1 = gap: comparable to (1+r) e^{-r} on [5, 40]
    match linear_solve(3, 1.0, 40.0, 1e-10) {
        Ok((traj, class)) => {
            if class != LinearClass::PositiveBorderline || traj.samples.iter().any(|s| s.u <= 0.0)
            {
                passed = false;
                details.push_str("c=1: wrong class or non-positive; ");
            }
            let mut lo = f64::INFINITY;
            let mut hi: f64 = 0.0;
            for s in traj.samples.iter().filter(|s| s.r >= 5.0 && s.r <= 40.0) {
                let ratio = s.u / ((1.0 + s.r) * (-s.r).exp());
                lo = lo.min(ratio);
                hi = hi.max(ratio);
            }
            // fixed two-sided band
            if !(lo > 0.05 && hi < 5.0 && hi / lo < 2.0) {
                passed = false;
                details.push_str(&format!("c=1: ratio band [{lo:.4}, {hi:.4}]; "));
            } else {
                details.push_str(&format!("c=1: ratio in [{lo:.3}, {hi:.3}]; "));
            }
        }
        Err(e) => {
            passed = false;
            details.push_str(&format!("c=1: {e}; "));
        }
    }

    // c = 2 > gap
    match linear_solve(3, 2.0, 30.0, 1e-10) {
        Ok((traj, class)) => {
            let zeros = traj.zero_count();
            if class != LinearClass::OscillatoryInfinite || zeros < 5 {
                passed = false;
                details.push_str(&format!("c=2: {zeros} zeros; "));
            } else {
                details.push_str(&format!("c=2: {zeros} zeros; "));
            }
        }
        Err(e) => {
            passed = false;
            details.push_str(&format!("c=2: {e}; "));
        }
    }

    CheckResult::from(NAME, passed, details.trim_end_matches("; ").to_string())
}

/// Curvature rescaling at (3, 2, c = 2): the direct curvature-2 solve
/// matches the pulled-back unit solve pointwise to 1e-6 on [0, 5].
pub fn check_curvature_rescaling() -> CheckResult {
    const NAME: &str = "curvature-rescaling";
    let direct_params = match Params::with_curvature(3, 2.0, 2.0, 4.0) {
        Ok(p) => p,
        Err(e) => return CheckResult::fail(NAME, format!("params: {e}")),
    };
    let direct = match integrate(&direct_params, 5.0, 1e-11) {
        Ok(t) => t,
        Err(e) => return CheckResult::fail(NAME, format!("direct solve failed: {e}")),
    };
    let (unit_params, transform) = match rescale_curvature(&direct_params) {
        Ok(x) => x,
        Err(e) => return CheckResult::fail(NAME, format!("rescale failed: {e}")),
    };
    let unit = match integrate(&unit_params, 10.0, 1e-11) {
        Ok(t) => t,
        Err(e) => return CheckResult::fail(NAME, format!("unit solve failed: {e}")),
    };
    let mut worst: f64 = 0.0;
    for k in 0..=100 {
        let r_hat = 5.0 * k as f64 / 100.0;
        let d = direct.eval(r_hat).expect("in range").u;
        let pulled = transform.pull_back(&unit.eval(2.0 * r_hat).expect("in range"));
        worst = worst.max((d - pulled.u).abs());
    }
    CheckResult::from(
        NAME,
        worst < 1e-6,
        format!("max pointwise deviation {worst:.2e} on [0, 5] (tol 1e-6)"),
    )
}

/// Byte-identical emission: serializing the same solve and the same
/// parallel sweep twice yields identical artifacts.
pub fn check_determinism() -> CheckResult {
    const NAME: &str = "determinism";
    let solve_bundle = || -> Result<(String, String, String), String> {
        let traj = integrate(&params(3, 2.0, 6.5), 30.0, 1e-10).map_err(|e| e.to_string())?;
        let report = classify_trajectory(&traj);
        Ok((
            trajectory_csv(&traj),
            events_json(&traj),
            report_json(&report),
        ))
    };
    let sweep_bundle = || -> Result<String, String> {
        let grid: Vec<Params> = (0..8).map(|i| params(3, 2.0, 0.5 + i as f64)).collect();
        let reports =
            crate::classify::classify_batch(&grid, 20.0, 1e-9).map_err(|e| e.to_string())?;
        Ok(sweep_summary_csv(&reports))
    };
    match (solve_bundle(), solve_bundle(), sweep_bundle(), sweep_bundle()) {
        (Ok(a), Ok(b), Ok(s1), Ok(s2)) => {
            let solve_same = a == b;
            let sweep_same = s1 == s2;
            CheckResult::from(
                NAME,
                solve_same && sweep_same,
                format!(
                    "solve bundle identical: {solve_same}; parallel sweep summary identical: {sweep_same}"
                ),
            )
        }
        (Err(e), ..) | (_, Err(e), ..) => CheckResult::fail(NAME, e),
        (_, _, Err(e), _) | (_, _, _, Err(e)) => CheckResult::fail(NAME, e),
    }
}

