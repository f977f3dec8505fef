use super::*;
use crate::geometry::sinh_pow;
use approx::{assert_abs_diff_eq, assert_relative_eq};

fn params(n: u32, p: f64, alpha: f64) -> Params {
    Params::new(n, p, alpha).unwrap()
}

#[test]
fn rhs_regular_branch_at_origin() {
    let (du, dv) = rhs(
        3,
        2.0,
        &State {
            r: 0.0,
            u: 1.0,
            v: 0.0,
        },
    );
    assert_eq!(du, 0.0);
    assert_relative_eq!(dv, -1.0 / 3.0, max_relative = 1e-15);
}

#[test]
fn rhs_damping_vanishes_with_v() {
    for (n, p, r) in [(3u32, 2.0, 0.7), (5, 6.0, 3.0), (2, 0.5, 12.0)] {
        let (_, dv) = rhs(n, p, &State { r, u: 1.0, v: 0.0 });
        assert_relative_eq!(dv, -1.0, max_relative = 1e-15);
    }
}

#[test]
fn rhs_frozen_value() {
    // dv = 2 coth(0.5) * 0.1 - 0.9^6 with coth(0.5) = 2.163953413738653
    let (du, dv) = rhs(
        3,
        6.0,
        &State {
            r: 0.5,
            u: 0.9,
            v: -0.1,
        },
    );
    assert_eq!(du, -0.1);
    assert_relative_eq!(dv, -0.098_650_317_252_269_4, max_relative = 1e-12);
}

#[test]
fn equilibrium_stays_zero() {
    let traj = integrate(&params(3, 2.0, 0.0), 10.0, 1e-10).unwrap();
    assert!(traj.events.is_empty());
    assert_eq!(traj.termination, Termination::Underflow);
    assert!(traj.samples.iter().all(|s| s.u == 0.0 && s.v == 0.0));
}

#[test]
fn first_sample_is_initial_condition() {
    let traj = integrate(&params(3, 6.0, 2.0), 5.0, 1e-10).unwrap();
    let first = traj.samples[0];
    assert_eq!((first.r, first.u, first.v), (0.0, 2.0, 0.0));
    for w in traj.samples.windows(2) {
        assert!(w[1].r > w[0].r, "samples strictly increasing");
    }
}

#[test]
fn supercritical_solution_stays_positive() {
    let traj = integrate(&params(3, 6.0, 1.0), 50.0, 1e-10).unwrap();
    assert_eq!(traj.zero_count(), 0);
    assert!(traj.samples.iter().all(|s| s.u > 0.0));
    assert!(traj
        .samples
        .iter()
        .skip(2)
        .all(|s| s.v < 0.0), "u' negative past the origin");
    assert_eq!(traj.termination, Termination::ReachedRmax);
}

#[test]
fn subcritical_large_amplitude_changes_sign() {
    let traj = integrate(&params(3, 2.0, 20.0), 30.0, 1e-10).unwrap();
    assert!(traj.zero_count() >= 1);
    let zero = traj.zeros().next().unwrap();
    assert!(zero.value.abs() > 1e-12, "transversal zero");
}

#[test]
fn zeros_alternate_with_critical_points() {
    let traj = integrate(&params(3, 2.0, 50.0), 40.0, 1e-10).unwrap();
    assert!(traj.zero_count() >= 2);
    let mut last_kind = None;
    for e in &traj.events {
        if e.kind == EventKind::Zero {
            assert_ne!(last_kind, Some(EventKind::Zero), "zeros separated by a critical point");
        }
        last_kind = Some(e.kind);
    }
    // events sorted with contiguous indices
    for (i, e) in traj.events.iter().enumerate() {
        assert_eq!(e.index, i);
    }
    for w in traj.events.windows(2) {
        assert!(w[0].r < w[1].r);
    }
}

#[test]
fn sign_symmetry_under_negation() {
    for (p, alpha) in [(2.0, 1.5), (6.0, 0.8), (0.5, 1.0)] {
        let plus = integrate(&params(3, p, alpha), 5.0, 1e-10).unwrap();
        let minus = integrate(&params(3, p, -alpha), 5.0, 1e-10).unwrap();
        assert_eq!(plus.samples.len(), minus.samples.len());
        for (a, b) in plus.samples.iter().zip(minus.samples.iter()) {
            assert_eq!(a.r, b.r);
            assert_abs_diff_eq!(a.u, -b.u, epsilon = 1e-14 * alpha.abs().max(1.0));
            assert_abs_diff_eq!(a.v, -b.v, epsilon = 1e-14 * alpha.abs().max(1.0));
        }
    }
}

#[test]
fn weighted_slope_decreases_while_positive() {
    // (sinh r)^(n-1) u' strictly decreasing on the first positivity interval
    let traj = integrate(&params(3, 6.0, 1.0), 20.0, 1e-11).unwrap();
    let mut prev = f64::INFINITY;
    for s in traj.samples.iter().skip(1) {
        let w = sinh_pow(3, s.r) * s.v;
        assert!(w < prev, "weighted slope must decrease, r = {}", s.r);
        prev = w;
    }
}

#[test]
fn tolerance_refinement_converges() {
    let p = params(3, 2.0, 4.0);
    for tol in [1e-6, 1e-8, 1e-10] {
        let coarse = integrate(&p, 20.0, tol).unwrap();
        let fine = integrate(&p, 20.0, tol / 2.0).unwrap();
        let mid = coarse.eval(10.0).unwrap();
        let mid_f = fine.eval(10.0).unwrap();
        let delta = (mid.u - mid_f.u).abs();
        assert!(
            delta < 10.0 * tol * mid.u.abs().max(1e-3),
            "tol {tol:e}: delta {delta:e} vs u {0:e}",
            mid.u
        );
    }
}

#[test]
fn dense_output_matches_samples() {
    let traj = integrate(&params(3, 2.0, 6.5), 30.0, 1e-10).unwrap();
    for s in &traj.samples {
        let e = traj.eval(s.r).unwrap();
        assert_abs_diff_eq!(e.u, s.u, epsilon = 1e-9 * s.u.abs().max(1.0));
        assert_abs_diff_eq!(e.v, s.v, epsilon = 1e-9 * s.v.abs().max(1.0));
    }
    assert!(traj.eval(-1.0).is_none());
    assert!(traj.eval(31.0).is_none());
}

#[test]
fn euclidean_linear_mode_is_sinc() {
    // u'' + (2/r) u' + u = 0, u(0)=1 has solution sin(r)/r
    let traj = integrate_euclidean(3, Forcing::Linear { c: 1.0 }, 1.0, 10.0, 1e-11).unwrap();
    let first = traj.first_zero().expect("sinc vanishes at pi");
    assert_abs_diff_eq!(first, std::f64::consts::PI, epsilon = 1e-8);
    for r in [0.5, 1.0, 2.0, 2.5] {
        let s = traj.eval(r).unwrap();
        assert_relative_eq!(s.u, r.sin() / r, max_relative = 1e-8);
    }
    assert_eq!(traj.samples[0].v, 0.0, "startup keeps u'(0) = 0");
}

#[test]
fn euclidean_power_first_zero_consistent_across_tolerances() {
    let coarse = integrate_euclidean(3, Forcing::Power { p: 2.0 }, 1.0, 10.0, 1e-8).unwrap();
    let fine = integrate_euclidean(3, Forcing::Power { p: 2.0 }, 1.0, 10.0, 1e-11).unwrap();
    let s0_coarse = coarse.first_zero().unwrap();
    let s0_fine = fine.first_zero().unwrap();
    assert_abs_diff_eq!(s0_coarse, s0_fine, epsilon = 1e-6);
    // loose sanity bracket for the profile's first zero
    assert!(s0_fine > 4.0 && s0_fine < 4.7, "S0 = {s0_fine}");
}

#[test]
fn curvature_rescale_identity_and_amplitude_map() {
    let p = params(3, 2.0, 1.0);
    let (unit, tr) = rescale_curvature(&p).unwrap();
    assert_eq!(unit, p);
    assert_eq!(tr.pull_back(&State { r: 1.0, u: 2.0, v: 3.0 }).u, 2.0);

    // ground-state amplitude map: alpha_c = c^(2/(p-1)) * alpha_unit
    let c2 = Params::with_curvature(3, 2.0, 2.0, 24.0).unwrap();
    let (unit2, tr2) = rescale_curvature(&c2).unwrap();
    assert_relative_eq!(unit2.alpha, 6.0, max_relative = 1e-14);
    assert_relative_eq!(tr2.amplitude_from_unit(6.0), 24.0, max_relative = 1e-14);

    let linear = params(3, 1.0, 1.0);
    assert!(matches!(
        rescale_curvature(&linear),
        Err(OdeError::LinearCurvatureRescale)
    ));
}

#[test]
fn curvature_rescale_matches_direct_solve() {
    // solve the c=2 equation at alpha = 4 and the unit equation at alpha = 1;
    // the pullback of the unit trajectory must match the direct one
    let direct = integrate(
        &Params::with_curvature(3, 2.0, 2.0, 4.0).unwrap(),
        5.0,
        1e-11,
    )
    .unwrap();
    let (unit_params, tr) = rescale_curvature(&direct.params).unwrap();
    assert_relative_eq!(unit_params.alpha, 1.0, max_relative = 1e-14);
    let unit = integrate(&unit_params, 10.0, 1e-11).unwrap();

    for k in 0..=50 {
        let r_hat = 5.0 * k as f64 / 50.0;
        let direct_state = direct.eval(r_hat).unwrap();
        let unit_state = unit.eval(2.0 * r_hat).unwrap();
        let pulled = tr.pull_back(&unit_state);
        assert_abs_diff_eq!(pulled.r, r_hat, epsilon = 1e-12);
        assert_abs_diff_eq!(direct_state.u, pulled.u, epsilon = 1e-6);
    }
}

#[test]
fn stop_after_first_zero() {
    let traj = integrate_until_zeros(&params(3, 2.0, 20.0), 30.0, 1e-10, 1).unwrap();
    assert_eq!(traj.termination, Termination::EventStop);
    assert_eq!(traj.zero_count(), 1);
    let full = integrate(&params(3, 2.0, 20.0), 30.0, 1e-10).unwrap();
    assert_abs_diff_eq!(
        traj.first_zero().unwrap(),
        full.first_zero().unwrap(),
        epsilon = 1e-9
    );
}

#[test]
fn underflow_terminates_long_linear_run() {
    // decay rate lambda_1(0.99) = 0.9 crosses the 1e-280 floor near r = 716
    let traj = integrate_linear(3, 0.99, 1.0, 900.0, 1e-8).unwrap();
    assert_eq!(traj.termination, Termination::Underflow);
    assert!(traj.r_end() < 900.0);
}

#[test]
fn invalid_inputs_are_rejected() {
    let p = params(3, 2.0, 1.0);
    assert!(matches!(
        integrate(&p, 10.0, 1e-2),
        Err(OdeError::InvalidTolerance(_))
    ));
    assert!(matches!(
        integrate(&p, 10.0, 1e-14),
        Err(OdeError::InvalidTolerance(_))
    ));
    assert!(matches!(
        integrate(&p, -1.0, 1e-10),
        Err(OdeError::InvalidRmax(_))
    ));
    assert!(matches!(
        integrate(&p, f64::INFINITY, 1e-10),
        Err(OdeError::InvalidRmax(_))
    ));
}

#[test]
fn euclidean_blowup_limit_converges() {
    // v_lambda(s) = lambda^(-2/(p-1)) u(s/lambda) with alpha = lambda^(2/(p-1))
    // approaches the Euclidean profile; error should drop by >= 5x per decade
    let reference = integrate_euclidean(3, Forcing::Power { p: 2.0 }, 1.0, 4.0, 1e-12).unwrap();
    let sup_err = |lambda: f64| {
        let alpha = lambda * lambda; // p = 2
        let traj = integrate(&params(3, 2.0, alpha), 4.0 / lambda, 1e-12).unwrap();
        let mut worst: f64 = 0.0;
        for k in 1..=80 {
            let s = 4.0 * k as f64 / 80.0;
            let v = traj.eval(s / lambda).map(|st| st.u / alpha);
            let v_ref = reference.eval(s).map(|st| st.u);
            if let (Some(v), Some(v_ref)) = (v, v_ref) {
                worst = worst.max((v - v_ref).abs());
            }
        }
        worst
    };
    let e2 = sup_err(1e2);
    let e3 = sup_err(1e3);
    assert!(e3 < e2 / 5.0, "blow-up convergence: {e2:e} -> {e3:e}");
}
