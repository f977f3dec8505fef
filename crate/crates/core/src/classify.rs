//! Solution-level classification: sign class and zero counts,
//! intersection counts between solutions, separatrix bisection on the
//! initial amplitude, the first-zero map, and zero-count thresholds.

use crate::diagnostics::{decay_fit_window, DecayEstimate, DecayLaw};
use crate::geometry::{c_np, classify_regime, GeometryError, Params, Regime, RegimeTag};
use crate::ode::{
    integrate, integrate_until_zeros, Event, OdeError, Termination, Trajectory,
};
use crate::parallel::par_map;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error("comparison requires distinct initial data")]
    DegenerateComparison,
    #[error("curves solve different problems (n or p differ)")]
    MismatchedProblems,
    #[error("curves share no overlap range")]
    NoOverlap,
    #[error("bracket expansion failed: {0}")]
    BracketFailed(String),
}

/// Sign behavior of a trajectory over the integrated range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignClass {
    PositiveForever,
    NegativeForever,
    SignChanging(usize),
    /// Sublinear runs: the count is what the window showed, the paper-level
    /// statement ("infinitely many") is never claimed literally.
    OscillatoryInfinite(usize),
}

impl SignClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            SignClass::PositiveForever => "positive-forever",
            SignClass::NegativeForever => "negative-forever",
            SignClass::SignChanging(_) => "sign-changing",
            SignClass::OscillatoryInfinite(_) => "oscillatory-infinite",
        }
    }

    pub fn zero_count(&self) -> usize {
        match self {
            SignClass::PositiveForever | SignClass::NegativeForever => 0,
            SignClass::SignChanging(k) | SignClass::OscillatoryInfinite(k) => *k,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeparatrixSide {
    Below,
    Above,
    AtSeparatrix,
    NotApplicable,
}

impl SeparatrixSide {
    pub fn as_str(&self) -> &'static str {
        match self {
            SeparatrixSide::Below => "below",
            SeparatrixSide::Above => "above",
            SeparatrixSide::AtSeparatrix => "at-separatrix",
            SeparatrixSide::NotApplicable => "not-applicable",
        }
    }
}

/// Full classification verdict for one problem instance.
#[derive(Debug, Clone)]
pub struct Report {
    pub params: Params,
    pub regime: Regime,
    pub sign_class: SignClass,
    pub decay: Option<DecayEstimate>,
    pub separatrix_side: SeparatrixSide,
    pub zeros: Vec<Event>,
    pub termination: Termination,
    pub r_max_used: f64,
    pub tol_used: f64,
}

/// Zero events of a trajectory together with their count.
pub fn count_zeros(traj: &Trajectory) -> (usize, Vec<Event>) {
    let zeros: Vec<Event> = traj.zeros().copied().collect();
    (zeros.len(), zeros)
}

/// Count zeros and confirm the count is stable when the tolerance is
/// tightened tenfold.
pub fn verified_zero_count(
    params: &Params,
    r_max: f64,
    tol: f64,
) -> Result<(usize, bool), ClassifyError> {
    let base = integrate(params, r_max, tol)?.zero_count();
    let refined = integrate(params, r_max, tol / 10.0)?.zero_count();
    Ok((base, base == refined))
}

/// Anything that evaluates as a radial profile `u(r)` for one problem.
pub trait RadialCurve {
    fn problem(&self) -> (u32, f64);
    fn span(&self) -> (f64, f64);
    fn knots_in(&self, lo: f64, hi: f64, out: &mut Vec<f64>);
    fn value_at(&self, r: f64) -> f64;
}

impl RadialCurve for Trajectory {
    fn problem(&self) -> (u32, f64) {
        (self.params.n, self.params.p)
    }

    fn span(&self) -> (f64, f64) {
        (0.0, self.r_end())
    }

    fn knots_in(&self, lo: f64, hi: f64, out: &mut Vec<f64>) {
        out.extend(
            self.samples
                .iter()
                .map(|s| s.r)
                .filter(|r| *r >= lo && *r <= hi),
        );
    }

    fn value_at(&self, r: f64) -> f64 {
        self.eval(r).map(|s| s.u).unwrap_or(0.0)
    }
}

/// Count transversal sign changes of `u_a - u_b` on the overlap of the two
/// curves (optionally restricted to `window`), on a merged knot grid with
/// bisection refinement of each crossing.
pub fn count_intersections<A, B>(
    a: &A,
    b: &B,
    window: Option<(f64, f64)>,
) -> Result<usize, ClassifyError>
where
    A: RadialCurve + ?Sized,
    B: RadialCurve + ?Sized,
{
    let (na, pa) = a.problem();
    let (nb, pb) = b.problem();
    if na != nb || pa != pb {
        return Err(ClassifyError::MismatchedProblems);
    }
    let (alo, ahi) = a.span();
    let (blo, bhi) = b.span();
    let mut lo = alo.max(blo);
    let mut hi = ahi.min(bhi);
    if let Some((wlo, whi)) = window {
        lo = lo.max(wlo);
        hi = hi.min(whi);
    }
    if !(hi > lo) {
        return Err(ClassifyError::NoOverlap);
    }
    if a.value_at(lo) - b.value_at(lo) == 0.0 {
        return Err(ClassifyError::DegenerateComparison);
    }

    let mut grid = vec![lo, hi];
    a.knots_in(lo, hi, &mut grid);
    b.knots_in(lo, hi, &mut grid);
    grid.sort_by(|x, y| x.partial_cmp(y).expect("finite knots"));
    grid.dedup();

    let diff = |r: f64| a.value_at(r) - b.value_at(r);
    let mut count = 0usize;
    let mut prev: Option<(f64, f64)> = None;
    for &r in &grid {
        let w = diff(r);
        let scale = a.value_at(r).abs().max(b.value_at(r).abs()).max(1e-300);
        if w.abs() <= 1e-12 * scale {
            continue;
        }
        if let Some((pr, pw)) = prev {
            if pw * w < 0.0 {
                // refine to confirm a genuine crossing inside the bracket
                let root = bisect(&diff, pr, r);
                if root.is_finite() {
                    count += 1;
                }
            }
        }
        prev = Some((r, w));
    }
    Ok(count)
}

fn bisect(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        if b - a <= 1e-12 * b.abs().max(1.0) {
            break;
        }
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fa * fm < 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    0.5 * (a + b)
}

/// Integrate one instance and aggregate the verdict. Integrator anomalies
/// surface in `Report::termination`, never as errors.
pub fn classify_solution(params: &Params, r_max: f64, tol: f64) -> Result<Report, ClassifyError> {
    let traj = integrate(params, r_max, tol)?;
    Ok(classify_trajectory(&traj))
}

/// Classification of an already-integrated trajectory.
pub fn classify_trajectory(traj: &Trajectory) -> Report {
    let params = traj.params;
    let regime = params.regime();
    let (k, zeros) = count_zeros(traj);

    let sign_class = if k == 0 {
        if params.alpha >= 0.0 {
            SignClass::PositiveForever
        } else {
            SignClass::NegativeForever
        }
    } else if regime.tag == RegimeTag::Sublinear {
        SignClass::OscillatoryInfinite(k)
    } else {
        SignClass::SignChanging(k)
    };

    let separatrix_side = if regime.tag == RegimeTag::Subcritical {
        if k == 0 {
            SeparatrixSide::Below
        } else {
            SeparatrixSide::Above
        }
    } else {
        SeparatrixSide::NotApplicable
    };

    let decay = fit_decay(traj, &regime, &zeros);

    Report {
        params,
        regime,
        sign_class,
        decay,
        separatrix_side,
        zeros,
        termination: traj.termination,
        r_max_used: traj.r_end(),
        tol_used: traj.tol,
    }
}

/// Regime-appropriate decay hypothesis on the final branch: polynomial for
/// super/subcritical (falling back to exponential if the final branch is a
/// fast-decay one), envelope for sublinear, exponential for linear.
fn fit_decay(traj: &Trajectory, regime: &Regime, zeros: &[Event]) -> Option<DecayEstimate> {
    let r_end = traj.r_end();
    let mut lo = (0.5 * r_end).max(10.0);
    if let Some(last) = zeros.last() {
        lo = lo.max(last.r + 0.02 * (r_end - last.r).max(0.0));
    }
    if !(lo < r_end) {
        return None;
    }
    let window = (lo, r_end);
    match regime.tag {
        RegimeTag::Sublinear => decay_fit_window(traj, DecayLaw::SublinearEnvelope, window).ok(),
        RegimeTag::Linear => decay_fit_window(traj, DecayLaw::ExponentialFast, window).ok(),
        _ => {
            let poly = decay_fit_window(traj, DecayLaw::PolynomialSlow, window).ok();
            match poly {
                Some(est) if est.law != DecayLaw::Undetermined => Some(est),
                other => {
                    let exp = decay_fit_window(traj, DecayLaw::ExponentialFast, window).ok();
                    match (other, exp) {
                        (Some(a), Some(b)) => Some(if b.residual < a.residual { b } else { a }),
                        (a, b) => b.or(a),
                    }
                }
            }
        }
    }
}

/// Batch classification over a parameter grid (parallel when the feature
/// is on; results are in input order either way).
pub fn classify_batch(
    grid: &[Params],
    r_max: f64,
    tol: f64,
) -> Result<Vec<Report>, ClassifyError> {
    collect_results(par_map(grid, |p| classify_solution(p, r_max, tol)))
}

/// Sequential twin of [`classify_batch`], kept callable regardless of the
/// feature set for benchmarking and verification.
pub fn classify_batch_seq(
    grid: &[Params],
    r_max: f64,
    tol: f64,
) -> Result<Vec<Report>, ClassifyError> {
    collect_results(grid.iter().map(|p| classify_solution(p, r_max, tol)).collect())
}

fn collect_results<T>(items: Vec<Result<T, ClassifyError>>) -> Result<Vec<T>, ClassifyError> {
    items.into_iter().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeDecision {
    Above,
    Below,
    /// Still positive with no plateau at the largest range; treated as
    /// below, which only slows bisection near the separatrix.
    Undecided,
}

impl ProbeDecision {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProbeDecision::Above => "above",
            ProbeDecision::Below => "below",
            ProbeDecision::Undecided => "undecided",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BisectionStep {
    pub iter: usize,
    pub lo: f64,
    pub hi: f64,
    pub decision: ProbeDecision,
}

#[derive(Debug, Clone)]
pub struct SeparatrixResult {
    pub alpha_star: f64,
    pub probes: usize,
    pub trace: Vec<BisectionStep>,
}

/// Decide whether the amplitude sits above or below the separatrix.
///
/// A detected zero is definite (`Above`). Otherwise the run is positive
/// and `Below` requires the slow-decay plateau: `r^(1/(p-1)) u(r)` enters
/// the 20% band around `c(n,p)` and holds it for one unit of `r` past the
/// onset. The range starts at 40 and doubles to 640 before giving up
/// (`Undecided`).
pub fn separatrix_probe(n: u32, p: f64, alpha: f64, tol: f64) -> Result<ProbeDecision, ClassifyError> {
    let cnp = c_np(n, p)?;
    let rate = 1.0 / (p - 1.0);
    let params = Params::new(n, p, alpha)?;
    let mut r_max = 40.0;
    loop {
        let traj = integrate_until_zeros(&params, r_max, tol, 1)?;
        if traj.zero_count() > 0 {
            return Ok(ProbeDecision::Above);
        }
        if plateau_holds(&traj, rate, cnp) {
            return Ok(ProbeDecision::Below);
        }
        if r_max >= 640.0 {
            return Ok(ProbeDecision::Undecided);
        }
        r_max *= 2.0;
    }
}

fn plateau_holds(traj: &Trajectory, rate: f64, cnp: f64) -> bool {
    let in_band = |q: f64| (q - cnp).abs() <= 0.2 * cnp;
    let r_end = traj.r_end();
    let qs: Vec<(f64, f64)> = traj
        .samples
        .iter()
        .filter(|s| s.r >= 1.0)
        .map(|s| (s.r, s.r.powf(rate) * s.u))
        .collect();
    for i in 0..qs.len() {
        if !in_band(qs[i].1) {
            continue;
        }
        let onset = qs[i].0;
        if onset + 1.0 > r_end {
            return false;
        }
        let held = qs[i..]
            .iter()
            .take_while(|(r, _)| *r <= onset + 1.0)
            .all(|(_, q)| in_band(*q));
        if held {
            return true;
        }
    }
    false
}

/// Locate the separatrix amplitude by bisection on `alpha`.
///
/// The caller's bracket is expanded by doubling/halving until it
/// straddles; expansion past 2^60 fails. Probes at `Undecided` count as
/// below. Returns the midpoint once the bracket is narrower than
/// `tol_alpha`.
pub fn find_separatrix(
    n: u32,
    p: f64,
    bracket: (f64, f64),
    tol_alpha: f64,
    tol: f64,
) -> Result<SeparatrixResult, ClassifyError> {
    let regime = classify_regime(n, p)?;
    if regime.tag != RegimeTag::Subcritical {
        return Err(GeometryError::UnsupportedRegime(regime.tag).into());
    }
    let (mut lo, mut hi) = bracket;
    if !(lo > 0.0 && hi > lo) {
        return Err(ClassifyError::BracketFailed(format!(
            "bracket ({lo}, {hi}) must satisfy 0 < lo < hi"
        )));
    }
    let mut probes = 0usize;
    let mut trace = Vec::new();
    let probe = |alpha: f64, probes: &mut usize| -> Result<ProbeDecision, ClassifyError> {
        *probes += 1;
        separatrix_probe(n, p, alpha, tol)
    };

    // expand until lo is below and hi is above
    let mut guard = 0;
    while probe(lo, &mut probes)? == ProbeDecision::Above {
        hi = lo;
        lo /= 2.0;
        guard += 1;
        if guard > 60 {
            return Err(ClassifyError::BracketFailed(
                "no positive lower endpoint found".into(),
            ));
        }
    }
    guard = 0;
    while probe(hi, &mut probes)? != ProbeDecision::Above {
        lo = hi;
        hi *= 2.0;
        guard += 1;
        if guard > 60 {
            return Err(ClassifyError::BracketFailed(
                "no sign-changing upper endpoint found".into(),
            ));
        }
    }

    let mut iter = 0usize;
    while hi - lo > tol_alpha {
        let mid = 0.5 * (lo + hi);
        let decision = probe(mid, &mut probes)?;
        match decision {
            ProbeDecision::Above => hi = mid,
            ProbeDecision::Below | ProbeDecision::Undecided => lo = mid,
        }
        trace.push(BisectionStep {
            iter,
            lo,
            hi,
            decision,
        });
        iter += 1;
        if iter > 200 {
            return Err(ClassifyError::BracketFailed(
                "bisection failed to converge".into(),
            ));
        }
    }
    Ok(SeparatrixResult {
        alpha_star: 0.5 * (lo + hi),
        probes,
        trace,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct FirstZeroRow {
    pub alpha: f64,
    pub r_alpha: Option<f64>,
}

fn first_zero_impl(
    n: u32,
    p: f64,
    alphas: &[f64],
    tol: f64,
    parallel: bool,
) -> Result<Vec<FirstZeroRow>, ClassifyError> {
    let regime = classify_regime(n, p)?;
    if regime.tag != RegimeTag::Subcritical {
        return Err(GeometryError::UnsupportedRegime(regime.tag).into());
    }
    let worker = |alpha: &f64| -> Result<FirstZeroRow, ClassifyError> {
        let params = Params::new(n, p, *alpha)?;
        let mut r_max = 40.0;
        loop {
            let traj = integrate_until_zeros(&params, r_max, tol, 1)?;
            if let Some(r) = traj.first_zero() {
                return Ok(FirstZeroRow {
                    alpha: *alpha,
                    r_alpha: Some(r),
                });
            }
            if r_max >= 640.0 {
                return Ok(FirstZeroRow {
                    alpha: *alpha,
                    r_alpha: None,
                });
            }
            r_max *= 2.0;
        }
    };
    let rows = if parallel {
        collect_results(par_map(alphas, worker))?
    } else {
        collect_results(alphas.iter().map(worker).collect())?
    };
    let mut rows = rows;
    rows.sort_by(|a, b| a.alpha.partial_cmp(&b.alpha).expect("finite alphas"));
    Ok(rows)
}

/// First-zero location per amplitude, sorted by amplitude. Amplitudes
/// whose solutions stay positive up to the auto-grown range (640) are
/// reported as out-of-domain rows (`r_alpha = None`).
pub fn first_zero_map(
    n: u32,
    p: f64,
    alphas: &[f64],
    tol: f64,
) -> Result<Vec<FirstZeroRow>, ClassifyError> {
    first_zero_impl(n, p, alphas, tol, true)
}

/// Sequential twin of [`first_zero_map`].
pub fn first_zero_map_seq(
    n: u32,
    p: f64,
    alphas: &[f64],
    tol: f64,
) -> Result<Vec<FirstZeroRow>, ClassifyError> {
    first_zero_impl(n, p, alphas, tol, false)
}

/// Outcome of the exploratory zero-count threshold search. Monotonicity of
/// the count in `alpha` is conjectural, so any non-monotone probe pattern
/// is reported instead of a value.
#[derive(Debug, Clone)]
pub enum ThresholdOutcome {
    /// Estimated amplitude where the zero count first reaches `k`.
    Estimate { alpha: f64, probes: Vec<(f64, usize)> },
    Ambiguous { probes: Vec<(f64, usize)>, reason: String },
}

/// Bisect the amplitude where the zero count switches from below `k` to at
/// least `k`, assuming (and auditing) monotonicity within the bracket.
pub fn zero_count_threshold(
    n: u32,
    p: f64,
    k: usize,
    alpha_hi: f64,
    tol_alpha: f64,
    r_max: f64,
    tol: f64,
) -> Result<ThresholdOutcome, ClassifyError> {
    let regime = classify_regime(n, p)?;
    if regime.tag != RegimeTag::Subcritical {
        return Err(GeometryError::UnsupportedRegime(regime.tag).into());
    }
    if k == 0 {
        return Err(ClassifyError::BracketFailed("k must be at least 1".into()));
    }
    let mut probes: Vec<(f64, usize)> = Vec::new();
    let count_at = |alpha: f64, probes: &mut Vec<(f64, usize)>| -> Result<usize, ClassifyError> {
        let params = Params::new(n, p, alpha)?;
        let count = integrate(&params, r_max, tol)?.zero_count();
        probes.push((alpha, count));
        Ok(count)
    };

    let mut hi = alpha_hi;
    if count_at(hi, &mut probes)? < k {
        return Err(ClassifyError::BracketFailed(format!(
            "alpha_hi = {alpha_hi} shows fewer than {k} zeros"
        )));
    }
    let mut lo = alpha_hi / 2.0;
    let mut guard = 0;
    while count_at(lo, &mut probes)? >= k {
        hi = lo;
        lo /= 2.0;
        guard += 1;
        if guard > 60 {
            return Err(ClassifyError::BracketFailed(
                "no amplitude with fewer zeros found".into(),
            ));
        }
    }

    while hi - lo > tol_alpha * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if count_at(mid, &mut probes)? >= k {
            hi = mid;
        } else {
            lo = mid;
        }
    }

    probes.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite alphas"));
    for w in probes.windows(2) {
        if w[1].1 < w[0].1 {
            return Ok(ThresholdOutcome::Ambiguous {
                reason: format!(
                    "zero count drops from {} to {} between alpha = {} and {}",
                    w[0].1, w[1].1, w[0].0, w[1].0
                ),
                probes,
            });
        }
    }
    Ok(ThresholdOutcome::Estimate {
        alpha: 0.5 * (lo + hi),
        probes,
    })
}
