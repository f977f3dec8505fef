//! Hyperbolic radial kernels and special functions.
//!
//! Everything here is a pure function of the problem data `(n, p, c, alpha)`:
//! the volume integral `phi_n`, the sign function `psi_p` driving the
//! weighted-energy monotonicity, the slow-decay constant `c_np`, the
//! spectral pair `lambda_pair`, and the exponent regime classification.

use thiserror::Error;

/// Errors for invalid problem data or out-of-regime requests.
#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("dimension must be at least 2, got {0}")]
    InvalidDimension(u32),
    #[error("exponent must be positive and finite, got {0}")]
    InvalidExponent(f64),
    #[error("curvature scale must be positive and finite, got {0}")]
    InvalidCurvature(f64),
    #[error("initial amplitude must be finite, got {0}")]
    InvalidAmplitude(f64),
    #[error("slow-decay constant requires p > 1, got {0}")]
    ExponentNotSuperlinear(f64),
    #[error("spectral parameter {c} exceeds the gap {gap}; the mode is oscillatory")]
    AboveSpectralGap { c: f64, gap: f64 },
    #[error("operation requires the subcritical regime, got {0:?}")]
    UnsupportedRegime(RegimeTag),
}

/// Exponent ranges with qualitatively different solution behavior.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeTag {
    Sublinear,
    Linear,
    Subcritical,
    Supercritical,
}

impl RegimeTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegimeTag::Sublinear => "sublinear",
            RegimeTag::Linear => "linear",
            RegimeTag::Subcritical => "subcritical",
            RegimeTag::Supercritical => "supercritical",
        }
    }
}

/// Regime of an exponent `p` in dimension `n`.
///
/// `critical_boundary` is set when `p` equals `(n+2)/(n-2)` up to a relative
/// comparison of `1e-12` (users type decimals, so exact float equality would
/// miss the boundary).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regime {
    pub tag: RegimeTag,
    pub critical_boundary: bool,
}

impl Regime {
    pub fn is_subcritical(&self) -> bool {
        self.tag == RegimeTag::Subcritical
    }
}

/// Problem instance: dimension, exponent, curvature scale, initial amplitude.
///
/// The metric has curvature `-c^2`; `c = 1` is the reference case. `alpha`
/// is the shooting value `u(0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    pub n: u32,
    pub p: f64,
    pub c: f64,
    pub alpha: f64,
}

impl Params {
    /// Unit-curvature instance.
    pub fn new(n: u32, p: f64, alpha: f64) -> Result<Self, GeometryError> {
        Self::with_curvature(n, p, 1.0, alpha)
    }

    pub fn with_curvature(n: u32, p: f64, c: f64, alpha: f64) -> Result<Self, GeometryError> {
        if n < 2 {
            return Err(GeometryError::InvalidDimension(n));
        }
        if !(p > 0.0) || !p.is_finite() {
            return Err(GeometryError::InvalidExponent(p));
        }
        if !(c > 0.0) || !c.is_finite() {
            return Err(GeometryError::InvalidCurvature(c));
        }
        if !alpha.is_finite() {
            return Err(GeometryError::InvalidAmplitude(alpha));
        }
        Ok(Params { n, p, c, alpha })
    }

    pub fn regime(&self) -> Regime {
        classify_regime(self.n, self.p).expect("params validated at construction")
    }
}

/// Critical exponent `(n+2)/(n-2)` for `n >= 3`.
pub fn critical_exponent(n: u32) -> Option<f64> {
    if n >= 3 {
        Some((n as f64 + 2.0) / (n as f64 - 2.0))
    } else {
        None
    }
}

/// Classify the exponent `p` in dimension `n`.
///
/// Sublinear for `0 < p < 1`, linear at `p = 1`, and for `n >= 3` the split
/// at `(n+2)/(n-2)` into subcritical/supercritical. In dimension 2 every
/// `p > 1` is subcritical.
pub fn classify_regime(n: u32, p: f64) -> Result<Regime, GeometryError> {
    if n < 2 {
        return Err(GeometryError::InvalidDimension(n));
    }
    if !(p > 0.0) || !p.is_finite() {
        return Err(GeometryError::InvalidExponent(p));
    }
    if p < 1.0 {
        return Ok(Regime {
            tag: RegimeTag::Sublinear,
            critical_boundary: false,
        });
    }
    if p == 1.0 {
        return Ok(Regime {
            tag: RegimeTag::Linear,
            critical_boundary: false,
        });
    }
    match critical_exponent(n) {
        None => Ok(Regime {
            tag: RegimeTag::Subcritical,
            critical_boundary: false,
        }),
        Some(pc) => {
            let boundary = (p - pc).abs() <= 1e-12 * pc;
            if boundary || p >= pc {
                Ok(Regime {
                    tag: RegimeTag::Supercritical,
                    critical_boundary: boundary,
                })
            } else {
                Ok(Regime {
                    tag: RegimeTag::Subcritical,
                    critical_boundary: false,
                })
            }
        }
    }
}

/// `coth r` with the two-term series below `r = 1e-8` to avoid the
/// cancellation in `cosh/sinh` near zero. Callers handle `r = 0` themselves.
pub fn coth_regularized(r: f64) -> f64 {
    if r < 1e-8 {
        1.0 / r + r / 3.0
    } else {
        1.0 / r.tanh()
    }
}

/// `ln(sinh r)` without overflow for large `r`.
pub fn ln_sinh(r: f64) -> f64 {
    if r > 20.0 {
        r - std::f64::consts::LN_2 + (-(-2.0 * r).exp()).ln_1p()
    } else {
        r.sinh().ln()
    }
}

/// `(sinh r)^(n-1)`, going through log space once the direct power would
/// overflow an intermediate.
pub fn sinh_pow(n: u32, r: f64) -> f64 {
    let m = (n - 1) as i32;
    if m == 0 {
        return 1.0;
    }
    let ln = m as f64 * ln_sinh(r);
    if ln.abs() < 650.0 {
        if r > 20.0 {
            ln.exp()
        } else {
            r.sinh().powi(m)
        }
    } else {
        ln.exp()
    }
}

/// Volume integral of the hyperbolic sphere: `phi_n(r) = int_0^r (sinh s)^(n-1) ds`.
///
/// For `r >= 1` this is the antiderivative reduction
/// `I_m = sinh^(m-1)(r) cosh(r)/m - ((m-1)/m) I_(m-2)` with bases
/// `I_0 = r`, `I_1 = cosh r - 1 = 2 sinh^2(r/2)`, switching to
/// ratio-times-power form once `(sinh r)^(n-1)` leaves the direct range.
/// Below `r = 1` the reduction cancels (the result scales like `r^n`
/// while its terms scale like `r^(n-2)`), so the all-positive power
/// series of `(sinh s / s)^(n-1)` is integrated term by term instead.
/// Monotone increasing, `phi_n(0) = 0`.
pub fn phi_n(n: u32, r: f64) -> f64 {
    assert!(n >= 2, "phi_n requires n >= 2");
    assert!(r >= 0.0, "phi_n requires r >= 0");
    if r == 0.0 {
        return 0.0;
    }
    if r < 1.0 {
        return phi_series(n, r);
    }
    let m = n - 1;
    if m as f64 * ln_sinh(r) < 600.0 {
        phi_reduction(m, r)
    } else {
        phi_n_ratio(n, r) * sinh_pow(n, r)
    }
}

fn phi_reduction(m_target: u32, r: f64) -> f64 {
    let s = r.sinh();
    let c = r.cosh();
    let half = (0.5 * r).sinh();
    let mut m = m_target % 2;
    let mut val = if m == 0 { r } else { 2.0 * half * half };
    while m < m_target {
        let m2 = m + 2;
        val = (s.powi(m2 as i32 - 1) * c - (m2 - 1) as f64 * val) / m2 as f64;
        m = m2;
    }
    val
}

/// Term-by-term integral of `s^(n-1) (sinh s / s)^(n-1)`. The power series
/// of `(sinh s / s)^m` has nonnegative coefficients, so the evaluation is
/// cancellation free; truncation is driven below 1e-18 relative.
fn phi_series(n: u32, r: f64) -> f64 {
    let mu = (n - 1) as usize;
    let x = mu as f64 * r * r / 6.0;
    let terms = (3.0 * x.ceil() + 30.0) as usize;
    // base series sinh s / s = sum_j w^j / (2j+1)!, w = s^2
    let mut base = vec![0.0f64; terms];
    base[0] = 1.0;
    let mut fact = 1.0f64;
    for (j, b) in base.iter_mut().enumerate().skip(1) {
        fact *= (2 * j) as f64 * (2 * j + 1) as f64;
        *b = 1.0 / fact;
    }
    let mul = |a: &[f64], b: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0f64; terms];
        for i in 0..terms {
            if a[i] == 0.0 {
                continue;
            }
            for j in 0..terms - i {
                out[i + j] += a[i] * b[j];
            }
        }
        out
    };
    // (sinh s / s)^mu by binary exponentiation with truncated products
    let mut pow = vec![0.0f64; terms];
    pow[0] = 1.0;
    let mut acc = base;
    let mut e = mu;
    while e > 0 {
        if e & 1 == 1 {
            pow = mul(&pow, &acc);
        }
        e >>= 1;
        if e > 0 {
            acc = mul(&acc, &acc);
        }
    }
    let w = r * r;
    let mut sum = 0.0;
    let mut wj = 1.0;
    for (j, c) in pow.iter().enumerate() {
        sum += c * wj / (n as f64 + 2.0 * j as f64);
        wj *= w;
    }
    r.powi(n as i32) * sum
}

/// `phi_n(r) / (sinh r)^(n-1)`, stable for all `r > 0`.
///
/// Tends to `1/(n-1)` as `r -> inf` and to `0` like `r/n` as `r -> 0`.
pub fn phi_n_ratio(n: u32, r: f64) -> f64 {
    assert!(n >= 2 && r > 0.0);
    let m_target = n - 1;
    if r < 0.5 {
        // direct quotient; the ratio recurrence cancels badly near zero
        return phi_n(n, r) / r.sinh().powi(m_target as i32);
    }
    let coth = coth_regularized(r);
    let s = r.sinh();
    let inv_s2 = if s.is_infinite() { 0.0 } else { 1.0 / (s * s) };
    let mut m = m_target % 2;
    // t_m = I_m / sinh^m
    let mut t = if m == 0 {
        r
    } else {
        (r / 2.0).tanh()
    };
    while m < m_target {
        let m2 = (m + 2) as f64;
        t = coth / m2 - (m2 - 1.0) / m2 * t * inv_s2;
        m += 2;
    }
    t
}

/// The sign function driving the weighted-energy derivative:
/// `psi_p(r) = (p+3)/(2(p+1)) (sinh r)^(n-1) - (n-1) phi_n(r) coth r`,
/// with `psi_p(0) = 0`.
pub fn psi_p(n: u32, p: f64, r: f64) -> f64 {
    assert!(r >= 0.0);
    if r == 0.0 {
        return 0.0;
    }
    sinh_pow(n, r) * psi_p_ratio(n, p, r)
}

/// `psi_p(r) / (sinh r)^(n-1)`; same sign as `psi_p` and bounded, so root
/// finding and sign checks stay well conditioned at large `r`.
pub fn psi_p_ratio(n: u32, p: f64, r: f64) -> f64 {
    (p + 3.0) / (2.0 * (p + 1.0)) - (n as f64 - 1.0) * phi_n_ratio(n, r) * coth_regularized(r)
}

/// Unique positive root of `psi_p` in the subcritical regime, with
/// `psi_p > 0` to its left and `< 0` to its right.
///
/// Bracketing by doubling search, then bisection to relative `1e-12`.
pub fn find_r_np(n: u32, p: f64) -> Result<f64, GeometryError> {
    let regime = classify_regime(n, p)?;
    if regime.tag != RegimeTag::Subcritical {
        return Err(GeometryError::UnsupportedRegime(regime.tag));
    }
    let f = |r: f64| psi_p_ratio(n, p, r);
    let mut lo = 1e-3;
    if f(lo) <= 0.0 {
        // root is below; shrink until positive
        while f(lo) <= 0.0 && lo > 1e-300 {
            lo /= 2.0;
        }
    }
    let mut hi = 2.0 * lo.max(0.5);
    let mut guard = 0;
    while f(hi) >= 0.0 {
        hi *= 2.0;
        guard += 1;
        if guard > 60 {
            return Err(GeometryError::UnsupportedRegime(regime.tag));
        }
    }
    while hi - lo > 1e-12 * hi {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Slow-decay constant `c(n,p) = ((n-1)/(p-1))^(1/(p-1))` for `p > 1`.
pub fn c_np(n: u32, p: f64) -> Result<f64, GeometryError> {
    if n < 2 {
        return Err(GeometryError::InvalidDimension(n));
    }
    if !(p > 1.0) {
        return Err(GeometryError::ExponentNotSuperlinear(p));
    }
    Ok(((n as f64 - 1.0) / (p - 1.0)).powf(1.0 / (p - 1.0)))
}

/// Spectral gap `(n-1)^2 / 4`, exact in f64 (integer over four).
pub fn spectral_gap(n: u32) -> f64 {
    let m = (n - 1) as u64;
    (m * m) as f64 / 4.0
}

/// Decay-rate pair for the linear mode below the spectral gap:
/// `lambda_{1,2} = ((n-1) -/+ sqrt((n-1)^2 - 4c)) / 2`.
///
/// Requires `0 < c <= (n-1)^2/4`; above the gap the mode oscillates and
/// callers branch elsewhere.
pub fn lambda_pair(n: u32, c: f64) -> Result<(f64, f64), GeometryError> {
    if n < 2 {
        return Err(GeometryError::InvalidDimension(n));
    }
    let gap = spectral_gap(n);
    if !(c > 0.0) || !c.is_finite() {
        return Err(GeometryError::InvalidCurvature(c));
    }
    if c > gap {
        return Err(GeometryError::AboveSpectralGap { c, gap });
    }
    let m = n as f64 - 1.0;
    let disc = (m * m - 4.0 * c).max(0.0).sqrt();
    Ok(((m - disc) / 2.0, (m + disc) / 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    /// Adaptive Simpson quadrature, test-only oracle for phi_n.
    fn simpson_adaptive(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
            (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
        }
        fn recurse(
            f: &impl Fn(f64) -> f64,
            a: f64,
            b: f64,
            whole: f64,
            tol: f64,
            depth: u32,
        ) -> f64 {
            let m = 0.5 * (a + b);
            let left = simpson(f, a, m);
            let right = simpson(f, m, b);
            if depth > 50 || (left + right - whole).abs() <= 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                recurse(f, a, m, left, tol / 2.0, depth + 1)
                    + recurse(f, m, b, right, tol / 2.0, depth + 1)
            }
        }
        recurse(f, a, b, simpson(f, a, b), tol, 0)
    }

    fn phi_oracle(n: u32, r: f64) -> f64 {
        let f = |s: f64| s.sinh().powi(n as i32 - 1);
        // pilot pass fixes the scale so the tolerance is relative
        let pilot = simpson_adaptive(&f, 0.0, r, 1e-8 * (f(r) * r).abs().max(1e-30));
        simpson_adaptive(&f, 0.0, r, 1e-14 * pilot.abs())
    }

    #[test]
    fn regime_examples() {
        assert_eq!(classify_regime(3, 6.0).unwrap().tag, RegimeTag::Supercritical);
        assert_eq!(classify_regime(3, 2.0).unwrap().tag, RegimeTag::Subcritical);
        assert_eq!(classify_regime(3, 0.5).unwrap().tag, RegimeTag::Sublinear);
        assert_eq!(classify_regime(3, 1.0).unwrap().tag, RegimeTag::Linear);
        let boundary = classify_regime(3, 5.0).unwrap();
        assert_eq!(boundary.tag, RegimeTag::Supercritical);
        assert!(boundary.critical_boundary);
        // decimals typed at the boundary still flag it
        let near = classify_regime(3, 5.0 * (1.0 + 5e-13)).unwrap();
        assert!(near.critical_boundary);
    }

    #[test]
    fn regime_dimension_two_is_subcritical_for_all_superlinear() {
        for p in [1.1f64, 2.0, 5.0, 50.0] {
            assert_eq!(classify_regime(2, p).unwrap().tag, RegimeTag::Subcritical);
        }
    }

    #[test]
    fn regime_invalid_inputs() {
        assert!(classify_regime(1, 2.0).is_err());
        assert!(classify_regime(3, 0.0).is_err());
        assert!(classify_regime(3, -1.0).is_err());
        assert!(classify_regime(3, f64::NAN).is_err());
    }

    #[test]
    fn phi_dimension_two_closed_form() {
        for r in [0.1, 0.5, 1.0, 3.0, 10.0] {
            assert_relative_eq!(phi_n(2, r), r.cosh() - 1.0, max_relative = 1e-13);
        }
    }

    #[test]
    fn phi_three_at_one_matches_quadrature() {
        // (sinh 1 cosh 1 - 1)/2, frozen from the quadrature oracle
        let expected = 0.406_715_101_961_754_7;
        assert_relative_eq!(phi_n(3, 1.0), expected, max_relative = 1e-12);
        assert_relative_eq!(phi_oracle(3, 1.0), expected, max_relative = 1e-10);
    }

    #[test]
    fn phi_small_r_leading_order() {
        for n in 2..=6u32 {
            let r: f64 = 1e-3;
            let lead = r.powi(n as i32) / n as f64;
            let rel = (phi_n(n, r) - lead).abs() / lead;
            assert!(rel < 2e-6, "n={n}: relative deviation {rel}");
        }
    }

    #[test]
    fn phi_matches_quadrature_oracle() {
        for n in 2..=8u32 {
            for k in 0..40 {
                let r = 0.1 + (20.0 - 0.1) * k as f64 / 39.0;
                let q = phi_oracle(n, r);
                assert_relative_eq!(phi_n(n, r), q, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn phi_ratio_limit_and_bound() {
        for n in 2..=6u32 {
            let ratio = phi_n_ratio(n, 30.0);
            assert_abs_diff_eq!(ratio, 1.0 / (n as f64 - 1.0), epsilon = 1e-6);
        }
        // strict inequality while the gap (~ e^{-2r}) is resolvable in f64
        for n in 2..=8u32 {
            for k in 1..=60 {
                let r = 0.25 * k as f64;
                let ratio = phi_n_ratio(n, r);
                assert!(ratio < 1.0 / (n as f64 - 1.0), "n={n} r={r}: {ratio}");
            }
            for k in 61..=80 {
                let r = 0.25 * k as f64;
                let lim = 1.0 / (n as f64 - 1.0);
                let ratio = phi_n_ratio(n, r);
                assert!(ratio <= lim * (1.0 + 1e-15), "n={n} r={r}: {ratio} vs {lim}");
            }
        }
    }

    #[test]
    fn phi_large_r_does_not_overflow_intermediates() {
        // n = 10 at r = 200 lives far beyond direct (sinh r)^9
        let v = phi_n(10, 200.0);
        assert!(v.is_infinite() || v > 1e300);
        let ratio = phi_n_ratio(10, 200.0);
        assert_relative_eq!(ratio, 1.0 / 9.0, max_relative = 1e-10);
    }

    #[test]
    fn psi_sign_patterns() {
        for r in [0.5, 1.0, 2.0, 5.0] {
            assert!(psi_p(3, 6.0, r) < 0.0, "supercritical psi at {r}");
            assert!(psi_p(3, 0.5, r) > 0.0, "sublinear psi at {r}");
        }
        assert_eq!(psi_p(3, 2.0, 0.0), 0.0);
        // subcritical: one sign change
        let root = find_r_np(3, 2.0).unwrap();
        assert!(psi_p(3, 2.0, root - 0.1) > 0.0);
        assert!(psi_p(3, 2.0, root + 0.1) < 0.0);
        assert!(psi_p_ratio(3, 2.0, root).abs() < 1e-10);
        for k in 1..=40 {
            let r = 0.5 * k as f64;
            let v = psi_p(3, 2.0, r);
            assert_eq!(v > 0.0, r < root, "psi(3,2) sign at {r}");
        }
    }

    #[test]
    fn r_np_requires_subcritical() {
        assert!(matches!(
            find_r_np(3, 6.0),
            Err(GeometryError::UnsupportedRegime(RegimeTag::Supercritical))
        ));
        assert!(matches!(
            find_r_np(3, 0.5),
            Err(GeometryError::UnsupportedRegime(RegimeTag::Sublinear))
        ));
    }

    #[test]
    fn slow_decay_constant() {
        assert_relative_eq!(c_np(3, 2.0).unwrap(), 2.0, max_relative = 1e-15);
        assert_relative_eq!(c_np(3, 3.0).unwrap(), 1.0, max_relative = 1e-15);
        // (2/5)^(1/5), frozen from direct high-precision evaluation
        assert_relative_eq!(
            c_np(3, 6.0).unwrap(),
            0.832_553_207_401_873,
            max_relative = 1e-14
        );
        assert!(c_np(3, 1.0).is_err());
        assert!(c_np(3, 0.5).is_err());
    }

    #[test]
    fn lambda_pair_examples() {
        let (l1, l2) = lambda_pair(3, 1.0).unwrap();
        assert_eq!((l1, l2), (1.0, 1.0));
        let (l1, l2) = lambda_pair(3, 0.5).unwrap();
        assert_relative_eq!(l1, 0.292_893_218_813_452_5, max_relative = 1e-14);
        assert_relative_eq!(l2, 1.707_106_781_186_547_5, max_relative = 1e-14);
        assert!(matches!(
            lambda_pair(3, 2.0),
            Err(GeometryError::AboveSpectralGap { .. })
        ));
    }

    #[test]
    fn params_validation() {
        assert!(Params::new(3, 2.0, 1.0).is_ok());
        assert!(Params::new(1, 2.0, 1.0).is_err());
        assert!(Params::new(3, -2.0, 1.0).is_err());
        assert!(Params::with_curvature(3, 2.0, 0.0, 1.0).is_err());
        assert!(Params::new(3, 2.0, f64::INFINITY).is_err());
    }
}
