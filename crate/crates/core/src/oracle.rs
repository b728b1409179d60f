//! Exact small-sample coverage, computed without Monte Carlo.
//!
//! The endpoint at an integer index k has P(X_{n:k} < F^{-1}(p)) =
//! I_p(k, n+1-k) in closed form. An interpolated endpoint mixes two
//! adjacent order statistics, so its exceedance probability is a 2-D
//! integral of their joint density over the region where the mix stays
//! below the quantile; that integral is evaluated by iterated adaptive
//! Gauss–Kronrod quadrature with the density in log space.

use crate::error::{Error, Result};
use crate::fractional::decompose;
use crate::quadrature::integrate;
use crate::special::{log_gamma, reg_inc_beta, BetaParams, Probability};
use crate::unconditional::Side;

/// How an exact coverage value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoverageMethod {
    ClosedFormInteger,
    QuadratureInterpolated,
}

/// An exact coverage probability with its numerical error bound.
#[derive(Debug, Clone, Copy)]
pub struct ExactCoverage {
    cp: Probability,
    method: CoverageMethod,
    abs_error_bound: f64,
}

impl ExactCoverage {
    pub fn cp(&self) -> Probability {
        self.cp
    }

    pub fn method(&self) -> CoverageMethod {
        self.method
    }

    pub fn abs_error_bound(&self) -> f64 {
        self.abs_error_bound
    }
}

/// P(U_{n:k} < p) = I_p(k, n+1-k), exact.
fn below_integer(n: usize, k: usize, p: f64) -> Result<f64> {
    let params = BetaParams::new(k as f64, (n + 1 - k) as f64)?;
    Ok(reg_inc_beta(Probability::new(p)?, params)?.value())
}

/// P((1-eps)U_{n:k} + eps*U_{n:k+1} < p) by iterated quadrature.
///
/// Outer variable is the lower order statistic s; for each s the upper one
/// ranges over (s, vmax(s)) with vmax(s) = min(1, (p - (1-eps)s)/eps). The
/// outer integrand has a kink where the sloped bound crosses v = 1, so the
/// outer range is split there.
fn below_interpolated(n: usize, k: usize, eps: f64, p: f64) -> Result<(f64, f64)> {
    debug_assert!(k >= 1 && k < n && eps > 0.0 && eps < 1.0);
    let log_c =
        log_gamma((n + 1) as f64)? - log_gamma(k as f64)? - log_gamma((n - k) as f64)?;
    let pow_lo = (k - 1) as f64;
    let pow_hi = (n - k - 1) as f64;

    let outer_integrand = move |s: f64| -> f64 {
        let vmax = ((p - (1.0 - eps) * s) / eps).min(1.0);
        if vmax <= s {
            return 0.0;
        }
        let (tail_mass, _) = integrate(
            &|v: f64| {
                if pow_hi == 0.0 {
                    1.0
                } else {
                    (pow_hi * (-v).ln_1p()).exp()
                }
            },
            s,
            vmax,
            1e-12,
        );
        let log_weight = if pow_lo == 0.0 {
            log_c
        } else {
            log_c + pow_lo * s.ln()
        };
        log_weight.exp() * tail_mass
    };

    // below the kink the upper statistic is unconstrained (vmax = 1)
    let kink = (p - eps) / (1.0 - eps);
    let mut segments = Vec::with_capacity(2);
    if kink > 0.0 && kink < p {
        segments.push((0.0, kink));
        segments.push((kink, p));
    } else {
        segments.push((0.0, p));
    }
    let mut total = 0.0;
    let mut bound = 5e-12; // inner quadrature contribution
    for (a, b) in segments {
        let (v, e) = integrate(&outer_integrand, a, b, 1e-9);
        total += v;
        bound += e;
    }
    if bound > 1e-8 {
        return Err(Error::Numerical {
            context: "exact coverage quadrature",
            residual: bound,
            iterations: 0,
        });
    }
    Ok((total.clamp(0.0, 1.0), bound))
}

fn cp_from_below(below: f64, side: Side) -> Result<Probability> {
    match side {
        // lower one-sided CI (-inf, endpoint]: covers unless endpoint < q
        Side::Lower => Probability::new(1.0 - below),
        // upper one-sided CI [endpoint, inf): covers iff endpoint < q
        Side::Upper => Probability::new(below),
        Side::TwoSided => Err(Error::domain(
            "two-sided coverage combines two endpoints; use exact_cp_two_sided".to_string(),
        )),
    }
}

/// Exact coverage of a one-sided CI whose endpoint is the order statistic
/// X_{n:k}.
pub fn exact_cp_integer(n: usize, k: usize, p: Probability, side: Side) -> Result<ExactCoverage> {
    if k < 1 || k > n {
        return Err(Error::domain(format!(
            "order statistic index must satisfy 1 <= k <= n, got k={k}, n={n}"
        )));
    }
    let below = below_integer(n, k, p.value())?;
    Ok(ExactCoverage {
        cp: cp_from_below(below, side)?,
        method: CoverageMethod::ClosedFormInteger,
        abs_error_bound: 1e-12,
    })
}

/// Exact coverage of a one-sided CI with an interpolated endpoint at
/// index u; requires a strictly fractional decomposition.
pub fn exact_cp_interpolated(
    n: usize,
    u: Probability,
    p: Probability,
    side: Side,
) -> Result<ExactCoverage> {
    let idx = decompose(u, n)?;
    if idx.epsilon() == 0.0 {
        return Err(Error::domain(format!(
            "index u={} decomposes to an integer; use exact_cp_integer(k={})",
            u.value(),
            idx.k()
        )));
    }
    let (below, bound) = below_interpolated(n, idx.k(), idx.epsilon(), p.value())?;
    Ok(ExactCoverage {
        cp: cp_from_below(below, side)?,
        method: CoverageMethod::QuadratureInterpolated,
        abs_error_bound: bound,
    })
}

/// Exact coverage of a one-sided CI endpoint at index u, dispatching on
/// whether the decomposition is integer or fractional.
pub fn exact_cp(n: usize, u: Probability, p: Probability, side: Side) -> Result<ExactCoverage> {
    let idx = decompose(u, n)?;
    if idx.epsilon() == 0.0 {
        exact_cp_integer(n, idx.k(), p, side)
    } else {
        exact_cp_interpolated(n, u, p, side)
    }
}

/// Exact coverage of the two-sided CI with endpoint indices u_low < u_high:
/// the tails are disjoint, so cp = P(below u_high side) subtracted from
/// P(below u_low side).
pub fn exact_cp_two_sided(
    n: usize,
    u_low: Probability,
    u_high: Probability,
    p: Probability,
) -> Result<ExactCoverage> {
    if u_low.value() >= u_high.value() {
        return Err(Error::domain(format!(
            "two-sided indices must satisfy u_low < u_high, got {} and {}",
            u_low.value(),
            u_high.value()
        )));
    }
    let mut method = CoverageMethod::ClosedFormInteger;
    let mut bound = 0.0;
    let mut below = [0.0; 2];
    for (slot, u) in below.iter_mut().zip([u_low, u_high]) {
        let idx = decompose(u, n)?;
        if idx.epsilon() == 0.0 {
            *slot = below_integer(n, idx.k(), p.value())?;
            bound += 1e-12;
        } else {
            let (b, e) = below_interpolated(n, idx.k(), idx.epsilon(), p.value())?;
            *slot = b;
            bound += e;
            method = CoverageMethod::QuadratureInterpolated;
        }
    }
    Ok(ExactCoverage {
        cp: Probability::new((below[0] - below[1]).clamp(0.0, 1.0))?,
        method,
        abs_error_bound: bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::{normal_pdf, normal_quantile};
    use crate::unconditional::{solve_u_high, solve_u_low};

    fn prob(v: f64) -> Probability {
        Probability::new(v).unwrap()
    }

    #[test]
    fn integer_endpoint_closed_forms() {
        // single observation at the median: exceedance is a coin flip
        let cp = exact_cp_integer(1, 1, prob(0.5), Side::Lower).unwrap();
        assert!((cp.cp().value() - 0.5).abs() < 1e-14);
        assert_eq!(cp.method(), CoverageMethod::ClosedFormInteger);

        let cp = exact_cp_integer(25, 13, prob(0.5), Side::Upper).unwrap();
        assert!((cp.cp().value() - 0.5).abs() < 1e-13);

        assert!(exact_cp_integer(10, 0, prob(0.5), Side::Lower).is_err());
        assert!(exact_cp_integer(10, 11, prob(0.5), Side::Lower).is_err());
    }

    #[test]
    fn integer_endpoint_reflection() {
        for (n, k, p) in [(9usize, 3usize, 0.3), (25, 20, 0.71), (50, 1, 0.05)] {
            let a = exact_cp_integer(n, k, prob(p), Side::Upper).unwrap().cp().value();
            let b = exact_cp_integer(n, n + 1 - k, prob(1.0 - p), Side::Upper)
                .unwrap()
                .cp()
                .value();
            assert!((a - (1.0 - b)).abs() < 1e-12, "n={n} k={k} p={p}");
        }
    }

    #[test]
    fn interpolated_is_continuous_in_epsilon() {
        let n = 9;
        let k = 5;
        let p = prob(0.4);
        // just above the integer index
        let u = Probability::new((k as f64 + 1e-7) / (n + 1) as f64).unwrap();
        let near_k = exact_cp_interpolated(n, u, p, Side::Upper).unwrap();
        let at_k = exact_cp_integer(n, k, p, Side::Upper).unwrap();
        assert!((near_k.cp().value() - at_k.cp().value()).abs() < 1e-6);
        assert_eq!(near_k.method(), CoverageMethod::QuadratureInterpolated);
        assert!(near_k.abs_error_bound() <= 1e-8);

        // just below the next integer index
        let u = Probability::new((k as f64 + 1.0 - 1e-7) / (n + 1) as f64).unwrap();
        let near_k1 = exact_cp_interpolated(n, u, p, Side::Upper).unwrap();
        let at_k1 = exact_cp_integer(n, k + 1, p, Side::Upper).unwrap();
        assert!((near_k1.cp().value() - at_k1.cp().value()).abs() < 1e-6);
    }

    #[test]
    fn interpolated_rejects_integer_index() {
        let u = Probability::new(0.5).unwrap();
        assert!(exact_cp_interpolated(9, u, prob(0.4), Side::Upper).is_err());
        // dispatcher routes it to the closed form instead
        let cp = exact_cp(9, u, prob(0.4), Side::Upper).unwrap();
        assert_eq!(cp.method(), CoverageMethod::ClosedFormInteger);
    }

    #[test]
    fn interpolated_cp_is_bracketed_by_integer_cps() {
        for (n, p) in [(11usize, 0.3), (25, 0.5), (40, 0.81)] {
            for frac in [0.2, 0.5, 0.8] {
                let k = (n as f64 * p).floor().max(1.0) as usize;
                if k + 1 > n {
                    continue;
                }
                let u = Probability::new((k as f64 + frac) / (n + 1) as f64).unwrap();
                let mid = exact_cp_interpolated(n, u, prob(p), Side::Upper)
                    .unwrap()
                    .cp()
                    .value();
                let lo = exact_cp_integer(n, k, prob(p), Side::Upper).unwrap().cp().value();
                let hi = exact_cp_integer(n, k + 1, prob(p), Side::Upper)
                    .unwrap()
                    .cp()
                    .value();
                let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
                assert!(
                    mid >= lo - 1e-8 && mid <= hi + 1e-8,
                    "n={n} p={p} frac={frac}: {mid} outside [{lo}, {hi}]"
                );
            }
        }
    }

    #[test]
    fn coverage_matches_leading_error_term() {
        // lower one-sided at (n,p,alpha) = (11, 0.65, 0.1)
        let p = prob(0.65);
        let alpha = 0.1;
        let u = solve_u_high(11, p, prob(alpha)).unwrap();
        let eps = decompose(u, 11).unwrap().epsilon();
        let cp = exact_cp(11, u, p, Side::Lower).unwrap().cp().value();
        let z = normal_quantile(1.0 - alpha).unwrap();
        let predicted =
            1.0 - alpha + eps * (1.0 - eps) * z * normal_pdf(z) / (0.65 * 0.35 * 11.0);
        assert!((cp - 0.912_401_68).abs() < 1e-6, "cp {cp}");
        assert!((cp - predicted).abs() < 0.01);
    }

    #[test]
    fn leading_term_residual_shrinks_with_n() {
        let p = prob(0.65);
        let alpha = 0.1;
        let z = normal_quantile(1.0 - alpha).unwrap();
        let mut residuals = Vec::new();
        for n in [25usize, 50, 100, 200] {
            let u = solve_u_high(n, p, prob(alpha)).unwrap();
            let eps = decompose(u, n).unwrap().epsilon();
            let cp = exact_cp(n, u, p, Side::Lower).unwrap().cp().value();
            let predicted =
                1.0 - alpha + eps * (1.0 - eps) * z * normal_pdf(z) / (0.65 * 0.35 * n as f64);
            residuals.push((cp - predicted).abs());
        }
        // trend on the halves of the grid, not per-point monotonicity
        let early = residuals[0].max(residuals[1]);
        let late = residuals[2].max(residuals[3]);
        assert!(late < early, "residuals {residuals:?}");
        assert!(residuals[3] < residuals[0]);
    }

    #[test]
    fn two_sided_median_interval_reference() {
        let p = prob(0.5);
        let ul = solve_u_low(25, p, prob(0.025)).unwrap();
        let uh = solve_u_high(25, p, prob(0.025)).unwrap();
        let cp = exact_cp_two_sided(25, ul, uh, p).unwrap();
        assert!((cp.cp().value() - 0.952_083_431_2).abs() < 5e-8, "{}", cp.cp());
        assert!(cp.abs_error_bound() <= 1e-8);
    }

    #[test]
    fn far_tail_interval_reference() {
        // n=99, p=0.037, two-sided alpha=0.05 split evenly
        let p = prob(0.037);
        let ul = solve_u_low(99, p, prob(0.025)).unwrap();
        let uh = solve_u_high(99, p, prob(0.025)).unwrap();
        assert!((ul.value() - 0.010_206_127_563_8).abs() < 1e-10);
        assert!((uh.value() - 0.082_159_072_482_5).abs() < 1e-10);

        let cp = exact_cp_two_sided(99, ul, uh, p).unwrap().cp().value();
        assert!((cp - 0.952_534_17).abs() < 1e-7, "cp {cp}");
        // miss-low: even the upper endpoint sits below the quantile
        let too_low = exact_cp(99, uh, p, Side::Upper).unwrap().cp().value();
        assert!((too_low - 0.023_028_8).abs() < 1e-6, "too_low {too_low}");
        let too_high = 1.0 - exact_cp(99, ul, p, Side::Upper).unwrap().cp().value();
        assert!((too_high - 0.024_437).abs() < 1e-5, "too_high {too_high}");
        assert!((cp + too_low + too_high - 1.0).abs() < 1e-7);
    }

    #[test]
    fn calibration_shifts_coverage_toward_nominal() {
        use crate::unconditional::calibrate_alpha;
        // n=10 two-sided 95% intervals, uncalibrated vs calibrated
        for (pv, want_plain, want_cal) in
            [(0.35, 0.957_208, 0.949_464), (0.5, 0.962_444, 0.941_668)]
        {
            let p = prob(pv);
            let a = prob(0.025);
            let ul = solve_u_low(10, p, a).unwrap();
            let uh = solve_u_high(10, p, a).unwrap();
            let plain = exact_cp_two_sided(10, ul, uh, p).unwrap().cp().value();
            assert!((plain - want_plain).abs() < 2e-6, "p={pv}: plain {plain}");

            let eps_l = decompose(ul, 10).unwrap().epsilon();
            let eps_h = decompose(uh, 10).unwrap().epsilon();
            let al = calibrate_alpha(a, p, 10, eps_l).unwrap();
            let ah = calibrate_alpha(a, p, 10, eps_h).unwrap();
            let ul2 = solve_u_low(10, p, al).unwrap();
            let uh2 = solve_u_high(10, p, ah).unwrap();
            let cal = exact_cp_two_sided(10, ul2, uh2, p).unwrap().cp().value();
            assert!((cal - want_cal).abs() < 2e-6, "p={pv}: calibrated {cal}");
        }
    }
}
