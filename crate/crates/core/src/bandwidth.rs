//! Plug-in window widths for conditional quantile intervals.
//!
//! The local window biases the interval according to the leading term
//! B_h below; the one-sided rules pick the width that either cancels or
//! exploits that bias depending on which tail the interval protects,
//! and the two-sided rule balances the two tail errors.

use crate::error::{Error, Result};
use crate::nuisance::NuisanceSet;
use crate::special::{normal_quantile, Probability};
use crate::unconditional::Side;

/// Ratio of the bias-aligned one-sided width to the bias-opposed one.
const ALIGNED_RATIO: f64 = 0.770;

/// Multiplier exponent applied for samples beyond this size.
const LARGE_N_PIVOT: f64 = 1000.0;
const LARGE_N_EXPONENT: f64 = 5.0 / 60.0;

/// Chosen window width together with everything that produced it.
#[derive(Debug, Clone, Copy)]
pub struct BandwidthReport {
    h: f64,
    side: Side,
    bias_sign: i8,
    nuisances: NuisanceSet,
    large_n_coefficient: f64,
    n: usize,
    flat_bias_fallback: bool,
}

impl BandwidthReport {
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn side(&self) -> Side {
        self.side
    }

    /// Sign of the leading bias term; 0 only on the flat-bias fallback.
    pub fn bias_sign(&self) -> i8 {
        self.bias_sign
    }

    pub fn nuisances(&self) -> &NuisanceSet {
        &self.nuisances
    }

    pub fn large_n_coefficient(&self) -> f64 {
        self.large_n_coefficient
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// True when the bias bracket vanished and the rate-only width was used.
    pub fn flat_bias_fallback(&self) -> bool {
        self.flat_bias_fallback
    }
}

/// f_X F^{(0,2)} + 2 f_X' F^{(0,1)}: the nuisance combination the window
/// bias is proportional to.
fn bias_bracket(nuis: &NuisanceSet) -> f64 {
    nuis.density.value() * nuis.cdf_derivs.d2()
        + 2.0 * nuis.density.derivative() * nuis.cdf_derivs.d1()
}

/// Leading bias of the windowed quantile: -h^2 [f_X F^{(0,2)} + 2 f_X' F^{(0,1)}]
/// / (6 f_X f_{Y|X}).
pub fn bias_leading_term(h: f64, nuis: &NuisanceSet) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::domain(format!("bandwidth must be positive, got {h}")));
    }
    if !(nuis.density.value() > 0.0) {
        return Err(Error::DegenerateData(
            "covariate density estimate is not positive".to_string(),
        ));
    }
    if !(nuis.f_y_given_x > 0.0) {
        return Err(Error::DegenerateData(
            "conditional density estimate is not positive".to_string(),
        ));
    }
    Ok(-h * h * bias_bracket(nuis) / (6.0 * nuis.density.value() * nuis.f_y_given_x))
}

fn large_n_coefficient(n: usize, apply: bool) -> f64 {
    if apply {
        (n as f64 / LARGE_N_PIVOT).max(1.0).powf(LARGE_N_EXPONENT)
    } else {
        1.0
    }
}

fn validate_common(n: usize, nuis: &NuisanceSet) -> Result<()> {
    if n == 0 {
        return Err(Error::domain("sample size must be positive"));
    }
    if !(nuis.density.value() > 0.0) {
        return Err(Error::DegenerateData(
            "covariate density estimate is not positive".to_string(),
        ));
    }
    if !(nuis.sigma_x > 0.0) {
        return Err(Error::DegenerateData(
            "covariate scale is not positive".to_string(),
        ));
    }
    Ok(())
}

/// One-sided plug-in width. The base width solves the coverage-error
/// tradeoff for an interval whose protected tail opposes the window bias;
/// when the bias instead helps the protected tail, the width shrinks by
/// the fixed factor 0.770.
pub fn plugin_one_sided(
    n: usize,
    p: Probability,
    alpha: Probability,
    nuis: &NuisanceSet,
    ci_side: Side,
    apply_large_n: bool,
) -> Result<BandwidthReport> {
    validate_common(n, nuis)?;
    if ci_side == Side::TwoSided {
        return Err(Error::domain(
            "one-sided plug-in needs a lower or upper side",
        ));
    }
    let coeff = large_n_coefficient(n, apply_large_n);
    let bracket = bias_bracket(nuis);
    if bracket == 0.0 {
        return Ok(BandwidthReport {
            h: coeff * nuis.sigma_x * (n as f64).powf(-3.0 / 7.0),
            side: ci_side,
            bias_sign: 0,
            nuisances: *nuis,
            large_n_coefficient: coeff,
            n,
            flat_bias_fallback: true,
        });
    }
    let z = normal_quantile(1.0 - f64::from(alpha))?;
    let pv = f64::from(p);
    let scale = (pv * (1.0 - pv) * nuis.density.value()).sqrt();
    let h_opposed =
        (n as f64).powf(-3.0 / 7.0) * (z / (3.0 * scale * bracket.abs())).powf(2.0 / 7.0);
    let h_aligned = ALIGNED_RATIO * h_opposed;
    // bias sign is -sign(bracket): the denominator of B_h is positive
    let bias_sign: i8 = if bracket > 0.0 { -1 } else { 1 };
    // lower-tail CI with downward bias (or upper with upward) opposes it
    let h = match (ci_side, bias_sign) {
        (Side::Lower, -1) | (Side::Upper, 1) => h_opposed,
        _ => h_aligned,
    };
    Ok(BandwidthReport {
        h: coeff * h,
        side: ci_side,
        bias_sign,
        nuisances: *nuis,
        large_n_coefficient: coeff,
        n,
        flat_bias_fallback: false,
    })
}

/// Two-sided plug-in width balancing the two tail errors; independent of
/// the confidence level.
pub fn plugin_two_sided(
    n: usize,
    p: Probability,
    nuis: &NuisanceSet,
    apply_large_n: bool,
) -> Result<BandwidthReport> {
    validate_common(n, nuis)?;
    let coeff = large_n_coefficient(n, apply_large_n);
    let bracket = bias_bracket(nuis);
    if bracket == 0.0 {
        return Ok(BandwidthReport {
            h: coeff * nuis.sigma_x * (n as f64).cbrt().recip(),
            side: Side::TwoSided,
            bias_sign: 0,
            nuisances: *nuis,
            large_n_coefficient: coeff,
            n,
            flat_bias_fallback: true,
        });
    }
    let bias_sign: i8 = if bracket > 0.0 { -1 } else { 1 };
    let q = 1.0 - 2.0 * f64::from(p);
    let numerator = f64::from(bias_sign) * q + (q * q + 4.0).sqrt();
    let h = (numerator / (2.0 * bracket.abs())).cbrt() / (n as f64).cbrt();
    Ok(BandwidthReport {
        h: coeff * h,
        side: Side::TwoSided,
        bias_sign,
        nuisances: *nuis,
        large_n_coefficient: coeff,
        n,
        flat_bias_fallback: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::normal_cdf;

    fn prob(v: f64) -> Probability {
        Probability::new(v).unwrap()
    }

    /// Nuisance set with hand-picked values, bypassing estimation.
    fn synthetic(f_x: f64, f_x_prime: f64, d1: f64, d2: f64, f_y: f64, sigma: f64) -> NuisanceSet {
        NuisanceSet {
            density: crate::nuisance::DensityEstimate::new(f_x, f_x_prime, (0.1, 0.1)),
            cdf_derivs: crate::nuisance::CdfDerivativeEstimate::new(d1, d2, 0.0, 0.1),
            f_y_given_x: f_y,
            sigma_x: sigma,
        }
    }

    #[test]
    fn bias_arithmetic_matches_hand_value() {
        // all-ones nuisances at h = 0.1: -(0.01)(1 + 2)/(6) = -0.005
        let nuis = synthetic(1.0, 1.0, 1.0, 1.0, 1.0, 1.0);
        let b = bias_leading_term(0.1, &nuis).unwrap();
        assert!((b - (-0.005)).abs() < 1e-15, "{b}");
    }

    #[test]
    fn bias_rejects_nonpositive_densities() {
        let nuis = synthetic(1.0, 0.0, 1.0, 1.0, 0.0, 1.0);
        assert!(matches!(
            bias_leading_term(0.1, &nuis),
            Err(Error::DegenerateData(_))
        ));
    }

    #[test]
    fn one_sided_formula_arithmetic() {
        // z = 1 and sqrt(p(1-p) f_X) * bracket = 1 reduce the base width
        // to n^{-3/7} (1/3)^{2/7}: take p = 1/2, f_X = 1, d2 = 2, f_X' = 0.
        let nuis = synthetic(1.0, 0.0, 0.0, 2.0, 1.0, 1.0);
        let alpha = prob(1.0 - normal_cdf(1.0));
        let rep = plugin_one_sided(128, prob(0.5), alpha, &nuis, Side::Lower, true).unwrap();
        let want = 128.0_f64.powf(-3.0 / 7.0) * (1.0_f64 / 3.0).powf(2.0 / 7.0);
        assert!(
            ((rep.h() - want) / want).abs() < 1e-12,
            "{} vs {want}",
            rep.h()
        );
        // bracket = 2 > 0 means downward bias, opposing a lower-tail CI
        assert_eq!(rep.bias_sign(), -1);
        assert!(!rep.flat_bias_fallback());
        assert_eq!(rep.large_n_coefficient(), 1.0);
    }

    #[test]
    fn aligned_width_is_fixed_ratio_of_opposed() {
        let nuis = synthetic(0.8, 0.3, -0.4, 1.7, 0.9, 1.2);
        let lower =
            plugin_one_sided(400, prob(0.3), prob(0.05), &nuis, Side::Lower, true).unwrap();
        let upper =
            plugin_one_sided(400, prob(0.3), prob(0.05), &nuis, Side::Upper, true).unwrap();
        let ratio = upper.h() / lower.h();
        let want = if lower.bias_sign() == -1 {
            ALIGNED_RATIO
        } else {
            1.0 / ALIGNED_RATIO
        };
        assert!((ratio - want).abs() < 1e-12, "{ratio}");
    }

    #[test]
    fn flipping_bracket_sign_swaps_side_assignment() {
        let pos = synthetic(1.0, 0.0, 0.0, 2.0, 1.0, 1.0); // bracket +2
        let neg = synthetic(1.0, 0.0, 0.0, -2.0, 1.0, 1.0); // bracket -2
        let lp = plugin_one_sided(200, prob(0.5), prob(0.05), &pos, Side::Lower, true).unwrap();
        let up = plugin_one_sided(200, prob(0.5), prob(0.05), &pos, Side::Upper, true).unwrap();
        let ln = plugin_one_sided(200, prob(0.5), prob(0.05), &neg, Side::Lower, true).unwrap();
        let un = plugin_one_sided(200, prob(0.5), prob(0.05), &neg, Side::Upper, true).unwrap();
        assert_eq!(lp.bias_sign(), -1);
        assert_eq!(ln.bias_sign(), 1);
        assert!((lp.h() - un.h()).abs() < 1e-15);
        assert!((up.h() - ln.h()).abs() < 1e-15);
        assert!(lp.h() > up.h());
    }

    #[test]
    fn two_sided_all_ones_gives_one_tenth_exactly() {
        // f_X = 1, d2 = 1, f_X' = 0, p = 1/2: bracket 1, numerator 2
        let nuis = synthetic(1.0, 0.0, 0.0, 1.0, 1.0, 1.0);
        let rep = plugin_two_sided(1000, prob(0.5), &nuis, true).unwrap();
        assert_eq!(rep.h(), 0.1);
        assert_eq!(rep.bias_sign(), -1);
    }

    #[test]
    fn two_sided_median_reduces_to_symmetric_form() {
        let nuis = synthetic(0.7, -0.2, 0.5, -1.1, 1.0, 1.0);
        let bracket: f64 = 0.7 * (-1.1) + 2.0 * (-0.2) * 0.5;
        let rep = plugin_two_sided(777, prob(0.5), &nuis, true).unwrap();
        let want = (777.0_f64).cbrt().recip() * bracket.abs().recip().cbrt();
        assert!((rep.h() - want).abs() <= 1e-12 * want, "{} vs {want}", rep.h());
    }

    #[test]
    fn rates_match_on_log_log_scale() {
        let nuis = synthetic(0.9, 0.1, 0.2, 1.4, 1.0, 1.0);
        let slope = |h1: f64, h2: f64, n1: f64, n2: f64| (h2.ln() - h1.ln()) / (n2.ln() - n1.ln());
        let o1 = plugin_one_sided(500, prob(0.4), prob(0.05), &nuis, Side::Lower, false)
            .unwrap()
            .h();
        let o2 = plugin_one_sided(4000, prob(0.4), prob(0.05), &nuis, Side::Lower, false)
            .unwrap()
            .h();
        assert!(
            (slope(o1, o2, 500.0, 4000.0) + 3.0 / 7.0).abs() < 1e-12,
            "one-sided slope {}",
            slope(o1, o2, 500.0, 4000.0)
        );
        let t1 = plugin_two_sided(500, prob(0.4), &nuis, false).unwrap().h();
        let t2 = plugin_two_sided(4000, prob(0.4), &nuis, false).unwrap().h();
        assert!(
            (slope(t1, t2, 500.0, 4000.0) + 1.0 / 3.0).abs() < 1e-12,
            "two-sided slope {}",
            slope(t1, t2, 500.0, 4000.0)
        );
    }

    #[test]
    fn doubling_n_scales_one_sided_width_by_rate() {
        let nuis = synthetic(0.9, 0.1, 0.2, 1.4, 1.0, 1.0);
        let h1 = plugin_one_sided(300, prob(0.35), prob(0.1), &nuis, Side::Upper, true)
            .unwrap()
            .h();
        let h2 = plugin_one_sided(600, prob(0.35), prob(0.1), &nuis, Side::Upper, true)
            .unwrap()
            .h();
        let want = 2.0_f64.powf(-3.0 / 7.0);
        assert!(((h2 / h1) - want).abs() < 1e-14, "{}", h2 / h1);
    }

    #[test]
    fn two_sided_is_continuous_through_the_median() {
        let nuis = synthetic(0.8, 0.25, -0.3, 1.2, 1.0, 1.0);
        let at = plugin_two_sided(250, prob(0.5), &nuis, true).unwrap().h();
        let eps = 1e-9;
        let below = plugin_two_sided(250, prob(0.5 - eps), &nuis, true).unwrap().h();
        let above = plugin_two_sided(250, prob(0.5 + eps), &nuis, true).unwrap().h();
        assert!((below - at).abs() < 1e-8 * at);
        assert!((above - at).abs() < 1e-8 * at);
    }

    #[test]
    fn flat_bracket_falls_back_to_rate_width() {
        let nuis = synthetic(1.0, 0.5, 0.0, 0.0, 1.0, 2.0);
        let one = plugin_one_sided(100, prob(0.5), prob(0.05), &nuis, Side::Lower, true).unwrap();
        assert!(one.flat_bias_fallback());
        assert_eq!(one.bias_sign(), 0);
        let want1 = 2.0 * 100.0_f64.powf(-3.0 / 7.0);
        assert!((one.h() - want1).abs() < 1e-14 * want1);
        let two = plugin_two_sided(100, prob(0.5), &nuis, true).unwrap();
        assert!(two.flat_bias_fallback());
        let want2 = 2.0 / 100.0_f64.cbrt();
        assert!((two.h() - want2).abs() < 1e-14 * want2);
    }

    #[test]
    fn large_n_multiplier_kicks_in_past_pivot() {
        let nuis = synthetic(1.0, 0.0, 0.0, 1.0, 1.0, 1.0);
        let base = plugin_two_sided(8000, prob(0.5), &nuis, false).unwrap();
        let boosted = plugin_two_sided(8000, prob(0.5), &nuis, true).unwrap();
        let want = 8.0_f64.powf(5.0 / 60.0);
        assert!(((boosted.h() / base.h()) - want).abs() < 1e-13);
        assert_eq!(base.large_n_coefficient(), 1.0);
        assert!((boosted.large_n_coefficient() - want).abs() < 1e-13);
        // at the pivot and below the coefficient is one
        let small = plugin_two_sided(1000, prob(0.5), &nuis, true).unwrap();
        assert_eq!(small.large_n_coefficient(), 1.0);
    }

    #[test]
    fn two_sided_rejects_being_asked_for_one_side() {
        let nuis = synthetic(1.0, 0.0, 0.0, 1.0, 1.0, 1.0);
        assert!(matches!(
            plugin_one_sided(100, prob(0.5), prob(0.05), &nuis, Side::TwoSided, true),
            Err(Error::Domain(_))
        ));
    }
}
