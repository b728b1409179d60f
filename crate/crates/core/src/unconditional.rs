//! Quantile confidence intervals from fractional order statistics.
//!
//! The endpoint index u^h(α) solves α = I_p((n+1)u, (n+1)(1−u)) and u^l(α)
//! solves the mirrored equation; the CI endpoints are L-statistics at those
//! indices. A one-shot calibration step removes the leading n^{-1} coverage
//! error term analytically.

use crate::error::{Error, Result, Tail};
use crate::fractional::{decompose, FractionalIndex, SortedSample};
use crate::special::{normal_pdf, normal_quantile, reg_inc_beta, BetaParams, Probability};

/// Which confidence statement is requested.
///
/// `Lower` is the lower one-sided CI (−∞, upper]: it bounds the quantile
/// from above at confidence 1−α. `Upper` is [lower, +∞). `TwoSided` splits
/// α across the tails.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Lower,
    Upper,
    TwoSided,
}

/// A validated CI request: quantile level, miscoverage level, side, and
/// whether the analytic calibration is applied.
#[derive(Debug, Clone, Copy)]
pub struct QuantileRequest {
    p: Probability,
    alpha: Probability,
    side: Side,
    calibrated: bool,
    tail_split: f64,
}

impl QuantileRequest {
    pub fn new(p: Probability, alpha: Probability, side: Side) -> Result<Self> {
        let p = Probability::interior(p.value())?;
        let alpha = Probability::interior(alpha.value())?;
        Ok(QuantileRequest {
            p,
            alpha,
            side,
            calibrated: false,
            tail_split: 0.5,
        })
    }

    pub fn calibrated(mut self, on: bool) -> Self {
        self.calibrated = on;
        self
    }

    /// Same request at a different confidence level; used by joint
    /// families that split an error budget across points.
    pub fn with_alpha(&self, alpha: Probability) -> Result<Self> {
        let alpha = Probability::interior(alpha.value())?;
        Ok(QuantileRequest { alpha, ..*self })
    }

    /// Fraction t of α spent on the low tail of a two-sided CI.
    pub fn with_tail_split(mut self, t: f64) -> Result<Self> {
        if !t.is_finite() || t <= 0.0 || t >= 1.0 {
            return Err(Error::domain(format!(
                "tail split must lie strictly inside (0, 1), got {t}"
            )));
        }
        self.tail_split = t;
        Ok(self)
    }

    pub fn p(&self) -> Probability {
        self.p
    }

    pub fn alpha(&self) -> Probability {
        self.alpha
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn is_calibrated(&self) -> bool {
        self.calibrated
    }

    pub fn tail_split(&self) -> f64 {
        self.tail_split
    }

    /// Miscoverage spent on each tail: (low, high).
    pub fn tail_levels(&self) -> (Option<f64>, Option<f64>) {
        let a = self.alpha.value();
        match self.side {
            Side::Lower => (None, Some(a)),
            Side::Upper => (Some(a), None),
            Side::TwoSided => (Some(self.tail_split * a), Some((1.0 - self.tail_split) * a)),
        }
    }
}

/// A solved endpoint index together with the miscoverage level actually
/// used for it (the calibrated level when calibration is on).
#[derive(Debug, Clone, Copy)]
pub struct SolvedEndpoint {
    index: FractionalIndex,
    alpha_effective: Probability,
}

impl SolvedEndpoint {
    pub fn u(&self) -> Probability {
        self.index.u()
    }

    pub fn index(&self) -> &FractionalIndex {
        &self.index
    }

    pub fn alpha_effective(&self) -> Probability {
        self.alpha_effective
    }
}

/// Endpoint indices of a CI; a tail is absent when the side does not use
/// it or when a support bound stood in for a missing order statistic.
#[derive(Debug, Clone, Copy, Default)]
pub struct EndpointIndices {
    pub low: Option<SolvedEndpoint>,
    pub high: Option<SolvedEndpoint>,
}

/// Optional known support bounds, substituted for order statistics that
/// fall outside the sample (below the minimum or above the maximum).
#[derive(Debug, Clone, Copy, Default)]
pub struct SupportBounds {
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

/// A quantile confidence interval on a concrete sample.
#[derive(Debug, Clone)]
pub struct ConfidenceInterval {
    lower: f64,
    upper: f64,
    indices: EndpointIndices,
    request: QuantileRequest,
    n: usize,
    conservative: bool,
}

impl ConfidenceInterval {
    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn indices(&self) -> &EndpointIndices {
        &self.indices
    }

    pub fn request(&self) -> &QuantileRequest {
        &self.request
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// True when a support bound replaced a missing order statistic, making
    /// the interval wider than the exact construction.
    pub fn is_conservative(&self) -> bool {
        self.conservative
    }

    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }
}

/// I_p evaluated at the ideal-marginal shapes for index u.
fn index_coverage(n: usize, p: f64, u: f64) -> Result<f64> {
    let params = BetaParams::for_order_index(n, u)?;
    Ok(reg_inc_beta(Probability::new(p)?, params)?.value())
}

/// Solve I_p((n+1)u, (n+1)(1−u)) = target for u inside [lo, hi].
///
/// The left side is strictly decreasing in u, so Newton (derivative by
/// central differences) is safeguarded by bisection on a maintained
/// bracket. Residuals of 1e-12 are typical; above 1e-10 is an error.
fn solve_index_equation(n: usize, p: f64, target: f64, lo: f64, hi: f64, warm: f64) -> Result<f64> {
    const TOL: f64 = 1e-13;
    const FD_STEP: f64 = 1e-6;
    const MAX_ITER: usize = 100;

    let mut blo = lo;
    let mut bhi = hi;
    let mut u = warm.clamp(lo, hi);
    let mut best = (u, f64::INFINITY);
    for _ in 0..MAX_ITER {
        let f = index_coverage(n, p, u)? - target;
        if f.abs() < best.1 {
            best = (u, f.abs());
        }
        if f.abs() <= TOL {
            return Ok(u);
        }
        if f > 0.0 {
            blo = u;
        } else {
            bhi = u;
        }
        if bhi - blo <= f64::EPSILON * u.abs() {
            break;
        }
        let ul = (u - FD_STEP).max(lo);
        let uh = (u + FD_STEP).min(hi);
        let deriv = (index_coverage(n, p, uh)? - index_coverage(n, p, ul)?) / (uh - ul);
        let newton = u - f / deriv;
        u = if newton.is_finite() && newton > blo && newton < bhi {
            newton
        } else {
            0.5 * (blo + bhi)
        };
    }
    if best.1 <= 1e-10 {
        return Ok(best.0);
    }
    Err(Error::Numerical {
        context: "endpoint index equation",
        residual: best.1,
        iterations: MAX_ITER,
    })
}

/// Lemma-3 two-term expansion of the endpoint index, used as a solver
/// warm start: p ± z√(p(1−p)/n) − (2p−1)(z²+2)/(6n).
pub fn endpoint_approx(n: usize, p: Probability, alpha: Probability, tail: Tail) -> Result<Probability> {
    let pv = p.value();
    let z = normal_quantile(1.0 - alpha.value())?;
    let spread = z * (pv * (1.0 - pv) / n as f64).sqrt();
    let skew = (2.0 * pv - 1.0) * (z * z + 2.0) / (6.0 * n as f64);
    let u = match tail {
        Tail::High => pv + spread - skew,
        Tail::Low => pv - spread - skew,
    };
    Probability::new(u.clamp(1e-12, 1.0 - 1e-12))
}

/// Evaluable index range against a sample of size n.
fn evaluable_range(n: usize) -> (f64, f64) {
    let m = (n + 1) as f64;
    (1.0 / m, n as f64 / m)
}

/// Solve α = I_p((n+1)u^h, (n+1)(1−u^h)) for the high endpoint index.
pub fn solve_u_high(n: usize, p: Probability, alpha: Probability) -> Result<Probability> {
    let pv = p.value();
    let a = alpha.value();
    let (lo, hi) = evaluable_range(n);
    // g(hi) = p^n and g(lo) = 1−(1−p)^n bound the attainable levels.
    if a < pv.powi(n as i32) {
        return Err(Error::ExtremeQuantile {
            tail: Tail::High,
            n,
            min_n: (a.ln() / pv.ln()).ceil() as usize,
        });
    }
    if a > 1.0 - (1.0 - pv).powi(n as i32) {
        return Err(Error::ExtremeQuantile {
            tail: Tail::Low,
            n,
            min_n: ((1.0 - a).ln() / (1.0 - pv).ln()).ceil() as usize,
        });
    }
    let warm = endpoint_approx(n, p, alpha, Tail::High)?.value();
    Probability::new(solve_index_equation(n, pv, a, lo, hi, warm)?)
}

/// Solve α = 1 − I_p((n+1)u^l, (n+1)(1−u^l)) for the low endpoint index.
pub fn solve_u_low(n: usize, p: Probability, alpha: Probability) -> Result<Probability> {
    let pv = p.value();
    let a = alpha.value();
    let (lo, hi) = evaluable_range(n);
    if a < (1.0 - pv).powi(n as i32) {
        return Err(Error::ExtremeQuantile {
            tail: Tail::Low,
            n,
            min_n: (a.ln() / (1.0 - pv).ln()).ceil() as usize,
        });
    }
    if a > 1.0 - pv.powi(n as i32) {
        return Err(Error::ExtremeQuantile {
            tail: Tail::High,
            n,
            min_n: ((1.0 - a).ln() / pv.ln()).ceil() as usize,
        });
    }
    let warm = endpoint_approx(n, p, alpha, Tail::Low)?.value();
    Probability::new(solve_index_equation(n, pv, 1.0 - a, lo, hi, warm)?)
}

/// One-step analytic calibration: α̃ = α + ε(1−ε) z_{1−α} φ(z_{1−α}) / (p(1−p) n).
///
/// ε is taken from the uncalibrated solution; the endpoint equation is then
/// re-solved once at α̃. Always α̃ ≥ α.
pub fn calibrate_alpha(
    alpha: Probability,
    p: Probability,
    n: usize,
    epsilon: f64,
) -> Result<Probability> {
    let a = alpha.value();
    if a >= 0.5 {
        return Err(Error::domain(format!(
            "calibration is defined for per-tail levels below 0.5, got {a}"
        )));
    }
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::domain(format!(
            "interpolation weight must lie in [0, 1), got {epsilon}"
        )));
    }
    let pv = p.value();
    let z = normal_quantile(1.0 - a)?;
    let bump = epsilon * (1.0 - epsilon) * z * normal_pdf(z) / (pv * (1.0 - pv) * n as f64);
    let a_tilde = a + bump;
    if a_tilde >= 1.0 {
        return Err(Error::CalibrationOverflow {
            alpha_tilde: a_tilde,
        });
    }
    Probability::new(a_tilde)
}

fn solve_tail(n: usize, p: Probability, level: f64, tail: Tail, calibrated: bool) -> Result<SolvedEndpoint> {
    let alpha = Probability::interior(level)?;
    let solve = |a: Probability| match tail {
        Tail::High => solve_u_high(n, p, a),
        Tail::Low => solve_u_low(n, p, a),
    };
    let u = solve(alpha)?;
    let index = decompose(u, n)?;
    if !calibrated {
        return Ok(SolvedEndpoint {
            index,
            alpha_effective: alpha,
        });
    }
    let a_tilde = calibrate_alpha(alpha, p, n, index.epsilon())?;
    let index = decompose(solve(a_tilde)?, n)?;
    Ok(SolvedEndpoint {
        index,
        alpha_effective: a_tilde,
    })
}

/// Outcome of solving one tail when support bounds may stand in for
/// missing order statistics.
enum TailEndpoint {
    Exact(SolvedEndpoint),
    /// Endpoint value built with a substituted bound.
    Bounded(f64),
}

/// Re-solve on the full index range (0,1) and interpolate against a
/// support bound for the order statistic that falls outside the sample.
fn solve_tail_bounded(
    sample: &SortedSample,
    p: Probability,
    level: f64,
    tail: Tail,
    calibrated: bool,
    bounds: &SupportBounds,
    blocking: Error,
) -> Result<TailEndpoint> {
    let n = sample.n();
    let pv = p.value();
    let target = match tail {
        Tail::High => level,
        Tail::Low => 1.0 - level,
    };
    let full = |t: f64| -> Result<f64> {
        let warm = endpoint_approx(n, p, Probability::interior(level)?, tail)?.value();
        solve_index_equation(n, pv, t, 1e-12, 1.0 - 1e-12, warm)
    };
    let mut u = full(target)?;
    if calibrated {
        let t = u * (n + 1) as f64;
        let epsilon = t - t.floor();
        let a_tilde = calibrate_alpha(Probability::interior(level)?, p, n, epsilon)?;
        let target = match tail {
            Tail::High => a_tilde.value(),
            Tail::Low => 1.0 - a_tilde.value(),
        };
        u = full(target)?;
    }
    let t = u * (n + 1) as f64;
    let k = t.floor() as usize;
    let epsilon = t - k as f64;
    if k == 0 {
        // Needs X_{n:0}: interpolate against the lower support bound.
        let Some(b) = bounds.lower else {
            return Err(blocking);
        };
        let x1 = sample.order_statistic(1).expect("n >= 1");
        if b > x1 {
            return Err(Error::domain(format!(
                "lower support bound {b} exceeds the sample minimum {x1}"
            )));
        }
        Ok(TailEndpoint::Bounded((1.0 - epsilon) * b + epsilon * x1))
    } else if k >= n {
        // Needs X_{n:n+1}: interpolate against the upper support bound.
        let Some(b) = bounds.upper else {
            return Err(blocking);
        };
        let xn = sample.order_statistic(n).expect("n >= 1");
        if b < xn {
            return Err(Error::domain(format!(
                "upper support bound {b} lies below the sample maximum {xn}"
            )));
        }
        Ok(TailEndpoint::Bounded((1.0 - epsilon) * xn + epsilon * b))
    } else {
        // The full-range solve landed back inside the sample (possible after
        // calibration shifted the level); recover the exact endpoint.
        Ok(TailEndpoint::Exact(solve_tail(n, p, level, tail, calibrated)?))
    }
}

/// Build the requested CI on a sample, substituting support bounds for
/// missing extreme order statistics when provided.
pub fn confidence_interval_bounded(
    sample: &SortedSample,
    request: &QuantileRequest,
    bounds: &SupportBounds,
) -> Result<ConfidenceInterval> {
    let n = sample.n();
    let p = request.p;
    let (low_level, high_level) = request.tail_levels();

    let mut indices = EndpointIndices::default();
    let mut conservative = false;

    let resolve = |level: f64, tail: Tail| -> Result<TailEndpoint> {
        match solve_tail(n, p, level, tail, request.calibrated) {
            Ok(ep) => Ok(TailEndpoint::Exact(ep)),
            Err(e @ Error::ExtremeQuantile { .. }) => {
                // Which bound applies depends on which order statistic is
                // missing, determined inside the bounded solve.
                if bounds.lower.is_some() || bounds.upper.is_some() {
                    solve_tail_bounded(sample, p, level, tail, request.calibrated, bounds, e)
                } else {
                    Err(e)
                }
            }
            Err(e) => Err(e),
        }
    };

    let lower = match low_level {
        None => f64::NEG_INFINITY,
        Some(level) => match resolve(level, Tail::Low)? {
            TailEndpoint::Exact(ep) => {
                let v = sample.l_statistic(ep.index())?;
                indices.low = Some(ep);
                v
            }
            TailEndpoint::Bounded(v) => {
                conservative = true;
                v
            }
        },
    };
    let upper = match high_level {
        None => f64::INFINITY,
        Some(level) => match resolve(level, Tail::High)? {
            TailEndpoint::Exact(ep) => {
                let v = sample.l_statistic(ep.index())?;
                indices.high = Some(ep);
                v
            }
            TailEndpoint::Bounded(v) => {
                conservative = true;
                v
            }
        },
    };

    if lower > upper {
        return Err(Error::domain(format!(
            "interval endpoints crossed: ({lower}, {upper})"
        )));
    }
    Ok(ConfidenceInterval {
        lower,
        upper,
        indices,
        request: *request,
        n,
        conservative,
    })
}

/// Build the requested CI on a sample.
pub fn confidence_interval(
    sample: &SortedSample,
    request: &QuantileRequest,
) -> Result<ConfidenceInterval> {
    confidence_interval_bounded(sample, request, &SupportBounds::default())
}

/// Endpoint indices solved once for a fixed (n, request), reusable across
/// many samples of the same size. Avoids re-solving the index equations
/// sample by sample in simulation loops.
#[derive(Debug, Clone)]
pub struct PreparedInterval {
    n: usize,
    low: Option<SolvedEndpoint>,
    high: Option<SolvedEndpoint>,
}

impl PreparedInterval {
    pub fn new(n: usize, request: &QuantileRequest) -> Result<Self> {
        let (low_level, high_level) = request.tail_levels();
        let low = low_level
            .map(|a| solve_tail(n, request.p, a, Tail::Low, request.calibrated))
            .transpose()?;
        let high = high_level
            .map(|a| solve_tail(n, request.p, a, Tail::High, request.calibrated))
            .transpose()?;
        Ok(PreparedInterval { n, low, high })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn low(&self) -> Option<&SolvedEndpoint> {
        self.low.as_ref()
    }

    pub fn high(&self) -> Option<&SolvedEndpoint> {
        self.high.as_ref()
    }

    /// (lower, upper) on a sample of the prepared size; absent tails are
    /// unbounded.
    pub fn endpoints(&self, sample: &SortedSample) -> Result<(f64, f64)> {
        let lower = match &self.low {
            Some(ep) => sample.l_statistic(ep.index())?,
            None => f64::NEG_INFINITY,
        };
        let upper = match &self.high {
            Some(ep) => sample.l_statistic(ep.index())?,
            None => f64::INFINITY,
        };
        Ok((lower, upper))
    }
}

/// Asymptotic probability of excluding a value at local drift κ from the
/// true quantile, with f_at_q the density at the quantile.
pub fn asymptotic_power(
    kappa: f64,
    p: Probability,
    alpha: Probability,
    f_at_q: f64,
    side: Side,
) -> Result<Probability> {
    if !(f_at_q > 0.0) || !f_at_q.is_finite() {
        return Err(Error::domain(format!(
            "density at the quantile must be positive, got {f_at_q}"
        )));
    }
    let pv = p.value();
    let a = alpha.value();
    let s = kappa * f_at_q / (pv * (1.0 - pv)).sqrt();
    let power = match side {
        Side::Lower => crate::special::normal_cdf(normal_quantile(a)? + s),
        Side::Upper => crate::special::normal_cdf(normal_quantile(a)? - s),
        Side::TwoSided => {
            let z = normal_quantile(a / 2.0)?;
            crate::special::normal_cdf(z + s) + crate::special::normal_cdf(z - s)
        }
    };
    Probability::new(power.clamp(0.0, 1.0))
}
