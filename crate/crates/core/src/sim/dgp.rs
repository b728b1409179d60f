//! Data-generating processes for the coverage experiments. Every draw is
//! an inverse-CDF transform of stream uniforms (one per response, two per
//! covariate-response pair), so the draw count per replication is fixed
//! and the true quantiles are available in closed form or by inverting
//! the same CDF the draws use.

use super::rng::RepStream;
use crate::error::{Error, Result};
use crate::special::{normal_quantile, Probability};

const PI: f64 = std::f64::consts::PI;

/// Sampling model for one simulation configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dgp {
    Normal,
    Cauchy,
    Uniform,
    Exponential,
    Lognormal,
    StudentT3,
    /// Chi-squared with 3 df shifted so its quantile at `center` is zero.
    CenteredChiSquared3 { center: f64 },
    /// Y = 2.5 + sin(2X) + 2 exp(-16 X^2) + 0.5 e with X, e standard
    /// normal: a smooth curve with a narrow bump at the origin.
    FanLiuModel1,
    /// Y = sqrt(x(1-x)) sin(2 pi (1 + 2^{-7/5}) / (x + 2^{-7/5})) + s(x) U
    /// on x in (0, 1): oscillation frequency grows toward the left edge.
    RqssCurve { heteroskedastic: bool },
}

impl Dgp {
    /// Parse a configuration token; `p` fixes the centering level of the
    /// shifted chi-squared so its target quantile sits at zero.
    pub fn from_name(name: &str, p: Probability) -> Result<Dgp> {
        Ok(match name {
            "normal" => Dgp::Normal,
            "cauchy" => Dgp::Cauchy,
            "uniform" => Dgp::Uniform,
            "exponential" => Dgp::Exponential,
            "lognormal" => Dgp::Lognormal,
            "t3" => Dgp::StudentT3,
            "chi2_3_centered" => Dgp::CenteredChiSquared3 {
                center: f64::from(p),
            },
            "fan_liu_model1" => Dgp::FanLiuModel1,
            "rqss_curve" => Dgp::RqssCurve {
                heteroskedastic: false,
            },
            "rqss_curve_hetero" => Dgp::RqssCurve {
                heteroskedastic: true,
            },
            other => {
                return Err(Error::domain(format!(
                    "unknown data-generating process '{other}'"
                )))
            }
        })
    }

    pub fn is_conditional(&self) -> bool {
        matches!(self, Dgp::FanLiuModel1 | Dgp::RqssCurve { .. })
    }

    /// Quantile function of an unconditional model; doubles as the draw
    /// transform applied to stream uniforms.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        Ok(match self {
            Dgp::Normal => normal_quantile(u)?,
            Dgp::Cauchy => (PI * (u - 0.5)).tan(),
            Dgp::Uniform => u,
            Dgp::Exponential => -(-u).ln_1p(),
            Dgp::Lognormal => normal_quantile(u)?.exp(),
            Dgp::StudentT3 => student_t3_quantile(u)?,
            Dgp::CenteredChiSquared3 { center } => {
                chi_squared_3_quantile(u)? - chi_squared_3_quantile(*center)?
            }
            _ => {
                return Err(Error::domain(
                    "conditional model has no unconditional quantile",
                ))
            }
        })
    }

    pub fn draw_response(&self, stream: &mut RepStream) -> Result<f64> {
        self.quantile(stream.next_uniform())
    }

    /// One covariate-response pair; consumes exactly two uniforms.
    pub fn draw_pair(&self, stream: &mut RepStream) -> Result<(f64, f64)> {
        let u_x = stream.next_uniform();
        let u_e = stream.next_uniform();
        match self {
            Dgp::FanLiuModel1 => {
                let x = normal_quantile(u_x)?;
                let y = fan_liu_mean(x) + 0.5 * normal_quantile(u_e)?;
                Ok((x, y))
            }
            Dgp::RqssCurve { heteroskedastic } => {
                let x = u_x;
                let s = rqss_scale(x, *heteroskedastic);
                Ok((x, rqss_mean(x) + s * normal_quantile(u_e)?))
            }
            _ => Err(Error::domain(
                "unconditional model has no covariate to draw",
            )),
        }
    }

    /// True conditional quantile at x0 for the conditional models.
    pub fn conditional_quantile(&self, x0: f64, p: Probability) -> Result<f64> {
        let z = normal_quantile(f64::from(p))?;
        match self {
            Dgp::FanLiuModel1 => Ok(fan_liu_mean(x0) + 0.5 * z),
            Dgp::RqssCurve { heteroskedastic } => {
                Ok(rqss_mean(x0) + rqss_scale(x0, *heteroskedastic) * z)
            }
            _ => Err(Error::domain(
                "unconditional model has no conditional quantile",
            )),
        }
    }
}

fn fan_liu_mean(x: f64) -> f64 {
    2.5 + (2.0 * x).sin() + 2.0 * (-16.0 * x * x).exp()
}

fn rqss_mean(x: f64) -> f64 {
    let c = 2.0_f64.powf(-7.0 / 5.0);
    (x * (1.0 - x)).max(0.0).sqrt() * (2.0 * PI * (1.0 + c) / (x + c)).sin()
}

fn rqss_scale(x: f64, heteroskedastic: bool) -> f64 {
    if heteroskedastic {
        0.2 * (1.0 + x)
    } else {
        0.2
    }
}

/// CDF of Student's t with 3 degrees of freedom.
pub fn student_t3_cdf(x: f64) -> f64 {
    let t = x / 3.0_f64.sqrt();
    0.5 + (t / (1.0 + x * x / 3.0) + t.atan()) / PI
}

fn student_t3_pdf(x: f64) -> f64 {
    let base = 1.0 + x * x / 3.0;
    2.0 / (PI * 3.0_f64.sqrt() * base * base)
}

/// CDF of chi-squared with 3 degrees of freedom.
pub fn chi_squared_3_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let root = x.sqrt();
    2.0 * crate::special::normal_cdf(root) - 1.0 - (2.0 * x / PI).sqrt() * (-x / 2.0).exp()
}

fn chi_squared_3_pdf(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    (x / (2.0 * PI)).sqrt() * (-x / 2.0).exp()
}

/// Safeguarded Newton inversion of a smooth monotone CDF. `lo` and `hi`
/// must bracket the root.
fn invert_cdf(
    u: f64,
    start: f64,
    mut lo: f64,
    mut hi: f64,
    cdf: impl Fn(f64) -> f64,
    pdf: impl Fn(f64) -> f64,
    context: &'static str,
) -> Result<f64> {
    let mut x = start.clamp(lo, hi);
    let mut best = (x, (cdf(x) - u).abs());
    for _ in 0..200 {
        let f = cdf(x) - u;
        if f.abs() < best.1 {
            best = (x, f.abs());
        }
        if f.abs() <= 1e-14 {
            return Ok(x);
        }
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let d = pdf(x);
        let step_ok = d > 0.0 && {
            let cand = x - f / d;
            cand > lo && cand < hi
        };
        x = if step_ok { x - f / d } else { 0.5 * (lo + hi) };
        if hi - lo <= f64::EPSILON * (x.abs() + 1.0) {
            break;
        }
    }
    if best.1 <= 1e-10 {
        return Ok(best.0);
    }
    Err(Error::Numerical {
        context,
        residual: best.1,
        iterations: 200,
    })
}

/// Quantile of Student's t with 3 degrees of freedom.
pub fn student_t3_quantile(u: f64) -> Result<f64> {
    if !(0.0 < u && u < 1.0) {
        return Err(Error::domain(format!(
            "quantile level must lie in (0, 1), got {u}"
        )));
    }
    // symmetry keeps the search on one side
    if u < 0.5 {
        return Ok(-student_t3_quantile(1.0 - u)?);
    }
    if u == 0.5 {
        return Ok(0.0);
    }
    let z = normal_quantile(u)?;
    let start = z + (z * z * z + z) / 12.0;
    // right tail: 1 - F(x) ~ sqrt(3)/(pi) * 3/x^3 for large x
    let tail_bound = (2.0 * 3.0_f64.sqrt() / (PI * (1.0 - u))).cbrt() + 10.0;
    invert_cdf(
        u,
        start,
        0.0,
        tail_bound.max(start * 2.0 + 10.0),
        student_t3_cdf,
        student_t3_pdf,
        "t3 quantile",
    )
}

/// Quantile of chi-squared with 3 degrees of freedom.
pub fn chi_squared_3_quantile(u: f64) -> Result<f64> {
    if !(0.0 < u && u < 1.0) {
        return Err(Error::domain(format!(
            "quantile level must lie in (0, 1), got {u}"
        )));
    }
    // Wilson-Hilferty start
    let z = normal_quantile(u)?;
    let cube = 1.0 - 2.0 / 27.0 + z * (2.0 / 27.0_f64).sqrt();
    let start = 3.0 * cube.powi(3).max(1e-12);
    let hi = (start.max(1.0)) * 4.0 + 40.0 - 2.0 * (1.0 - u).ln();
    invert_cdf(
        u,
        start,
        0.0,
        hi,
        chi_squared_3_cdf,
        chi_squared_3_pdf,
        "chi-squared quantile",
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prob(v: f64) -> Probability {
        Probability::new(v).unwrap()
    }

    #[test]
    fn t3_cdf_matches_reference_point() {
        assert!((student_t3_cdf(1.2) - 0.84186894265094739498).abs() < 1e-15);
        assert!((student_t3_cdf(0.0) - 0.5).abs() < 1e-16);
    }

    #[test]
    fn t3_quantile_matches_reference_points() {
        assert!((student_t3_quantile(0.975).unwrap() - 3.1824463052837095927).abs() < 1e-12);
        assert!((student_t3_quantile(0.3).unwrap() - (-0.58438972743981866911)).abs() < 1e-12);
        assert_eq!(student_t3_quantile(0.5).unwrap(), 0.0);
    }

    #[test]
    fn chi_squared_quantile_matches_reference_points() {
        assert!((chi_squared_3_quantile(0.5).unwrap() - 2.3659738843753382661).abs() < 1e-12);
        assert!((chi_squared_3_quantile(0.9).unwrap() - 6.2513886311703231964).abs() < 1e-12);
    }

    #[test]
    fn quantile_roundtrips_through_cdf() {
        for &u in &[1e-6, 0.01, 0.2, 0.5, 0.77, 0.99, 1.0 - 1e-6] {
            let x = student_t3_quantile(u).unwrap();
            assert!((student_t3_cdf(x) - u).abs() < 1e-12, "t3 at {u}");
            let c = chi_squared_3_quantile(u).unwrap();
            assert!((chi_squared_3_cdf(c) - u).abs() < 1e-12, "chi2 at {u}");
        }
    }

    #[test]
    fn closed_form_quantiles_are_correct() {
        assert_eq!(Dgp::Uniform.quantile(0.3).unwrap(), 0.3);
        assert!((Dgp::Exponential.quantile(0.5).unwrap() - 2.0_f64.ln()).abs() < 1e-15);
        assert_eq!(Dgp::Cauchy.quantile(0.5).unwrap(), 0.0);
        assert!((Dgp::Cauchy.quantile(0.75).unwrap() - 1.0).abs() < 1e-14);
        let z90 = normal_quantile(0.9).unwrap();
        assert!((Dgp::Lognormal.quantile(0.9).unwrap() - z90.exp()).abs() < 1e-14);
    }

    #[test]
    fn centered_chi_squared_targets_zero_at_its_level() {
        for &c in &[0.25, 0.5, 0.65] {
            let dgp = Dgp::CenteredChiSquared3 { center: c };
            assert!(dgp.quantile(c).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn draws_match_t3_law_by_ks_distance() {
        let n = 100_000;
        let mut stream = RepStream::new(99, 0);
        let mut draws: Vec<f64> = (0..n)
            .map(|_| Dgp::StudentT3.draw_response(&mut stream).unwrap())
            .collect();
        draws.sort_unstable_by(f64::total_cmp);
        let ks = ks_against(&draws, student_t3_cdf);
        let crit = 1.628 / (n as f64).sqrt();
        assert!(ks < crit, "ks {ks} vs {crit}");
    }

    #[test]
    fn draws_match_centered_chi_squared_law_by_ks_distance() {
        let n = 100_000;
        let center = 0.5;
        let shift = chi_squared_3_quantile(center).unwrap();
        let mut stream = RepStream::new(7, 3);
        let dgp = Dgp::CenteredChiSquared3 { center };
        let mut draws: Vec<f64> = (0..n)
            .map(|_| dgp.draw_response(&mut stream).unwrap())
            .collect();
        draws.sort_unstable_by(f64::total_cmp);
        let ks = ks_against(&draws, |x| chi_squared_3_cdf(x + shift));
        let crit = 1.628 / (n as f64).sqrt();
        assert!(ks < crit, "ks {ks} vs {crit}");
    }

    fn ks_against(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
        let n = sorted.len() as f64;
        let mut ks = 0.0_f64;
        for (i, &x) in sorted.iter().enumerate() {
            let f = cdf(x);
            ks = ks.max(((i + 1) as f64 / n - f).abs()).max((f - i as f64 / n).abs());
        }
        ks
    }

    #[test]
    fn conditional_models_expose_their_curves() {
        let dgp = Dgp::FanLiuModel1;
        let q = dgp.conditional_quantile(0.0, prob(0.5)).unwrap();
        assert!((q - 4.5).abs() < 1e-15); // 2.5 + sin 0 + 2 e^0
        let q9 = dgp.conditional_quantile(0.75, prob(0.9)).unwrap();
        let want = fan_liu_mean(0.75) + 0.5 * normal_quantile(0.9).unwrap();
        assert_eq!(q9, want);

        let flat = Dgp::RqssCurve {
            heteroskedastic: false,
        };
        let het = Dgp::RqssCurve {
            heteroskedastic: true,
        };
        let z = normal_quantile(0.8).unwrap();
        let x0 = 0.5;
        assert!((flat.conditional_quantile(x0, prob(0.8)).unwrap()
            - (rqss_mean(x0) + 0.2 * z))
            .abs()
            < 1e-15);
        assert!((het.conditional_quantile(x0, prob(0.8)).unwrap()
            - (rqss_mean(x0) + 0.3 * z))
            .abs()
            < 1e-15);
    }

    #[test]
    fn pair_draws_consume_two_uniforms() {
        let mut a = RepStream::new(11, 0);
        let _ = Dgp::FanLiuModel1.draw_pair(&mut a).unwrap();
        let after_pair = a.next_uniform();
        let mut b = RepStream::new(11, 0);
        b.next_uniform();
        b.next_uniform();
        assert_eq!(after_pair, b.next_uniform());
    }

    #[test]
    fn kind_mismatches_are_rejected() {
        let mut s = RepStream::new(1, 1);
        assert!(Dgp::Normal.draw_pair(&mut s).is_err());
        assert!(Dgp::FanLiuModel1.draw_response(&mut s).is_err());
        assert!(Dgp::FanLiuModel1.quantile(0.5).is_err());
        assert!(Dgp::Normal.conditional_quantile(0.0, prob(0.5)).is_err());
    }

    #[test]
    fn names_parse_to_kinds() {
        let p = prob(0.4);
        assert_eq!(Dgp::from_name("normal", p).unwrap(), Dgp::Normal);
        assert_eq!(
            Dgp::from_name("chi2_3_centered", p).unwrap(),
            Dgp::CenteredChiSquared3 { center: 0.4 }
        );
        assert_eq!(
            Dgp::from_name("rqss_curve_hetero", p).unwrap(),
            Dgp::RqssCurve {
                heteroskedastic: true
            }
        );
        assert!(Dgp::from_name("weibull", p).is_err());
    }
}
