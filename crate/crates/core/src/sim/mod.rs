//! Monte Carlo coverage experiments. Replications are independent
//! counter-keyed streams, so results are bit-identical for a given seed
//! regardless of thread count.

pub mod dgp;
pub mod rng;

pub use dgp::Dgp;
pub use rng::RepStream;

use crate::conditional::{extract_local_sample, plugin_bandwidth, LocalWindow, XyData};
use crate::error::{Error, Result};
use crate::fractional::SortedSample;
use crate::special::Probability;
use crate::unconditional::{
    confidence_interval, PreparedInterval, QuantileRequest, Side,
};
use rayon::prelude::*;
use serde::Serialize;

/// Aggregated outcome of one experiment configuration.
#[derive(Debug, Clone, Serialize)]
pub struct SimulationReport {
    /// Fraction of replications whose interval covered the target.
    pub cp: f64,
    /// Fraction where the interval sat entirely below the target.
    pub too_low: f64,
    /// Fraction where the interval sat entirely above the target.
    pub too_high: f64,
    /// Sample median of interval lengths; absent for one-sided intervals.
    pub median_length: Option<f64>,
    pub replications: usize,
    pub seed: u64,
    /// Binomial standard error of `cp`.
    pub mc_se: f64,
}

#[derive(Clone, Copy)]
enum Outcome {
    Cover,
    TooLow,
    TooHigh,
}

fn classify(lower: f64, upper: f64, target: f64) -> Outcome {
    if upper < target {
        Outcome::TooLow
    } else if lower > target {
        Outcome::TooHigh
    } else {
        Outcome::Cover
    }
}

fn summarize(
    outcomes: &[(Outcome, f64)],
    keep_lengths: bool,
    seed: u64,
) -> SimulationReport {
    let r = outcomes.len();
    let mut covers = 0usize;
    let mut lows = 0usize;
    let mut highs = 0usize;
    for (o, _) in outcomes {
        match o {
            Outcome::Cover => covers += 1,
            Outcome::TooLow => lows += 1,
            Outcome::TooHigh => highs += 1,
        }
    }
    let median_length = if keep_lengths {
        let mut lengths: Vec<f64> = outcomes.iter().map(|(_, l)| *l).collect();
        lengths.sort_unstable_by(f64::total_cmp);
        let mid = r / 2;
        Some(if r % 2 == 1 {
            lengths[mid]
        } else {
            0.5 * (lengths[mid - 1] + lengths[mid])
        })
    } else {
        None
    };
    let cp = covers as f64 / r as f64;
    SimulationReport {
        cp,
        too_low: lows as f64 / r as f64,
        too_high: highs as f64 / r as f64,
        median_length,
        replications: r,
        seed,
        mc_se: (cp * (1.0 - cp) / r as f64).sqrt(),
    }
}

fn validate_common(replications: usize) -> Result<()> {
    if replications < 100 {
        return Err(Error::domain(format!(
            "at least 100 replications required, got {replications}"
        )));
    }
    Ok(())
}

/// Coverage of the unconditional interval under `dgp`: endpoint indices
/// are solved once, then each replication only sorts and interpolates.
pub fn run_unconditional(
    dgp: &Dgp,
    n: usize,
    request: &QuantileRequest,
    replications: usize,
    seed: u64,
) -> Result<SimulationReport> {
    validate_common(replications)?;
    if dgp.is_conditional() {
        return Err(Error::domain(
            "conditional model passed to the unconditional runner",
        ));
    }
    let prepared = PreparedInterval::new(n, request)?;
    let target = dgp.quantile(f64::from(request.p()))?;
    let two_sided = request.side() == Side::TwoSided;

    let outcomes: Vec<(Outcome, f64)> = (0..replications)
        .into_par_iter()
        .map(|rep| {
            let mut stream = RepStream::new(seed, rep as u64);
            let mut values = Vec::with_capacity(n);
            for _ in 0..n {
                values.push(dgp.draw_response(&mut stream)?);
            }
            let sample = SortedSample::new(values)?;
            let (lower, upper) = prepared.endpoints(&sample)?;
            Ok((classify(lower, upper, target), upper - lower))
        })
        .collect::<Result<_>>()?;
    Ok(summarize(&outcomes, two_sided, seed))
}

/// One-tail endpoint through the single-sided request machinery; an
/// unevaluable tail widens to infinity rather than failing the run.
fn tail_or_unbounded(
    sample: &SortedSample,
    template: &QuantileRequest,
    level: Option<f64>,
    side: Side,
) -> Result<f64> {
    let unbounded = match side {
        Side::Upper => f64::NEG_INFINITY,
        _ => f64::INFINITY,
    };
    let Some(a) = level else {
        return Ok(unbounded);
    };
    let single = QuantileRequest::new(template.p(), Probability::new(a)?, side)?
        .calibrated(template.is_calibrated());
    match confidence_interval(sample, &single) {
        Ok(ci) => Ok(match side {
            Side::Upper => ci.lower(),
            _ => ci.upper(),
        }),
        Err(Error::ExtremeQuantile { .. }) => Ok(unbounded),
        Err(e) => Err(e),
    }
}

/// Coverage of the conditional interval at each point of `x0_list` under
/// a conditional `dgp`. Every replication draws a fresh sample, recomputes
/// the plug-in width at each point, and rebuilds the interval; a tail the
/// local sample cannot support becomes unbounded (conservative).
pub fn run_conditional(
    dgp: &Dgp,
    n: usize,
    x0_list: &[f64],
    request: &QuantileRequest,
    replications: usize,
    seed: u64,
) -> Result<Vec<SimulationReport>> {
    validate_common(replications)?;
    if !dgp.is_conditional() {
        return Err(Error::domain(
            "unconditional model passed to the conditional runner",
        ));
    }
    if x0_list.is_empty() {
        return Err(Error::domain("no evaluation points given"));
    }
    let targets: Vec<f64> = x0_list
        .iter()
        .map(|&x0| dgp.conditional_quantile(x0, request.p()))
        .collect::<Result<_>>()?;
    let two_sided = request.side() == Side::TwoSided;
    let (low_level, high_level) = request.tail_levels();

    let per_rep: Vec<Vec<(Outcome, f64)>> = (0..replications)
        .into_par_iter()
        .map(|rep| {
            let mut stream = RepStream::new(seed, rep as u64);
            let mut xs = Vec::with_capacity(n);
            let mut ys = Vec::with_capacity(n);
            for _ in 0..n {
                let (x, y) = dgp.draw_pair(&mut stream)?;
                xs.push(x);
                ys.push(y);
            }
            let data = XyData::univariate(xs, ys)?;
            x0_list
                .iter()
                .zip(&targets)
                .map(|(&x0, &target)| {
                    let bw = plugin_bandwidth(&data, &[x0], None, request, true)?;
                    let window = LocalWindow::new(vec![x0], bw.h(), None)?;
                    let local = extract_local_sample(&data, &window)?;
                    let lower =
                        tail_or_unbounded(local.y_values(), request, low_level, Side::Upper)?;
                    let upper =
                        tail_or_unbounded(local.y_values(), request, high_level, Side::Lower)?;
                    Ok((classify(lower, upper, target), upper - lower))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    Ok((0..x0_list.len())
        .map(|j| {
            let slice: Vec<(Outcome, f64)> =
                per_rep.iter().map(|row| row[j]).collect();
            summarize(&slice, two_sided, seed)
        })
        .collect())
}

/// Uncalibrated and calibrated two-sided intervals scored on identical
/// draws, so their coverage difference is free of sampling noise between
/// arms. Returns (uncalibrated, calibrated).
pub fn run_calibration_comparison(
    dgp: &Dgp,
    n: usize,
    p: Probability,
    alpha: Probability,
    replications: usize,
    seed: u64,
) -> Result<(SimulationReport, SimulationReport)> {
    validate_common(replications)?;
    if dgp.is_conditional() {
        return Err(Error::domain(
            "conditional model passed to the unconditional runner",
        ));
    }
    let plain_req = QuantileRequest::new(p, alpha, Side::TwoSided)?;
    let cal_req = plain_req.calibrated(true);
    let plain = PreparedInterval::new(n, &plain_req)?;
    let cal = PreparedInterval::new(n, &cal_req)?;
    let target = dgp.quantile(f64::from(p))?;

    let outcomes: Vec<((Outcome, f64), (Outcome, f64))> = (0..replications)
        .into_par_iter()
        .map(|rep| {
            let mut stream = RepStream::new(seed, rep as u64);
            let mut values = Vec::with_capacity(n);
            for _ in 0..n {
                values.push(dgp.draw_response(&mut stream)?);
            }
            let sample = SortedSample::new(values)?;
            let (pl, pu) = plain.endpoints(&sample)?;
            let (cl, cu) = cal.endpoints(&sample)?;
            Ok((
                (classify(pl, pu, target), pu - pl),
                (classify(cl, cu, target), cu - cl),
            ))
        })
        .collect::<Result<_>>()?;

    let plain_outcomes: Vec<(Outcome, f64)> = outcomes.iter().map(|(a, _)| *a).collect();
    let cal_outcomes: Vec<(Outcome, f64)> = outcomes.iter().map(|(_, b)| *b).collect();
    Ok((
        summarize(&plain_outcomes, true, seed),
        summarize(&cal_outcomes, true, seed),
    ))
}
