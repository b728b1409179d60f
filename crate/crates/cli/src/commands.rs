//! The single-shot inference subcommands: ci, cond-ci, bandwidth, oracle.

use crate::ingest::read_table;
use crate::output::num;
use crate::{BandwidthArgs, CiArgs, CliError, CondCiArgs, JointArg, OracleArgs};
use qlstat::bandwidth::{plugin_one_sided, plugin_two_sided, BandwidthReport};
use qlstat::conditional::{
    conditional_interval, joint_intervals, ConditionalInterval, JointMode, JointPoint, XyData,
};
use qlstat::nuisance::estimate_nuisances;
use qlstat::oracle::{exact_cp, exact_cp_two_sided, CoverageMethod};
use qlstat::unconditional::{
    confidence_interval_bounded, PreparedInterval, QuantileRequest, Side, SolvedEndpoint,
    SupportBounds,
};
use qlstat::{Probability, SortedSample};
use serde_json::{json, Value};

fn prob(v: f64) -> Result<Probability, CliError> {
    Ok(Probability::new(v)?)
}

fn build_request(
    p: f64,
    alpha: f64,
    side: Side,
    calibrated: bool,
    tail_split: Option<f64>,
) -> Result<QuantileRequest, CliError> {
    let mut request = QuantileRequest::new(prob(p)?, prob(alpha)?, side)?.calibrated(calibrated);
    if let Some(t) = tail_split {
        request = request.with_tail_split(t)?;
    }
    Ok(request)
}

fn endpoint_fields(ep: Option<&SolvedEndpoint>) -> (Value, Value) {
    match ep {
        Some(s) => (num(s.u().value()), num(s.index().epsilon())),
        None => (Value::Null, Value::Null),
    }
}

pub fn run_ci(args: CiArgs) -> Result<(), CliError> {
    let table = read_table(args.data.as_deref())?;
    let sample = SortedSample::new(table.column(&args.col)?)?;
    let request = build_request(
        args.p,
        args.alpha,
        args.side.to_side(),
        args.calibrated,
        args.tail_split,
    )?;
    let bounds = SupportBounds {
        lower: args.bound_lower,
        upper: args.bound_upper,
    };
    let ci = confidence_interval_bounded(&sample, &request, &bounds)?;
    let (u_low, eps_low) = endpoint_fields(ci.indices().low.as_ref());
    let (u_high, eps_high) = endpoint_fields(ci.indices().high.as_ref());
    let mut out = json!({
        "schema": 1,
        "lower": num(ci.lower()),
        "upper": num(ci.upper()),
        "u_low": u_low,
        "u_high": u_high,
        "eps_low": eps_low,
        "eps_high": eps_high,
        "n": ci.n(),
    });
    if ci.is_conservative() {
        out["conservative"] = json!(true);
    }
    println!("{out}");
    Ok(())
}

fn interval_json(ci: &ConditionalInterval, h_source: &str) -> Value {
    let (u_low, eps_low) = endpoint_fields(ci.interval.indices().low.as_ref());
    let (u_high, eps_high) = endpoint_fields(ci.interval.indices().high.as_ref());
    let mut out = json!({
        "x0": ci.local.window().x0().iter().map(|&v| num(v)).collect::<Vec<_>>(),
        "lower": num(ci.interval.lower()),
        "upper": num(ci.interval.upper()),
        "u_low": u_low,
        "u_high": u_high,
        "eps_low": eps_low,
        "eps_high": eps_high,
        "n": ci.interval.n(),
        "alpha": num(ci.interval.request().alpha().value()),
        "h": num(ci.local.window().h()),
        "h_source": h_source,
    });
    if let Some(bw) = &ci.bandwidth {
        out["bias_sign"] = json!(bw.bias_sign());
        out["large_n_coefficient"] = num(bw.large_n_coefficient());
        if bw.flat_bias_fallback() {
            out["flat_bias_fallback"] = json!(true);
        }
    }
    out
}

pub fn run_cond_ci(args: CondCiArgs) -> Result<(), CliError> {
    let table = read_table(args.data.as_deref())?;
    let y = table.column(&args.y)?;
    let x_cols: Vec<Vec<f64>> = args
        .x
        .iter()
        .map(|name| table.column(name))
        .collect::<Result<_, _>>()?;
    let d_cols: Vec<Vec<f64>> = args
        .discrete
        .iter()
        .map(|name| table.column(name))
        .collect::<Result<_, _>>()?;
    let n = y.len();
    let to_rows = |cols: &[Vec<f64>]| -> Vec<Vec<f64>> {
        (0..n).map(|i| cols.iter().map(|c| c[i]).collect()).collect()
    };
    let data = XyData::new(to_rows(&x_cols), to_rows(&d_cols), y)?;

    let d = args.x.len();
    if args.x0.is_empty() || !args.x0.len().is_multiple_of(d) {
        return Err(CliError::Usage(format!(
            "--x0 needs coordinates in groups of {d}, got {}",
            args.x0.len()
        )));
    }
    let points: Vec<&[f64]> = args.x0.chunks(d).collect();
    let cell: Option<&[f64]> = if args.cell.is_empty() {
        None
    } else {
        Some(&args.cell)
    };
    let request = build_request(
        args.p,
        args.alpha,
        args.side.to_side(),
        args.calibrated,
        None,
    )?;
    let apply_large_n = !args.no_large_n;
    let h_source = if args.h.is_some() { "given" } else { "plugin" };

    let intervals: Vec<ConditionalInterval> = match args.joint {
        Some(mode) => {
            let joint_points: Vec<JointPoint> = points
                .iter()
                .map(|x0| JointPoint {
                    x0: x0.to_vec(),
                    cell: cell.map(<[f64]>::to_vec),
                    h: args.h,
                })
                .collect();
            let mode = match mode {
                JointArg::Bonferroni => JointMode::Bonferroni,
                JointArg::IndependentWindows => JointMode::IndependentWindows,
            };
            joint_intervals(&data, &joint_points, &request, mode, apply_large_n)?
        }
        None => points
            .iter()
            .map(|x0| conditional_interval(&data, x0, cell, &request, args.h, apply_large_n))
            .collect::<Result<_, _>>()?,
    };

    let rows: Vec<Value> = intervals
        .iter()
        .map(|ci| interval_json(ci, h_source))
        .collect();
    println!("{}", json!({ "schema": 1, "intervals": rows }));
    Ok(())
}

fn bandwidth_json(report: &BandwidthReport, side_name: &str) -> Value {
    let nuis = report.nuisances();
    json!({
        "schema": 1,
        "h": num(report.h()),
        "side": side_name,
        "bias_sign": report.bias_sign(),
        "large_n_coefficient": num(report.large_n_coefficient()),
        "n": report.n(),
        "flat_bias_fallback": report.flat_bias_fallback(),
        "nuisances": {
            "f_x": num(nuis.density.value()),
            "f_x_prime": num(nuis.density.derivative()),
            "density_bandwidths": [
                num(nuis.density.pilot_bandwidths().0),
                num(nuis.density.pilot_bandwidths().1),
            ],
            "d1": num(nuis.cdf_derivs.d1()),
            "d2": num(nuis.cdf_derivs.d2()),
            "pilot_xi_p": num(nuis.cdf_derivs.pilot_xi_p()),
            "cubic_pilot_bandwidth": num(nuis.cdf_derivs.pilot_bandwidth()),
            "f_y_given_x": num(nuis.f_y_given_x),
            "sigma_x": num(nuis.sigma_x),
        },
    })
}

pub fn run_bandwidth(args: BandwidthArgs) -> Result<(), CliError> {
    let table = read_table(args.data.as_deref())?;
    let y = table.column(&args.y)?;
    let x = table.column(&args.x)?;
    let p = prob(args.p)?;
    let nuis = estimate_nuisances(&x, &y, args.x0, p)?;
    let apply_large_n = !args.no_large_n;
    let report = match args.side.to_side() {
        Side::TwoSided => plugin_two_sided(x.len(), p, &nuis, apply_large_n)?,
        side => plugin_one_sided(x.len(), p, prob(args.alpha)?, &nuis, side, apply_large_n)?,
    };
    println!("{}", bandwidth_json(&report, args.side.name()));
    Ok(())
}

pub fn run_oracle(args: OracleArgs) -> Result<(), CliError> {
    let request = build_request(
        args.p,
        args.alpha,
        args.side.to_side(),
        args.calibrated,
        args.tail_split,
    )?;
    let p = request.p();
    let prepared = PreparedInterval::new(args.n, &request)?;
    let (cp, too_low, too_high, bound, method) = match request.side() {
        Side::TwoSided => {
            let lo = prepared.low().expect("two-sided low endpoint");
            let hi = prepared.high().expect("two-sided high endpoint");
            let cov = exact_cp_two_sided(args.n, lo.u(), hi.u(), p)?;
            // upper endpoint entirely below the target
            let tl = exact_cp(args.n, hi.u(), p, Side::Upper)?;
            // lower endpoint entirely above the target
            let th = exact_cp(args.n, lo.u(), p, Side::Lower)?;
            (
                cov.cp().value(),
                tl.cp().value(),
                th.cp().value(),
                cov.abs_error_bound(),
                cov.method(),
            )
        }
        Side::Lower => {
            let hi = prepared.high().expect("lower interval high endpoint");
            let cov = exact_cp(args.n, hi.u(), p, Side::Lower)?;
            let c = cov.cp().value();
            (c, 1.0 - c, 0.0, cov.abs_error_bound(), cov.method())
        }
        Side::Upper => {
            let lo = prepared.low().expect("upper interval low endpoint");
            let cov = exact_cp(args.n, lo.u(), p, Side::Upper)?;
            let c = cov.cp().value();
            (c, 0.0, 1.0 - c, cov.abs_error_bound(), cov.method())
        }
    };
    let (u_low, eps_low) = endpoint_fields(prepared.low());
    let (u_high, eps_high) = endpoint_fields(prepared.high());
    let method_name = match method {
        CoverageMethod::ClosedFormInteger => "closed_form_integer",
        CoverageMethod::QuadratureInterpolated => "quadrature_interpolated",
    };
    let out = json!({
        "schema": 1,
        "n": args.n,
        "p": num(args.p),
        "alpha": num(args.alpha),
        "side": args.side.name(),
        "calibrated": args.calibrated,
        "u_low": u_low,
        "u_high": u_high,
        "eps_low": eps_low,
        "eps_high": eps_high,
        "cp": num(cp),
        "too_low": num(too_low),
        "too_high": num(too_high),
        "cp_error_bound": num(bound),
        "method": method_name,
    });
    println!("{out}");
    Ok(())
}
