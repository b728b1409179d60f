//! Coverage experiments: built-in or user-supplied configurations fan out
//! to the Monte Carlo harness, one output row per (dgp, p, x0) cell.

use crate::output::{csv_cell, num, opt_num};
use crate::{CliError, FormatArg, SimulateArgs};
use qlstat::sim::{run_calibration_comparison, run_conditional, run_unconditional, SimulationReport};
use qlstat::unconditional::{QuantileRequest, Side};
use qlstat::Probability;
use serde::Deserialize;
use serde_json::{json, Value};

#[derive(Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
enum SimMode {
    Unconditional,
    Conditional,
    CalibrationComparison,
}

#[derive(Clone, Copy, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum SideName {
    Lower,
    Upper,
    TwoSided,
}

impl SideName {
    fn to_side(self) -> Side {
        match self {
            SideName::Lower => Side::Lower,
            SideName::Upper => Side::Upper,
            SideName::TwoSided => Side::TwoSided,
        }
    }

    fn name(self) -> &'static str {
        match self {
            SideName::Lower => "lower",
            SideName::Upper => "upper",
            SideName::TwoSided => "two-sided",
        }
    }
}

fn default_side() -> SideName {
    SideName::TwoSided
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SimConfig {
    name: String,
    mode: SimMode,
    n: usize,
    p: Vec<f64>,
    alpha: f64,
    #[serde(default = "default_side")]
    side: SideName,
    #[serde(default)]
    calibrated: bool,
    dgps: Vec<String>,
    #[serde(default)]
    x0: Vec<f64>,
    replications: usize,
    seed: u64,
}

/// One emitted row; x0 is present only for conditional experiments.
struct Row {
    dgp: String,
    variant: &'static str,
    p: f64,
    x0: Option<f64>,
    report: SimulationReport,
}

fn load_config(args: &SimulateArgs) -> Result<SimConfig, CliError> {
    let text = match (&args.table, &args.config) {
        (Some(token), None) => match token.as_str() {
            "1" | "table1" => include_str!("../configs/table1.json").to_owned(),
            "2" | "table2" => include_str!("../configs/table2.json").to_owned(),
            "calibration" => include_str!("../configs/calibration.json").to_owned(),
            "fanliu" => include_str!("../configs/fanliu.json").to_owned(),
            "rqss" => include_str!("../configs/rqss.json").to_owned(),
            other => {
                return Err(CliError::Usage(format!(
                    "unknown table '{other}'; expected 1, 2, calibration, fanliu, or rqss"
                )))
            }
        },
        (None, Some(path)) => std::fs::read_to_string(path)?,
        _ => {
            return Err(CliError::Usage(
                "pass exactly one of --table or --config".into(),
            ))
        }
    };
    serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("bad experiment config: {e}")))
}

fn run_config(config: &SimConfig) -> Result<Vec<Row>, CliError> {
    let alpha = Probability::new(config.alpha)?;
    let mut rows = Vec::new();
    for dgp_name in &config.dgps {
        for &p_raw in &config.p {
            let p = Probability::new(p_raw)?;
            let dgp = qlstat::sim::Dgp::from_name(dgp_name, p)?;
            let request = QuantileRequest::new(p, alpha, config.side.to_side())?
                .calibrated(config.calibrated);
            match config.mode {
                SimMode::Unconditional => {
                    let report =
                        run_unconditional(&dgp, config.n, &request, config.replications, config.seed)?;
                    rows.push(Row {
                        dgp: dgp_name.clone(),
                        variant: "lstat",
                        p: p_raw,
                        x0: None,
                        report,
                    });
                }
                SimMode::CalibrationComparison => {
                    let (plain, calibrated) = run_calibration_comparison(
                        &dgp,
                        config.n,
                        p,
                        alpha,
                        config.replications,
                        config.seed,
                    )?;
                    rows.push(Row {
                        dgp: dgp_name.clone(),
                        variant: "lstat",
                        p: p_raw,
                        x0: None,
                        report: plain,
                    });
                    rows.push(Row {
                        dgp: dgp_name.clone(),
                        variant: "lstat_calibrated",
                        p: p_raw,
                        x0: None,
                        report: calibrated,
                    });
                }
                SimMode::Conditional => {
                    if config.x0.is_empty() {
                        return Err(CliError::Usage(
                            "conditional experiments need at least one x0".into(),
                        ));
                    }
                    let reports = run_conditional(
                        &dgp,
                        config.n,
                        &config.x0,
                        &request,
                        config.replications,
                        config.seed,
                    )?;
                    for (&x0, report) in config.x0.iter().zip(reports) {
                        rows.push(Row {
                            dgp: dgp_name.clone(),
                            variant: "lstat",
                            p: p_raw,
                            x0: Some(x0),
                            report,
                        });
                    }
                }
            }
        }
    }
    Ok(rows)
}

fn emit_csv(config: &SimConfig, rows: &[Row]) {
    println!("table,dgp,variant,n,p,alpha,side,x0,replications,seed,cp,too_low,too_high,median_length,mc_se");
    for row in rows {
        let r = &row.report;
        println!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            config.name,
            row.dgp,
            row.variant,
            config.n,
            csv_cell(Some(row.p)),
            csv_cell(Some(config.alpha)),
            config.side.name(),
            csv_cell(row.x0),
            r.replications,
            r.seed,
            csv_cell(Some(r.cp)),
            csv_cell(Some(r.too_low)),
            csv_cell(Some(r.too_high)),
            csv_cell(r.median_length),
            csv_cell(Some(r.mc_se)),
        );
    }
}

fn emit_json(config: &SimConfig, rows: &[Row]) {
    let rows: Vec<Value> = rows
        .iter()
        .map(|row| {
            let r = &row.report;
            json!({
                "dgp": row.dgp,
                "variant": row.variant,
                "n": config.n,
                "p": num(row.p),
                "alpha": num(config.alpha),
                "side": config.side.name(),
                "x0": opt_num(row.x0),
                "replications": r.replications,
                "seed": r.seed,
                "cp": num(r.cp),
                "too_low": num(r.too_low),
                "too_high": num(r.too_high),
                "median_length": opt_num(r.median_length),
                "mc_se": num(r.mc_se),
            })
        })
        .collect();
    println!("{}", json!({ "schema": 1, "table": config.name, "rows": rows }));
}

pub fn run(args: SimulateArgs) -> Result<(), CliError> {
    if args.rows != "lstat" {
        return Err(CliError::Usage(format!(
            "unknown method rows '{}'; only 'lstat' is available",
            args.rows
        )));
    }
    let mut config = load_config(&args)?;
    if let Some(reps) = args.reps {
        config.replications = reps;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let rows = run_config(&config)?;
    match args.format {
        FormatArg::Csv => emit_csv(&config, &rows),
        FormatArg::Json => emit_json(&config, &rows),
    }
    Ok(())
}
