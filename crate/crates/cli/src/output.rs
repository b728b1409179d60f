//! Numeric formatting shared by the JSON and CSV emitters: 10 significant
//! digits, infinities mapped to null (JSON) or empty (CSV).

use serde_json::Value;

/// Round to 10 significant digits so output is stable below the solver
/// tolerance but free of trailing float noise.
pub fn sig10(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    let magnitude = v.abs().log10().floor() as i32;
    let factor = 10f64.powi(9 - magnitude);
    (v * factor).round() / factor
}

pub fn num(v: f64) -> Value {
    serde_json::Number::from_f64(sig10(v)).map_or(Value::Null, Value::Number)
}

pub fn opt_num(v: Option<f64>) -> Value {
    v.map_or(Value::Null, num)
}

/// CSV cell: shortest decimal of the rounded value, empty when absent or
/// non-finite.
pub fn csv_cell(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{}", sig10(x)),
        _ => String::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_keeps_ten_digits() {
        assert_eq!(sig10(0.123456789012345), 0.123456789);
        assert_eq!(sig10(98765432109876.5), 98765432110000.0);
        assert_eq!(sig10(-0.5), -0.5);
        assert_eq!(sig10(0.0), 0.0);
    }

    #[test]
    fn non_finite_becomes_null_or_empty() {
        assert_eq!(num(f64::INFINITY), Value::Null);
        assert_eq!(num(f64::NEG_INFINITY), Value::Null);
        assert_eq!(csv_cell(Some(f64::INFINITY)), "");
        assert_eq!(csv_cell(None), "");
        assert_eq!(csv_cell(Some(0.25)), "0.25");
    }
}
