//! CSV ingestion: header-mapped numeric columns with line-numbered
//! rejection of anything that does not parse.

use crate::CliError;
use std::fs::File;
use std::io::{self, Read};
use std::path::Path;

pub struct Table {
    headers: Vec<String>,
    rows: Vec<csv::StringRecord>,
}

pub fn read_table(path: Option<&Path>) -> Result<Table, CliError> {
    let reader: Box<dyn Read> = match path {
        Some(p) if p != Path::new("-") => Box::new(
            File::open(p).map_err(|e| CliError::Data(format!("cannot open {}: {e}", p.display())))?,
        ),
        _ => Box::new(io::stdin()),
    };
    let mut csv_reader = csv::Reader::from_reader(reader);
    let headers: Vec<String> = csv_reader
        .headers()?
        .iter()
        .map(str::to_string)
        .collect();
    let rows = csv_reader.records().collect::<Result<Vec<_>, _>>()?;
    if rows.is_empty() {
        return Err(CliError::Data("no data rows after the header".to_string()));
    }
    Ok(Table { headers, rows })
}

impl Table {
    /// Numeric column by header name. Rejects the whole read when any row
    /// fails to parse, naming the offending lines (header is line 1).
    pub fn column(&self, name: &str) -> Result<Vec<f64>, CliError> {
        let Some(idx) = self.headers.iter().position(|h| h == name) else {
            return Err(CliError::Data(format!(
                "column '{name}' not found; available: {}",
                self.headers.join(", ")
            )));
        };
        let mut values = Vec::with_capacity(self.rows.len());
        let mut bad_lines = Vec::new();
        for (i, row) in self.rows.iter().enumerate() {
            match row.get(idx).map(str::trim).and_then(|s| s.parse::<f64>().ok()) {
                Some(v) if v.is_finite() => values.push(v),
                _ => bad_lines.push(i + 2),
            }
        }
        if !bad_lines.is_empty() {
            let shown: Vec<String> = bad_lines.iter().take(20).map(usize::to_string).collect();
            let suffix = if bad_lines.len() > 20 {
                format!(" and {} more", bad_lines.len() - 20)
            } else {
                String::new()
            };
            return Err(CliError::Data(format!(
                "column '{name}': unparsable numeric values at lines {}{suffix}",
                shown.join(", ")
            )));
        }
        Ok(values)
    }
}
