//! Delimited numeric matrices: comma- and/or whitespace-separated, an
//! optional header line, `#` comments.

use nalgebra::{DMatrix, DVector};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone)]
pub struct NumericTable {
    pub header: Option<Vec<String>>,
    pub rows: Vec<Vec<f64>>,
}

fn tokens(line: &str) -> impl Iterator<Item = &str> {
    line.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty())
}

pub fn parse_table(text: &str) -> CliResult<NumericTable> {
    let mut header: Option<Vec<String>> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parsed: Result<Vec<f64>, _> = tokens(line).map(str::parse::<f64>).collect();
        match parsed {
            Ok(row) => {
                if let Some(first) = rows.first() {
                    if first.len() != row.len() {
                        return Err(CliError::Input(format!(
                            "line {}: {} fields, expected {}",
                            lineno + 1,
                            row.len(),
                            first.len()
                        )));
                    }
                }
                rows.push(row);
            }
            Err(_) if rows.is_empty() && header.is_none() => {
                header = Some(tokens(line).map(str::to_string).collect());
            }
            Err(_) => {
                return Err(CliError::Input(format!("line {}: non-numeric field", lineno + 1)));
            }
        }
    }
    if rows.is_empty() {
        return Err(CliError::Input("no numeric rows".into()));
    }
    if let Some(h) = &header {
        if h.len() != rows[0].len() {
            return Err(CliError::Input(format!(
                "header has {} fields, rows have {}",
                h.len(),
                rows[0].len()
            )));
        }
    }
    Ok(NumericTable { header, rows })
}

impl NumericTable {
    pub fn ncols(&self) -> usize {
        self.rows[0].len()
    }

    /// Splits off the response column (zero-based) and returns the design
    /// with the remaining columns in their original order.
    pub fn split_response(&self, response: usize) -> CliResult<(DMatrix<f64>, DVector<f64>)> {
        let m = self.ncols();
        if response >= m {
            return Err(CliError::Input(format!("response column {} out of range 1..={m}", response + 1)));
        }
        if m < 2 {
            return Err(CliError::Input("need at least one feature column besides the response".into()));
        }
        let n = self.rows.len();
        let y = DVector::from_fn(n, |i, _| self.rows[i][response]);
        let x = DMatrix::from_fn(n, m - 1, |i, j| self.rows[i][if j < response { j } else { j + 1 }]);
        Ok((x, y))
    }
}
