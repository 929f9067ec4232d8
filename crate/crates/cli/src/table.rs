//! CSV tables with a fixed header and 12 significant digits.

use crate::error::CliError;
use std::io::Write;

pub const DIGITS: usize = 12;

/// `%.12g`-style rendering: shortest of fixed or scientific, trailing zeros
/// trimmed.
pub fn fmt_float(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", DIGITS - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..DIGITS as i32).contains(&exp) {
        let decimals = (DIGITS as i32 - 1 - exp).max(0) as usize;
        trim(format!("{:.*}", decimals, v))
    } else {
        format!("{}e{}", trim(mantissa.to_string()), exp)
    }
}

fn trim(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub enum Cell {
    Float(f64),
    Int(u64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) -> Result<(), CliError> {
        debug_assert_eq!(row.len(), self.header.len());
        for (c, name) in row.iter().zip(&self.header) {
            if let Cell::Float(v) = c {
                if !v.is_finite() {
                    return Err(CliError::Numerical(format!("non-finite value {v} in column {name}")));
                }
            }
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn write<W: Write>(&self, out: W) -> Result<(), CliError> {
        let io = |e: csv::Error| CliError::Config(format!("write failed: {e}"));
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|c| match c {
                Cell::Float(v) => fmt_float(*v),
                Cell::Int(v) => v.to_string(),
                Cell::Text(s) => s.clone(),
            }))
            .map_err(io)?;
        }
        w.flush().map_err(|e| CliError::Config(format!("write failed: {e}")))
    }
}
