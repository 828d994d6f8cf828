//! Tables and their CSV / JSON rendering.

use anyhow::{Context, Result};
use serde_json::{json, Map, Value};

/// Significant digits of every emitted real number.
pub const SIG_DIGITS: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy)]
pub struct Column {
    pub name: &'static str,
    pub unit: &'static str,
    /// Where the values come from: a model route, Monte Carlo or input.
    pub source: &'static str,
}

pub const fn col(name: &'static str, unit: &'static str, source: &'static str) -> Column {
    Column { name, unit, source }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Real(f64),
    Int(u128),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u128)
    }
}

impl From<u128> for Cell {
    fn from(v: u128) -> Self {
        Cell::Int(v)
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

/// Formats `v` in plain decimal notation with [`SIG_DIGITS`] significant
/// digits. NaN becomes the empty string.
pub fn fmt_real(v: f64) -> String {
    if v.is_nan() {
        return String::new();
    }
    if v == 0.0 {
        return "0".to_string();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    // The exponent of the correctly rounded mantissa already accounts for
    // a carry into the next decade.
    let sci = format!("{:.*e}", SIG_DIGITS - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let last = SIG_DIGITS as i32 - 1;
    if exp <= last {
        format!("{:.*}", (last - exp) as usize, v)
    } else {
        let (sign, digits) = match mantissa.strip_prefix('-') {
            Some(m) => ("-", m),
            None => ("", mantissa),
        };
        let digits: String = digits.chars().filter(|c| c.is_ascii_digit()).collect();
        format!("{sign}{digits}{}", "0".repeat((exp - last) as usize))
    }
}

impl Cell {
    pub fn text(&self) -> String {
        match self {
            Cell::Real(v) => fmt_real(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Real(v) if v.is_finite() => {
                let rounded: f64 = fmt_real(*v).parse().expect("formatted real parses");
                json!(rounded)
            }
            Cell::Real(_) => Value::Null,
            // u128 is not a JSON number in serde_json without extra features.
            Cell::Int(v) => match u64::try_from(*v) {
                Ok(x) => json!(x),
                Err(_) => json!(v.to_string()),
            },
            Cell::Text(s) => json!(s),
        }
    }
}

/// Result of one command, in column order.
#[derive(Debug, Clone)]
pub struct Table {
    pub command: &'static str,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
    /// Scalar results reported next to the rows (e.g. `l_opt`).
    pub summary: Vec<(&'static str, Cell)>,
    /// Run parameters echoed into the JSON document.
    pub params: Vec<(&'static str, Cell)>,
}

impl Table {
    pub fn new(command: &'static str, columns: Vec<Column>) -> Self {
        Self {
            command,
            columns,
            rows: Vec::new(),
            summary: Vec::new(),
            params: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(self.columns.iter().map(|c| c.name))?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::text))?;
        }
        let bytes = w.into_inner().context("flushing CSV")?;
        Ok(String::from_utf8(bytes).expect("CSV of UTF-8 cells"))
    }

    pub fn to_json(&self) -> Result<String> {
        let columns: Vec<Value> = self
            .columns
            .iter()
            .map(|c| json!({"name": c.name, "unit": c.unit, "source": c.source}))
            .collect();
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let obj: Map<String, Value> = self
                    .columns
                    .iter()
                    .zip(r)
                    .map(|(c, v)| (c.name.to_string(), v.json()))
                    .collect();
                Value::Object(obj)
            })
            .collect();
        let pairs = |items: &[(&'static str, Cell)]| -> Value {
            Value::Object(items.iter().map(|(k, v)| (k.to_string(), v.json())).collect())
        };
        let doc = json!({
            "command": self.command,
            "params": pairs(&self.params),
            "columns": columns,
            "rows": rows,
            "summary": pairs(&self.summary),
        });
        let mut s = serde_json::to_string_pretty(&doc)?;
        s.push('\n');
        Ok(s)
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt_real(0.123456789123), "0.123456789");
        assert_eq!(fmt_real(1.0), "1.00000000");
        assert_eq!(fmt_real(-2.5e-5), "-0.0000250000000");
        assert_eq!(fmt_real(71.98971634), "71.9897163");
        assert_eq!(fmt_real(9.9999999996), "10.0000000");
        assert_eq!(fmt_real(1234567890123.0), "1234567890000");
        assert_eq!(fmt_real(f64::NAN), "");
        assert_eq!(fmt_real(0.0), "0");
    }

    #[test]
    fn formatted_values_round_trip_to_nine_digits() {
        for &v in &[0.03, 0.987654321987, 12.3456789e-7, 3.0e5 + 1.0 / 3.0] {
            let back: f64 = fmt_real(v).parse().unwrap();
            assert!(((back - v) / v).abs() < 5e-9, "{v} -> {back}");
        }
    }
}
