//! CSV tables with significant-digit formatting.

use std::fmt::Write;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    /// Wall-clock milliseconds; printed as `0` when timing is disabled.
    Millis(f64),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

#[derive(Clone, Debug)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Clone, Copy, Debug)]
pub struct Format {
    pub precision: usize,
    pub timing: bool,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self, f: Format) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match *c {
                    Cell::Num(v) => significant(v, f.precision),
                    Cell::Int(v) => v.to_string(),
                    Cell::Millis(v) if f.timing => significant(v, f.precision),
                    Cell::Millis(_) => "0".into(),
                    Cell::Empty => String::new(),
                })
                .collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }
}

/// `%g`-style rendering with `digits` significant digits and trailing zeros trimmed.
pub fn significant(v: f64, digits: usize) -> String {
    let digits = digits.max(1);
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent");
    if exp < -4 || exp >= digits as i32 {
        format!("{}e{exp}", trim(mantissa))
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim(&format!("{v:.decimals$}")).to_string()
    }
}

fn trim(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(significant(1.978661234, 6), "1.97866");
        assert_eq!(significant(3.0, 6), "3");
        assert_eq!(significant(0.000123456789, 6), "0.000123457");
        assert_eq!(significant(1.5e-7, 6), "1.5e-7");
        assert_eq!(significant(1234567.0, 6), "1.23457e6");
        assert_eq!(significant(-0.5, 6), "-0.5");
        assert_eq!(significant(99.99999999, 6), "100");
    }

    #[test]
    fn renders_rows() {
        let mut t = Table::new(&["n", "value", "extrapolated", "runtime_ms"]);
        t.push(vec![101usize.into(), 0.25.into(), Cell::Empty, Cell::Millis(12.5)]);
        let f = Format {
            precision: 6,
            timing: false,
        };
        assert_eq!(t.render(f), "n,value,extrapolated,runtime_ms\n101,0.25,,0\n");
    }
}
