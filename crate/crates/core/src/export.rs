//! Text formatting shared by the CSV and plot-data writers.

use std::fmt::Write as _;

/// Round-trip formatting with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// Builds a comma-separated table in memory so exports stay byte-deterministic.
#[derive(Debug, Default)]
pub struct CsvTable {
    out: String,
}

impl CsvTable {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        let mut t = CsvTable::default();
        t.push_raw(header.iter().map(|h| h.as_ref().to_string()));
        t
    }

    pub fn push_raw(&mut self, cells: impl IntoIterator<Item = String>) {
        let row: Vec<String> = cells.into_iter().collect();
        self.out.push_str(&row.join(","));
        self.out.push('\n');
    }

    /// Row led by an integer index followed by floating-point cells.
    pub fn push_row(&mut self, index: usize, values: impl IntoIterator<Item = f64>) {
        let cells = std::iter::once(index.to_string()).chain(values.into_iter().map(fmt_f64));
        self.push_raw(cells);
    }

    pub fn finish(self) -> String {
        self.out
    }
}

/// Whitespace-separated columns with a `#`-prefixed header line.
pub fn plotdata<S: AsRef<str>>(header: &[S], rows: &[Vec<f64>]) -> String {
    let mut out = String::from("#");
    for h in header {
        let _ = write!(out, " {}", h.as_ref());
    }
    out.push('\n');
    for row in rows {
        let line: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// Parses a single-column numeric CSV. A non-numeric first line is treated as a header.
pub fn parse_single_column(text: &str) -> crate::Result<Vec<f64>> {
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let cell = line.trim();
        if cell.contains(',') {
            return Err(crate::Error::InvalidInput(format!(
                "line {}: expected a single column",
                lineno + 1
            )));
        }
        if cell.is_empty() {
            continue;
        }
        match cell.parse::<f64>() {
            Ok(v) => values.push(v),
            Err(_) if lineno == 0 => continue,
            Err(_) => {
                return Err(crate::Error::InvalidInput(format!(
                    "line {}: cannot parse {cell:?} as a number",
                    lineno + 1
                )))
            }
        }
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 123456789.123456789, 0.0] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn single_column_with_header() {
        assert!(parse_single_column("a,b\n1,2\n").is_err());
        let v = parse_single_column("value\n1\n2.5\n\n-3e-2\n").unwrap();
        assert_eq!(v, vec![1.0, 2.5, -0.03]);
        assert!(parse_single_column("1\nabc\n").is_err());
    }

    #[test]
    fn plotdata_has_hash_header() {
        let s = plotdata(&["x", "y"], &[vec![1.0, 2.0]]);
        assert!(s.starts_with("# x y\n"));
        assert_eq!(s.lines().count(), 2);
    }
}
