//! Plain CSV tables with a fixed float format.

use std::fmt::Write;

/// Twelve significant digits in scientific notation; `NaN` marks a missing value.
pub fn format_float(x: f64) -> String {
    format!("{x:.11e}")
}

pub(crate) struct Table {
    text: String,
    columns: usize,
    rows: usize,
}

impl Table {
    pub(crate) fn new<S: AsRef<str>>(header: &[S]) -> Self {
        let names: Vec<&str> = header.iter().map(|s| s.as_ref()).collect();
        let mut text = names.join(",");
        text.push('\n');
        Self {
            text,
            columns: names.len(),
            rows: 0,
        }
    }

    pub(crate) fn row(&mut self, values: &[f64]) {
        debug_assert_eq!(values.len(), self.columns);
        for (i, v) in values.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            let _ = write!(self.text, "{v:.11e}");
        }
        self.text.push('\n');
        self.rows += 1;
    }

    pub(crate) fn rows(&self) -> usize {
        self.rows
    }

    pub(crate) fn finish(self) -> String {
        self.text
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(format_float(1.0), "1.00000000000e0");
        assert_eq!(format_float(-0.0123456789012345), "-1.23456789012e-2");
        assert_eq!(format_float(f64::NAN), "NaN");
    }

    #[test]
    fn header_and_rows() {
        let mut t = Table::new(&["a", "b"]);
        t.row(&[1.0, 2.0]);
        assert_eq!(t.rows(), 1);
        assert_eq!(t.finish(), "a,b\n1.00000000000e0,2.00000000000e0\n");
    }
}
