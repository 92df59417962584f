//! alist reader and writer.
//!
//! Layout: `N M`, then the maximum column and row degrees, then the N column
//! degrees and the M row degrees, then one line per column and one per row
//! listing 1-based neighbours, zero-padded to the maximum degree.

use super::{GraphError, ParityCheckMatrix};
use std::fmt::Write;

impl ParityCheckMatrix {
    pub fn to_alist(&self) -> String {
        let max_col = self.cols.iter().map(Vec::len).max().unwrap_or(0);
        let max_row = self.rows.iter().map(Vec::len).max().unwrap_or(0);
        let mut s = String::new();
        let _ = writeln!(s, "{} {}", self.n, self.m);
        let _ = writeln!(s, "{max_col} {max_row}");
        let join = |v: &mut dyn Iterator<Item = usize>| {
            v.map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
        };
        let _ = writeln!(s, "{}", join(&mut self.cols.iter().map(Vec::len)));
        let _ = writeln!(s, "{}", join(&mut self.rows.iter().map(Vec::len)));
        for (list, width) in [(&self.cols, max_col), (&self.rows, max_row)] {
            for adj in list.iter() {
                let mut it = adj
                    .iter()
                    .map(|&x| x + 1)
                    .chain(std::iter::repeat_n(0, width - adj.len()));
                let _ = writeln!(s, "{}", join(&mut it));
            }
        }
        s
    }

    /// Parses an alist document. Zero padding is optional.
    pub fn from_alist(text: &str) -> Result<Self, GraphError> {
        let bad = |msg: &str| GraphError::Alist(msg.to_string());
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let nums = |line: Option<&str>, what: &str| -> Result<Vec<usize>, GraphError> {
            let line = line.ok_or_else(|| bad(&format!("missing {what}")))?;
            line.split_whitespace()
                .map(|t| {
                    t.parse::<usize>()
                        .map_err(|_| bad(&format!("bad integer {t:?} in {what}")))
                })
                .collect()
        };
        let header = nums(lines.next(), "header")?;
        let [n, m] = header[..] else {
            return Err(bad("header must be `N M`"));
        };
        let maxes = nums(lines.next(), "max degrees")?;
        if maxes.len() != 2 {
            return Err(bad("max degree line must have two entries"));
        }
        let col_deg = nums(lines.next(), "column degrees")?;
        let row_deg = nums(lines.next(), "row degrees")?;
        if col_deg.len() != n || row_deg.len() != m {
            return Err(bad("degree list length mismatch"));
        }
        let mut cols = Vec::with_capacity(n);
        for (j, &d) in col_deg.iter().enumerate() {
            let entries: Vec<usize> = nums(lines.next(), "column list")?
                .into_iter()
                .filter(|&x| x != 0)
                .collect();
            if entries.len() != d {
                return Err(bad(&format!(
                    "column {j} lists {} entries, degree {d}",
                    entries.len()
                )));
            }
            cols.push(entries);
        }
        let mut rows = Vec::with_capacity(m);
        for (i, &d) in row_deg.iter().enumerate() {
            let entries: Vec<usize> = nums(lines.next(), "row list")?
                .into_iter()
                .filter(|&x| x != 0)
                .map(|x| x - 1)
                .collect();
            if entries.len() != d {
                return Err(bad(&format!(
                    "row {i} lists {} entries, degree {d}",
                    entries.len()
                )));
            }
            rows.push(entries);
        }
        let h = ParityCheckMatrix::from_rows(n, rows)?;
        for (j, c) in cols.iter().enumerate() {
            let mut c: Vec<usize> = c.iter().map(|x| x - 1).collect();
            c.sort_unstable();
            if c != h.cols[j] {
                return Err(bad(&format!("column {j} disagrees with row lists")));
            }
        }
        Ok(h)
    }
}
