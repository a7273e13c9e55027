//! Deterministic CSV emission and re-parsing.
//!
//! Fields are written row-per-time-step with a one-line JSON header comment
//! carrying the grid, e.g.
//!
//! ```text
//! # {"n_space":5,"n_time":3,"t0":0.0,"t_final":1.0}
//! 0.0000000000000000e0,…
//! ```
//!
//! All numbers use 17 significant digits, which round-trips f64 exactly, so
//! re-parsing a written file reproduces the in-memory table bit for bit.

use crate::error::{Error, Result};
use crate::pde1d::{Grid1D, SpaceTimeField};

/// 17 significant digits; exact round-trip for f64.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn field_to_csv(field: &SpaceTimeField) -> String {
    let grid = field.grid;
    let mut out = String::new();
    out.push_str(&format!(
        "# {{\"n_space\":{},\"n_time\":{},\"t0\":{},\"t_final\":{}}}\n",
        grid.n_space,
        grid.n_time,
        fmt17(grid.t0),
        fmt17(grid.t_final)
    ));
    for k in 0..grid.n_time {
        let row: Vec<String> = field.slice(k).iter().map(|&v| fmt17(v)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn field_from_csv(text: &str) -> Result<SpaceTimeField> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty field file".into()))?;
    let json = header
        .strip_prefix("# ")
        .ok_or_else(|| Error::Format("missing grid header comment".into()))?;
    #[derive(serde::Deserialize)]
    struct Header {
        n_space: usize,
        n_time: usize,
        t0: f64,
        t_final: f64,
    }
    let h: Header = serde_json::from_str(json)?;
    let grid = Grid1D::new(h.n_space, h.n_time, h.t0, h.t_final)?;
    let mut rows = Vec::with_capacity(h.n_time);
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|e| Error::Format(format!("bad float {tok:?}: {e}")))
            })
            .collect::<Result<_>>()?;
        rows.push(row);
    }
    SpaceTimeField::from_rows(grid, rows)
}

/// Simple named-column table, one header line then data rows.
pub fn table_to_csv(columns: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = String::new();
    out.push_str(&columns.join(","));
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&v| fmt17(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn table_from_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty table".into()))?;
    let columns = header.split(',').map(|s| s.to_string()).collect();
    let mut rows = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        rows.push(
            line.split(',')
                .map(|tok| {
                    tok.parse::<f64>()
                        .map_err(|e| Error::Format(format!("bad float {tok:?}: {e}")))
                })
                .collect::<Result<Vec<f64>>>()?,
        );
    }
    Ok((columns, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_csv_round_trips_exactly() {
        let grid = Grid1D::new(5, 3, 0.0, 1.0).unwrap();
        let mut field = SpaceTimeField::zeros(grid);
        for k in 0..3 {
            for i in 0..5 {
                field.slice_mut(k)[i] = (k * 5 + i) as f64 * 0.123456789123456789 - 0.3;
            }
        }
        let text = field_to_csv(&field);
        let back = field_from_csv(&text).unwrap();
        assert_eq!(field, back);
        // writing again is byte-identical
        assert_eq!(text, field_to_csv(&back));
    }

    #[test]
    fn table_round_trips_exactly() {
        let rows = vec![vec![16.0, 0.25], vec![64.0, 0.125], vec![256.0, 1.0 / 3.0]];
        let text = table_to_csv(&["n", "err"], &rows);
        let (cols, back) = table_from_csv(&text).unwrap();
        assert_eq!(cols, vec!["n", "err"]);
        assert_eq!(rows, back);
    }
}
