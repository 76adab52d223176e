//! CSV tables and field snapshots.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::discretization::interpolate_at;
use crate::error::Result;
use crate::time::problem::Fields;
use crate::tree::DomainTree;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Text(String),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Float(v) => format!("{v:.16e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
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

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Float)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

/// A rectangular table with `#` comment lines written ahead of the header.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub notes: Vec<String>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), ..Default::default() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut w = BufWriter::new(w);
        for n in &self.notes {
            writeln!(w, "# {n}")?;
        }
        let mut cw = csv::Writer::from_writer(w);
        let io = |e: csv::Error| std::io::Error::other(e.to_string());
        cw.write_record(&self.columns).map_err(io)?;
        for r in &self.rows {
            cw.write_record(r.iter().map(Cell::render)).map_err(io)?;
        }
        cw.flush()?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        self.write_csv(File::create(path)?)
    }

    /// Aligned plain-text rendering for terminals.
    pub fn render_text(&self) -> String {
        let cells: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                r.iter()
                    .map(|c| match c {
                        Cell::Float(v) => format!("{v:.6e}"),
                        other => other.render(),
                    })
                    .collect()
            })
            .collect();
        let mut width: Vec<usize> = self.columns.iter().map(|c| c.len()).collect();
        for r in &cells {
            for (k, c) in r.iter().enumerate() {
                width[k] = width[k].max(c.len());
            }
        }
        let line = |r: &[String]| {
            r.iter().enumerate().map(|(k, c)| format!("{c:>w$}", w = width[k])).collect::<Vec<_>>().join("  ")
        };
        let mut s = String::new();
        for n in &self.notes {
            s.push_str(&format!("# {n}\n"));
        }
        s.push_str(&line(&self.columns));
        s.push('\n');
        for r in &cells {
            s.push_str(&line(r));
            s.push('\n');
        }
        s
    }
}

/// Snapshot: a plain header (`key = value` lines starting with `#`), then one
/// line per DOF with `x y u_0 .. u_m` in global DOF order.
pub fn write_snapshot(tree: &DomainTree, t: f64, u: &Fields, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = BufWriter::new(File::create(path)?);
    let (xa, xb) = tree.domain.x_range();
    let (ya, yb) = tree.domain.y_range();
    writeln!(w, "# dim = {}", tree.dim())?;
    writeln!(w, "# bounds = {xa:.16e} {xb:.16e} {ya:.16e} {yb:.16e}")?;
    writeln!(w, "# p = {}", tree.p)?;
    writeln!(w, "# n1 = {}", tree.n1)?;
    writeln!(w, "# n2 = {}", tree.n2)?;
    writeln!(w, "# t = {t:.16e}")?;
    writeln!(w, "# components = {}", u.len())?;
    writeln!(w, "# n_dof = {}", tree.n_dof())?;
    for (g, &(x, y)) in tree.dof_coords.iter().enumerate() {
        write!(w, "{x:.16e} {y:.16e}")?;
        for c in u {
            write!(w, " {:.16e}", c[g])?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// Uniform `n`-per-side resampling of a snapshot (`n` points in 1D).
pub fn write_resampled(tree: &DomainTree, t: f64, u: &Fields, n: usize, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let (xa, xb) = tree.domain.x_range();
    let (ya, yb) = tree.domain.y_range();
    let n = n.max(2);
    let ny = if tree.dim() == 1 { 1 } else { n };
    writeln!(w, "# uniform {n} x {ny} grid, t = {t:.16e}")?;
    for j in 0..ny {
        let y = if ny == 1 { 0.0 } else { ya + (yb - ya) * j as f64 / (ny - 1) as f64 };
        for i in 0..n {
            let x = xa + (xb - xa) * i as f64 / (n - 1) as f64;
            write!(w, "{x:.16e} {y:.16e}")?;
            for c in u {
                write!(w, " {:.16e}", interpolate_at(tree, c, x, y)?)?;
            }
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Parses a snapshot written by [`write_snapshot`] back into `(t, fields)`.
pub fn read_snapshot(path: &Path) -> Result<(f64, Fields)> {
    let text = fs::read_to_string(path)?;
    let mut t = f64::NAN;
    let mut cols: Fields = Vec::new();
    for line in text.lines() {
        if let Some(h) = line.strip_prefix('#') {
            if let Some(v) = h.trim().strip_prefix("t = ") {
                t = v.parse().unwrap_or(f64::NAN);
            }
            continue;
        }
        let vals: Vec<f64> = line.split_whitespace().skip(2).filter_map(|s| s.parse().ok()).collect();
        if cols.is_empty() {
            cols = vec![Vec::new(); vals.len()];
        }
        for (c, v) in cols.iter_mut().zip(vals) {
            c.push(v);
        }
    }
    Ok((t, cols))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{build_tree, Domain};

    #[test]
    fn csv_round_trip_keeps_full_precision() {
        let mut t = Table::new(&["dt", "err", "order", "note"]);
        t.notes.push("problem=heat".into());
        let v = std::f64::consts::PI * 1e-7;
        t.push(vec![0.1.into(), v.into(), None.into(), "ok".into()]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# problem=heat"));
        assert_eq!(lines.next(), Some("dt,err,order,note"));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row[1].parse::<f64>().unwrap(), v);
        assert_eq!(row[2], "");
    }

    #[test]
    fn snapshot_round_trip() {
        let tree = build_tree(Domain::Rect { x: (0.0, 1.0), y: (0.0, 2.0) }, 2, 2, 5).unwrap();
        let u: Fields = vec![tree.dof_coords.iter().map(|(x, y)| x + 3.0 * y).collect()];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.txt");
        write_snapshot(&tree, 0.25, &u, &path).unwrap();
        let (t, back) = read_snapshot(&path).unwrap();
        assert_eq!(t, 0.25);
        assert_eq!(back, u);
        let rs = dir.path().join("r.txt");
        write_resampled(&tree, 0.25, &u, 5, &rs).unwrap();
        let text = fs::read_to_string(&rs).unwrap();
        assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 25);
        let last: Vec<f64> = text.lines().last().unwrap().split_whitespace().map(|s| s.parse().unwrap()).collect();
        assert!((last[2] - 7.0).abs() < 1e-12);
    }
}
