//! CSV interchange: field dumps, convergence logs and diagnostic blocks.
//!
//! Floats are written with `{:.16e}` (17 significant digits), which
//! round-trips every finite `f64` exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{DomainMask, Grid, NodeClass, Point, ScalarField};
use crate::solver::ConvergenceRecord;

pub const FIELD_HEADER: &str = "i,j,x,y,class,value";
pub const CONVERGENCE_HEADER: &str = "epsilon,outer_iter,component,residual,inner_iters";

/// Float formatting shared by every artifact.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Renders a field dump, rows ordered `j` outer, `i` inner.
pub fn field_dump_string(field: &ScalarField, mask: &DomainMask) -> String {
    let g = field.grid();
    let mut out = String::with_capacity(g.len() * 64);
    out.push_str(FIELD_HEADER);
    out.push('\n');
    for j in 0..g.ny() {
        for i in 0..g.nx() {
            let k = g.index(i, j);
            let p = g.position(i, j);
            let _ = writeln!(
                out,
                "{i},{j},{},{},{},{}",
                fmt_f64(p.x),
                fmt_f64(p.y),
                mask.class(k).as_str(),
                fmt_f64(field.get(k))
            );
        }
    }
    out
}

pub fn write_field_dump(path: &Path, field: &ScalarField, mask: &DomainMask) -> Result<()> {
    fs::write(path, field_dump_string(field, mask))?;
    Ok(())
}

/// A field dump read back from disk.
#[derive(Debug, Clone)]
pub struct FieldDump {
    pub grid: Grid,
    pub classes: Vec<NodeClass>,
    pub field: ScalarField,
}

pub fn read_field_dump(path: &Path) -> Result<FieldDump> {
    let text = fs::read_to_string(path)?;
    parse_field_dump(&text).map_err(|message| Error::Dump { path: path.to_path_buf(), message })
}

/// Parses the text of a field dump. The grid is recovered from the index
/// ranges and the coordinates of nodes `(0, 0)` and `(1, 0)`.
pub fn parse_field_dump(text: &str) -> std::result::Result<FieldDump, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == FIELD_HEADER => {}
        other => return Err(format!("expected header `{FIELD_HEADER}`, found {other:?}")),
    }
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let lineno = n + 2;
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 6 {
            return Err(format!("line {lineno}: expected 6 columns, found {}", cols.len()));
        }
        let int = |s: &str| s.trim().parse::<usize>().map_err(|e| format!("line {lineno}: {e}"));
        let real = |s: &str| s.trim().parse::<f64>().map_err(|e| format!("line {lineno}: {e}"));
        let class = NodeClass::parse(cols[4].trim()).ok_or_else(|| format!("line {lineno}: unknown class {:?}", cols[4]))?;
        rows.push((int(cols[0])?, int(cols[1])?, real(cols[2])?, real(cols[3])?, class, real(cols[5])?));
    }
    let nx = rows.iter().map(|r| r.0).max().ok_or("no data rows")? + 1;
    let ny = rows.iter().map(|r| r.1).max().ok_or("no data rows")? + 1;
    if rows.len() != nx * ny {
        return Err(format!("expected {} rows for a {nx} x {ny} grid, found {}", nx * ny, rows.len()));
    }
    let first = rows.iter().find(|r| r.0 == 0 && r.1 == 0).ok_or("missing node (0, 0)")?;
    let second = rows.iter().find(|r| r.0 == 1 && r.1 == 0).ok_or("missing node (1, 0)")?;
    let h = second.2 - first.2;
    let grid = Grid::new(nx, ny, h, Point::new(first.2, first.3)).map_err(|e| e.to_string())?;
    let mut classes = vec![NodeClass::Exterior; grid.len()];
    let mut values = vec![0.0; grid.len()];
    let mut seen = vec![false; grid.len()];
    for (i, j, _, _, class, value) in rows {
        let k = grid.index(i, j);
        if seen[k] {
            return Err(format!("node ({i}, {j}) appears twice"));
        }
        seen[k] = true;
        classes[k] = class;
        values[k] = value;
    }
    let field = ScalarField::from_values(grid, values).map_err(|e| e.to_string())?;
    Ok(FieldDump { grid, classes, field })
}

pub fn convergence_log_string(records: &[ConvergenceRecord]) -> String {
    let mut out = String::from(CONVERGENCE_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt_f64(r.epsilon),
            r.outer_iter,
            r.component,
            fmt_f64(r.residual),
            r.inner_iters
        );
    }
    out
}

/// A diagnostic table preceded by a `# op key=value ...` line.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvBlock {
    pub op: String,
    pub params: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvBlock {
    pub fn new(op: &str, columns: &[&str]) -> Self {
        Self {
            op: op.to_string(),
            params: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = format!("# {}", self.op);
        for (k, v) in &self.params {
            let _ = write!(out, " {k}={v}");
        }
        out.push('\n');
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}
