//! CSV ingestion/emission, flag-value parsing and the flat key-value
//! report format.

use std::fmt::Write as _;
use std::path::Path;

use mgsn::{DataMatrix, SymMatrix};

use crate::error::{CliError, CliResult};

/// Reads a UTF-8, comma-separated numeric matrix with a header row.
/// Errors name the offending row and column (1-based, header = row 1).
pub fn read_csv(path: &Path) -> CliResult<DataMatrix> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    parse_csv(&text).map_err(|m| CliError::Input(format!("{}: {m}", path.display())))
}

pub fn parse_csv(text: &str) -> Result<DataMatrix, String> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or("empty file")?;
    let labels: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    let d = labels.len();
    if d == 0 || labels.iter().any(String::is_empty) {
        return Err("header row is malformed".into());
    }
    let mut values = Vec::new();
    let mut n = 0usize;
    for (line_idx, line) in lines {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != d {
            return Err(format!(
                "row {} has {} cells, expected {d}",
                line_idx + 1,
                cells.len()
            ));
        }
        for (col, cell) in cells.iter().enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| {
                format!("row {}, column {}: not a number: {cell:?}", line_idx + 1, col + 1)
            })?;
            values.push(v);
        }
        n += 1;
    }
    if n == 0 {
        return Err("no data rows".into());
    }
    DataMatrix::new(values, n, d, labels).map_err(|e| e.to_string())
}

/// Writes a data matrix as CSV with the shortest round-trip float format.
pub fn matrix_to_csv(data: &DataMatrix) -> String {
    let mut out = String::new();
    out.push_str(&data.labels().join(","));
    out.push('\n');
    for i in 0..data.n_rows() {
        let row: Vec<String> = data.row(i).iter().map(|v| v.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Parses a comma-separated vector flag such as `0,0,1,1`.
pub fn parse_vector(s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|c| {
            c.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Input(format!("bad vector entry {c:?}")))
        })
        .collect()
}

/// Parses a matrix flag with `;`-separated rows, e.g. `1,0;0,1`.
pub fn parse_matrix(s: &str) -> CliResult<SymMatrix> {
    let rows: Vec<Vec<f64>> = s
        .split(';')
        .map(|row| parse_vector(row))
        .collect::<CliResult<_>>()?;
    SymMatrix::from_rows(&rows).map_err(CliError::from)
}

/// Reads a matrix from a text file: one row per line, comma or
/// whitespace separated.
pub fn read_matrix_file(path: &Path) -> CliResult<SymMatrix> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| CliError::Input(format!("bad matrix entry {t:?}")))
                })
                .collect::<CliResult<Vec<f64>>>()
        })
        .collect::<CliResult<_>>()?;
    SymMatrix::from_rows(&rows).map_err(CliError::from)
}

/// Parses a profile grid spec `start:step:end`; `1.0` is appended when
/// the end of the range misses it, since the search must include the
/// Gaussian boundary.
pub fn parse_grid(s: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::Input(format!("grid spec must be start:step:end, got {s:?}")));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Input(format!("bad grid number {t:?}")))
        })
        .collect::<CliResult<_>>()?;
    let (start, step, end) = (nums[0], nums[1], nums[2]);
    if !(start > 0.0 && start <= 1.0 && end <= 1.0 && end >= start && step > 0.0) {
        return Err(CliError::Input(format!("grid {s:?} out of range (0, 1]")));
    }
    let count = ((end - start) / step).round() as usize;
    // round accumulated points to 10 decimals so 0.02 * 6 prints as 0.12
    let mut grid: Vec<f64> = (0..=count)
        .map(|i| ((start + i as f64 * step) * 1e10).round() / 1e10)
        .map(|p| p.min(1.0))
        .filter(|&p| p <= 1.0)
        .collect();
    grid.dedup();
    if *grid.last().unwrap() < 1.0 {
        grid.push(1.0);
    }
    Ok(grid)
}

/// One `key = value` line per entry.
pub fn render_kv(pairs: &[(String, String)]) -> String {
    let mut out = String::new();
    for (k, v) in pairs {
        let _ = writeln!(out, "{k} = {v}");
    }
    out
}

pub fn kv(k: impl Into<String>, v: impl ToString) -> (String, String) {
    (k.into(), v.to_string())
}

/// Matrix entries as `name[i][j]` keys, row-major.
pub fn kv_matrix(pairs: &mut Vec<(String, String)>, name: &str, m: &SymMatrix) {
    for i in 0..m.dim() {
        for j in 0..m.dim() {
            pairs.push(kv(format!("{name}[{i}][{j}]"), m.get(i, j)));
        }
    }
}

pub fn kv_vector(pairs: &mut Vec<(String, String)>, name: &str, v: &[f64]) {
    for (i, x) in v.iter().enumerate() {
        pairs.push(kv(format!("{name}[{i}]"), x));
    }
}
