//! CSV input, atomic output and number formatting.

use std::fs;
use std::path::{Path, PathBuf};

use conetest_core::model::Dataset;
use conetest_core::{Matrix, Vector};

use crate::error::{AppError, Result};

fn parse_err(path: &Path, line: u64, msg: impl Into<String>) -> AppError {
    AppError::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

/// Parses numeric CSV rows. A first row with any non-numeric field is a header.
pub fn parse_table(text: &str, path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = |r: &csv::StringRecord| r.position().map_or(i as u64 + 1, |p| p.line());
        let record = record.map_err(|e| {
            let l = e.position().map_or(i as u64 + 1, |p| p.line());
            parse_err(path, l, e.to_string())
        })?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(v) => {
                if let Some(bad) = v.iter().position(|x| !x.is_finite()) {
                    return Err(parse_err(path, line(&record), format!("field {} is not finite", bad + 1)));
                }
                if let Some(first) = rows.first() {
                    if first.len() != v.len() {
                        return Err(parse_err(
                            path,
                            line(&record),
                            format!("expected {} fields, found {}", first.len(), v.len()),
                        ));
                    }
                }
                rows.push(v);
            }
            Err(_) if i == 0 => continue,
            Err(_) => {
                let field = record
                    .iter()
                    .find(|f| f.parse::<f64>().is_err())
                    .unwrap_or_default()
                    .to_string();
                return Err(parse_err(path, line(&record), format!("non-numeric field '{field}'")));
            }
        }
    }
    if rows.is_empty() {
        return Err(parse_err(path, 1, "no numeric rows"));
    }
    Ok(rows)
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| AppError::io(path, e))
}

pub fn read_matrix(path: &Path) -> Result<Matrix> {
    let rows = parse_table(&read_text(path)?, path)?;
    Ok(to_matrix(&rows))
}

fn to_matrix(rows: &[Vec<f64>]) -> Matrix {
    Matrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])
}

/// One value per row, or a single row of values.
pub fn read_vector(path: &Path) -> Result<Vector> {
    let rows = parse_table(&read_text(path)?, path)?;
    vector_from_rows(&rows).ok_or_else(|| parse_err(path, 1, "expected a single column or a single row"))
}

fn vector_from_rows(rows: &[Vec<f64>]) -> Option<Vector> {
    if rows[0].len() == 1 {
        Some(Vector::from_iterator(rows.len(), rows.iter().map(|r| r[0])))
    } else if rows.len() == 1 {
        Some(Vector::from_vec(rows[0].clone()))
    } else {
        None
    }
}

pub fn load_dataset(x: &Path, y: &Path, sigma: f64) -> Result<Dataset> {
    let xm = read_matrix(x)?;
    let yv = read_vector(y)?;
    if xm.nrows() != yv.len() {
        return Err(AppError::usage(format!(
            "{} has {} rows but {} has {}",
            x.display(),
            xm.nrows(),
            y.display(),
            yv.len()
        )));
    }
    Ok(Dataset::new(xm, yv, sigma)?)
}

/// Comma-separated list of numbers, e.g. `0.5,0.5`.
pub fn parse_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>().map_err(|_| format!("'{t}' is not a number"))
        })
        .collect()
}

/// Inline matrix `a,b;c,d` (rows separated by `;`).
pub fn parse_inline_matrix(s: &str) -> std::result::Result<Matrix, String> {
    let rows: Vec<Vec<f64>> = s
        .split(';')
        .filter(|r| !r.trim().is_empty())
        .map(parse_list)
        .collect::<std::result::Result<_, _>>()?;
    if rows.is_empty() {
        return Err("empty matrix".into());
    }
    if rows.iter().any(|r| r.len() != rows[0].len()) {
        return Err("rows have different lengths".into());
    }
    Ok(to_matrix(&rows))
}

/// A matrix given inline (`1,-1;0,1`) or as a CSV path.
pub fn matrix_arg(value: &str) -> Result<Matrix> {
    let path = Path::new(value);
    if path.is_file() {
        return read_matrix(path);
    }
    parse_inline_matrix(value)
        .map_err(|e| AppError::usage(format!("'{value}' is neither a readable file nor an inline matrix: {e}")))
}

/// A vector given inline (`0,1`) or as a CSV path.
pub fn vector_arg(value: &str) -> Result<Vector> {
    let path = Path::new(value);
    if path.is_file() {
        return read_vector(path);
    }
    parse_list(value)
        .map(Vector::from_vec)
        .map_err(|e| AppError::usage(format!("'{value}' is neither a readable file nor a number list: {e}")))
}

/// Writes `bytes` through a temporary file in the same directory and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    let name = path
        .file_name()
        .ok_or_else(|| AppError::usage(format!("{} is not a file path", path.display())))?;
    let tmp: PathBuf = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    fs::write(&tmp, bytes).map_err(|e| AppError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        AppError::io(path, e)
    })
}

/// Serializes a header and rows as CSV.
pub fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if !header.is_empty() {
        w.write_record(header).expect("in-memory CSV write");
    }
    for r in rows {
        w.write_record(r).expect("in-memory CSV write");
    }
    w.into_inner().expect("in-memory CSV flush")
}

/// Shortest representation that round-trips, for machine-readable output.
pub fn full(x: f64) -> String {
    format!("{x}")
}

/// Six significant digits, for human-readable reports.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{x:.5e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_is_skipped() {
        let t = parse_table("a,b\n1,2\n3,4\n", Path::new("x.csv")).unwrap();
        assert_eq!(t, vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
    }

    #[test]
    fn ragged_rows_report_the_line() {
        let e = parse_table("1,2\n3\n", Path::new("x.csv")).unwrap_err();
        assert!(e.to_string().contains("x.csv:2"), "{e}");
    }

    #[test]
    fn bad_field_reports_the_line() {
        let e = parse_table("1,2\n3,oops\n", Path::new("x.csv")).unwrap_err();
        assert!(e.to_string().contains("x.csv:2") && e.to_string().contains("oops"), "{e}");
    }

    #[test]
    fn inline_matrix() {
        let m = parse_inline_matrix("-1,1;0,2").unwrap();
        assert_eq!(m, Matrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, 2.0]));
        assert!(parse_inline_matrix("1,2;3").is_err());
    }

    #[test]
    fn formatting() {
        assert_eq!(sig6(2.705543454095404), "2.70554");
        assert_eq!(sig6(0.05), "0.05");
        assert_eq!(sig6(123456789.0), "1.23457e8");
        assert_eq!(full(0.25), "0.25");
    }
}
