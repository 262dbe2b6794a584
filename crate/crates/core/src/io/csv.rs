use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{NmfError, Result};
use crate::linalg::DenseMatrix;

/// Reads comma-separated reals, one row per line, no header. Blank lines are skipped.
pub fn read_csv(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| NmfError::io(path, e))?;
    parse_csv(&text).map_err(|(line, message)| NmfError::Format {
        path: path.to_path_buf(),
        location: format!("line {line}"),
        message,
    })
}

fn parse_csv(text: &str) -> std::result::Result<DenseMatrix, (usize, String)> {
    let mut data = Vec::new();
    let mut ncols = None;
    let mut nrows = 0;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut count = 0;
        for (f, field) in line.split(',').enumerate() {
            let x: f64 = field
                .trim()
                .parse()
                .map_err(|_| (lineno + 1, format!("field {} is not a number: '{}'", f + 1, field.trim())))?;
            if !x.is_finite() {
                return Err((lineno + 1, format!("field {} is not finite", f + 1)));
            }
            data.push(x);
            count += 1;
        }
        match ncols {
            None => ncols = Some(count),
            Some(c) if c != count => {
                return Err((lineno + 1, format!("expected {c} fields, found {count}")));
            }
            _ => {}
        }
        nrows += 1;
    }
    let ncols = ncols.ok_or((1, "empty matrix".to_string()))?;
    Ok(DenseMatrix::from_vec(nrows, ncols, data).expect("row lengths checked"))
}

pub fn write_csv(path: impl AsRef<Path>, m: &DenseMatrix) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| NmfError::io(path, e))?;
    let mut out = BufWriter::new(file);
    let write = |out: &mut BufWriter<fs::File>| -> std::io::Result<()> {
        for i in 0..m.rows() {
            for (j, x) in m.row(i).iter().enumerate() {
                if j > 0 {
                    out.write_all(b",")?;
                }
                write!(out, "{x}")?;
            }
            out.write_all(b"\n")?;
        }
        out.flush()
    };
    write(&mut out).map_err(|e| NmfError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_literal() {
        let m = parse_csv("1,2\n3,4").unwrap();
        assert_eq!(m, DenseMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap());
    }

    #[test]
    fn reports_line_of_bad_field() {
        let err = parse_csv("1,2\n3,x\n").unwrap_err();
        assert_eq!(err.0, 2);
        let err = parse_csv("1,2\n3\n").unwrap_err();
        assert_eq!(err.0, 2);
        assert!(parse_csv("\n\n").is_err());
    }

    #[test]
    fn write_then_read_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        let m = DenseMatrix::from_rows(&[[0.1, 1.0 / 3.0], [1e-300, 12345.678]]).unwrap();
        write_csv(&p, &m).unwrap();
        assert_eq!(read_csv(&p).unwrap(), m);
    }
}
