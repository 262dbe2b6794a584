use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{NmfError, Result};
use crate::linalg::DenseMatrix;

const HEADER: &str = "%%MatrixMarket matrix coordinate real general";

/// Reads the `coordinate real general` subset (1-based indices) into a dense matrix.
///
/// `integer` fields are accepted as reals. Duplicate entries are summed.
pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| NmfError::io(path, e))?;
    parse(&text).map_err(|(line, message)| NmfError::Format {
        path: path.to_path_buf(),
        location: format!("line {line}"),
        message,
    })
}

fn parse(text: &str) -> std::result::Result<DenseMatrix, (usize, String)> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or((1, "empty file".to_string()))?;
    let tokens: Vec<String> = header.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
    if tokens.first().map(String::as_str) != Some("%%matrixmarket") {
        return Err((1, "missing %%MatrixMarket banner".into()));
    }
    let fields: Vec<&str> = tokens.iter().skip(1).map(String::as_str).collect();
    match fields.as_slice() {
        ["matrix", "coordinate", "real" | "integer", "general"] => {}
        _ => {
            return Err((
                1,
                format!("unsupported banner '{}'; expected '{HEADER}'", header.trim()),
            ))
        }
    }

    let mut dims = None;
    let mut matrix = DenseMatrix::zeros(0, 0);
    let mut expected = 0usize;
    let mut seen = 0usize;
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        match dims {
            None => {
                if parts.len() != 3 {
                    return Err((lineno, "size line must be 'rows cols entries'".into()));
                }
                let num = |s: &str| {
                    s.parse::<usize>()
                        .map_err(|_| (lineno, format!("'{s}' is not a nonnegative integer")))
                };
                let (r, c, nnz) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
                dims = Some((r, c));
                matrix = DenseMatrix::zeros(r, c);
                expected = nnz;
            }
            Some((r, c)) => {
                if parts.len() != 3 {
                    return Err((lineno, "entry line must be 'row col value'".into()));
                }
                let index = |s: &str, bound: usize| -> std::result::Result<usize, (usize, String)> {
                    let i: usize = s
                        .parse()
                        .map_err(|_| (lineno, format!("'{s}' is not an index")))?;
                    if i == 0 || i > bound {
                        return Err((lineno, format!("index {i} outside 1..={bound}")));
                    }
                    Ok(i - 1)
                };
                let i = index(parts[0], r)?;
                let j = index(parts[1], c)?;
                let x: f64 = parts[2]
                    .parse()
                    .map_err(|_| (lineno, format!("'{}' is not a number", parts[2])))?;
                if !x.is_finite() {
                    return Err((lineno, "value is not finite".into()));
                }
                matrix[(i, j)] += x;
                seen += 1;
            }
        }
    }
    if dims.is_none() {
        return Err((text.lines().count().max(1), "missing size line".into()));
    }
    if seen != expected {
        return Err((
            text.lines().count(),
            format!("size line promises {expected} entries, found {seen}"),
        ));
    }
    Ok(matrix)
}

/// Writes the nonzero entries of `m` in coordinate format.
pub fn write_matrix_market(path: impl AsRef<Path>, m: &DenseMatrix) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| NmfError::io(path, e))?;
    let mut out = BufWriter::new(file);
    let nnz = m.as_slice().iter().filter(|&&x| x != 0.0).count();
    let write = |out: &mut BufWriter<fs::File>| -> std::io::Result<()> {
        writeln!(out, "{HEADER}")?;
        writeln!(out, "{} {} {}", m.rows(), m.cols(), nnz)?;
        for i in 0..m.rows() {
            for (j, &x) in m.row(i).iter().enumerate() {
                if x != 0.0 {
                    writeln!(out, "{} {} {}", i + 1, j + 1, x)?;
                }
            }
        }
        out.flush()
    };
    write(&mut out).map_err(|e| NmfError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_coordinate_subset() {
        let text = "%%MatrixMarket matrix coordinate real general\n% comment\n2 3 2\n1 1 1.5\n2 3 4\n";
        let m = parse(text).unwrap();
        assert_eq!(m, DenseMatrix::from_rows(&[[1.5, 0.0, 0.0], [0.0, 0.0, 4.0]]).unwrap());
    }

    #[test]
    fn rejects_unsupported_and_malformed() {
        assert_eq!(parse("%%MatrixMarket matrix array real general\n1 1\n1\n").unwrap_err().0, 1);
        let bad_index = "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n";
        assert_eq!(parse(bad_index).unwrap_err().0, 3);
        let short = "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n";
        assert!(parse(short).is_err());
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.mtx");
        let m = DenseMatrix::from_rows(&[[0.0, 0.1, 3.0], [1.0 / 7.0, 0.0, 2.5e-8]]).unwrap();
        write_matrix_market(&p, &m).unwrap();
        assert_eq!(read_matrix_market(&p).unwrap(), m);
    }
}
