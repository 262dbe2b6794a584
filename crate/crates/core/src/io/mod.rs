//! Matrix readers and writers: CSV, MatrixMarket coordinate, and PGM image sets.

mod csv;
mod matrix_market;
mod pgm;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

pub use self::csv::{read_csv, write_csv};
pub use self::matrix_market::{read_matrix_market, write_matrix_market};
pub use self::pgm::{load_pgm_set, read_pgm, save_reconstruction, write_pgm, GrayImage, PgmSet};

use crate::error::{NmfError, Result};
use crate::linalg::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Csv,
    MatrixMarket,
    /// A single PGM file or a directory of them, one column per image.
    Pgm,
}

impl MatrixFormat {
    pub fn tag(self) -> &'static str {
        match self {
            MatrixFormat::Csv => "csv",
            MatrixFormat::MatrixMarket => "matrixmarket",
            MatrixFormat::Pgm => "pgm",
        }
    }

    /// Guesses the format from a file extension; directories are PGM sets.
    pub fn detect(path: &Path) -> Option<Self> {
        if path.is_dir() {
            return Some(MatrixFormat::Pgm);
        }
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "csv" | "txt" => Some(MatrixFormat::Csv),
            "mtx" | "mm" => Some(MatrixFormat::MatrixMarket),
            "pgm" => Some(MatrixFormat::Pgm),
            _ => None,
        }
    }
}

impl fmt::Display for MatrixFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for MatrixFormat {
    type Err = NmfError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" | "csv-file" => Ok(MatrixFormat::Csv),
            "mm" | "mtx" | "matrixmarket" | "matrixmarket-file" => Ok(MatrixFormat::MatrixMarket),
            "pgm" | "pgm-image-set" => Ok(MatrixFormat::Pgm),
            other => Err(NmfError::Validation(format!("unknown matrix format '{other}'"))),
        }
    }
}

/// Loads a nonnegative data matrix.
///
/// PGM input yields one column per image (row-major pixels scaled to `[0, 1]`).
pub fn load_matrix(path: impl AsRef<Path>, format: MatrixFormat) -> Result<DenseMatrix> {
    let path = path.as_ref();
    let m = match format {
        MatrixFormat::Csv => read_csv(path)?,
        MatrixFormat::MatrixMarket => read_matrix_market(path)?,
        MatrixFormat::Pgm => load_pgm_set(path)?.matrix,
    };
    if let Some(pos) = m.as_slice().iter().position(|&x| x < 0.0) {
        return Err(NmfError::Domain(format!(
            "{}: negative entry at ({}, {}); factorization needs V >= 0",
            path.display(),
            pos / m.cols(),
            pos % m.cols()
        )));
    }
    Ok(m)
}

/// Writes a matrix as CSV or MatrixMarket.
pub fn save_matrix(path: impl AsRef<Path>, m: &DenseMatrix, format: MatrixFormat) -> Result<()> {
    match format {
        MatrixFormat::Csv => write_csv(path, m),
        MatrixFormat::MatrixMarket => write_matrix_market(path, m),
        MatrixFormat::Pgm => Err(NmfError::Validation(
            "matrices are written as csv or matrixmarket; use save_reconstruction for images".into(),
        )),
    }
}
