use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{NmfError, Result};
use crate::linalg::DenseMatrix;
use crate::nmf::NmfModel;

/// 8-bit grayscale raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl GrayImage {
    /// Pixels scaled to `[0, 1]`.
    pub fn to_unit(&self) -> Vec<f64> {
        self.pixels.iter().map(|&p| f64::from(p) / 255.0).collect()
    }

    /// Clamps to `[0, 1]` and quantizes to `0..=255`.
    pub fn from_unit(width: usize, height: usize, values: &[f64]) -> Result<Self> {
        if values.len() != width * height {
            return Err(NmfError::shape("GrayImage::from_unit", width * height, values.len()));
        }
        let pixels = values
            .iter()
            .map(|&x| (x.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect();
        Ok(GrayImage {
            width,
            height,
            pixels,
        })
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> std::result::Result<(usize, &[u8]), (usize, String)> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err((start, "unexpected end of file".into()));
        }
        Ok((start, &self.bytes[start..self.pos]))
    }

    fn number(&mut self, what: &str) -> std::result::Result<usize, (usize, String)> {
        let (at, tok) = self.token()?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or((at, format!("{what} is not a number")))
    }
}

fn parse_pgm(bytes: &[u8]) -> std::result::Result<GrayImage, (usize, String)> {
    let mut c = Cursor { bytes, pos: 0 };
    let (_, magic) = c.token()?;
    let binary = match magic {
        b"P5" => true,
        b"P2" => false,
        _ => return Err((0, "expected magic number P2 or P5".into())),
    };
    let width = c.number("width")?;
    let height = c.number("height")?;
    let maxval_at = c.pos;
    let maxval = c.number("maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err((maxval_at, format!("maxval {maxval} unsupported (1..=255)")));
    }
    let count = width * height;
    let rescale = |p: usize| -> u8 {
        if maxval == 255 {
            p as u8
        } else {
            ((p as f64) * 255.0 / maxval as f64).round() as u8
        }
    };
    let mut pixels = Vec::with_capacity(count);
    if binary {
        // exactly one whitespace byte separates the header from the raster
        let start = c.pos + 1;
        let end = start + count;
        if end > bytes.len() {
            return Err((bytes.len(), format!("raster needs {count} bytes, file ends early")));
        }
        for (off, &p) in bytes[start..end].iter().enumerate() {
            if usize::from(p) > maxval {
                return Err((start + off, format!("pixel {p} exceeds maxval {maxval}")));
            }
            pixels.push(rescale(usize::from(p)));
        }
    } else {
        for _ in 0..count {
            let at = c.pos;
            let p = c.number("pixel")?;
            if p > maxval {
                return Err((at, format!("pixel {p} exceeds maxval {maxval}")));
            }
            pixels.push(rescale(p));
        }
    }
    Ok(GrayImage {
        width,
        height,
        pixels,
    })
}

/// Reads a P2 or P5 PGM with `maxval ≤ 255`.
pub fn read_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| NmfError::io(path, e))?;
    parse_pgm(&bytes).map_err(|(offset, message)| NmfError::Format {
        path: path.to_path_buf(),
        location: format!("byte {offset}"),
        message,
    })
}

/// Writes a binary (P5) PGM with `maxval = 255`.
pub fn write_pgm(path: impl AsRef<Path>, image: &GrayImage) -> Result<()> {
    let path = path.as_ref();
    let mut bytes = format!("P5\n{} {}\n255\n", image.width, image.height).into_bytes();
    bytes.extend_from_slice(&image.pixels);
    fs::write(path, bytes).map_err(|e| NmfError::io(path, e))
}

/// Images stacked as the columns of a matrix.
#[derive(Debug, Clone)]
pub struct PgmSet {
    pub matrix: DenseMatrix,
    pub width: usize,
    pub height: usize,
    pub files: Vec<PathBuf>,
}

/// Loads one PGM file, or every `*.pgm` in a directory (sorted by name).
///
/// All images must share the same size; pixel `(x, y)` lands in row `y*width + x`.
pub fn load_pgm_set(path: impl AsRef<Path>) -> Result<PgmSet> {
    let path = path.as_ref();
    let files = if path.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(path)
            .map_err(|e| NmfError::io(path, e))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| {
                p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| e.eq_ignore_ascii_case("pgm"))
            })
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(NmfError::Validation(format!(
                "{}: no .pgm files found",
                path.display()
            )));
        }
        files
    } else {
        vec![path.to_path_buf()]
    };

    let mut columns = Vec::with_capacity(files.len());
    let mut size = None;
    for f in &files {
        let img = read_pgm(f)?;
        match size {
            None => size = Some((img.width, img.height)),
            Some(s) if s != (img.width, img.height) => {
                return Err(NmfError::Validation(format!(
                    "{}: image is {}x{}, expected {}x{}",
                    f.display(),
                    img.width,
                    img.height,
                    s.0,
                    s.1
                )));
            }
            _ => {}
        }
        columns.push(img.to_unit());
    }
    let (width, height) = size.expect("at least one image");
    Ok(PgmSet {
        matrix: DenseMatrix::from_columns(width * height, &columns)?,
        width,
        height,
        files,
    })
}

/// Writes column `column` of `W·H` as a P5 image, clamped to `[0, 1]`.
pub fn save_reconstruction(
    model: &NmfModel,
    column: usize,
    width: usize,
    height: usize,
    path: impl AsRef<Path>,
) -> Result<()> {
    if model.w.rows() != width * height {
        return Err(NmfError::shape(
            "save_reconstruction",
            format!("{} rows in W ({width}x{height})", width * height),
            model.w.rows(),
        ));
    }
    if column >= model.h.cols() {
        return Err(NmfError::shape(
            "save_reconstruction",
            format!("column < {}", model.h.cols()),
            column,
        ));
    }
    let coeffs = model.h.column(column);
    let values = model.w.mul_vec(&coeffs)?;
    write_pgm(path, &GrayImage::from_unit(width, height, &values)?)
}
