//! Dense row-major kernels shared by every solver.
//!
//! Everything here is deliberately small: products (with transposed
//! variants so Gram matrices never need an explicit transpose), norms, and a
//! Cholesky-based symmetric positive definite solve.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{NmfError, Result};

/// Row-major dense matrix of `f64`.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from row-major data, rejecting wrong lengths and non-finite entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(NmfError::shape(
                "from_vec",
                format!("{} entries ({rows}x{cols})", rows * cols),
                data.len(),
            ));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(NmfError::Domain(format!(
                "non-finite entry at ({}, {})",
                pos / cols.max(1),
                pos % cols.max(1)
            )));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    /// Builds a matrix from a slice of equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let ncols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * ncols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != ncols {
                return Err(NmfError::shape(
                    "from_rows",
                    format!("{ncols} columns"),
                    format!("{} columns in row {i}", r.len()),
                ));
            }
            data.extend_from_slice(r);
        }
        Self::from_vec(rows.len(), ncols, data)
    }

    /// Builds a matrix by evaluating `f(i, j)` for every entry.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        DenseMatrix { rows, cols, data }
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(nrows: usize, columns: &[Vec<f64>]) -> Result<Self> {
        let mut m = Self::zeros(nrows, columns.len());
        for (j, c) in columns.iter().enumerate() {
            m.set_column(j, c)?;
        }
        Ok(m)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, values: &[f64]) -> Result<()> {
        if values.len() != self.rows || j >= self.cols {
            return Err(NmfError::shape(
                "set_column",
                format!("column < {} of length {}", self.cols, self.rows),
                format!("column {j} of length {}", values.len()),
            ));
        }
        for (i, &v) in values.iter().enumerate() {
            self[(i, j)] = v;
        }
        Ok(())
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for (j, &x) in self.row(i).iter().enumerate() {
                t.data[j * self.rows + i] = x;
            }
        }
        t
    }

    /// Extracts the principal submatrix on `idx` (same index set for rows and columns).
    pub fn principal_submatrix(&self, idx: &[usize]) -> DenseMatrix {
        DenseMatrix::from_fn(idx.len(), idx.len(), |a, b| self[(idx[a], idx[b])])
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        matmul(self, other)
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(NmfError::shape("mul_vec", self.cols, x.len()));
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.shape() != other.shape() {
            return Err(NmfError::shape(
                "sub",
                format!("{:?}", self.shape()),
                format!("{:?}", other.shape()),
            ));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn min_entry(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.data.iter().all(|&x| x >= 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        norm_inf(&self.data)
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

/// `a * b`.
pub fn matmul(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.cols != b.rows {
        return Err(NmfError::shape(
            "matmul",
            format!("lhs cols == rhs rows ({})", a.cols),
            format!("rhs rows {}", b.rows),
        ));
    }
    let mut out = DenseMatrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        let out_row = &mut out.data[i * b.cols..(i + 1) * b.cols];
        for (p, &aip) in a.row(i).iter().enumerate() {
            if aip == 0.0 {
                continue;
            }
            for (o, &bpj) in out_row.iter_mut().zip(b.row(p)) {
                *o += aip * bpj;
            }
        }
    }
    Ok(out)
}

/// `aᵀ * b` without materializing the transpose.
pub fn t_matmul(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.rows != b.rows {
        return Err(NmfError::shape(
            "t_matmul",
            format!("equal row counts ({})", a.rows),
            b.rows,
        ));
    }
    let mut out = DenseMatrix::zeros(a.cols, b.cols);
    for r in 0..a.rows {
        let b_row = b.row(r);
        for (i, &ari) in a.row(r).iter().enumerate() {
            if ari == 0.0 {
                continue;
            }
            let out_row = &mut out.data[i * b.cols..(i + 1) * b.cols];
            for (o, &brj) in out_row.iter_mut().zip(b_row) {
                *o += ari * brj;
            }
        }
    }
    Ok(out)
}

/// `a * bᵀ` without materializing the transpose.
pub fn matmul_t(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.cols != b.cols {
        return Err(NmfError::shape(
            "matmul_t",
            format!("equal column counts ({})", a.cols),
            b.cols,
        ));
    }
    let mut out = DenseMatrix::zeros(a.rows, b.rows);
    for i in 0..a.rows {
        let a_row = a.row(i);
        for j in 0..b.rows {
            out.data[i * b.rows + j] = dot(a_row, b.row(j));
        }
    }
    Ok(out)
}

/// Square root of the sum of squared entries.
pub fn frobenius_norm(a: &DenseMatrix) -> f64 {
    norm2(&a.data)
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[inline]
pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Retries after a failed factorization, each with a diagonal shift ten times larger.
pub const SPD_MAX_RETRIES: usize = 3;
/// First diagonal shift, relative to the trace.
pub const SPD_INITIAL_SHIFT: f64 = 1e-12;
// a pivot below this fraction of the largest diagonal entry counts as a breakdown
const PIVOT_FLOOR: f64 = 1e-14;

/// Solves `a x = b` for symmetric positive definite `a` by Cholesky.
///
/// When the factorization breaks down the diagonal is shifted by
/// `1e-12 * trace(a)`, growing tenfold per retry, up to three retries.
pub fn solve_spd(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.rows;
    if a.cols != n {
        return Err(NmfError::shape("solve_spd", "square matrix", format!("{:?}", a.shape())));
    }
    if b.len() != n {
        return Err(NmfError::shape("solve_spd", n, b.len()));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let trace = a.trace().abs();
    let mut shift = 0.0;
    for attempt in 0..=SPD_MAX_RETRIES {
        if attempt > 0 {
            shift = if attempt == 1 {
                SPD_INITIAL_SHIFT * trace
            } else {
                shift * 10.0
            };
        }
        if let Some(l) = cholesky(a, shift) {
            return Ok(cholesky_solve(&l, b));
        }
    }
    Err(NmfError::Singular {
        retries: SPD_MAX_RETRIES,
    })
}

/// Lower-triangular factor of `a + shift*I`, or `None` on breakdown.
fn cholesky(a: &DenseMatrix, shift: f64) -> Option<DenseMatrix> {
    let n = a.rows;
    let max_diag = (0..n).map(|i| a[(i, i)]).fold(0.0, f64::max) + shift;
    if !(max_diag > 0.0) {
        return None;
    }
    let floor = PIVOT_FLOOR * max_diag;
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)] + shift;
        for p in 0..j {
            d -= l[(j, p)] * l[(j, p)];
        }
        if !(d > floor) || !d.is_finite() {
            return None;
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for p in 0..j {
                s -= l[(i, p)] * l[(j, p)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Some(l)
}

fn cholesky_solve(l: &DenseMatrix, b: &[f64]) -> Vec<f64> {
    let n = l.rows;
    let mut y = b.to_vec();
    for i in 0..n {
        let mut s = y[i];
        for p in 0..i {
            s -= l[(i, p)] * y[p];
        }
        y[i] = s / l[(i, i)];
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for p in i + 1..n {
            s -= l[(p, i)] * y[p];
        }
        y[i] = s / l[(i, i)];
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
        DenseMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
    }

    fn naive_matmul(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
        DenseMatrix::from_fn(a.rows(), b.cols(), |i, j| {
            let mut s = 0.0;
            for p in 0..a.cols() {
                s += a[(i, p)] * b[(p, j)];
            }
            s
        })
    }

    #[test]
    fn matmul_identity_and_small() {
        let id = DenseMatrix::identity(2);
        let x = DenseMatrix::from_rows(&[[3.0], [4.0]]).unwrap();
        assert_eq!(matmul(&id, &x).unwrap(), x);
        let a = DenseMatrix::from_rows(&[[1.0, 2.0]]).unwrap();
        assert_eq!(matmul(&a, &x).unwrap().as_slice(), &[11.0]);
    }

    #[test]
    fn matmul_matches_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random(5, 4, &mut rng);
        let b = random(4, 3, &mut rng);
        let fast = matmul(&a, &b).unwrap();
        let slow = naive_matmul(&a, &b);
        for (x, y) in fast.as_slice().iter().zip(slow.as_slice()) {
            assert!((x - y).abs() <= 1e-12);
        }
        let at_b = t_matmul(&a.transpose(), &b).unwrap();
        let a_bt = matmul_t(&a, &b.transpose()).unwrap();
        for i in 0..fast.as_slice().len() {
            assert!((at_b.as_slice()[i] - slow.as_slice()[i]).abs() <= 1e-12);
            assert!((a_bt.as_slice()[i] - slow.as_slice()[i]).abs() <= 1e-12);
        }
    }

    #[test]
    fn matmul_shape_error() {
        let a = DenseMatrix::zeros(2, 3);
        assert!(matches!(matmul(&a, &a), Err(NmfError::Shape { .. })));
    }

    #[test]
    fn frobenius_cases() {
        assert_eq!(frobenius_norm(&DenseMatrix::zeros(3, 2)), 0.0);
        let a = DenseMatrix::from_rows(&[[3.0, 4.0]]).unwrap();
        assert_eq!(frobenius_norm(&a), 5.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let r = random(7, 6, &mut rng);
        let mut s = 0.0;
        for i in 0..7 {
            for j in 0..6 {
                s += r[(i, j)].powi(2);
            }
        }
        assert!((frobenius_norm(&r) - s.sqrt()).abs() <= 1e-12);
        assert_eq!(frobenius_norm(&r.sub(&r).unwrap()), 0.0);
    }

    #[test]
    fn solve_spd_small_cases() {
        let x = solve_spd(&DenseMatrix::identity(2), &[1.0, 2.0]).unwrap();
        assert_eq!(x, vec![1.0, 2.0]);
        let d = DenseMatrix::from_rows(&[[2.0, 0.0], [0.0, 4.0]]).unwrap();
        let x = solve_spd(&d, &[2.0, 4.0]).unwrap();
        assert!((x[0] - 1.0).abs() <= 1e-15 && (x[1] - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn solve_spd_residual_random_6x6() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random(6, 6, &mut rng);
        let mut spd = t_matmul(&a, &a).unwrap();
        for i in 0..6 {
            spd[(i, i)] += 1.0;
        }
        let b: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = solve_spd(&spd, &b).unwrap();
        let ax = spd.mul_vec(&x).unwrap();
        let res: Vec<f64> = ax.iter().zip(&b).map(|(p, q)| p - q).collect();
        let bound = 1e-10 * (frobenius_norm(&spd) * norm2(&x) + norm2(&b));
        assert!(norm2(&res) <= bound);
    }

    #[test]
    fn solve_spd_regularizes_rank_deficient() {
        // rank one: [1 1; 1 1]
        let a = DenseMatrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap();
        let x = solve_spd(&a, &[2.0, 2.0]).unwrap();
        assert!(x.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn solve_spd_rejects_indefinite_and_zero() {
        let a = DenseMatrix::from_rows(&[[1.0, 0.0], [0.0, -1.0]]).unwrap();
        assert!(matches!(solve_spd(&a, &[1.0, 1.0]), Err(NmfError::Singular { .. })));
        let z = DenseMatrix::zeros(2, 2);
        assert!(matches!(solve_spd(&z, &[1.0, 1.0]), Err(NmfError::Singular { .. })));
    }

    #[test]
    fn from_vec_rejects_bad_input() {
        assert!(DenseMatrix::from_vec(2, 2, vec![1.0; 3]).is_err());
        assert!(DenseMatrix::from_vec(1, 2, vec![1.0, f64::NAN]).is_err());
    }
}
