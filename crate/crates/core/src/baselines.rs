//! Reference update rules the SR1 solver is compared against.

use std::fmt;
use std::str::FromStr;

use crate::config::SolverConfig;
use crate::error::{NmfError, Result};
use crate::linalg::{matmul, matmul_t, solve_spd, t_matmul, DenseMatrix};
use crate::nnls::{kkt_residual, nnls_gradient, projected_search, validate_start, NnlsProblem, NnlsResult};

/// Added to every multiplicative-update denominator.
pub const MU_STABILIZER: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaselineKind {
    Multiplicative,
    ProjectedAls,
    ProjectedGradient,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 3] = [
        BaselineKind::Multiplicative,
        BaselineKind::ProjectedAls,
        BaselineKind::ProjectedGradient,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            BaselineKind::Multiplicative => "multiplicative",
            BaselineKind::ProjectedAls => "projected_als",
            BaselineKind::ProjectedGradient => "projected_gradient",
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for BaselineKind {
    type Err = NmfError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "multiplicative" | "mu" => Ok(BaselineKind::Multiplicative),
            "projected_als" | "als" | "alsq" => Ok(BaselineKind::ProjectedAls),
            "projected_gradient" | "pg" | "nmf" => Ok(BaselineKind::ProjectedGradient),
            other => Err(NmfError::Validation(format!("unknown baseline '{other}'"))),
        }
    }
}

fn check_factor_shapes(op: &'static str, v: &DenseMatrix, w: &DenseMatrix, h: &DenseMatrix) -> Result<()> {
    if w.rows() != v.rows() || h.cols() != v.cols() || w.cols() != h.rows() {
        return Err(NmfError::shape(
            op,
            format!("W {}xk, H kx{}", v.rows(), v.cols()),
            format!("W {:?}, H {:?}", w.shape(), h.shape()),
        ));
    }
    Ok(())
}

/// `W ← W ∘ (VHᵀ) / (WHHᵀ + δ)`.
pub fn mu_update_w(v: &DenseMatrix, w: &DenseMatrix, h: &DenseMatrix) -> Result<DenseMatrix> {
    check_factor_shapes("mu_update_w", v, w, h)?;
    let numer = matmul_t(v, h)?;
    let hht = matmul_t(h, h)?;
    let denom = matmul(w, &hht)?;
    Ok(ratio_update(w, &numer, &denom))
}

/// `H ← H ∘ (WᵀV) / (WᵀWH + δ)`.
pub fn mu_update_h(v: &DenseMatrix, w: &DenseMatrix, h: &DenseMatrix) -> Result<DenseMatrix> {
    check_factor_shapes("mu_update_h", v, w, h)?;
    let numer = t_matmul(w, v)?;
    let wtw = t_matmul(w, w)?;
    let denom = matmul(&wtw, h)?;
    Ok(ratio_update(h, &numer, &denom))
}

fn ratio_update(x: &DenseMatrix, numer: &DenseMatrix, denom: &DenseMatrix) -> DenseMatrix {
    let mut out = x.clone();
    for ((o, n), d) in out
        .as_mut_slice()
        .iter_mut()
        .zip(numer.as_slice())
        .zip(denom.as_slice())
    {
        *o *= n / (d + MU_STABILIZER);
    }
    out
}

/// One Lee–Seung multiplicative sweep: `W` first, then `H` with the new `W`.
pub fn multiplicative_step(
    v: &DenseMatrix,
    w: &DenseMatrix,
    h: &DenseMatrix,
) -> Result<(DenseMatrix, DenseMatrix)> {
    let w_next = mu_update_w(v, w, h)?;
    let h_next = mu_update_h(v, &w_next, h)?;
    Ok((w_next, h_next))
}

/// `H ← P[(WᵀW)⁻¹WᵀV]`, column by column.
pub fn als_update_h(v: &DenseMatrix, w: &DenseMatrix) -> Result<DenseMatrix> {
    if w.rows() != v.rows() {
        return Err(NmfError::shape("als_update_h", v.rows(), w.rows()));
    }
    let gram = t_matmul(w, w)?;
    let rhs = t_matmul(w, v)?;
    let mut h = DenseMatrix::zeros(w.cols(), v.cols());
    for j in 0..v.cols() {
        let x = solve_spd(&gram, &rhs.column(j))?;
        for (i, xi) in x.into_iter().enumerate() {
            h[(i, j)] = xi.max(0.0);
        }
    }
    Ok(h)
}

/// `W ← P[(HHᵀ)⁻¹HVᵀ]ᵀ`, row by row.
pub fn als_update_w(v: &DenseMatrix, h: &DenseMatrix) -> Result<DenseMatrix> {
    if h.cols() != v.cols() {
        return Err(NmfError::shape("als_update_w", v.cols(), h.cols()));
    }
    let gram = matmul_t(h, h)?;
    let rhs = matmul_t(v, h)?;
    let mut w = DenseMatrix::zeros(v.rows(), h.rows());
    for i in 0..v.rows() {
        let x = solve_spd(&gram, rhs.row(i))?;
        for (o, xi) in w.row_mut(i).iter_mut().zip(x) {
            *o = xi.max(0.0);
        }
    }
    Ok(w)
}

/// Naive projected alternating least squares: unconstrained solve, then clip.
pub fn projected_als_step(
    v: &DenseMatrix,
    w: &DenseMatrix,
    h: &DenseMatrix,
) -> Result<(DenseMatrix, DenseMatrix)> {
    check_factor_shapes("projected_als_step", v, w, h)?;
    let h_next = als_update_h(v, w)?;
    let w_next = als_update_w(v, &h_next)?;
    Ok((w_next, h_next))
}

/// Projected gradient NNLS: `h ← P[h − α∇g(h)]` with Armijo backtracking.
pub fn projected_gradient_nnls(
    p: &NnlsProblem,
    h0: Option<&[f64]>,
    cfg: &SolverConfig,
) -> Result<NnlsResult> {
    let mut h = validate_start(p, h0, cfg)?;
    let mut grad = nnls_gradient(p, &h)?;
    let mut g = p.objective(&h);
    if !g.is_finite() {
        return Err(NmfError::NumericalFailure { iteration: 0 });
    }
    let mut iterations = 0;
    for iter in 1..=cfg.maxiter_inner {
        iterations = iter;
        if kkt_residual(&h, &grad) <= cfg.kkt_tol {
            break;
        }
        let Some(step) = projected_search(p, &h, g, &grad, &grad, None) else {
            break;
        };
        if !step.objective.is_finite() {
            return Err(NmfError::NumericalFailure { iteration: iter });
        }
        if step.point == h {
            break;
        }
        h = step.point;
        grad = nnls_gradient(p, &h)?;
        g = step.objective;
    }
    let kkt = kkt_residual(&h, &grad);
    Ok(NnlsResult {
        objective: p.objective(&h),
        kkt_residual: kkt,
        converged: kkt <= cfg.kkt_tol,
        iterations,
        solution: h,
        skipped_updates: 0,
        resets: 0,
        gradient_steps: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::frobenius_norm;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn m(rows: &[&[f64]]) -> DenseMatrix {
        DenseMatrix::from_rows(rows).unwrap()
    }

    fn objective(v: &DenseMatrix, w: &DenseMatrix, h: &DenseMatrix) -> f64 {
        let r = v.sub(&matmul(w, h).unwrap()).unwrap();
        0.5 * frobenius_norm(&r).powi(2)
    }

    #[test]
    fn multiplicative_scalar_case() {
        // W' = 1·2/1 = 2, then H' = 1·(2·2)/(2·2·1) = 1
        let (w, h) = multiplicative_step(&m(&[&[2.0]]), &m(&[&[1.0]]), &m(&[&[1.0]])).unwrap();
        assert!((w[(0, 0)] - 2.0).abs() <= 1e-11);
        assert!((h[(0, 0)] - 1.0).abs() <= 1e-11);
    }

    #[test]
    fn multiplicative_fixed_point() {
        let w = m(&[&[1.0, 0.5], &[0.2, 2.0], &[1.0, 1.0]]);
        let h = m(&[&[0.3, 1.0], &[2.0, 0.1]]);
        let v = matmul(&w, &h).unwrap();
        let (w2, h2) = multiplicative_step(&v, &w, &h).unwrap();
        for (a, b) in w2.as_slice().iter().zip(w.as_slice()) {
            assert!((a - b).abs() <= 1e-12);
        }
        for (a, b) in h2.as_slice().iter().zip(h.as_slice()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn multiplicative_zero_row_shrinks() {
        // row 0 of V is zero: W row 0 is scaled by 0/(positive) = 0
        let v = m(&[&[0.0, 0.0], &[1.0, 2.0]]);
        let w = m(&[&[1.0], &[1.0]]);
        let h = m(&[&[1.0, 1.0]]);
        let (w2, h2) = multiplicative_step(&v, &w, &h).unwrap();
        assert_eq!(w2[(0, 0)], 0.0);
        assert!(w2.is_nonnegative() && h2.is_nonnegative());
    }

    #[test]
    fn multiplicative_monotone_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let n = rng.gen_range(2..30);
            let mm = rng.gen_range(2..30);
            let k = rng.gen_range(1..=n.min(mm));
            let v = DenseMatrix::from_fn(n, mm, |_, _| rng.gen_range(0.0..1.0));
            let w = DenseMatrix::from_fn(n, k, |_, _| rng.gen_range(0.01..1.0));
            let h = DenseMatrix::from_fn(k, mm, |_, _| rng.gen_range(0.01..1.0));
            let before = objective(&v, &w, &h);
            let (w2, h2) = multiplicative_step(&v, &w, &h).unwrap();
            assert!(objective(&v, &w2, &h2) <= before + 1e-10);
            assert!(w2.is_nonnegative() && h2.is_nonnegative());
        }
    }

    #[test]
    fn als_exact_recovery() {
        let w = m(&[&[1.0, 0.0], &[0.5, 1.0], &[0.2, 0.3]]);
        let h_true = m(&[&[1.0, 0.0, 2.0], &[0.5, 3.0, 0.0]]);
        let v = matmul(&w, &h_true).unwrap();
        let h = als_update_h(&v, &w).unwrap();
        for (a, b) in h.as_slice().iter().zip(h_true.as_slice()) {
            assert!((a - b).abs() <= 1e-8);
        }
    }

    #[test]
    fn als_orthonormal_w_projects_wtv() {
        let w = m(&[&[1.0, 0.0], &[0.0, 1.0], &[0.0, 0.0]]);
        let v = m(&[&[2.0, 0.0], &[0.0, 1.0], &[5.0, 5.0]]);
        let h = als_update_h(&v, &w).unwrap();
        assert_eq!(h, t_matmul(&w, &v).unwrap());
    }

    #[test]
    fn als_clips_negative_solutions() {
        // unconstrained solution for column 0 is (2, -1)
        let w = m(&[&[1.0, 1.0], &[0.0, 1.0]]);
        let v = m(&[&[1.0], &[-1.0]]);
        let h = als_update_h(&v, &w).unwrap();
        assert!((h[(0, 0)] - 2.0).abs() <= 1e-10);
        assert_eq!(h[(1, 0)], 0.0);
    }

    #[test]
    fn projected_gradient_identity_one_step() {
        let p = NnlsProblem::new(DenseMatrix::identity(3), vec![1.0, -2.0, 0.5], 0.0).unwrap();
        let cfg = SolverConfig::default().with_kkt_tol(1e-12);
        let r = projected_gradient_nnls(&p, None, &cfg).unwrap();
        assert_eq!(r.solution, vec![1.0, 0.0, 0.5]);
        assert_eq!(r.iterations, 2);
        assert!(r.converged);
    }

    #[test]
    fn projected_gradient_optimal_start() {
        let p = NnlsProblem::new(DenseMatrix::identity(2), vec![1.0, -1.0], 0.0).unwrap();
        let r = projected_gradient_nnls(&p, Some(&[1.0, 0.0]), &SolverConfig::default()).unwrap();
        assert_eq!(r.iterations, 1);
        assert_eq!(r.kkt_residual, 0.0);
    }

    #[test]
    fn baseline_tags_round_trip() {
        for b in BaselineKind::ALL {
            assert_eq!(b.tag().parse::<BaselineKind>().unwrap(), b);
        }
        assert!("lbfgs".parse::<BaselineKind>().is_err());
    }
}
