//! Alternating NMF driver.
//!
//! Each outer iteration updates `H` with `W` fixed, then `W` with the new
//! `H` fixed. For the NNLS-based methods every column of `H` (and every row
//! of `W`) is an independent problem sharing one Gram matrix, which is
//! formed once per half-step.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::baselines::{
    als_update_h, als_update_w, mu_update_h, mu_update_w, projected_gradient_nnls, BaselineKind,
};
use crate::config::SolverConfig;
use crate::error::{NmfError, Result};
use crate::linalg::{dot, frobenius_norm, matmul, matmul_t, t_matmul, DenseMatrix};
use crate::nnls::{nnls_solve, NnlsProblem, NnlsResult};

/// Factorization method run by [`nmf_solve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Sr1,
    Baseline(BaselineKind),
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Sr1,
        Method::Baseline(BaselineKind::Multiplicative),
        Method::Baseline(BaselineKind::ProjectedAls),
        Method::Baseline(BaselineKind::ProjectedGradient),
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Method::Sr1 => "sr1",
            Method::Baseline(b) => b.tag(),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = NmfError;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("sr1") {
            Ok(Method::Sr1)
        } else {
            s.parse().map(Method::Baseline)
        }
    }
}

/// Nonnegative factors `W` (n×k) and `H` (k×m).
#[derive(Debug, Clone, PartialEq)]
pub struct NmfModel {
    pub w: DenseMatrix,
    pub h: DenseMatrix,
}

impl NmfModel {
    pub fn new(w: DenseMatrix, h: DenseMatrix) -> Result<Self> {
        if w.cols() != h.rows() {
            return Err(NmfError::shape("NmfModel", w.cols(), h.rows()));
        }
        if !w.is_nonnegative() || !h.is_nonnegative() {
            return Err(NmfError::Validation("factors must be nonnegative".into()));
        }
        Ok(NmfModel { w, h })
    }

    pub fn rank(&self) -> usize {
        self.w.cols()
    }

    /// `W·H`.
    pub fn reconstruct(&self) -> DenseMatrix {
        matmul(&self.w, &self.h).expect("factor shapes are consistent")
    }
}

/// Factors with entries drawn uniformly from `(0, 1]`.
pub fn random_init(n: usize, m: usize, k: usize, seed: u64) -> NmfModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |_, _| 1.0 - rng.gen::<f64>();
    let w = DenseMatrix::from_fn(n, k, &mut draw);
    let h = DenseMatrix::from_fn(k, m, &mut draw);
    NmfModel { w, h }
}

/// Per-outer-iteration record.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub iteration: usize,
    /// `½‖V − WH‖²_F` after both half-steps.
    pub objective: f64,
    /// `‖V − WH‖_F / ‖V‖_F` (plain `‖V − WH‖_F` when `V = 0`).
    pub relative_error: f64,
    pub kkt_residual_h: f64,
    pub kkt_residual_w: f64,
    pub elapsed: Duration,
    /// Objective after the `H` half-step, before `W` is updated.
    pub objective_after_h: f64,
    /// Half-steps discarded this iteration because they raised the objective.
    pub rejected_half_steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxIterations,
    Kkt,
    ObjectiveStalled,
    TimeLimit,
}

#[derive(Debug, Clone)]
pub struct NmfOutcome {
    pub model: NmfModel,
    pub trace: Vec<IterationTrace>,
    pub initial_objective: f64,
    pub initial_relative_error: f64,
    pub stop: StopReason,
}

impl NmfOutcome {
    pub fn final_relative_error(&self) -> f64 {
        self.trace
            .last()
            .map_or(self.initial_relative_error, |t| t.relative_error)
    }
}

/// `½‖V − WH‖²_F`.
pub fn objective(v: &DenseMatrix, w: &DenseMatrix, h: &DenseMatrix) -> Result<f64> {
    let wh = matmul(w, h)?;
    let r = v.sub(&wh)?;
    Ok(0.5 * frobenius_norm(&r).powi(2))
}

/// `‖V − WH‖_F / ‖V‖_F`.
pub fn relative_error(v: &DenseMatrix, model: &NmfModel) -> Result<f64> {
    let nv = frobenius_norm(v);
    if nv == 0.0 {
        return Err(NmfError::Domain(
            "relative error is undefined for a zero matrix".into(),
        ));
    }
    let r = v.sub(&model.reconstruct())?;
    Ok(frobenius_norm(&r) / nv)
}

/// `∇_H f = WᵀWH − WᵀV`.
pub fn grad_h(v: &DenseMatrix, w: &DenseMatrix, h: &DenseMatrix) -> Result<DenseMatrix> {
    check_shapes(v, w, h)?;
    let wtw = t_matmul(w, w)?;
    matmul(&wtw, h)?.sub(&t_matmul(w, v)?)
}

/// `∇_W f = WHHᵀ − VHᵀ`.
pub fn grad_w(v: &DenseMatrix, w: &DenseMatrix, h: &DenseMatrix) -> Result<DenseMatrix> {
    check_shapes(v, w, h)?;
    let hht = matmul_t(h, h)?;
    matmul(w, &hht)?.sub(&matmul_t(v, h)?)
}

/// `max |min(X, ∇X)|` over all entries.
pub fn kkt_residual_matrix(x: &DenseMatrix, grad: &DenseMatrix) -> f64 {
    crate::nnls::kkt_residual(x.as_slice(), grad.as_slice())
}

fn check_shapes(v: &DenseMatrix, w: &DenseMatrix, h: &DenseMatrix) -> Result<()> {
    if w.rows() != v.rows() || h.cols() != v.cols() || w.cols() != h.rows() {
        return Err(NmfError::shape(
            "nmf",
            format!("W {}xk, H kx{}", v.rows(), v.cols()),
            format!("W {:?}, H {:?}", w.shape(), h.shape()),
        ));
    }
    Ok(())
}

type InnerSolver = fn(&NnlsProblem, Option<&[f64]>, &SolverConfig) -> Result<NnlsResult>;

/// Solves one NNLS per row of `rhs` against the shared `gram`.
///
/// Row `j` of `rhs` is the linear term and row `j` of `init` the warm start;
/// the solutions are returned as the rows of a new matrix.
fn solve_rows(
    gram: DenseMatrix,
    rhs: &DenseMatrix,
    consts: &[f64],
    init: &DenseMatrix,
    cfg: &SolverConfig,
    solver: InnerSolver,
) -> Result<DenseMatrix> {
    let k = gram.rows();
    let mut out = DenseMatrix::zeros(rhs.rows(), k);
    let mut problem = NnlsProblem::from_parts_unchecked(gram, vec![0.0; k], 0.0);
    for j in 0..rhs.rows() {
        problem.set_rhs(rhs.row(j), consts[j]);
        let res = solver(&problem, Some(init.row(j)), cfg).map_err(|e| NmfError::Column {
            column: j,
            source: Box::new(e),
        })?;
        out.row_mut(j).copy_from_slice(&res.solution);
    }
    Ok(out)
}

fn solve_h_with(
    v: &DenseMatrix,
    w: &DenseMatrix,
    h_init: &DenseMatrix,
    cfg: &SolverConfig,
    solver: InnerSolver,
) -> Result<DenseMatrix> {
    check_shapes(v, w, h_init)?;
    if !h_init.is_nonnegative() {
        return Err(NmfError::Validation("initial H must be nonnegative".into()));
    }
    let gram = t_matmul(w, w)?;
    // (WᵀV)ᵀ = VᵀW: row j is the linear term of column j
    let rhs = t_matmul(v, w)?;
    let consts: Vec<f64> = (0..v.cols())
        .map(|j| {
            let c = v.column(j);
            0.5 * dot(&c, &c)
        })
        .collect();
    Ok(solve_rows(gram, &rhs, &consts, &h_init.transpose(), cfg, solver)?.transpose())
}

fn solve_w_with(
    v: &DenseMatrix,
    h: &DenseMatrix,
    w_init: &DenseMatrix,
    cfg: &SolverConfig,
    solver: InnerSolver,
) -> Result<DenseMatrix> {
    check_shapes(v, w_init, h)?;
    if !w_init.is_nonnegative() {
        return Err(NmfError::Validation("initial W must be nonnegative".into()));
    }
    let gram = matmul_t(h, h)?;
    let rhs = matmul_t(v, h)?;
    let consts: Vec<f64> = (0..v.rows()).map(|i| 0.5 * dot(v.row(i), v.row(i))).collect();
    solve_rows(gram, &rhs, &consts, w_init, cfg, solver)
}

/// `argmin_{H ≥ 0} ½‖V − WH‖²`, one SR1 NNLS solve per column, warm-started from `h_init`.
pub fn solve_h_subproblem(
    v: &DenseMatrix,
    w: &DenseMatrix,
    h_init: &DenseMatrix,
    cfg: &SolverConfig,
) -> Result<DenseMatrix> {
    solve_h_with(v, w, h_init, cfg, nnls_solve)
}

/// `argmin_{W ≥ 0} ½‖Vᵀ − HᵀWᵀ‖²`, one SR1 NNLS solve per row of `W`.
pub fn solve_w_subproblem(
    v: &DenseMatrix,
    h: &DenseMatrix,
    w_init: &DenseMatrix,
    cfg: &SolverConfig,
) -> Result<DenseMatrix> {
    solve_w_with(v, h, w_init, cfg, nnls_solve)
}

fn update_h(method: Method, v: &DenseMatrix, w: &DenseMatrix, h: &DenseMatrix, cfg: &SolverConfig) -> Result<DenseMatrix> {
    match method {
        Method::Sr1 => solve_h_with(v, w, h, cfg, nnls_solve),
        Method::Baseline(BaselineKind::ProjectedGradient) => solve_h_with(v, w, h, cfg, projected_gradient_nnls),
        Method::Baseline(BaselineKind::Multiplicative) => mu_update_h(v, w, h),
        Method::Baseline(BaselineKind::ProjectedAls) => als_update_h(v, w),
    }
}

fn update_w(method: Method, v: &DenseMatrix, w: &DenseMatrix, h: &DenseMatrix, cfg: &SolverConfig) -> Result<DenseMatrix> {
    match method {
        Method::Sr1 => solve_w_with(v, h, w, cfg, nnls_solve),
        Method::Baseline(BaselineKind::ProjectedGradient) => solve_w_with(v, h, w, cfg, projected_gradient_nnls),
        Method::Baseline(BaselineKind::Multiplicative) => mu_update_w(v, w, h),
        Method::Baseline(BaselineKind::ProjectedAls) => als_update_w(v, h),
    }
}

fn validate_inputs(v: &DenseMatrix, k: usize, w0: &DenseMatrix, h0: &DenseMatrix, cfg: &SolverConfig) -> Result<()> {
    cfg.validate()?;
    let (n, m) = v.shape();
    if k == 0 || k > n.min(m) {
        return Err(NmfError::Validation(format!(
            "rank {k} must satisfy 1 <= k <= min({n}, {m})"
        )));
    }
    if w0.shape() != (n, k) || h0.shape() != (k, m) {
        return Err(NmfError::Validation(format!(
            "initial factors must be {n}x{k} and {k}x{m}, got {:?} and {:?}",
            w0.shape(),
            h0.shape()
        )));
    }
    if !v.is_nonnegative() {
        return Err(NmfError::Validation("V must be nonnegative".into()));
    }
    if !w0.is_nonnegative() || !h0.is_nonnegative() {
        return Err(NmfError::Validation("initial factors must be nonnegative".into()));
    }
    Ok(())
}

/// Runs alternating NMF from `(w0, h0)`.
pub fn nmf_solve(
    v: &DenseMatrix,
    k: usize,
    w0: &DenseMatrix,
    h0: &DenseMatrix,
    method: Method,
    cfg: &SolverConfig,
) -> Result<NmfOutcome> {
    nmf_solve_with(v, k, w0, h0, method, cfg, |_, _| {})
}

/// [`nmf_solve`] with a callback invoked after every outer iteration.
///
/// A half-step that would raise the objective is discarded (the previous
/// factor is kept) and counted in [`IterationTrace::rejected_half_steps`];
/// only the clipped least-squares baseline lacks a descent guarantee of its own.
pub fn nmf_solve_with(
    v: &DenseMatrix,
    k: usize,
    w0: &DenseMatrix,
    h0: &DenseMatrix,
    method: Method,
    cfg: &SolverConfig,
    mut observer: impl FnMut(&IterationTrace, &NmfModel),
) -> Result<NmfOutcome> {
    validate_inputs(v, k, w0, h0, cfg)?;
    let start = Instant::now();
    let norm_v = frobenius_norm(v);
    let rel = |f: f64| {
        let r = (2.0 * f).max(0.0).sqrt();
        if norm_v > 0.0 {
            r / norm_v
        } else {
            r
        }
    };

    let mut w = w0.clone();
    let mut h = h0.clone();
    let initial_objective = objective(v, &w, &h)?;
    if !initial_objective.is_finite() {
        return Err(NmfError::NumericalFailure { iteration: 0 });
    }
    let mut f = initial_objective;
    let mut trace = Vec::new();
    let mut stop = StopReason::MaxIterations;

    for iter in 1..=cfg.maxiter_outer {
        let mut rejected = 0;

        let h_next = update_h(method, v, &w, &h, cfg)?;
        let f_h = objective(v, &w, &h_next)?;
        if !f_h.is_finite() {
            return Err(NmfError::NumericalFailure { iteration: iter });
        }
        let f_after_h = if f_h <= f {
            h = h_next;
            f_h
        } else {
            rejected += 1;
            f
        };

        let w_next = update_w(method, v, &w, &h, cfg)?;
        let f_w = objective(v, &w_next, &h)?;
        if !f_w.is_finite() {
            return Err(NmfError::NumericalFailure { iteration: iter });
        }
        let f_new = if f_w <= f_after_h {
            w = w_next;
            f_w
        } else {
            rejected += 1;
            f_after_h
        };

        let kkt_h = kkt_residual_matrix(&h, &grad_h(v, &w, &h)?);
        let kkt_w = kkt_residual_matrix(&w, &grad_w(v, &w, &h)?);
        let record = IterationTrace {
            iteration: iter,
            objective: f_new,
            relative_error: rel(f_new),
            kkt_residual_h: kkt_h,
            kkt_residual_w: kkt_w,
            elapsed: start.elapsed(),
            objective_after_h: f_after_h,
            rejected_half_steps: rejected,
        };
        let model = NmfModel { w, h };
        observer(&record, &model);
        NmfModel { w, h } = model;
        trace.push(record);

        let f_prev = f;
        f = f_new;
        if kkt_h <= cfg.kkt_tol && kkt_w <= cfg.kkt_tol {
            stop = StopReason::Kkt;
            break;
        }
        if (f_prev - f_new).abs() <= cfg.rel_change_tol * f_prev.max(1.0) {
            stop = StopReason::ObjectiveStalled;
            break;
        }
        if cfg.time_limit.is_some_and(|limit| start.elapsed() >= limit) {
            stop = StopReason::TimeLimit;
            break;
        }
    }

    Ok(NmfOutcome {
        model: NmfModel { w, h },
        trace,
        initial_objective,
        initial_relative_error: rel(initial_objective),
        stop,
    })
}
