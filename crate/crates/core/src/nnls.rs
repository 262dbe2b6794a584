//! Active-set SR1 quasi-Newton solver for a single nonnegative least-squares problem.
//!
//! The problem `min ½‖Wh − v‖²  s.t. h ≥ 0` is held in Gram form
//! (`Q = WᵀW`, `b = Wᵀv`, `c = ½vᵀv`), so the objective is
//! `½hᵀQh − bᵀh + c` and the gradient is `r = Qh − b`.
//!
//! Each iteration:
//!
//! 1. splits the variables into a fixed set (close to zero with a positive
//!    gradient) and a free set;
//! 2. scales the free part of the gradient by the matching principal
//!    submatrix of the SR1 inverse-Hessian approximation `D`;
//! 3. runs a projected Armijo backtracking search with the fixed variables
//!    pinned at zero;
//! 4. applies the SR1 inverse update `D += uuᵀ/(uᵀω)`, `u = s − Dω`, on the
//!    full `k × k` matrix, with the step `s` and gradient change `ω` taken
//!    over the free variables only (zero on the fixed ones), so the free
//!    block of `D` tracks the inverse of the free block of `Q`.
//!
//! If the scaled direction is not a descent direction, or `rᵀDr` is
//! negligible against `‖r‖²/max_i Q_ii`, `D` is reset to the identity.
//! If the search along it fails, a plain projected gradient step over all
//! variables (fixed ones included) is tried before declaring a stall, with
//! `D` left unchanged.

use crate::config::SolverConfig;
use crate::error::{NmfError, Result};
use crate::linalg::{dot, norm2, t_matmul, DenseMatrix};

/// Default safeguard for the SR1 denominator test.
pub const SR1_SAFEGUARD: f64 = 1e-8;
/// Armijo sufficient-decrease parameter.
pub const ARMIJO_SIGMA: f64 = 1e-4;
/// Backtracking contraction ratio.
pub const BACKTRACK_RATIO: f64 = 0.5;
/// Maximum number of step halvings.
pub const MAX_BACKTRACKS: usize = 30;

const DESCENT_TOL: f64 = 1e-12;
const SYMMETRY_TOL: f64 = 1e-12;

/// A nonnegative least-squares instance in Gram form.
#[derive(Debug, Clone)]
pub struct NnlsProblem {
    gram: DenseMatrix,
    linear: Vec<f64>,
    const_term: f64,
}

impl NnlsProblem {
    /// Checks that `gram` is square, symmetric, and matches `linear`.
    pub fn new(gram: DenseMatrix, linear: Vec<f64>, const_term: f64) -> Result<Self> {
        let k = gram.rows();
        if gram.cols() != k {
            return Err(NmfError::shape("NnlsProblem", "square gram", format!("{:?}", gram.shape())));
        }
        if linear.len() != k {
            return Err(NmfError::shape("NnlsProblem", k, linear.len()));
        }
        let scale = gram.max_abs().max(1.0);
        for i in 0..k {
            if gram[(i, i)] < 0.0 {
                return Err(NmfError::Validation(format!(
                    "gram diagonal entry {i} is negative"
                )));
            }
            for j in 0..i {
                if (gram[(i, j)] - gram[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(NmfError::Validation(format!(
                        "gram is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        if linear.iter().any(|x| !x.is_finite()) || !const_term.is_finite() {
            return Err(NmfError::Domain("non-finite problem data".into()));
        }
        Ok(NnlsProblem {
            gram,
            linear,
            const_term,
        })
    }

    /// Builds the Gram form of `min ½‖Wh − v‖²`.
    pub fn from_least_squares(w: &DenseMatrix, v: &[f64]) -> Result<Self> {
        if v.len() != w.rows() {
            return Err(NmfError::shape("from_least_squares", w.rows(), v.len()));
        }
        let gram = t_matmul(w, w)?;
        let linear = w.transpose().mul_vec(v)?;
        Self::new(gram, linear, 0.5 * dot(v, v))
    }

    /// Gram form without validation; the caller guarantees symmetry and shapes.
    pub(crate) fn from_parts_unchecked(gram: DenseMatrix, linear: Vec<f64>, const_term: f64) -> Self {
        debug_assert_eq!(gram.rows(), linear.len());
        NnlsProblem {
            gram,
            linear,
            const_term,
        }
    }

    pub(crate) fn set_rhs(&mut self, linear: &[f64], const_term: f64) {
        self.linear.copy_from_slice(linear);
        self.const_term = const_term;
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn gram(&self) -> &DenseMatrix {
        &self.gram
    }

    pub fn linear(&self) -> &[f64] {
        &self.linear
    }

    pub fn const_term(&self) -> f64 {
        self.const_term
    }

    /// `½hᵀQh − bᵀh + c`, i.e. `½‖Wh − v‖²`.
    pub fn objective(&self, h: &[f64]) -> f64 {
        let mut quad = 0.0;
        let mut lin = 0.0;
        for i in 0..self.dim() {
            quad += h[i] * dot(self.gram.row(i), h);
            lin += self.linear[i] * h[i];
        }
        0.5 * quad - lin + self.const_term
    }

    fn gradient_unchecked(&self, h: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .map(|i| dot(self.gram.row(i), h) - self.linear[i])
            .collect()
    }

    fn check_len(&self, op: &'static str, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(NmfError::shape(op, self.dim(), x.len()));
        }
        Ok(())
    }
}

/// Gradient `r = Qh − b`.
pub fn nnls_gradient(p: &NnlsProblem, h: &[f64]) -> Result<Vec<f64>> {
    p.check_len("nnls_gradient", h)?;
    Ok(p.gradient_unchecked(h))
}

/// `max_i |min(h_i, r_i)|`; zero exactly at a KKT point.
pub fn kkt_residual(h: &[f64], grad: &[f64]) -> f64 {
    h.iter()
        .zip(grad)
        .fold(0.0, |m, (&hi, &ri)| m.max(hi.min(ri).abs()))
}

/// Split of the variables into those held at zero and the rest.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ActivePartition {
    pub fixed: Vec<usize>,
    pub free: Vec<usize>,
}

/// Variables with `h_i ≤ min(eps, ‖h − grad‖²)` and a positive gradient are fixed.
pub fn fixed_set(h: &[f64], grad: &[f64], eps: f64) -> ActivePartition {
    debug_assert_eq!(h.len(), grad.len());
    let gap: f64 = h
        .iter()
        .zip(grad)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let threshold = eps.min(gap);
    let mut part = ActivePartition::default();
    for (i, (&hi, &gi)) in h.iter().zip(grad).enumerate() {
        if hi <= threshold && gi > 0.0 {
            part.fixed.push(i);
        } else {
            part.free.push(i);
        }
    }
    part
}

/// Entrywise `max(x, 0)`.
pub fn project_nonneg(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect()
}

/// SR1 approximation of the inverse Hessian.
#[derive(Debug, Clone, PartialEq)]
pub struct Sr1State {
    pub d_inv: DenseMatrix,
    pub skip_count: usize,
}

impl Sr1State {
    pub fn new(dim: usize) -> Self {
        Sr1State {
            d_inv: DenseMatrix::identity(dim),
            skip_count: 0,
        }
    }

    pub fn reset(&mut self) {
        self.d_inv = DenseMatrix::identity(self.d_inv.rows());
    }

    /// In-place SR1 inverse update; returns whether the update was applied.
    pub fn update(&mut self, step: &[f64], grad_diff: &[f64], safeguard: f64) -> bool {
        let k = self.d_inv.rows();
        debug_assert_eq!(step.len(), k);
        debug_assert_eq!(grad_diff.len(), k);
        let d_omega = self
            .d_inv
            .mul_vec(grad_diff)
            .expect("grad_diff length matches d_inv");
        let u: Vec<f64> = step.iter().zip(&d_omega).map(|(s, d)| s - d).collect();
        let denom = dot(&u, grad_diff);
        let bound = safeguard * norm2(&u) * norm2(grad_diff);
        if denom == 0.0 || !denom.is_finite() || denom.abs() < bound {
            self.skip_count += 1;
            return false;
        }
        // upper triangle mirrored so the result is exactly symmetric
        let mut next = self.d_inv.clone();
        for i in 0..k {
            let ui = u[i] / denom;
            for j in i..k {
                let x = self.d_inv[(i, j)] + ui * u[j];
                next[(i, j)] = x;
                next[(j, i)] = x;
            }
        }
        if next.as_slice().iter().any(|x| !x.is_finite()) {
            self.skip_count += 1;
            return false;
        }
        self.d_inv = next;
        true
    }
}

/// Functional form of [`Sr1State::update`].
pub fn sr1_update(mut state: Sr1State, step: &[f64], grad_diff: &[f64], safeguard: f64) -> Sr1State {
    state.update(step, grad_diff, safeguard);
    state
}

/// Accepted point of a projected line search.
#[derive(Debug, Clone)]
pub(crate) struct SearchStep {
    pub alpha: f64,
    pub point: Vec<f64>,
    pub objective: f64,
}

/// Backtracking along the projection arc `α ↦ P[h − α·direction]`.
///
/// Variables flagged in `pinned` are set to zero for every trial `α`.
/// Accepts the first `α = 0.5^j` (`j ≤ 30`) with
/// `g(x) ≤ g(h) + σ·∇g(h)ᵀ(x − h)` and `g(x) ≤ g(h)`.
pub(crate) fn projected_search(
    p: &NnlsProblem,
    h: &[f64],
    g_h: f64,
    grad: &[f64],
    direction: &[f64],
    pinned: Option<&[bool]>,
) -> Option<SearchStep> {
    let k = h.len();
    let mut alpha = 1.0;
    let mut x = vec![0.0; k];
    for _ in 0..=MAX_BACKTRACKS {
        let mut slope = 0.0;
        for i in 0..k {
            let xi = if pinned.is_some_and(|m| m[i]) {
                0.0
            } else {
                let t = h[i] - alpha * direction[i];
                if t > 0.0 {
                    t
                } else {
                    0.0
                }
            };
            x[i] = xi;
            slope += grad[i] * (xi - h[i]);
        }
        let g_x = p.objective(&x);
        if g_x <= g_h + ARMIJO_SIGMA * slope && g_x <= g_h {
            return Some(SearchStep {
                alpha,
                point: x,
                objective: g_x,
            });
        }
        alpha *= BACKTRACK_RATIO;
    }
    None
}

/// Armijo step length along the projection arc; 0 when no decrease is found.
pub fn step_size(p: &NnlsProblem, h: &[f64], direction: &[f64]) -> Result<f64> {
    p.check_len("step_size", h)?;
    p.check_len("step_size", direction)?;
    let grad = p.gradient_unchecked(h);
    let g_h = p.objective(h);
    Ok(projected_search(p, h, g_h, &grad, direction, None).map_or(0.0, |s| s.alpha))
}

/// Outcome of an NNLS solve.
#[derive(Debug, Clone, PartialEq)]
pub struct NnlsResult {
    pub solution: Vec<f64>,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub objective: f64,
    pub converged: bool,
    /// SR1 updates rejected by the denominator safeguard.
    pub skipped_updates: usize,
    /// Times the inverse-Hessian approximation was reset to the identity.
    pub resets: usize,
    /// Fallback projected-gradient steps over all variables, taken when the
    /// search with the fixed set pinned found no decrease.
    pub gradient_steps: usize,
}

pub(crate) fn validate_start(p: &NnlsProblem, h0: Option<&[f64]>, cfg: &SolverConfig) -> Result<Vec<f64>> {
    if cfg.maxiter_inner == 0 {
        return Err(NmfError::Validation("maxiter_inner must be at least 1".into()));
    }
    if !(cfg.kkt_tol > 0.0) {
        return Err(NmfError::Validation("kkt_tol must be positive".into()));
    }
    match h0 {
        Some(h0) => {
            p.check_len("nnls_solve", h0)?;
            if h0.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
                return Err(NmfError::Validation("initial point must be nonnegative".into()));
            }
            Ok(h0.to_vec())
        }
        None => Ok(vec![0.0; p.dim()]),
    }
}

/// Solves `min g(h)` over `h ≥ 0` with the active-set SR1 method.
///
/// `h0 = None` starts from the origin. Uses `cfg.maxiter_inner`,
/// `cfg.kkt_tol` and `cfg.eps_active`.
pub fn nnls_solve(p: &NnlsProblem, h0: Option<&[f64]>, cfg: &SolverConfig) -> Result<NnlsResult> {
    let mut h = validate_start(p, h0, cfg)?;
    let k = p.dim();
    let mut grad = p.gradient_unchecked(&h);
    let mut g = p.objective(&h);
    if !g.is_finite() {
        return Err(NmfError::NumericalFailure { iteration: 0 });
    }

    let q_scale = (0..k).map(|i| p.gram[(i, i)]).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut state = Sr1State::new(k);
    let mut resets = 0;
    let mut gradient_steps = 0;
    let mut iterations = 0;
    let mut pinned = vec![false; k];
    let mut direction = vec![0.0; k];

    for iter in 1..=cfg.maxiter_inner {
        iterations = iter;
        if kkt_residual(&h, &grad) <= cfg.kkt_tol {
            break;
        }

        let part = fixed_set(&h, &grad, cfg.eps_active);
        pinned.iter_mut().for_each(|m| *m = false);
        for &i in &part.fixed {
            pinned[i] = true;
        }

        // scaled direction on the free variables, zero on the fixed ones
        direction.iter_mut().for_each(|d| *d = 0.0);
        for &i in &part.free {
            let row = state.d_inv.row(i);
            direction[i] = part.free.iter().map(|&j| row[j] * grad[j]).sum();
        }
        let (mut gd, mut gn, mut dn) = (0.0, 0.0, 0.0);
        for &i in &part.free {
            gd += grad[i] * direction[i];
            gn += grad[i] * grad[i];
            dn += direction[i] * direction[i];
        }
        // reject directions that are not descent or carry almost no curvature scale
        let poor = gd <= DESCENT_TOL * gn.sqrt() * dn.sqrt() || gd * q_scale <= DESCENT_TOL * gn;
        if gn > 0.0 && poor {
            state.reset();
            resets += 1;
            for &i in &part.free {
                direction[i] = grad[i];
            }
        }

        let accepted = match projected_search(p, &h, g, &grad, &direction, Some(&pinned)) {
            Some(step) => Some(step),
            None => {
                gradient_steps += 1;
                projected_search(p, &h, g, &grad, &grad, None)
            }
        };
        let Some(step) = accepted else {
            // no decrease along either direction: stalled at this iterate
            break;
        };
        if !step.objective.is_finite() {
            return Err(NmfError::NumericalFailure { iteration: iter });
        }
        if step.point == h {
            break;
        }

        let new_grad = p.gradient_unchecked(&step.point);
        // curvature pairs are measured on the free variables only
        let mut s = vec![0.0; k];
        let mut y = vec![0.0; k];
        for &i in &part.free {
            s[i] = step.point[i] - h[i];
            y[i] = new_grad[i] - grad[i];
        }
        state.update(&s, &y, SR1_SAFEGUARD);

        h = step.point;
        grad = new_grad;
        g = step.objective;
    }

    let kkt = kkt_residual(&h, &grad);
    Ok(NnlsResult {
        objective: p.objective(&h),
        kkt_residual: kkt,
        converged: kkt <= cfg.kkt_tol,
        iterations,
        solution: h,
        skipped_updates: state.skip_count,
        resets,
        gradient_steps,
    })
}
