//! Brute-force NNLS by enumerating every zero pattern.
//!
//! Only meant for verification on small problems: `2^k` reduced solves.

use crate::error::{NmfError, Result};
use crate::linalg::{norm_inf, solve_spd};
use crate::nnls::{kkt_residual, nnls_gradient, NnlsProblem};

/// Largest dimension the oracle accepts.
pub const ORACLE_MAX_DIM: usize = 14;

const FEASIBILITY_TOL: f64 = 1e-9;
const KKT_TOL: f64 = 1e-9;
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub solution: Vec<f64>,
    pub objective: f64,
    /// `active_pattern[i]` is true when variable `i` is held at zero.
    pub active_pattern: Vec<bool>,
}

impl OracleSolution {
    pub fn fixed_indices(&self) -> Vec<usize> {
        pattern_indices(&self.active_pattern)
    }
}

fn pattern_indices(p: &[bool]) -> Vec<usize> {
    p.iter()
        .enumerate()
        .filter_map(|(i, &z)| z.then_some(i))
        .collect()
}

/// Exact NNLS minimizer by exhaustive enumeration of zero patterns.
///
/// For each subset `S` of variables fixed at zero the reduced system
/// `Q_FF h_F = b_F` is solved on the complement. Candidates with a
/// nonnegative free part and `r_S ≥ −1e-9` are kept; the smallest objective
/// wins, with ties broken by fewer zeros and then lexicographically.
pub fn oracle_nnls(p: &NnlsProblem) -> Result<OracleSolution> {
    let k = p.dim();
    if k > ORACLE_MAX_DIM {
        return Err(NmfError::OracleCap {
            dim: k,
            cap: ORACLE_MAX_DIM,
        });
    }
    let mut best: Option<(OracleSolution, usize)> = None;

    for mask in 0u32..(1u32 << k) {
        // bit i set -> variable i fixed at zero
        let free: Vec<usize> = (0..k).filter(|i| mask & (1 << i) == 0).collect();
        let mut h = vec![0.0; k];
        if !free.is_empty() {
            let q = p.gram().principal_submatrix(&free);
            let b: Vec<f64> = free.iter().map(|&i| p.linear()[i]).collect();
            let Ok(x) = solve_spd(&q, &b) else {
                continue;
            };
            if x.iter().any(|&xi| xi < 0.0 || !xi.is_finite()) {
                continue;
            }
            for (&i, &xi) in free.iter().zip(&x) {
                h[i] = xi;
            }
        }
        let r = nnls_gradient(p, &h)?;
        let scale = 1.0 + norm_inf(p.linear());
        if (0..k).any(|i| mask & (1 << i) != 0 && r[i] < -FEASIBILITY_TOL * scale) {
            continue;
        }
        let objective = p.objective(&h);
        let zeros = mask.count_ones() as usize;
        let pattern: Vec<bool> = (0..k).map(|i| mask & (1 << i) != 0).collect();
        let better = match &best {
            None => true,
            Some((cur, cur_zeros)) => {
                if objective < cur.objective - TIE_TOL {
                    true
                } else if objective <= cur.objective + TIE_TOL {
                    zeros < *cur_zeros
                        || (zeros == *cur_zeros
                            && pattern_indices(&pattern) < cur.fixed_indices())
                } else {
                    false
                }
            }
        };
        if better {
            best = Some((
                OracleSolution {
                    solution: h,
                    objective,
                    active_pattern: pattern,
                },
                zeros,
            ));
        }
    }

    // the all-zero pattern is always feasible, so a candidate exists
    let (sol, _) = best.expect("zero pattern always yields a candidate");
    self_check(p, &sol)?;
    Ok(sol)
}

fn self_check(p: &NnlsProblem, sol: &OracleSolution) -> Result<()> {
    let r = nnls_gradient(p, &sol.solution)?;
    let scale = 1.0 + norm_inf(p.linear()) + p.gram().max_abs() * norm_inf(&sol.solution);
    let tol = KKT_TOL * scale;
    let feasible = sol.solution.iter().all(|&x| x >= 0.0);
    let dual = r.iter().all(|&ri| ri >= -tol);
    if !feasible || !dual || kkt_residual(&sol.solution, &r) > tol {
        return Err(NmfError::Validation(format!(
            "oracle candidate fails KKT check (residual {:.3e})",
            kkt_residual(&sol.solution, &r)
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;

    #[test]
    fn identity_interior() {
        let p = NnlsProblem::new(DenseMatrix::identity(2), vec![3.0, 4.0], 12.5).unwrap();
        let s = oracle_nnls(&p).unwrap();
        assert_eq!(s.solution, vec![3.0, 4.0]);
        assert!(s.fixed_indices().is_empty());
        assert_eq!(s.objective, 0.0);
    }

    #[test]
    fn two_by_two_enumeration() {
        let w = DenseMatrix::from_rows(&[[1.0, 1.0], [0.0, 1.0]]).unwrap();
        let p = NnlsProblem::from_least_squares(&w, &[2.0, -1.0]).unwrap();
        let s = oracle_nnls(&p).unwrap();
        assert!((s.solution[0] - 2.0).abs() <= 1e-12);
        assert_eq!(s.solution[1], 0.0);
        assert_eq!(s.fixed_indices(), vec![1]);
        // ½‖(2,0) − (2,−1)‖² = ½
        assert!((s.objective - 0.5).abs() <= 1e-12);
    }

    #[test]
    fn nonpositive_linear_term_gives_origin() {
        let g = DenseMatrix::from_rows(&[[2.0, 0.5], [0.5, 1.0]]).unwrap();
        let p = NnlsProblem::new(g, vec![-1.0, 0.0], 3.0).unwrap();
        let s = oracle_nnls(&p).unwrap();
        assert_eq!(s.solution, vec![0.0, 0.0]);
        assert_eq!(s.objective, p.const_term());
    }

    #[test]
    fn refuses_large_problems() {
        let p = NnlsProblem::new(DenseMatrix::identity(15), vec![1.0; 15], 0.0).unwrap();
        assert!(matches!(oracle_nnls(&p), Err(NmfError::OracleCap { dim: 15, .. })));
    }
}
