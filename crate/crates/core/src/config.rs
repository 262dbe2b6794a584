use std::time::Duration;

use crate::error::{NmfError, Result};

/// Iteration budgets and tolerances shared by the NNLS solvers and the NMF driver.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Outer (alternating) iterations of the NMF driver.
    pub maxiter_outer: usize,
    /// Iterations of each NNLS solve.
    pub maxiter_inner: usize,
    /// Stop when `max |min(h, r)|` falls to this level.
    pub kkt_tol: f64,
    /// Upper bound on the threshold that marks a variable as held at zero.
    pub eps_active: f64,
    /// Outer stop when the objective change is at most this fraction of `max(1, f)`.
    pub rel_change_tol: f64,
    /// Seed for random initialization.
    pub seed: u64,
    /// Optional wall-clock cap for the outer loop.
    pub time_limit: Option<Duration>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            maxiter_outer: 200,
            maxiter_inner: 20,
            kkt_tol: 1e-6,
            eps_active: 1e-2,
            rel_change_tol: 1e-9,
            seed: 0,
            time_limit: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.maxiter_outer == 0 || self.maxiter_inner == 0 {
            return Err(NmfError::Validation(
                "iteration counts must be at least 1".into(),
            ));
        }
        for (name, v) in [
            ("kkt_tol", self.kkt_tol),
            ("eps_active", self.eps_active),
            ("rel_change_tol", self.rel_change_tol),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(NmfError::Validation(format!(
                    "{name} must be a positive finite number, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_maxiter_outer(mut self, n: usize) -> Self {
        self.maxiter_outer = n;
        self
    }

    pub fn with_maxiter_inner(mut self, n: usize) -> Self {
        self.maxiter_inner = n;
        self
    }

    pub fn with_kkt_tol(mut self, tol: f64) -> Self {
        self.kkt_tol = tol;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let cfg = SolverConfig::default();
        assert!(cfg.validate().is_ok());
        assert_eq!(cfg.maxiter_outer, 200);
        assert_eq!(cfg.maxiter_inner, 20);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(SolverConfig::default().with_maxiter_inner(0).validate().is_err());
        assert!(SolverConfig::default().with_kkt_tol(0.0).validate().is_err());
        let cfg = SolverConfig {
            eps_active: f64::NAN,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }
}
