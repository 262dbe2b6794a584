//! Nonnegative matrix factorization built around an active-set SR1
//! quasi-Newton solver for nonnegative least squares.
//!
//! `V ≈ W·H` with `W, H ≥ 0` is computed by alternating between the `H` and
//! `W` subproblems. Each subproblem separates into independent NNLS problems
//! (one per column of `H`, one per row of `W`) that share a Gram matrix.
//!
//! * [`nnls`]: the SR1 NNLS solver.
//! * [`nmf`]: the alternating driver ([`nmf_solve`]).
//! * [`baselines`]: multiplicative updates, projected ALS, and projected gradient.
//! * [`oracle`]: brute-force NNLS used to check the solver on small problems.
//! * [`io`], [`synthetic`], [`experiment`]: data loading, generators, and the benchmark harness.
//!
//! ```
//! use sr1_nmf::{nmf_solve, random_init, generate_synthetic, Method, SolverConfig, SyntheticKind};
//!
//! let v = generate_synthetic(SyntheticKind::LowRank, 30, 20, 3, 7).unwrap();
//! let init = random_init(30, 20, 3, 1);
//! let cfg = SolverConfig::default().with_maxiter_outer(30);
//! let out = nmf_solve(&v, 3, &init.w, &init.h, Method::Sr1, &cfg).unwrap();
//! assert!(out.final_relative_error() < out.initial_relative_error);
//! ```

pub mod baselines;
pub mod config;
pub mod error;
pub mod experiment;
pub mod io;
pub mod linalg;
pub mod nmf;
pub mod nnls;
pub mod oracle;
pub mod synthetic;

pub use baselines::BaselineKind;
pub use config::SolverConfig;
pub use error::{NmfError, Result};
pub use experiment::{run_experiment, ExperimentSpec};
pub use io::{load_matrix, save_reconstruction, MatrixFormat};
pub use linalg::DenseMatrix;
pub use nmf::{nmf_solve, random_init, relative_error, IterationTrace, Method, NmfModel, NmfOutcome};
pub use nnls::{nnls_solve, NnlsProblem, NnlsResult};
pub use oracle::oracle_nnls;
pub use synthetic::{generate_synthetic, SyntheticKind};
