//! One NNLS problem solved by the SR1 active-set method and checked against enumeration.

use sr1_nmf::nnls::{kkt_residual, nnls_gradient};
use sr1_nmf::{nnls_solve, oracle_nnls, DenseMatrix, NnlsProblem, SolverConfig};

fn main() -> sr1_nmf::Result<()> {
    let w = DenseMatrix::from_rows(&[
        [1.0, 0.5, 0.0, 0.2],
        [0.3, 1.0, 0.4, 0.0],
        [0.0, 0.2, 1.0, 0.6],
        [0.7, 0.0, 0.3, 1.0],
        [0.2, 0.8, 0.1, 0.4],
    ])?;
    let v = [1.0, -0.5, 0.8, 0.1, -0.3];
    let p = NnlsProblem::from_least_squares(&w, &v)?;

    let r = nnls_solve(&p, None, &SolverConfig::default().with_kkt_tol(1e-12))?;
    let grad = nnls_gradient(&p, &r.solution)?;
    println!("solution      {:?}", r.solution);
    println!("objective     {:.12}", r.objective);
    println!("kkt residual  {:.2e} after {} iterations", kkt_residual(&r.solution, &grad), r.iterations);

    let o = oracle_nnls(&p)?;
    println!("oracle        {:?}", o.solution);
    println!("zero pattern  {:?}", o.fixed_indices());
    println!("gap           {:.2e}", (r.objective - o.objective).abs());
    Ok(())
}
