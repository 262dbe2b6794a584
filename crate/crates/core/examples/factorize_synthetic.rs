//! Recovers an exact rank-10 nonnegative factorization of a 200x40 matrix.

use sr1_nmf::{generate_synthetic, nmf_solve, random_init, Method, SolverConfig, SyntheticKind};

fn main() -> sr1_nmf::Result<()> {
    let (n, m, k) = (200, 40, 10);
    let v = generate_synthetic(SyntheticKind::LowRank, n, m, k, 1)?;
    let init = random_init(n, m, k, 2);
    let cfg = SolverConfig::default().with_maxiter_outer(100);
    let out = nmf_solve(&v, k, &init.w, &init.h, Method::Sr1, &cfg)?;

    println!("iter  objective      rel_error   kkt_h      kkt_w");
    for t in out.trace.iter().filter(|t| t.iteration % 10 == 0 || t.iteration == 1) {
        println!(
            "{:>4}  {:<13.6e}  {:.3e}  {:.2e}  {:.2e}",
            t.iteration, t.objective, t.relative_error, t.kkt_residual_h, t.kkt_residual_w
        );
    }
    println!("stopped: {:?} after {} iterations", out.stop, out.trace.len());
    Ok(())
}
