//! Mean relative error per iteration for every method over several seeds.
//!
//! Writes traces, factors, and mean curves to `results/compare`.

use sr1_nmf::experiment::DataSource;
use sr1_nmf::{run_experiment, ExperimentSpec, Method, SolverConfig, SyntheticKind};

fn main() -> sr1_nmf::Result<()> {
    let spec = ExperimentSpec {
        source: DataSource::Synthetic(SyntheticKind::Uniform),
        n: 200,
        m: 40,
        k: 10,
        methods: Method::ALL.to_vec(),
        seeds: (0..5).collect(),
        solver: SolverConfig::default().with_maxiter_outer(50),
        output_dir: "results/compare".into(),
    };
    let report = run_experiment(&spec)?;

    print!("{:>5}", "iter");
    for m in &spec.methods {
        print!("  {:>18}", m.tag());
    }
    println!();
    let curves: Vec<Vec<f64>> = spec.methods.iter().map(|&m| report.mean_curve(m)).collect();
    for i in [0, 4, 9, 19, 29, 49] {
        print!("{:>5}", i + 1);
        for c in &curves {
            print!("  {:>18.5}", c[i.min(c.len() - 1)]);
        }
        println!();
    }
    println!("files in {}", spec.output_dir.display());
    Ok(())
}
