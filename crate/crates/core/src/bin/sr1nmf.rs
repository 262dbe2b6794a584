//! Command-line front end: `factorize`, `bench`, `verify`, `reconstruct`.
//!
//! Exit codes: 0 success, 1 validation error, 2 numerical failure, 3 I/O error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sr1_nmf::experiment::{init_seed, run_traced, run_verification, trace_file_name, VerifySpec};
use sr1_nmf::io::{load_pgm_set, save_reconstruction, write_csv};
use sr1_nmf::nmf::{nmf_solve_with, random_init};
use sr1_nmf::{
    generate_synthetic, load_matrix, run_experiment, ExperimentSpec, MatrixFormat, Method, NmfError,
    SolverConfig, SyntheticKind,
};

#[derive(Parser)]
#[command(name = "sr1nmf", version, about = "NMF with an active-set SR1 NNLS solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Factorize one matrix and write its trace and factors.
    Factorize(FactorizeArgs),
    /// Run an experiment described by a key=value config file.
    Bench {
        /// Config file.
        config: PathBuf,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-check the SR1 solver against the brute-force oracle.
    Verify {
        #[arg(long, default_value_t = 500)]
        count: usize,
        #[arg(long, default_value_t = 10)]
        max_dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Allowed objective gap.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Factorize a PGM image set and write reconstructed images.
    Reconstruct(ReconstructArgs),
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value = "sr1")]
    method: Method,
    #[arg(long)]
    rank: usize,
    #[arg(long, default_value_t = 200)]
    maxiter: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// KKT tolerance.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value = "results")]
    out: PathBuf,
}

impl Common {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            maxiter_outer: self.maxiter,
            kkt_tol: self.tol,
            seed: self.seed,
            ..SolverConfig::default()
        }
    }
}

#[derive(Args)]
struct FactorizeArgs {
    #[command(flatten)]
    common: Common,
    /// Input file; omit with a synthetic --format.
    #[arg(long)]
    input: Option<PathBuf>,
    /// csv, matrixmarket, pgm, synthetic-uniform or synthetic-lowrank.
    #[arg(long)]
    format: Option<String>,
    /// Rows of a synthetic matrix.
    #[arg(long, default_value_t = 200)]
    rows: usize,
    /// Columns of a synthetic matrix.
    #[arg(long, default_value_t = 40)]
    cols: usize,
}

#[derive(Args)]
struct ReconstructArgs {
    #[command(flatten)]
    common: Common,
    /// A PGM file or a directory of PGM images.
    #[arg(long)]
    input: PathBuf,
    /// Iterations at which to also save snapshots, e.g. 10,20,50.
    #[arg(long, value_delimiter = ',')]
    snapshots: Vec<usize>,
}

fn create_dir(path: &Path) -> Result<(), NmfError> {
    std::fs::create_dir_all(path).map_err(|e| NmfError::io(path, e))
}

fn factorize(args: FactorizeArgs) -> Result<(), NmfError> {
    let c = &args.common;
    let v = match (&args.input, args.format.as_deref()) {
        (None, Some(f)) => {
            let kind: SyntheticKind = f.parse()?;
            generate_synthetic(kind, args.rows, args.cols, c.rank, c.seed)?
        }
        (None, None) => {
            return Err(NmfError::Validation(
                "give --input or a synthetic --format".into(),
            ))
        }
        (Some(path), f) => {
            let format = match f {
                Some(f) => f.parse()?,
                None => MatrixFormat::detect(path).ok_or_else(|| {
                    NmfError::Validation(format!("cannot infer format of {}", path.display()))
                })?,
            };
            load_matrix(path, format)?
        }
    };
    create_dir(&c.out)?;
    let trace_path = c.out.join(trace_file_name(c.method, c.seed));
    let out = run_traced(&v, c.rank, c.method, &c.config(), &trace_path)?;
    let stem = format!("{}_seed{}", c.method.tag(), c.seed);
    write_csv(c.out.join(format!("{stem}_W.csv")), &out.model.w)?;
    write_csv(c.out.join(format!("{stem}_H.csv")), &out.model.h)?;
    println!(
        "{} {}x{} rank {}: {} iterations, relative error {:.6e} ({:?}); trace in {}",
        c.method,
        v.rows(),
        v.cols(),
        c.rank,
        out.trace.len(),
        out.final_relative_error(),
        out.stop,
        trace_path.display()
    );
    Ok(())
}

fn bench(config: &Path, out: Option<PathBuf>) -> Result<i32, NmfError> {
    let mut spec = ExperimentSpec::from_file(config)?;
    if let Some(out) = out {
        spec.output_dir = out;
    }
    let report = run_experiment(&spec)?;
    for r in &report.runs {
        match &r.failure {
            None => println!(
                "{:<20} seed {:<4} {:>4} iterations  rel_error {:.6e}",
                r.method.tag(),
                r.seed,
                r.iterations,
                r.final_relative_error
            ),
            Some((msg, _)) => println!("{:<20} seed {:<4} FAILED: {msg}", r.method.tag(), r.seed),
        }
    }
    println!("results in {}", spec.output_dir.display());
    Ok(report.exit_code())
}

fn verify(count: usize, max_dim: usize, seed: u64, tol: f64) -> Result<i32, NmfError> {
    let spec = VerifySpec {
        instances: count,
        max_dim,
        seed,
        tolerance: tol,
        ..VerifySpec::default()
    };
    let r = run_verification(&spec)?;
    println!(
        "{} instances, max objective gap {:.3e}, {} over tolerance {tol:e}, max iterations {}",
        r.instances, r.max_gap, r.failures, r.max_iterations
    );
    Ok(if r.failures == 0 { 0 } else { 2 })
}

fn reconstruct(args: ReconstructArgs) -> Result<(), NmfError> {
    let c = &args.common;
    let set = load_pgm_set(&args.input)?;
    create_dir(&c.out)?;
    let stems: Vec<String> = set
        .files
        .iter()
        .map(|f| f.file_stem().map_or("image".into(), |s| s.to_string_lossy().into_owned()))
        .collect();
    let v = &set.matrix;
    let init = random_init(v.rows(), v.cols(), c.rank, init_seed(c.seed));
    let mut snapshot_err = None;
    let out = nmf_solve_with(v, c.rank, &init.w, &init.h, c.method, &c.config(), |t, model| {
        if snapshot_err.is_some() || !args.snapshots.contains(&t.iteration) {
            return;
        }
        for (j, stem) in stems.iter().enumerate() {
            let path = c.out.join(format!("{stem}_iter{}.pgm", t.iteration));
            if let Err(e) = save_reconstruction(model, j, set.width, set.height, path) {
                snapshot_err = Some(e);
                return;
            }
        }
    })?;
    if let Some(e) = snapshot_err {
        return Err(e);
    }
    for (j, stem) in stems.iter().enumerate() {
        save_reconstruction(&out.model, j, set.width, set.height, c.out.join(format!("{stem}_rec.pgm")))?;
    }
    println!(
        "{} images ({}x{}), rank {}: {} iterations, relative error {:.6e}; images in {}",
        stems.len(),
        set.width,
        set.height,
        c.rank,
        out.trace.len(),
        out.final_relative_error(),
        c.out.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Factorize(args) => factorize(args).map(|()| 0),
        Command::Bench { config, out } => bench(&config, out),
        Command::Verify {
            count,
            max_dim,
            seed,
            tol,
        } => verify(count, max_dim, seed, tol),
        Command::Reconstruct(args) => reconstruct(args).map(|()| 0),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
