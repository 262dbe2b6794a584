//! Benchmark harness: experiment specs, trace files, and the oracle cross-check.
//!
//! Every `(method, seed)` run writes
//!
//! * `<method>_seed<seed>.csv` with header `iter,elapsed_ms,objective,rel_error,kkt_h,kkt_w`,
//! * `<method>_seed<seed>_W.csv` and `<method>_seed<seed>_H.csv` with the final factors,
//!
//! and after all runs `<method>_mean.csv` (`iter,rel_error`) averages the
//! relative error across seeds per iteration index. A run that stops early
//! contributes its last value to later indices.

use std::collections::HashSet;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::SolverConfig;
use crate::error::{NmfError, Result};
use crate::io::{load_matrix, write_csv, MatrixFormat};
use crate::linalg::DenseMatrix;
use crate::nmf::{nmf_solve_with, random_init, IterationTrace, Method, NmfOutcome};
use crate::nnls::{nnls_solve, NnlsProblem};
use crate::oracle::oracle_nnls;
use crate::synthetic::{generate_synthetic, SyntheticKind};

pub const TRACE_HEADER: &str = "iter,elapsed_ms,objective,rel_error,kkt_h,kkt_w";
pub const MEAN_HEADER: &str = "iter,rel_error";

// keeps the initialization stream apart from the data stream for the same seed
const INIT_SEED_OFFSET: u64 = 0x005E_ED0F_1417;

/// Seed used for the initial factors of a run with data seed `seed`.
pub fn init_seed(seed: u64) -> u64 {
    seed.wrapping_add(INIT_SEED_OFFSET)
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Synthetic(SyntheticKind),
    File { path: PathBuf, format: MatrixFormat },
}

/// One benchmark: a data source, a rank, methods, seeds, and a budget.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub source: DataSource,
    /// Synthetic dimensions; ignored for file sources.
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    /// Outer-iteration budget and optional wall-clock cap live here, alongside inner settings.
    pub solver: SolverConfig,
    pub output_dir: PathBuf,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(NmfError::Validation("at least one method is required".into()));
        }
        if self.seeds.is_empty() {
            return Err(NmfError::Validation("at least one seed is required".into()));
        }
        if matches!(self.source, DataSource::Synthetic(_)) && self.k > self.n.min(self.m) {
            return Err(NmfError::Validation(format!(
                "rank {} exceeds min(n, m) = {}",
                self.k,
                self.n.min(self.m)
            )));
        }
        if self.k == 0 {
            return Err(NmfError::Validation("rank must be at least 1".into()));
        }
        self.solver.validate()
    }

    /// Parses a flat `key = value` file (`#` starts a comment).
    ///
    /// Relative `input` and `output_dir` paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut source = None;
        let mut input = None;
        let mut format = None;
        let (mut n, mut m, mut k) = (0, 0, None);
        let mut methods = Vec::new();
        let mut seeds = Vec::new();
        let mut solver = SolverConfig::default();
        let mut output_dir = None;
        let mut seen = HashSet::new();

        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: String| NmfError::Validation(format!("line {}: {msg}", idx + 1));
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key = value, got '{line}'")))?;
            let (key, value) = (key.trim().to_ascii_lowercase(), value.trim());
            if !seen.insert(key.clone()) {
                return Err(bad(format!("duplicate key '{key}'")));
            }
            let count = |v: &str| v.parse::<usize>().map_err(|_| bad(format!("{key}: '{v}' is not a count")));
            let real = |v: &str| v.parse::<f64>().map_err(|_| bad(format!("{key}: '{v}' is not a number")));
            match key.as_str() {
                "source" => source = Some(value.to_string()),
                "input" => input = Some(base_dir.join(value)),
                "format" => format = Some(value.parse::<MatrixFormat>()?),
                "n" => n = count(value)?,
                "m" => m = count(value)?,
                "k" | "rank" => k = Some(count(value)?),
                "methods" | "method" => {
                    methods = list(value).map(str::parse).collect::<Result<Vec<Method>>>()?
                }
                "seeds" | "seed" => seeds = parse_seeds(value).map_err(bad)?,
                "maxiter" | "maxiter_outer" => solver.maxiter_outer = count(value)?,
                "maxiter_inner" => solver.maxiter_inner = count(value)?,
                "time_limit_secs" => {
                    solver.time_limit = Some(Duration::from_secs_f64(real(value)?))
                }
                "kkt_tol" | "tol" => solver.kkt_tol = real(value)?,
                "eps_active" => solver.eps_active = real(value)?,
                "rel_change_tol" => solver.rel_change_tol = real(value)?,
                "output_dir" | "out" => output_dir = Some(base_dir.join(value)),
                other => return Err(bad(format!("unknown key '{other}'"))),
            }
        }

        let source = source.ok_or_else(|| NmfError::Validation("missing 'source'".into()))?;
        let source = match source.parse::<SyntheticKind>() {
            Ok(kind) => DataSource::Synthetic(kind),
            Err(_) => {
                let path = input.ok_or_else(|| {
                    NmfError::Validation(format!("source '{source}' needs an 'input' path"))
                })?;
                let format = match format {
                    Some(f) => f,
                    None => source.parse::<MatrixFormat>()?,
                };
                DataSource::File { path, format }
            }
        };
        let spec = ExperimentSpec {
            source,
            n,
            m,
            k: k.ok_or_else(|| NmfError::Validation("missing 'k'".into()))?,
            methods,
            seeds,
            solver,
            output_dir: output_dir.unwrap_or_else(|| base_dir.join("results")),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| NmfError::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base)
    }

    /// Data matrix for `seed` (synthetic sources are regenerated per seed).
    pub fn data(&self, seed: u64) -> Result<DenseMatrix> {
        match &self.source {
            DataSource::Synthetic(kind) => generate_synthetic(*kind, self.n, self.m, self.k, seed),
            DataSource::File { path, format } => load_matrix(path, *format),
        }
    }
}

fn list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

/// Comma-separated seeds; `a..b` expands to the half-open range.
fn parse_seeds(value: &str) -> std::result::Result<Vec<u64>, String> {
    let mut out = Vec::new();
    for item in list(value) {
        if let Some((a, b)) = item.split_once("..") {
            let a: u64 = a.trim().parse().map_err(|_| format!("bad seed range '{item}'"))?;
            let b: u64 = b.trim().parse().map_err(|_| format!("bad seed range '{item}'"))?;
            out.extend(a..b);
        } else {
            out.push(item.parse().map_err(|_| format!("bad seed '{item}'"))?);
        }
    }
    Ok(out)
}

pub fn trace_file_name(method: Method, seed: u64) -> String {
    format!("{}_seed{seed}.csv", method.tag())
}

pub fn mean_file_name(method: Method) -> String {
    format!("{}_mean.csv", method.tag())
}

/// One trace CSV row.
pub fn format_trace_row(t: &IterationTrace) -> String {
    format!(
        "{},{:.3},{},{},{},{}",
        t.iteration,
        t.elapsed.as_secs_f64() * 1e3,
        t.objective,
        t.relative_error,
        t.kkt_residual_h,
        t.kkt_residual_w
    )
}

/// Streams trace rows to disk as iterations complete.
pub struct TraceWriter {
    path: PathBuf,
    out: BufWriter<fs::File>,
}

impl TraceWriter {
    pub fn create(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let file = fs::File::create(&path).map_err(|e| NmfError::io(&path, e))?;
        let mut w = TraceWriter {
            out: BufWriter::new(file),
            path,
        };
        w.line(TRACE_HEADER)?;
        Ok(w)
    }

    fn line(&mut self, s: &str) -> Result<()> {
        writeln!(self.out, "{s}").map_err(|e| NmfError::io(&self.path, e))
    }

    pub fn push(&mut self, t: &IterationTrace) -> Result<()> {
        self.line(&format_trace_row(t))
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush().map_err(|e| NmfError::io(&self.path, e))
    }
}

/// Runs NMF from the seeded random start, streaming the trace to `trace_path`.
pub fn run_traced(
    v: &DenseMatrix,
    k: usize,
    method: Method,
    cfg: &SolverConfig,
    trace_path: &Path,
) -> Result<NmfOutcome> {
    let init = random_init(v.rows(), v.cols(), k, init_seed(cfg.seed));
    let mut writer = TraceWriter::create(trace_path)?;
    let mut write_err = None;
    let result = nmf_solve_with(v, k, &init.w, &init.h, method, cfg, |t, _| {
        if write_err.is_none() {
            write_err = writer.push(t).err();
        }
    });
    // flush whatever was recorded even when the run failed
    let flushed = writer.finish();
    let outcome = result?;
    if let Some(e) = write_err {
        return Err(e);
    }
    flushed?;
    Ok(outcome)
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub method: Method,
    pub seed: u64,
    pub trace_path: PathBuf,
    pub iterations: usize,
    pub final_relative_error: f64,
    pub relative_errors: Vec<f64>,
    /// Failure message and exit code, when the run failed.
    pub failure: Option<(String, i32)>,
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentReport {
    pub runs: Vec<RunSummary>,
    pub mean_files: Vec<PathBuf>,
}

impl ExperimentReport {
    pub fn failures(&self) -> impl Iterator<Item = &RunSummary> {
        self.runs.iter().filter(|r| r.failure.is_some())
    }

    /// 0 when every run succeeded, otherwise the exit code of the first failure.
    pub fn exit_code(&self) -> i32 {
        self.failures()
            .next()
            .and_then(|r| r.failure.as_ref().map(|f| f.1))
            .unwrap_or(0)
    }

    /// Mean relative error per iteration for `method`.
    pub fn mean_curve(&self, method: Method) -> Vec<f64> {
        let curves: Vec<&[f64]> = self
            .runs
            .iter()
            .filter(|r| r.method == method && r.failure.is_none())
            .map(|r| r.relative_errors.as_slice())
            .collect();
        mean_curve(&curves)
    }
}

/// Per-index mean; shorter curves repeat their last value. Empty curves are ignored.
pub fn mean_curve(curves: &[&[f64]]) -> Vec<f64> {
    let curves: Vec<&[f64]> = curves.iter().copied().filter(|c| !c.is_empty()).collect();
    let len = curves.iter().map(|c| c.len()).max().unwrap_or(0);
    (0..len)
        .map(|i| {
            let sum: f64 = curves.iter().map(|c| c[i.min(c.len() - 1)]).sum();
            sum / curves.len() as f64
        })
        .collect()
}

/// Runs every `(method, seed)` pair and writes traces, factors, and mean files.
///
/// Individual run failures are logged and recorded in the report; files of
/// other runs (and the partial trace of the failed one) are kept.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    fs::create_dir_all(&spec.output_dir).map_err(|e| NmfError::io(&spec.output_dir, e))?;

    let shared = match spec.source {
        DataSource::File { .. } => Some(spec.data(0)?),
        DataSource::Synthetic(_) => None,
    };

    let mut report = ExperimentReport::default();
    for &method in &spec.methods {
        for &seed in &spec.seeds {
            let trace_path = spec.output_dir.join(trace_file_name(method, seed));
            let cfg = spec.solver.clone().with_seed(seed);
            let result = match &shared {
                Some(v) => run_one(v, spec, method, &cfg, &trace_path, seed),
                None => spec
                    .data(seed)
                    .and_then(|v| run_one(&v, spec, method, &cfg, &trace_path, seed)),
            };
            let summary = match result {
                Ok(outcome) => RunSummary {
                    method,
                    seed,
                    trace_path,
                    iterations: outcome.trace.len(),
                    final_relative_error: outcome.final_relative_error(),
                    relative_errors: outcome.trace.iter().map(|t| t.relative_error).collect(),
                    failure: None,
                },
                Err(e) => {
                    log::error!("{method} seed {seed}: {e}");
                    RunSummary {
                        method,
                        seed,
                        trace_path,
                        iterations: 0,
                        final_relative_error: f64::NAN,
                        relative_errors: Vec::new(),
                        failure: Some((e.to_string(), e.exit_code())),
                    }
                }
            };
            report.runs.push(summary);
        }
    }

    for &method in &spec.methods {
        let path = spec.output_dir.join(mean_file_name(method));
        write_mean_file(&path, &report.mean_curve(method))?;
        report.mean_files.push(path);
    }
    Ok(report)
}

fn run_one(
    v: &DenseMatrix,
    spec: &ExperimentSpec,
    method: Method,
    cfg: &SolverConfig,
    trace_path: &Path,
    seed: u64,
) -> Result<NmfOutcome> {
    log::info!("{method} seed {seed}: {}x{} rank {}", v.rows(), v.cols(), spec.k);
    let outcome = run_traced(v, spec.k, method, cfg, trace_path)?;
    let stem = format!("{}_seed{seed}", method.tag());
    write_csv(spec.output_dir.join(format!("{stem}_W.csv")), &outcome.model.w)?;
    write_csv(spec.output_dir.join(format!("{stem}_H.csv")), &outcome.model.h)?;
    Ok(outcome)
}

fn write_mean_file(path: &Path, curve: &[f64]) -> Result<()> {
    let mut text = String::from(MEAN_HEADER);
    text.push('\n');
    for (i, x) in curve.iter().enumerate() {
        text.push_str(&format!("{},{}\n", i + 1, x));
    }
    fs::write(path, text).map_err(|e| NmfError::io(path, e))
}

/// Settings for the random oracle cross-check.
#[derive(Debug, Clone)]
pub struct VerifySpec {
    pub instances: usize,
    pub min_dim: usize,
    pub max_dim: usize,
    pub seed: u64,
    /// Allowed objective gap between the SR1 solver and the oracle.
    pub tolerance: f64,
    pub solver: SolverConfig,
}

impl Default for VerifySpec {
    fn default() -> Self {
        VerifySpec {
            instances: 500,
            min_dim: 2,
            max_dim: 10,
            seed: 0,
            tolerance: 1e-8,
            solver: SolverConfig::default()
                .with_maxiter_inner(1000)
                .with_kkt_tol(1e-10),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct VerifyReport {
    pub instances: usize,
    pub max_gap: f64,
    pub failures: usize,
    pub max_iterations: usize,
}

/// Random NNLS instance: nonnegative `W` (rows between `dim` and `2·dim + 5`), mixed-sign `v`.
pub fn random_nnls_instance(dim: usize, rng: &mut impl Rng) -> (DenseMatrix, Vec<f64>) {
    let rows = rng.gen_range(dim..=2 * dim + 5);
    let w = DenseMatrix::from_fn(rows, dim, |_, _| rng.gen::<f64>());
    let v = (0..rows).map(|_| rng.gen_range(-1.0..1.0)).collect();
    (w, v)
}

/// Compares the SR1 solver to the enumeration oracle on random instances.
pub fn run_verification(spec: &VerifySpec) -> Result<VerifyReport> {
    if spec.min_dim == 0 || spec.min_dim > spec.max_dim {
        return Err(NmfError::Validation(format!(
            "invalid dimension range {}..={}",
            spec.min_dim, spec.max_dim
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut report = VerifyReport::default();
    for _ in 0..spec.instances {
        let dim = rng.gen_range(spec.min_dim..=spec.max_dim);
        let (w, v) = random_nnls_instance(dim, &mut rng);
        let problem = NnlsProblem::from_least_squares(&w, &v)?;
        let exact = oracle_nnls(&problem)?;
        let got = nnls_solve(&problem, None, &spec.solver)?;
        let gap = (got.objective - exact.objective).abs();
        report.instances += 1;
        report.max_gap = report.max_gap.max(gap);
        report.max_iterations = report.max_iterations.max(got.iterations);
        if gap > spec.tolerance {
            report.failures += 1;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_config() {
        let text = "# demo\nsource = synthetic-lowrank\nn = 20\nm = 10 # inline\nk = 3\nmethods = sr1, mu\nseeds = 1, 5..7\nmaxiter = 40\ntime_limit_secs = 2.5\noutput_dir = out\n";
        let spec = ExperimentSpec::parse(text, Path::new("/tmp/base")).unwrap();
        assert_eq!(spec.source, DataSource::Synthetic(SyntheticKind::LowRank));
        assert_eq!((spec.n, spec.m, spec.k), (20, 10, 3));
        assert_eq!(spec.methods, vec![Method::Sr1, "multiplicative".parse().unwrap()]);
        assert_eq!(spec.seeds, vec![1, 5, 6]);
        assert_eq!(spec.solver.maxiter_outer, 40);
        assert_eq!(spec.solver.time_limit, Some(Duration::from_millis(2500)));
        assert_eq!(spec.output_dir, PathBuf::from("/tmp/base/out"));
    }

    #[test]
    fn parses_file_source() {
        let text = "source = matrixmarket\ninput = data/x.mtx\nk = 2\nmethods = sr1\nseeds = 0\n";
        let spec = ExperimentSpec::parse(text, Path::new("/b")).unwrap();
        assert_eq!(
            spec.source,
            DataSource::File {
                path: PathBuf::from("/b/data/x.mtx"),
                format: MatrixFormat::MatrixMarket
            }
        );
    }

    #[test]
    fn rejects_bad_configs() {
        let base = Path::new(".");
        let ok = "source = synthetic-uniform\nn = 5\nm = 5\nk = 2\nmethods = sr1\nseeds = 0\n";
        assert!(ExperimentSpec::parse(ok, base).is_ok());
        for bad in [
            "source = synthetic-uniform\nn = 5\nm = 5\nk = 6\nmethods = sr1\nseeds = 0\n",
            "source = synthetic-uniform\nn = 5\nm = 5\nk = 2\nmethods = \nseeds = 0\n",
            "source = synthetic-uniform\nn = 5\nm = 5\nk = 2\nmethods = sr1\n",
            "source = synthetic-uniform\nn = 5\nm = 5\nk = 2\nmethods = sr1\nseeds = 0\nbogus = 1\n",
            "source = synthetic-uniform\nn = 5\nn = 6\nk = 2\nmethods = sr1\nseeds = 0\n",
            "source = csv\nk = 2\nmethods = sr1\nseeds = 0\n",
            "n 5\n",
        ] {
            assert!(ExperimentSpec::parse(bad, base).is_err(), "{bad}");
        }
    }

    #[test]
    fn mean_curve_carries_last_value() {
        let a = [3.0, 2.0, 1.0];
        let b = [1.0];
        assert_eq!(mean_curve(&[&a, &b]), vec![2.0, 1.5, 1.0]);
        assert!(mean_curve(&[]).is_empty());
    }

    #[test]
    fn small_verification_passes() {
        let spec = VerifySpec {
            instances: 20,
            ..Default::default()
        };
        let r = run_verification(&spec).unwrap();
        assert_eq!(r.instances, 20);
        assert_eq!(r.failures, 0);
    }
}
