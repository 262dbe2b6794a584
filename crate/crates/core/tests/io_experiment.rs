use std::fs;
use std::path::{Path, PathBuf};

use sr1_nmf::experiment::{DataSource, MEAN_HEADER, TRACE_HEADER};
use sr1_nmf::io::{read_csv, read_matrix_market, write_matrix_market};
use sr1_nmf::nmf::relative_error;
use sr1_nmf::{
    run_experiment, BaselineKind, ExperimentSpec, MatrixFormat, Method, NmfModel, SolverConfig, SyntheticKind,
};

fn bundled(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn small_spec(dir: &Path) -> ExperimentSpec {
    ExperimentSpec {
        source: DataSource::Synthetic(SyntheticKind::Uniform),
        n: 30,
        m: 20,
        k: 3,
        methods: vec![Method::Sr1, Method::Baseline(BaselineKind::Multiplicative)],
        seeds: vec![0, 1, 2],
        solver: SolverConfig::default().with_maxiter_outer(10),
        output_dir: dir.to_path_buf(),
    }
}

#[test]
fn bundled_term_document_matrix_round_trips() {
    let m = read_matrix_market(bundled("term_document_small.mtx")).unwrap();
    let terms = fs::read_to_string(bundled("terms.txt")).unwrap();
    assert_eq!(m.rows(), terms.lines().count());
    assert_eq!(m.cols(), 24);
    assert!(m.is_nonnegative());
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("copy.mtx");
    write_matrix_market(&out, &m).unwrap();
    assert_eq!(read_matrix_market(&out).unwrap(), m);
}

#[test]
fn bundled_configs_parse() {
    for name in ["bench_synthetic.conf", "bench_text.conf", "bench_large.conf"] {
        let spec = ExperimentSpec::from_file(bundled(name)).unwrap();
        spec.validate().unwrap();
    }
    let text = ExperimentSpec::from_file(bundled("bench_text.conf")).unwrap();
    assert!(matches!(text.source, DataSource::File { format: MatrixFormat::MatrixMarket, .. }));
    assert_eq!(text.data(0).unwrap().cols(), 24);
}

#[test]
fn experiment_writes_one_trace_per_run_and_one_mean_per_method() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_experiment(&small_spec(dir.path())).unwrap();
    assert_eq!(report.exit_code(), 0);

    let names: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    let traces = names.iter().filter(|n| n.contains("_seed") && !n.ends_with("_W.csv") && !n.ends_with("_H.csv"));
    assert_eq!(traces.count(), 6);
    assert_eq!(names.iter().filter(|n| n.ends_with("_mean.csv")).count(), 2);

    for run in &report.runs {
        let text = fs::read_to_string(&run.trace_path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(TRACE_HEADER));
        let rows: Vec<&str> = lines.collect();
        assert_eq!(rows.len(), run.iterations);
        assert!(rows.iter().all(|r| r.split(',').count() == 6));
    }
    for path in &report.mean_files {
        assert!(fs::read_to_string(path).unwrap().starts_with(MEAN_HEADER));
    }
}

#[test]
fn persisted_factors_reproduce_final_error() {
    let dir = tempfile::tempdir().unwrap();
    let spec = small_spec(dir.path());
    let report = run_experiment(&spec).unwrap();
    for run in &report.runs {
        let stem = format!("{}_seed{}", run.method.tag(), run.seed);
        let w = read_csv(dir.path().join(format!("{stem}_W.csv"))).unwrap();
        let h = read_csv(dir.path().join(format!("{stem}_H.csv"))).unwrap();
        let v = spec.data(run.seed).unwrap();
        let err = relative_error(&v, &NmfModel::new(w, h).unwrap()).unwrap();
        assert!((err - run.final_relative_error).abs() <= 1e-10, "{stem}");
    }
}
