//! Topic extraction from the bundled term-document matrix.
//!
//! Columns of `W` are topics over terms; the largest entry of each column of
//! `H` assigns a document to a topic.

use std::path::Path;

use sr1_nmf::{load_matrix, nmf_solve, random_init, MatrixFormat, Method, SolverConfig};

fn main() -> sr1_nmf::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data");
    let v = load_matrix(data.join("term_document_small.mtx"), MatrixFormat::MatrixMarket)?;
    let terms_path = data.join("terms.txt");
    let terms: Vec<String> = std::fs::read_to_string(&terms_path)
        .map_err(|e| sr1_nmf::NmfError::io(&terms_path, e))?
        .lines()
        .map(str::to_string)
        .collect();

    let k = 3;
    let init = random_init(v.rows(), v.cols(), k, 3);
    let out = nmf_solve(&v, k, &init.w, &init.h, Method::Sr1, &SolverConfig::default())?;
    println!("relative error {:.4} after {} iterations", out.final_relative_error(), out.trace.len());

    for topic in 0..k {
        let mut weights: Vec<(f64, &str)> = (0..v.rows())
            .map(|i| (out.model.w[(i, topic)], terms[i].as_str()))
            .collect();
        weights.sort_by(|a, b| b.0.total_cmp(&a.0));
        let top: Vec<&str> = weights.iter().take(5).map(|w| w.1).collect();
        let docs: Vec<usize> = (0..v.cols())
            .filter(|&j| {
                let col = out.model.h.column(j);
                (0..k).all(|t| col[t] <= col[topic])
            })
            .map(|j| j + 1)
            .collect();
        println!("topic {topic}: {}  | documents {docs:?}", top.join(", "));
    }
    Ok(())
}
