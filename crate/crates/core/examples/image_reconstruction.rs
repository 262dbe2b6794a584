//! Factorizes a small set of generated 92x112 PGM images and saves
//! reconstructions after 10, 20 and 50 iterations to `results/images`.
//!
//! Pass a directory of same-sized PGM files to use your own images.

use std::path::PathBuf;

use sr1_nmf::io::{load_pgm_set, write_pgm, GrayImage};
use sr1_nmf::nmf::nmf_solve_with;
use sr1_nmf::{random_init, save_reconstruction, Method, SolverConfig};

fn generated_set(dir: &std::path::Path) -> sr1_nmf::Result<()> {
    let (w, h) = (92, 112);
    let shapes: [fn(f64, f64) -> f64; 4] = [
        |x, y| 0.2 + 0.6 * x * y,
        |x, y| 0.5 + 0.4 * ((6.0 * x).sin() * (4.0 * y).cos()),
        |x, y| (-((x - 0.5).powi(2) + (y - 0.4).powi(2)) * 12.0).exp(),
        |x, _| if (x * 8.0) as usize % 2 == 0 { 0.9 } else { 0.1 },
    ];
    for (i, f) in shapes.iter().enumerate() {
        let values: Vec<f64> = (0..w * h)
            .map(|p| f((p % w) as f64 / w as f64, (p / w) as f64 / h as f64))
            .collect();
        write_pgm(dir.join(format!("face{i}.pgm")), &GrayImage::from_unit(w, h, &values)?)?;
    }
    Ok(())
}

fn main() -> sr1_nmf::Result<()> {
    let out = PathBuf::from("results/images");
    std::fs::create_dir_all(&out).map_err(|e| sr1_nmf::NmfError::io(&out, e))?;
    let input = match std::env::args().nth(1) {
        Some(dir) => PathBuf::from(dir),
        None => {
            let dir = out.join("input");
            std::fs::create_dir_all(&dir).map_err(|e| sr1_nmf::NmfError::io(&dir, e))?;
            generated_set(&dir)?;
            dir
        }
    };

    let set = load_pgm_set(&input)?;
    let k = set.files.len().min(4);
    let v = &set.matrix;
    let init = random_init(v.rows(), v.cols(), k, 0);
    let cfg = SolverConfig::default().with_maxiter_outer(50);
    let mut saved = Vec::new();
    let result = nmf_solve_with(v, k, &init.w, &init.h, Method::Sr1, &cfg, |t, model| {
        if [10, 20, 50].contains(&t.iteration) {
            for j in 0..set.files.len() {
                let path = out.join(format!("image{j}_iter{}.pgm", t.iteration));
                saved.push(save_reconstruction(model, j, set.width, set.height, &path).map(|()| path));
            }
            println!("iteration {:>2}: relative error {:.4e}", t.iteration, t.relative_error);
        }
    })?;
    for path in saved {
        path?;
    }
    println!("{} images, {:?}; snapshots in {}", set.files.len(), result.stop, out.display());
    Ok(())
}
