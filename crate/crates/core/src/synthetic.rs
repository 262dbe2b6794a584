use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{NmfError, Result};
use crate::linalg::{matmul, DenseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticKind {
    /// i.i.d. uniform entries on `[0, 1)`.
    Uniform,
    /// `W*·H*` with uniform `[0, 1)` factors of inner dimension `k`.
    LowRank,
}

impl SyntheticKind {
    pub fn tag(self) -> &'static str {
        match self {
            SyntheticKind::Uniform => "synthetic-uniform",
            SyntheticKind::LowRank => "synthetic-lowrank",
        }
    }
}

impl fmt::Display for SyntheticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for SyntheticKind {
    type Err = NmfError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "synthetic-uniform" | "uniform" => Ok(SyntheticKind::Uniform),
            "synthetic-lowrank" | "lowrank" | "low-rank" => Ok(SyntheticKind::LowRank),
            other => Err(NmfError::Validation(format!("unknown synthetic kind '{other}'"))),
        }
    }
}

/// Random nonnegative `n × m` test matrix, deterministic per `seed`.
pub fn generate_synthetic(kind: SyntheticKind, n: usize, m: usize, k: usize, seed: u64) -> Result<DenseMatrix> {
    if n == 0 || m == 0 || (kind == SyntheticKind::LowRank && k == 0) {
        return Err(NmfError::Validation(format!(
            "synthetic dimensions must be positive (n={n}, m={m}, k={k})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |_, _| rng.gen::<f64>();
    Ok(match kind {
        SyntheticKind::Uniform => DenseMatrix::from_fn(n, m, &mut draw),
        SyntheticKind::LowRank => {
            let w = DenseMatrix::from_fn(n, k, &mut draw);
            let h = DenseMatrix::from_fn(k, m, &mut draw);
            matmul(&w, &h)?
        }
    })
}
