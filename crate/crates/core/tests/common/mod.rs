#![allow(dead_code)]

use mvfactor::dgp::{simulate, DgpConfig, NoiseCase};
use mvfactor::estimation::{AutocovStack, Side, WhitenessCurves};
use mvfactor::linalg::{EigenDecomposition, Matrix};
use mvfactor::series::MatrixSeries;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// i.i.d. uniform frames; no factor structure.
pub fn random_series(seed: u64, p: usize, q: usize, n: usize) -> MatrixSeries {
    let mut rng = rng(seed);
    let frames = (0..n).map(|_| random_matrix(&mut rng, p, q)).collect();
    MatrixSeries::new(p, q, frames).unwrap()
}

/// Random lag stack of nonsymmetric matrices.
pub fn random_stack(seed: u64, dim: usize, depth: usize, n: usize) -> AutocovStack {
    let mut rng = rng(seed);
    let lags = (0..depth)
        .map(|_| random_matrix(&mut rng, dim, dim))
        .collect();
    AutocovStack::from_lags(Side::Row, lags, n).unwrap()
}

pub fn dgp(p: usize, q: usize, r: usize, c: usize, n: usize, a: f64) -> DgpConfig {
    DgpConfig {
        p,
        q,
        r,
        c,
        n,
        a,
        delta: 0.0,
        omega: 0.0,
        noise_case: NoiseCase::Identity,
        seed: 0,
    }
}

pub fn simulated(cfg: &DgpConfig, seed: u64) -> MatrixSeries {
    simulate(&DgpConfig {
        seed,
        ..cfg.clone()
    })
    .unwrap()
    .series
}

/// Plain triple loop, independent of the library kernels.
fn naive_product(a: &Matrix, b: &Matrix) -> Matrix {
    Matrix::from_fn(a.rows(), b.cols(), |i, j| {
        (0..a.cols()).map(|k| a[(i, k)] * b[(k, j)]).sum()
    })
}

/// Forms every `rᵢᵀ Σ̂(h) rᵢ` explicitly, `rᵢ` the eigenvectors from index `i` on.
pub fn brute_force_curves(
    stack: &AutocovStack,
    basis: &EigenDecomposition,
    k: usize,
    n: usize,
) -> WhitenessCurves {
    let dim = stack.dim();
    let root_n = (n as f64).sqrt();
    let mut t_curve = Vec::with_capacity(dim);
    let mut g_curve = Vec::with_capacity(dim);
    for i in 0..dim {
        let tail = basis.vectors.trailing_columns(i);
        let mut t: f64 = 0.0;
        let mut g = 0.0;
        for h in 1..=k {
            let gamma = naive_product(&naive_product(&tail.transpose(), stack.lag(h)), &tail);
            t = t.max(root_n * gamma.max_abs());
            g += gamma.as_slice().iter().map(|v| v * v).sum::<f64>();
        }
        t_curve.push(t);
        g_curve.push(g);
    }
    WhitenessCurves { t_curve, g_curve }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn non_increasing(curve: &[f64]) -> bool {
    curve.windows(2).all(|w| w[1] <= w[0] + 1e-12)
}
