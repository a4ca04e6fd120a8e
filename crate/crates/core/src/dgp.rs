//! Synthetic matrix-variate series from the two-way factor model
//! `Y_t = R F_t Cᵀ + E_t`.
//!
//! Factor entries follow independent AR(1) recursions with coefficients
//! `±a`, started from their stationary law. Loadings are `R = p^{(1−δ)/2} O`
//! where `O` is a `Uniform(−1, 1)` draw with orthonormalized columns, so
//! `‖R‖₂² = ‖R‖²_min = p^{1−δ}` (columns alike with `q` and `ω`). Noise is
//! `Σ₁^{1/2} ε_t Σ₂^{1/2}` with standard normal `ε_t`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eig_sym, gemm_acc, Matrix};
use crate::series::MatrixSeries;

/// Off-diagonal value of the equicorrelated noise covariances.
pub const DEFAULT_EQUICORRELATION: f64 = 0.1;

/// Covariance structure of the idiosyncratic noise.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum NoiseCase {
    /// `E_t ≡ 0`.
    None,
    /// `Σ₁ = I_p`, `Σ₂ = I_q`.
    #[default]
    Identity,
    /// Unit diagonal and constant off-diagonal `rho` in both `Σ₁` and `Σ₂`.
    Equicorrelated { rho: f64 },
}

impl fmt::Display for NoiseCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseCase::None => write!(f, "none"),
            NoiseCase::Identity => write!(f, "identity"),
            NoiseCase::Equicorrelated { rho } => write!(f, "equicorrelated:{rho}"),
        }
    }
}

impl FromStr for NoiseCase {
    type Err = Error;

    /// Accepts `none`, `identity`, `equicorrelated` and `equicorrelated:<rho>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s.as_str(), None),
        };
        match (name, arg) {
            ("none" | "zero", None) => Ok(NoiseCase::None),
            ("identity" | "1", None) => Ok(NoiseCase::Identity),
            ("equicorrelated" | "2", None) => Ok(NoiseCase::Equicorrelated {
                rho: DEFAULT_EQUICORRELATION,
            }),
            ("equicorrelated", Some(a)) => a
                .parse::<f64>()
                .map(|rho| NoiseCase::Equicorrelated { rho })
                .map_err(|_| Error::config("noise_case", format!("bad correlation `{a}`"))),
            _ => Err(Error::config(
                "noise_case",
                format!(
                    "unknown noise case `{s}` (expected none, identity or equicorrelated[:rho])"
                ),
            )),
        }
    }
}

impl TryFrom<String> for NoiseCase {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<NoiseCase> for String {
    fn from(n: NoiseCase) -> String {
        n.to_string()
    }
}

/// Parameters of one synthetic design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpConfig {
    pub p: usize,
    pub q: usize,
    pub r: usize,
    pub c: usize,
    pub n: usize,
    pub a: f64,
    #[serde(default)]
    pub delta: f64,
    #[serde(default)]
    pub omega: f64,
    #[serde(default)]
    pub noise_case: NoiseCase,
    #[serde(default)]
    pub seed: u64,
}

impl DgpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(Error::config("p", "must be positive"));
        }
        if self.q == 0 {
            return Err(Error::config("q", "must be positive"));
        }
        if self.r > self.p {
            return Err(Error::config(
                "r",
                format!("r = {} exceeds p = {}", self.r, self.p),
            ));
        }
        if self.c > self.q {
            return Err(Error::config(
                "c",
                format!("c = {} exceeds q = {}", self.c, self.q),
            ));
        }
        if self.n < 3 {
            return Err(Error::config("n", format!("need n >= 3, got {}", self.n)));
        }
        if !(0.0..1.0).contains(&self.a) {
            return Err(Error::config(
                "a",
                format!("need 0 <= a < 1, got {}", self.a),
            ));
        }
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(Error::config(
                "delta",
                format!("need 0 <= delta <= 1, got {}", self.delta),
            ));
        }
        if !(0.0..=1.0).contains(&self.omega) {
            return Err(Error::config(
                "omega",
                format!("need 0 <= omega <= 1, got {}", self.omega),
            ));
        }
        if let NoiseCase::Equicorrelated { rho } = self.noise_case {
            if !rho.is_finite() || rho.abs() >= 1.0 {
                return Err(Error::config(
                    "noise_case",
                    format!("need |rho| < 1, got {rho}"),
                ));
            }
        }
        Ok(())
    }
}

/// One simulated data set together with the quantities that generated it.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub series: MatrixSeries,
    /// True row loadings `R`, `p × r`.
    pub row_loadings: Matrix,
    /// True column loadings `C`, `q × c`.
    pub column_loadings: Matrix,
    /// Latent factor matrices `F_1..F_n`, each `r × c`.
    pub factors: Vec<Matrix>,
}

/// Simulates one data set from `config`, seeded by `config.seed`.
pub fn simulate(config: &DgpConfig) -> Result<Simulation> {
    Simulator::new(config)?.run(config.seed)
}

/// Seed of replication `index` under `master`: the first draw of ChaCha stream
/// `index` keyed by `master`, so replications share no generator state.
pub fn replication_seed(master: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng.next_u64()
}

/// Reusable generator for one design; the noise square roots are computed once.
#[derive(Debug, Clone)]
pub struct Simulator {
    config: DgpConfig,
    noise_sqrt: Option<(Matrix, Matrix)>,
}

impl Simulator {
    pub fn new(config: &DgpConfig) -> Result<Self> {
        config.validate()?;
        let noise_sqrt = match config.noise_case {
            NoiseCase::Equicorrelated { rho } => Some((
                sym_sqrt(&equicorrelation(config.p, rho))?,
                sym_sqrt(&equicorrelation(config.q, rho))?,
            )),
            NoiseCase::None | NoiseCase::Identity => None,
        };
        Ok(Self {
            config: config.clone(),
            noise_sqrt,
        })
    }

    pub fn config(&self) -> &DgpConfig {
        &self.config
    }

    /// Runs the design with the given seed (the configured seed is ignored).
    pub fn run(&self, seed: u64) -> Result<Simulation> {
        let DgpConfig {
            p,
            q,
            r,
            c,
            n,
            a,
            delta,
            omega,
            noise_case,
            ..
        } = self.config;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        let coefs: Vec<f64> = (0..r * c)
            .map(|_| if rng.random_bool(0.5) { a } else { -a })
            .collect();
        let row_loadings = strength_loadings(&mut rng, p, r, delta);
        let column_loadings = strength_loadings(&mut rng, q, c, omega);
        let column_loadings_t = column_loadings.transpose();

        let stationary_sd = (1.0 / (1.0 - a * a)).sqrt();
        let mut state: Vec<f64> = (0..r * c)
            .map(|_| normal(&mut rng) * stationary_sd)
            .collect();

        let mut frames = Vec::with_capacity(n);
        let mut factors = Vec::with_capacity(n);
        let mut scratch_rf = vec![0.0; p * c];
        let mut scratch_noise = vec![0.0; p * q];
        for _ in 0..n {
            for (f, &phi) in state.iter_mut().zip(&coefs) {
                *f = phi * *f + normal(&mut rng);
            }
            let eps: Vec<f64> = (0..p * q).map(|_| normal(&mut rng)).collect();

            let mut y = vec![0.0; p * q];
            match (noise_case, &self.noise_sqrt) {
                (NoiseCase::None, _) => {}
                (_, Some((s1, s2))) => {
                    scratch_noise.iter_mut().for_each(|v| *v = 0.0);
                    gemm_acc(s1.as_slice(), &eps, &mut scratch_noise, p, p, q);
                    gemm_acc(&scratch_noise, s2.as_slice(), &mut y, p, q, q);
                }
                (_, None) => y.copy_from_slice(&eps),
            }
            if r > 0 && c > 0 {
                scratch_rf.iter_mut().for_each(|v| *v = 0.0);
                gemm_acc(row_loadings.as_slice(), &state, &mut scratch_rf, p, r, c);
                gemm_acc(&scratch_rf, column_loadings_t.as_slice(), &mut y, p, c, q);
            }
            frames.push(Matrix::from_fn(p, q, |i, j| y[i * q + j]));
            factors.push(Matrix::from_fn(r, c, |i, j| state[i * c + j]));
        }

        Ok(Simulation {
            series: MatrixSeries::from_frames_unchecked(p, q, frames),
            row_loadings,
            column_loadings,
            factors,
        })
    }
}

/// `d^{(1−strength)/2}` times a `d × k` uniform draw with orthonormalized
/// columns (modified Gram–Schmidt; the draw has full column rank almost surely).
fn strength_loadings(rng: &mut ChaCha8Rng, d: usize, k: usize, strength: f64) -> Matrix {
    let mut m = Matrix::from_fn(d, k, |_, _| rng.random_range(-1.0..1.0));
    for j in 0..k {
        for prev in 0..j {
            let dot: f64 = (0..d).map(|i| m[(i, j)] * m[(i, prev)]).sum();
            for i in 0..d {
                m[(i, j)] -= dot * m[(i, prev)];
            }
        }
        let norm = (0..d).map(|i| m[(i, j)].powi(2)).sum::<f64>().sqrt();
        for i in 0..d {
            m[(i, j)] /= norm;
        }
    }
    m.scale((d as f64).powf((1.0 - strength) / 2.0))
}

#[inline]
fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// `d × d` matrix with unit diagonal and `rho` elsewhere.
pub fn equicorrelation(d: usize, rho: f64) -> Matrix {
    Matrix::from_fn(d, d, |i, j| if i == j { 1.0 } else { rho })
}

/// Symmetric square root of a PSD matrix via its eigendecomposition.
pub fn sym_sqrt(a: &Matrix) -> Result<Matrix> {
    let e = eig_sym(a)?;
    let scale = e.values.first().map_or(0.0, |v| v.abs()).max(1.0);
    let roots = e
        .values
        .iter()
        .map(|&l| {
            if l < -1e-12 * scale {
                Err(Error::Validation(format!(
                    "matrix is not positive semi-definite (eigenvalue {l:e})"
                )))
            } else {
                Ok(l.max(0.0).sqrt())
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    let d = a.rows();
    Ok(Matrix::from_fn(d, d, |i, j| {
        (0..d)
            .map(|k| e.vectors[(i, k)] * roots[k] * e.vectors[(j, k)])
            .sum()
    }))
}
