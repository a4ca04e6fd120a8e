//! Monte Carlo frequency tables and cross-validated model comparison.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Range;

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dgp::{replication_seed, DgpConfig, Simulator};
use crate::error::{Error, Result};
use crate::estimation::{
    estimate_both, estimate_one_step, m_matrix, AutocovStack, Estimate, LagParams, Method, Mode,
    Side,
};
use crate::linalg::{eig_sym, matmul, matmul_tn, EigenDecomposition, Matrix};
use crate::series::MatrixSeries;

/// One estimator variant: a method in a mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Estimator {
    pub method: Method,
    pub mode: Mode,
}

impl Estimator {
    pub const fn new(method: Method, mode: Mode) -> Self {
        Self { method, mode }
    }

    /// All six variants, one-step first.
    pub fn all() -> Vec<Estimator> {
        Mode::BOTH
            .iter()
            .flat_map(|&mode| {
                Method::ALL
                    .iter()
                    .map(move |&method| Estimator { method, mode })
            })
            .collect()
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.method, self.mode)
    }
}

fn default_replications() -> usize {
    200
}

/// One Monte Carlo cell: a design, the estimation settings and the variants to score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McCellConfig {
    /// Design; its `seed` is the master seed of the cell.
    #[serde(flatten)]
    pub dgp: DgpConfig,
    #[serde(flatten)]
    pub params: LagParams,
    /// Two-step projection width (`None`: half of each dimension).
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default = "default_replications", alias = "reps")]
    pub replications: usize,
    #[serde(default = "Estimator::all")]
    pub methods: Vec<Estimator>,
}

impl McCellConfig {
    pub fn new(dgp: DgpConfig) -> Self {
        Self {
            dgp,
            params: LagParams::default(),
            m: None,
            replications: default_replications(),
            methods: Estimator::all(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.dgp.validate()?;
        self.params.validate()?;
        if self.replications == 0 {
            return Err(Error::config("replications", "must be at least 1"));
        }
        if self.methods.is_empty() {
            return Err(Error::config(
                "methods",
                "at least one estimator is required",
            ));
        }
        if let Some(m) = self.m {
            if m == 0 || m > self.dgp.p.min(self.dgp.q) {
                return Err(Error::config(
                    "m",
                    format!(
                        "need 1 <= m <= min(p, q) = {}, got {m}",
                        self.dgp.p.min(self.dgp.q)
                    ),
                ));
            }
        }
        if self.dgp.n <= self.params.depth() + 2 {
            return Err(Error::config(
                "n",
                format!("need n > {} for the chosen lags", self.params.depth() + 2),
            ));
        }
        Ok(())
    }

    fn needs_two_step(&self) -> bool {
        self.methods.iter().any(|e| e.mode == Mode::TwoStep)
    }
}

/// Exact / under / over counts for one estimator and side.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub exact: usize,
    pub under: usize,
    pub over: usize,
}

impl Tally {
    pub fn record(&mut self, estimate: usize, truth: usize) {
        match estimate.cmp(&truth) {
            Ordering::Equal => self.exact += 1,
            Ordering::Less => self.under += 1,
            Ordering::Greater => self.over += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.exact + self.under + self.over
    }

    /// Relative frequency of exact hits.
    pub fn hit_rate(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            t => self.exact as f64 / t as f64,
        }
    }

    pub fn under_rate(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            t => self.under as f64 / t as f64,
        }
    }

    pub fn over_rate(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            t => self.over as f64 / t as f64,
        }
    }

    /// `x(y|z)`: hit frequency with under and over counts.
    pub fn cell(&self) -> String {
        format!("{:.3}({}|{})", self.hit_rate(), self.under, self.over)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEntry {
    pub estimator: Estimator,
    pub side: Side,
    pub tally: Tally,
}

/// Tallies of one Monte Carlo cell, in `methods` order with the row side first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub config: McCellConfig,
    pub entries: Vec<McEntry>,
}

impl McReport {
    pub fn tally(&self, method: Method, mode: Mode, side: Side) -> Option<&Tally> {
        let want = Estimator::new(method, mode);
        self.entries
            .iter()
            .find(|e| e.estimator == want && e.side == side)
            .map(|e| &e.tally)
    }

    pub fn hit_rate(&self, method: Method, mode: Mode, side: Side) -> Option<f64> {
        self.tally(method, mode, side).map(Tally::hit_rate)
    }
}

/// How replications are scheduled. Results do not depend on the choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Rayon's global pool; equivalent to `Sequential` without the `parallel` feature.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

/// `(r̂, ĉ)` per requested estimator for one replication.
fn replicate(
    config: &McCellConfig,
    simulator: &Simulator,
    index: usize,
) -> Result<Vec<(usize, usize)>> {
    let seed = replication_seed(config.dgp.seed, index as u64);
    let series = simulator.run(seed)?.series;
    let (one, two): (Estimate, Option<Estimate>) = if config.needs_two_step() {
        let (one, two) = estimate_both(&series, &config.params, config.m)?;
        (one, Some(two))
    } else {
        (estimate_one_step(&series, &config.params)?, None)
    };
    Ok(config
        .methods
        .iter()
        .map(|e| match e.mode {
            Mode::OneStep => one.counts(e.method),
            Mode::TwoStep => two.as_ref().expect("two-step computed").counts(e.method),
        })
        .collect())
}

pub fn run_monte_carlo(config: &McCellConfig) -> Result<McReport> {
    run_monte_carlo_with(config, Execution::default())
}

/// Runs one cell. Replication `k` is simulated with `replication_seed(master, k)`
/// and tallies are merged in replication order, so the report is identical
/// for every execution strategy.
pub fn run_monte_carlo_with(config: &McCellConfig, execution: Execution) -> Result<McReport> {
    config.validate()?;
    let simulator = Simulator::new(&config.dgp)?;
    let outcomes: Vec<Vec<(usize, usize)>> = match execution {
        #[cfg(feature = "parallel")]
        Execution::Parallel => (0..config.replications)
            .into_par_iter()
            .map(|k| replicate(config, &simulator, k))
            .collect::<Result<_>>()?,
        _ => (0..config.replications)
            .map(|k| replicate(config, &simulator, k))
            .collect::<Result<_>>()?,
    };

    let mut row = vec![Tally::default(); config.methods.len()];
    let mut col = vec![Tally::default(); config.methods.len()];
    for outcome in &outcomes {
        for (j, &(r_hat, c_hat)) in outcome.iter().enumerate() {
            row[j].record(r_hat, config.dgp.r);
            col[j].record(c_hat, config.dgp.c);
        }
    }
    let entries = config
        .methods
        .iter()
        .enumerate()
        .flat_map(|(j, &estimator)| {
            [
                McEntry {
                    estimator,
                    side: Side::Row,
                    tally: row[j],
                },
                McEntry {
                    estimator,
                    side: Side::Column,
                    tally: col[j],
                },
            ]
        })
        .collect();
    Ok(McReport {
        config: config.clone(),
        entries,
    })
}

/// Runs several cells one after another (each cell fans out internally).
pub fn run_grid(cells: &[McCellConfig], execution: Execution) -> Result<Vec<McReport>> {
    cells
        .iter()
        .map(|c| run_monte_carlo_with(c, execution))
        .collect()
}

/// Leading `r` row and `c` column eigenvectors of the one-step M-matrices.
pub fn fit_loadings(
    series: &MatrixSeries,
    r: usize,
    c: usize,
    params: &LagParams,
) -> Result<(Matrix, Matrix)> {
    check_rank(series, r, c)?;
    let (rows, cols) = loading_spectra(series, std::slice::from_ref(&(0..series.n())), params.h0)?;
    Ok((rows.leading_vectors(r), cols.leading_vectors(c)))
}

fn check_rank(series: &MatrixSeries, r: usize, c: usize) -> Result<()> {
    if r == 0 || r > series.p() {
        return Err(Error::config(
            "r",
            format!("need 1 <= r <= p = {}, got {r}", series.p()),
        ));
    }
    if c == 0 || c > series.q() {
        return Err(Error::config(
            "c",
            format!("need 1 <= c <= q = {}, got {c}", series.q()),
        ));
    }
    Ok(())
}

fn loading_spectra(
    series: &MatrixSeries,
    segments: &[Range<usize>],
    h0: usize,
) -> Result<(EigenDecomposition, EigenDecomposition)> {
    if h0 == 0 {
        return Err(Error::config("h0", "must be at least 1"));
    }
    let rows = AutocovStack::from_segments(series, segments, Side::Row, h0)?;
    let cols = AutocovStack::from_segments(series, segments, Side::Column, h0)?;
    Ok((
        eig_sym(&m_matrix(&rows, h0)?)?,
        eig_sym(&m_matrix(&cols, h0)?)?,
    ))
}

/// Contiguous blocks; the first `n mod folds` blocks get one extra observation.
pub fn fold_ranges(n: usize, folds: usize) -> Vec<Range<usize>> {
    let base = n / folds;
    let extra = n % folds;
    let mut start = 0;
    (0..folds)
        .map(|l| {
            let len = base + usize::from(l < extra);
            let range = start..start + len;
            start += len;
            range
        })
        .collect()
}

/// Residual norm accumulated by the cross-validation criterion.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum RssNorm {
    /// `‖·‖_F`, the default.
    #[default]
    #[serde(rename = "frobenius")]
    Frobenius,
    /// `‖·‖_F²`, for sensitivity checks.
    #[serde(rename = "squared")]
    Squared,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvEntry {
    pub r: usize,
    pub c: usize,
    pub rss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: usize,
    pub norm: RssNorm,
    pub entries: Vec<CvEntry>,
}

impl CvReport {
    pub fn rss(&self, r: usize, c: usize) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.r == r && e.c == c)
            .map(|e| e.rss)
    }

    /// Candidate with the smallest RSS (first one on ties).
    pub fn best(&self) -> Option<&CvEntry> {
        self.entries
            .iter()
            .fold(None, |best: Option<&CvEntry>, e| match best {
                Some(b) if b.rss <= e.rss => Some(b),
                _ => Some(e),
            })
    }
}

/// Orthogonal projector onto the leading `k` vectors; `None` when the basis is
/// complete and the projector is the identity.
fn projector(spectrum: &EigenDecomposition, k: usize) -> Result<Option<Matrix>> {
    if k == spectrum.dim() {
        return Ok(None);
    }
    let basis = spectrum.leading_vectors(k);
    Ok(Some(matmul(&basis, &basis.transpose())?))
}

fn check_folds(series: &MatrixSeries, folds: usize) -> Result<()> {
    if folds < 2 {
        return Err(Error::config(
            "folds",
            format!("need at least 2 folds, got {folds}"),
        ));
    }
    if series.n() < 2 * folds {
        return Err(Error::config(
            "folds",
            format!(
                "need n >= 2·folds = {}, series has {}",
                2 * folds,
                series.n()
            ),
        ));
    }
    Ok(())
}

/// Cross-validated residual criterion for a single `(r, c)`.
pub fn cv_rss(
    series: &MatrixSeries,
    r: usize,
    c: usize,
    folds: usize,
    params: &LagParams,
    norm: RssNorm,
) -> Result<f64> {
    Ok(cv_grid(series, &[(r, c)], folds, params, norm)?.entries[0].rss)
}

/// Cross-validated residual criterion for every candidate `(r, c)`.
///
/// For each contiguous fold the loadings are fitted on the remaining
/// observations (lag pairs never straddle the held-out block), held-out frames
/// are projected as `R̂R̂ᵀ Y_t ĈĈᵀ`, and residual norms are summed and divided
/// by `pq`.
pub fn cv_grid(
    series: &MatrixSeries,
    candidates: &[(usize, usize)],
    folds: usize,
    params: &LagParams,
    norm: RssNorm,
) -> Result<CvReport> {
    check_folds(series, folds)?;
    if candidates.is_empty() {
        return Err(Error::config(
            "candidates",
            "at least one (r, c) pair is required",
        ));
    }
    for &(r, c) in candidates {
        check_rank(series, r, c)?;
    }
    let n = series.n();
    let mut totals = vec![0.0_f64; candidates.len()];
    for held in fold_ranges(n, folds) {
        let training: Vec<Range<usize>> = [0..held.start, held.end..n]
            .into_iter()
            .filter(|s| !s.is_empty())
            .collect();
        let (rows, cols) = loading_spectra(series, &training, params.h0)?;
        for (total, &(r, c)) in totals.iter_mut().zip(candidates) {
            let row_proj = projector(&rows, r)?;
            let col_proj = projector(&cols, c)?;
            for t in held.clone() {
                let y = series.frame(t);
                let mut fitted = y.clone();
                if let Some(pr) = &row_proj {
                    fitted = matmul_tn(pr, &fitted)?;
                }
                if let Some(pc) = &col_proj {
                    fitted = matmul(&fitted, pc)?;
                }
                let sq = y.sub(&fitted)?.frobenius_norm().powi(2);
                *total += match norm {
                    RssNorm::Frobenius => sq.sqrt(),
                    RssNorm::Squared => sq,
                };
            }
        }
    }
    let scale = 1.0 / (series.p() * series.q()) as f64;
    Ok(CvReport {
        folds,
        norm,
        entries: candidates
            .iter()
            .zip(totals)
            .map(|(&(r, c), t)| CvEntry {
                r,
                c,
                rss: t * scale,
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgp::{simulate, NoiseCase};

    fn design(r: usize, c: usize, noise: NoiseCase, seed: u64) -> DgpConfig {
        DgpConfig {
            p: 10,
            q: 10,
            r,
            c,
            n: 100,
            a: 0.9,
            delta: 0.0,
            omega: 0.0,
            noise_case: noise,
            seed,
        }
    }

    #[test]
    fn folds_are_contiguous_and_balanced() {
        let f = fold_ranges(12, 5);
        assert_eq!(f, vec![0..3, 3..6, 6..8, 8..10, 10..12]);
        assert_eq!(
            fold_ranges(875, 5)
                .iter()
                .map(|r| r.len())
                .collect::<Vec<_>>(),
            vec![175; 5]
        );
    }

    #[test]
    fn tally_cell_format() {
        let t = Tally {
            exact: 72,
            under: 128,
            over: 0,
        };
        assert_eq!(t.cell(), "0.360(128|0)");
        assert_eq!(t.total(), 200);
    }

    #[test]
    fn single_noiseless_replication_is_exact() {
        let mut cfg = McCellConfig::new(design(3, 3, NoiseCase::None, 1));
        cfg.replications = 1;
        let report = run_monte_carlo(&cfg).unwrap();
        assert_eq!(report.entries.len(), 12);
        for e in &report.entries {
            assert_eq!(
                e.tally,
                Tally {
                    exact: 1,
                    under: 0,
                    over: 0
                },
                "{}",
                e.estimator
            );
        }
    }

    #[test]
    fn parallel_matches_sequential() {
        let mut cfg = McCellConfig::new(design(2, 2, NoiseCase::Identity, 11));
        cfg.replications = 12;
        let a = run_monte_carlo_with(&cfg, Execution::Parallel).unwrap();
        let b = run_monte_carlo_with(&cfg, Execution::Sequential).unwrap();
        assert_eq!(a, b);
        for e in &a.entries {
            assert_eq!(e.tally.total(), 12);
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = McCellConfig::new(design(2, 2, NoiseCase::Identity, 0));
        cfg.replications = 0;
        assert!(matches!(
            cfg.validate(),
            Err(Error::Config {
                field: "replications",
                ..
            })
        ));
        cfg.replications = 1;
        cfg.m = Some(11);
        assert!(matches!(
            cfg.validate(),
            Err(Error::Config { field: "m", .. })
        ));
        cfg.m = None;
        cfg.methods.clear();
        assert!(matches!(
            cfg.validate(),
            Err(Error::Config {
                field: "methods",
                ..
            })
        ));
    }

    #[test]
    fn config_json_defaults() {
        let cfg: McCellConfig = serde_json::from_str(
            r#"{"p": 20, "q": 20, "r": 3, "c": 3, "n": 200, "a": 0.9, "seed": 5}"#,
        )
        .unwrap();
        assert_eq!(cfg.replications, 200);
        assert_eq!(cfg.params, LagParams::default());
        assert_eq!(cfg.methods.len(), 6);
        let back: McCellConfig =
            serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
        let k: McCellConfig = serde_json::from_str(
            r#"{"p": 20, "q": 20, "r": 3, "c": 3, "n": 200, "a": 0.9, "K": 4, "reps": 7,
                "methods": [{"method": "SR", "mode": "one-step"}]}"#,
        )
        .unwrap();
        assert_eq!((k.params.k, k.replications, k.methods.len()), (4, 7, 1));
    }

    #[test]
    fn loadings_are_orthonormal() {
        let s = simulate(&design(2, 3, NoiseCase::Identity, 3))
            .unwrap()
            .series;
        let (r, c) = fit_loadings(&s, 2, 3, &LagParams::default()).unwrap();
        assert!(
            matmul_tn(&r, &r)
                .unwrap()
                .sub(&Matrix::identity(2))
                .unwrap()
                .max_abs()
                < 1e-9
        );
        assert!(
            matmul_tn(&c, &c)
                .unwrap()
                .sub(&Matrix::identity(3))
                .unwrap()
                .max_abs()
                < 1e-9
        );
        assert!(fit_loadings(&s, 0, 1, &LagParams::default()).is_err());
        assert!(fit_loadings(&s, 1, 11, &LagParams::default()).is_err());
    }

    #[test]
    fn full_loadings_span_everything() {
        let s = simulate(&design(2, 2, NoiseCase::Identity, 4))
            .unwrap()
            .series;
        let (r, c) = fit_loadings(&s, 10, 10, &LagParams::default()).unwrap();
        let i = Matrix::identity(10);
        assert!(
            matmul(&r, &r.transpose())
                .unwrap()
                .sub(&i)
                .unwrap()
                .max_abs()
                < 1e-9
        );
        assert!(
            matmul(&c, &c.transpose())
                .unwrap()
                .sub(&i)
                .unwrap()
                .max_abs()
                < 1e-9
        );
    }

    #[test]
    fn noiseless_rank_one_loadings_recover_span() {
        let sim = simulate(&design(1, 1, NoiseCase::None, 5)).unwrap();
        let (r, c) = fit_loadings(&sim.series, 1, 1, &LagParams::default()).unwrap();
        for (est, truth) in [(&r, &sim.row_loadings), (&c, &sim.column_loadings)] {
            let t = truth.scale(1.0 / truth.frobenius_norm());
            let cos = matmul_tn(est, &t).unwrap()[(0, 0)].abs();
            // principal angle ≤ 1e-6
            assert!(cos >= (1e-6f64).cos(), "cos = {cos}");
        }
    }

    #[test]
    fn cv_noiseless_and_full_rank() {
        let s = simulate(&design(1, 1, NoiseCase::None, 6)).unwrap().series;
        let p = LagParams::default();
        assert!(cv_rss(&s, 1, 1, 5, &p, RssNorm::Frobenius).unwrap() <= 1e-8);
        let s = simulate(&design(2, 2, NoiseCase::Identity, 6))
            .unwrap()
            .series;
        assert_eq!(cv_rss(&s, 10, 10, 5, &p, RssNorm::Frobenius).unwrap(), 0.0);
        assert_eq!(cv_rss(&s, 10, 10, 5, &p, RssNorm::Squared).unwrap(), 0.0);
    }

    #[test]
    fn cv_rejects_bad_folds() {
        let s = simulate(&design(1, 1, NoiseCase::Identity, 7))
            .unwrap()
            .series;
        let p = LagParams::default();
        assert!(matches!(
            cv_rss(&s, 1, 1, 1, &p, RssNorm::Frobenius),
            Err(Error::Config { field: "folds", .. })
        ));
        assert!(cv_rss(&s, 1, 1, 51, &p, RssNorm::Frobenius).is_err());
    }

    #[test]
    fn cv_grid_best_picks_minimum() {
        let s = simulate(&design(2, 2, NoiseCase::Identity, 8))
            .unwrap()
            .series;
        let rep = cv_grid(
            &s,
            &[(1, 1), (2, 2), (1, 2)],
            5,
            &LagParams::default(),
            RssNorm::Frobenius,
        )
        .unwrap();
        let best = rep.best().unwrap();
        assert!(rep
            .entries
            .iter()
            .all(|e| best.rss <= e.rss && e.rss >= 0.0));
        assert_eq!((best.r, best.c), (2, 2));
    }
}
