//! Factor-count estimation for `Y_t = R F_t Cᵀ + E_t`.
//!
//! Each side (row or column) is handled the same way:
//!
//! 1. lagged sample autocovariances `Σ̂(h)`, `h = 1..H`;
//! 2. `M = Σ_{h ≤ h0} Σ̂(h)ᵀ Σ̂(h)` and its eigendecomposition `M = V Λ Vᵀ`;
//! 3. whiteness statistics of the series projected on the trailing
//!    eigenvectors `v_i, …, v_dim`: the max-type `T̂_i` and sum-type `Ĝ_i`;
//! 4. ratio estimators: `MR` (argmax `T̂_i / T̂_{i+1}`), `SR` (argmax of
//!    successive differences of `Ĝ`) and the eigenvalue-ratio `ER` baseline.
//!
//! The two-step variant first projects the series onto the leading
//! eigenvectors of the opposite side's `M` and then repeats steps 1–4 on the
//! projected series. Positive normalizing constants are dropped everywhere:
//! every estimator is a ratio in which they cancel.
//!
//! The row side of `Y` is computed as the column side of the transposed
//! series, so transposing every frame swaps the row and column results
//! exactly.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eig_sym, gemm_tn_acc, matmul, matmul_tn, EigenDecomposition, Matrix};
use crate::series::MatrixSeries;

/// Curve values at or below this fraction of the curve's leading value are
/// treated as exact zeros by the ratio estimators.
pub const NUMERICAL_ZERO_REL: f64 = 1e-10;

const ORTHONORMAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    #[serde(rename = "row")]
    Row,
    #[serde(rename = "column")]
    Column,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Row, Side::Column];
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Row => "row",
            Side::Column => "column",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "one-step")]
    OneStep,
    #[serde(rename = "two-step")]
    TwoStep,
}

impl Mode {
    pub const BOTH: [Mode; 2] = [Mode::OneStep, Mode::TwoStep];
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::OneStep => "one-step",
            Mode::TwoStep => "two-step",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "one-step" | "onestep" | "one_step" => Ok(Mode::OneStep),
            "two-step" | "twostep" | "two_step" => Ok(Mode::TwoStep),
            other => Err(Error::config("mode", format!("unknown mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "ER")]
    Er,
    #[serde(rename = "MR")]
    Mr,
    #[serde(rename = "SR")]
    Sr,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Er, Method::Mr, Method::Sr];
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Er => "ER",
            Method::Mr => "MR",
            Method::Sr => "SR",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "ER" => Ok(Method::Er),
            "MR" => Ok(Method::Mr),
            "SR" => Ok(Method::Sr),
            other => Err(Error::config(
                "methods",
                format!("unknown method `{other}`"),
            )),
        }
    }
}

fn default_h0() -> usize {
    2
}

fn default_k() -> usize {
    3
}

/// Lag horizons and the ratio search bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LagParams {
    /// Number of lags summed into the M-matrices.
    #[serde(default = "default_h0")]
    pub h0: usize,
    /// Number of lags in the whiteness statistics.
    #[serde(default = "default_k", rename = "K")]
    pub k: usize,
    /// Upper end of the ratio search; `None` means `floor(dim/2)`.
    #[serde(default)]
    pub i_max: Option<usize>,
}

impl Default for LagParams {
    fn default() -> Self {
        Self {
            h0: default_h0(),
            k: default_k(),
            i_max: None,
        }
    }
}

impl LagParams {
    pub fn validate(&self) -> Result<()> {
        if self.h0 == 0 {
            return Err(Error::config("h0", "must be at least 1"));
        }
        if self.k == 0 {
            return Err(Error::config("K", "must be at least 1"));
        }
        if self.i_max == Some(0) {
            return Err(Error::config("i_max", "must be at least 1"));
        }
        Ok(())
    }

    /// Autocovariance depth shared by the M-matrix and the whiteness statistics.
    pub fn depth(&self) -> usize {
        self.h0.max(self.k)
    }

    /// Ratio search bound for a side of dimension `dim`.
    ///
    /// The default `floor(dim/2)` is clamped into `[1, dim − 2]`; an explicit
    /// bound outside that range is an error.
    pub fn search_bound(&self, dim: usize) -> Result<usize> {
        if dim < 3 {
            return Err(Error::Validation(format!(
                "dimension {dim} is too small: the ratio estimators need at least 3"
            )));
        }
        match self.i_max {
            Some(i) if i == 0 || i > dim - 2 => Err(Error::config(
                "i_max",
                format!(
                    "need 1 <= i_max <= {} for dimension {dim}, got {i}",
                    dim - 2
                ),
            )),
            Some(i) => Ok(i),
            None => Ok((dim / 2).clamp(1, dim - 2)),
        }
    }
}

/// Sample lagged autocovariances `Σ̂(1), …, Σ̂(H)` for one side.
#[derive(Debug, Clone, PartialEq)]
pub struct AutocovStack {
    side: Side,
    lags: Vec<Matrix>,
    n: usize,
}

impl AutocovStack {
    /// Autocovariances of lags `1..=depth` over the whole series.
    pub fn build(series: &MatrixSeries, side: Side, depth: usize) -> Result<Self> {
        Self::from_segments(series, std::slice::from_ref(&(0..series.n())), side, depth)
    }

    /// Autocovariances pooled over disjoint time segments. Pairs `(t, t + h)`
    /// are only formed inside a segment, and each lag is divided by its total
    /// number of pairs.
    pub fn from_segments(
        series: &MatrixSeries,
        segments: &[Range<usize>],
        side: Side,
        depth: usize,
    ) -> Result<Self> {
        if depth == 0 {
            return Err(Error::Validation(
                "autocovariance depth must be at least 1".into(),
            ));
        }
        let n: usize = segments.iter().map(|s| s.len()).sum();
        for s in segments {
            if s.end > series.n() {
                return Err(Error::Validation(format!(
                    "segment {s:?} exceeds series length {}",
                    series.n()
                )));
            }
        }
        let longest = segments.iter().map(|s| s.len()).max().unwrap_or(0);
        if depth + 2 > longest {
            return Err(Error::InsufficientSample(format!(
                "lag {depth} needs a segment of at least {} observations, longest has {longest}",
                depth + 2
            )));
        }
        let transposed;
        let frames = match side {
            Side::Column => series.frames(),
            Side::Row => {
                transposed = series.transposed();
                transposed.frames()
            }
        };
        let lags = lagged_cross_products(frames, segments, depth);
        Ok(Self { side, lags, n })
    }

    /// Wraps precomputed lag matrices `[Σ̂(1), …, Σ̂(H)]`.
    pub fn from_lags(side: Side, lags: Vec<Matrix>, n: usize) -> Result<Self> {
        let dim = lags.first().map(Matrix::rows).ok_or_else(|| {
            Error::Validation("autocovariance stack needs at least one lag".into())
        })?;
        if let Some(bad) = lags.iter().find(|m| m.shape() != (dim, dim)) {
            return Err(Error::Shape {
                op: "AutocovStack::from_lags",
                left: (dim, dim),
                right: bad.shape(),
            });
        }
        Ok(Self { side, lags, n })
    }

    pub fn side(&self) -> Side {
        self.side
    }

    /// Number of observations behind the stack.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.lags[0].rows()
    }

    pub fn depth(&self) -> usize {
        self.lags.len()
    }

    /// `Σ̂(h)` for `1 ≤ h ≤ depth`.
    pub fn lag(&self, h: usize) -> &Matrix {
        &self.lags[h - 1]
    }

    pub fn lags(&self) -> &[Matrix] {
        &self.lags
    }
}

/// `Σ_t A_tᵀ A_{t+h} / (#pairs)` for every `h = 1..=depth`, pairs restricted to segments.
fn lagged_cross_products(
    frames: &[Matrix],
    segments: &[Range<usize>],
    depth: usize,
) -> Vec<Matrix> {
    let (rows, dim) = frames[0].shape();
    let mut sums = vec![vec![0.0; dim * dim]; depth];
    let mut counts = vec![0usize; depth];
    for seg in segments {
        for t in seg.clone() {
            let a = frames[t].as_slice();
            for h in 1..=depth {
                if t + h >= seg.end {
                    break;
                }
                let b = frames[t + h].as_slice();
                gemm_tn_acc(a, b, &mut sums[h - 1], rows, dim, dim);
                counts[h - 1] += 1;
            }
        }
    }
    sums.into_iter()
        .zip(counts)
        .map(|(s, count)| {
            let inv = 1.0 / count as f64;
            let mut m = Matrix::new(dim, dim, s).expect("finite autocovariance");
            m.as_mut_slice().iter_mut().for_each(|v| *v *= inv);
            m
        })
        .collect()
}

/// Sample autocovariance at lag `h`: `(1/(n−h)) Σ_{t ≤ n−h} Y_t Y_{t+h}ᵀ` for the
/// row side (`p × p`) or `Y_tᵀ Y_{t+h}` for the column side (`q × q`).
pub fn autocov(series: &MatrixSeries, h: usize, side: Side) -> Result<Matrix> {
    if h == 0 {
        return Err(Error::Validation("lag must be at least 1".into()));
    }
    if h + 2 > series.n() {
        return Err(Error::InsufficientSample(format!(
            "lag {h} needs n >= {}, series has {}",
            h + 2,
            series.n()
        )));
    }
    let stack = AutocovStack::build(series, side, h)?;
    Ok(stack.lags[h - 1].clone())
}

/// `Σ_{h=1}^{h0} Σ̂(h)ᵀ Σ̂(h)`, symmetric PSD.
pub fn m_matrix(stack: &AutocovStack, h0: usize) -> Result<Matrix> {
    if h0 == 0 || h0 > stack.depth() {
        return Err(Error::Validation(format!(
            "h0 = {h0} outside the stack depth 1..={}",
            stack.depth()
        )));
    }
    let dim = stack.dim();
    let mut m = Matrix::zeros(dim, dim);
    for s in &stack.lags[..h0] {
        m.add_assign(&matmul_tn(s, s)?)?;
    }
    Ok(m)
}

fn check_orthonormal(basis: &Matrix) -> Result<()> {
    let gram = matmul_tn(basis, basis)?;
    let dev = gram.sub(&Matrix::identity(basis.cols()))?.max_abs();
    if dev > ORTHONORMAL_TOL {
        return Err(Error::Validation(format!(
            "projection basis columns are not orthonormal (max |BᵀB − I| = {dev:e})"
        )));
    }
    Ok(())
}

/// Right-multiplies every frame by `basis` (`q × m`, orthonormal columns).
pub fn project_columns(series: &MatrixSeries, basis: &Matrix) -> Result<MatrixSeries> {
    if basis.rows() != series.q() {
        return Err(Error::Shape {
            op: "project_columns",
            left: (series.p(), series.q()),
            right: basis.shape(),
        });
    }
    check_orthonormal(basis)?;
    let frames = series
        .frames()
        .iter()
        .map(|f| matmul(f, basis))
        .collect::<Result<Vec<_>>>()?;
    Ok(MatrixSeries::from_frames_unchecked(
        series.p(),
        basis.cols(),
        frames,
    ))
}

/// Left-multiplies every frame by `basisᵀ` (`basis` is `p × m`, orthonormal columns).
pub fn project_rows(series: &MatrixSeries, basis: &Matrix) -> Result<MatrixSeries> {
    if basis.rows() != series.p() {
        return Err(Error::Shape {
            op: "project_rows",
            left: (series.p(), series.q()),
            right: basis.shape(),
        });
    }
    check_orthonormal(basis)?;
    let frames = series
        .frames()
        .iter()
        .map(|f| matmul_tn(basis, f))
        .collect::<Result<Vec<_>>>()?;
    Ok(MatrixSeries::from_frames_unchecked(
        basis.cols(),
        series.q(),
        frames,
    ))
}

/// Max-type and sum-type whiteness statistics for `i = 1..dim` (index 0 ↔ `i = 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct WhitenessCurves {
    /// `T̂_i = max_h √n · max |trailing block of A(h)|`.
    pub t_curve: Vec<f64>,
    /// `Ĝ_i = Σ_h ‖trailing block of A(h)‖_F²`.
    pub g_curve: Vec<f64>,
}

impl WhitenessCurves {
    pub fn len(&self) -> usize {
        self.t_curve.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t_curve.is_empty()
    }
}

/// Whiteness statistics of the series projected on trailing eigenvectors.
///
/// With `V` the eigenvectors in `basis`, `A(h) = Vᵀ Σ̂(h) V` is formed once per
/// lag. The autocovariance of the projection on `(v_i, …, v_dim)` is the
/// trailing block `A(h)[i.., i..]`, so both curves come from one suffix scan
/// over the L-shaped bands `{(a, b) : min(a, b) = i}`.
pub fn whiteness_curves(
    stack: &AutocovStack,
    basis: &EigenDecomposition,
    k: usize,
    n: usize,
) -> Result<WhitenessCurves> {
    let dim = stack.dim();
    if k == 0 || k > stack.depth() {
        return Err(Error::Validation(format!(
            "K = {k} outside the stack depth 1..={}",
            stack.depth()
        )));
    }
    if basis.vectors.shape() != (dim, dim) {
        return Err(Error::Shape {
            op: "whiteness_curves",
            left: (dim, dim),
            right: basis.vectors.shape(),
        });
    }
    let root_n = (n as f64).sqrt();
    let v = &basis.vectors;
    let mut t_curve = vec![0.0_f64; dim];
    let mut g_curve = vec![0.0_f64; dim];
    for s in &stack.lags[..k] {
        let a = matmul(&matmul_tn(v, s)?, v)?;
        let mut run_max = 0.0_f64;
        let mut run_sum = 0.0_f64;
        for i in (0..dim).rev() {
            let mut band_max = 0.0_f64;
            let mut band_sum = 0.0_f64;
            for &x in &a.row(i)[i..] {
                band_max = band_max.max(x.abs());
                band_sum += x * x;
            }
            for row in (i + 1)..dim {
                let x = a[(row, i)];
                band_max = band_max.max(x.abs());
                band_sum += x * x;
            }
            run_max = run_max.max(band_max);
            run_sum += band_sum;
            t_curve[i] = t_curve[i].max(root_n * run_max);
            g_curve[i] += run_sum;
        }
    }
    Ok(WhitenessCurves { t_curve, g_curve })
}

/// The chosen index and the ratio curve it maximizes (index 0 ↔ `i = 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct RatioEstimate {
    pub estimate: usize,
    pub ratios: Vec<f64>,
}

/// `x/0 = +∞` for `x > 0` and `0/0 = 1`; inputs are non-negative.
#[inline]
fn guarded_ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else if num > 0.0 {
        f64::INFINITY
    } else {
        1.0
    }
}

/// Clamps negatives to zero and flushes values at or below
/// `NUMERICAL_ZERO_REL × curve[0]` to exact zeros.
fn flush_to_zero(curve: &[f64]) -> Vec<f64> {
    let lead = curve.first().copied().unwrap_or(0.0).max(0.0);
    let floor = NUMERICAL_ZERO_REL * lead;
    curve
        .iter()
        .map(|&x| if x <= floor { 0.0 } else { x })
        .collect()
}

/// First index of the maximum; ties go to the smallest index.
fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn check_curve(name: &str, len: usize, i_max: usize, reach: usize) -> Result<()> {
    if len == 0 {
        return Err(Error::Validation(format!("{name}: empty curve")));
    }
    if i_max == 0 || i_max + reach > len {
        return Err(Error::Validation(format!(
            "{name}: search bound {i_max} needs 1 <= i_max <= {}",
            len.saturating_sub(reach)
        )));
    }
    Ok(())
}

/// Ratio of successive values: argmax over `i ≤ i_max` of `x_i / x_{i+1}`.
fn successive_ratio(curve: &[f64], i_max: usize) -> RatioEstimate {
    let x = flush_to_zero(curve);
    let ratios: Vec<f64> = (0..i_max).map(|i| guarded_ratio(x[i], x[i + 1])).collect();
    RatioEstimate {
        estimate: argmax_first(&ratios) + 1,
        ratios,
    }
}

/// Max-type ratio estimator: argmax `T̂_i / T̂_{i+1}`.
pub fn mr_estimator(t_curve: &[f64], i_max: usize) -> Result<RatioEstimate> {
    check_curve("MR", t_curve.len(), i_max, 1)?;
    Ok(successive_ratio(t_curve, i_max))
}

/// Sum-type ratio estimator: argmax `(Ĝ_i − Ĝ_{i+1}) / (Ĝ_{i+1} − Ĝ_{i+2})`.
pub fn sr_estimator(g_curve: &[f64], i_max: usize) -> Result<RatioEstimate> {
    check_curve("SR", g_curve.len(), i_max, 2)?;
    let g = flush_to_zero(g_curve);
    let diff: Vec<f64> = g.windows(2).map(|w| (w[0] - w[1]).max(0.0)).collect();
    let ratios: Vec<f64> = (0..i_max)
        .map(|i| guarded_ratio(diff[i], diff[i + 1]))
        .collect();
    Ok(RatioEstimate {
        estimate: argmax_first(&ratios) + 1,
        ratios,
    })
}

/// Eigenvalue-ratio estimator: argmax `λ̂_i / λ̂_{i+1}` on the descending spectrum.
pub fn er_estimator(eigenvalues: &[f64], i_max: usize) -> Result<RatioEstimate> {
    check_curve("ER", eigenvalues.len(), i_max, 1)?;
    Ok(successive_ratio(eigenvalues, i_max))
}

/// One estimator's answer for one side and mode.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorCountResult {
    pub method: Method,
    pub mode: Mode,
    pub side: Side,
    pub estimate: usize,
    /// Ratio values for `i = 1..=i_max` (index 0 ↔ `i = 1`).
    pub ratio_curve: Vec<f64>,
}

/// Everything computed for one side in one mode.
#[derive(Debug, Clone)]
pub struct SideAnalysis {
    pub side: Side,
    pub mode: Mode,
    pub i_max: usize,
    /// Eigendecomposition of the side's M-matrix.
    pub spectrum: EigenDecomposition,
    pub curves: WhitenessCurves,
    pub er: FactorCountResult,
    pub mr: FactorCountResult,
    pub sr: FactorCountResult,
}

impl SideAnalysis {
    pub fn dim(&self) -> usize {
        self.spectrum.dim()
    }

    pub fn result(&self, method: Method) -> &FactorCountResult {
        match method {
            Method::Er => &self.er,
            Method::Mr => &self.mr,
            Method::Sr => &self.sr,
        }
    }
}

/// Row and column analyses for one mode.
#[derive(Debug, Clone)]
pub struct Estimate {
    pub mode: Mode,
    pub row: SideAnalysis,
    pub column: SideAnalysis,
}

impl Estimate {
    pub fn side(&self, side: Side) -> &SideAnalysis {
        match side {
            Side::Row => &self.row,
            Side::Column => &self.column,
        }
    }

    /// `(r̂, ĉ)` for one method.
    pub fn counts(&self, method: Method) -> (usize, usize) {
        (
            self.row.result(method).estimate,
            self.column.result(method).estimate,
        )
    }
}

/// Column-side analysis of `series` (the row side is obtained by transposing).
fn analyse_columns(
    series: &MatrixSeries,
    params: &LagParams,
    side: Side,
    mode: Mode,
) -> Result<SideAnalysis> {
    let stack = AutocovStack::build(series, Side::Column, params.depth())?;
    analyse_stack(&stack, params, side, mode)
}

fn analyse_stack(
    stack: &AutocovStack,
    params: &LagParams,
    side: Side,
    mode: Mode,
) -> Result<SideAnalysis> {
    let i_max = params.search_bound(stack.dim())?;
    let m = m_matrix(stack, params.h0)?;
    let spectrum = eig_sym(&m)?;
    let curves = whiteness_curves(stack, &spectrum, params.k, stack.n())?;
    let wrap = |method, r: RatioEstimate| FactorCountResult {
        method,
        mode,
        side,
        estimate: r.estimate,
        ratio_curve: r.ratios,
    };
    let er = wrap(Method::Er, er_estimator(&spectrum.values, i_max)?);
    let mr = wrap(Method::Mr, mr_estimator(&curves.t_curve, i_max)?);
    let sr = wrap(Method::Sr, sr_estimator(&curves.g_curve, i_max)?);
    Ok(SideAnalysis {
        side,
        mode,
        i_max,
        spectrum,
        curves,
        er,
        mr,
        sr,
    })
}

fn check_sample(series: &MatrixSeries, params: &LagParams) -> Result<()> {
    params.validate()?;
    if series.n() <= params.depth() + 2 {
        return Err(Error::InsufficientSample(format!(
            "need n > {}, series has {}",
            params.depth() + 2,
            series.n()
        )));
    }
    Ok(())
}

/// Projection widths `(m for the column basis, m for the row basis)`.
fn projection_widths(series: &MatrixSeries, m: Option<usize>) -> Result<(usize, usize)> {
    let (p, q) = (series.p(), series.q());
    match m {
        Some(m) if m == 0 || m > p.min(q) => Err(Error::config(
            "m",
            format!("need 1 <= m <= min(p, q) = {}, got {m}", p.min(q)),
        )),
        Some(m) => Ok((m, m)),
        None => Ok(((q / 2).max(1), (p / 2).max(1))),
    }
}

/// Estimates on the raw series: `M̂₁`, `M̂₂` and their whiteness curves.
pub fn estimate_one_step(series: &MatrixSeries, params: &LagParams) -> Result<Estimate> {
    check_sample(series, params)?;
    let row = analyse_columns(&series.transposed(), params, Side::Row, Mode::OneStep)?;
    let column = analyse_columns(series, params, Side::Column, Mode::OneStep)?;
    Ok(Estimate {
        mode: Mode::OneStep,
        row,
        column,
    })
}

/// Two-step estimates. `m` is the projection width on both sides; `None`
/// uses `floor(q/2)` columns for the row side and `floor(p/2)` rows for the
/// column side.
pub fn estimate_two_step(
    series: &MatrixSeries,
    params: &LagParams,
    m: Option<usize>,
) -> Result<Estimate> {
    Ok(estimate_both(series, params, m)?.1)
}

/// One-step and two-step estimates, sharing the one-step work.
pub fn estimate_both(
    series: &MatrixSeries,
    params: &LagParams,
    m: Option<usize>,
) -> Result<(Estimate, Estimate)> {
    let one = estimate_one_step(series, params)?;
    let (m_col, m_row) = projection_widths(series, m)?;
    let col_basis = one.column.spectrum.leading_vectors(m_col);
    let row_basis = one.row.spectrum.leading_vectors(m_row);

    // Row side: X_t = Y_t·C̃, analysed as the column side of X_tᵀ = C̃ᵀ·Y_tᵀ.
    let xt = project_rows(&series.transposed(), &col_basis)?;
    let row = analyse_columns(&xt, params, Side::Row, Mode::TwoStep)?;
    // Column side: Z_t = R̃ᵀ·Y_t.
    let z = project_rows(series, &row_basis)?;
    let column = analyse_columns(&z, params, Side::Column, Mode::TwoStep)?;
    Ok((
        one,
        Estimate {
            mode: Mode::TwoStep,
            row,
            column,
        },
    ))
}

/// Estimates in the requested mode.
pub fn estimate(
    series: &MatrixSeries,
    params: &LagParams,
    mode: Mode,
    m: Option<usize>,
) -> Result<Estimate> {
    match mode {
        Mode::OneStep => estimate_one_step(series, params),
        Mode::TwoStep => estimate_two_step(series, params, m),
    }
}
