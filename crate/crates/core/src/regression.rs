//! Ordinary least squares via Householder QR, and the attribution dataset
//! that regresses relative portfolio performance on diversity and excess
//! growth.

use serde::{Deserialize, Serialize};

use crate::backtest::{Frequency, GridRow};
use crate::error::{Error, Result};
use crate::macrostats::{self, Weighting};
use crate::market_data::MarketPanel;

/// Relative size below which a Householder pivot marks a column as linearly
/// dependent on the ones before it.
const RANK_TOL: f64 = 1e-10;

/// Row-major design matrix with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    rows: Vec<Vec<f64>>,
    names: Vec<String>,
}

impl DesignMatrix {
    pub fn new(rows: Vec<Vec<f64>>, names: Vec<String>) -> Result<Self> {
        if rows.iter().any(|r| r.len() != names.len()) {
            return Err(Error::invalid("every design row needs one value per column"));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("design matrix has non-finite entries"));
        }
        Ok(Self { rows, names })
    }

    /// Prepends an `intercept` column of ones to the given regressor columns.
    pub fn with_intercept(columns: &[&[f64]], names: &[&str]) -> Result<Self> {
        if columns.len() != names.len() {
            return Err(Error::invalid("one name per column"));
        }
        let n = columns.first().map_or(0, |c| c.len());
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::invalid("columns differ in length"));
        }
        let rows = (0..n)
            .map(|i| std::iter::once(1.0).chain(columns.iter().map(|c| c[i])).collect())
            .collect();
        let names = std::iter::once("intercept".to_string())
            .chain(names.iter().map(|s| s.to_string()))
            .collect();
        Self::new(rows, names)
    }

    /// Intercept-only design with `n` rows.
    pub fn intercept_only(n: usize) -> Self {
        Self {
            rows: vec![vec![1.0]; n],
            names: vec!["intercept".into()],
        }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsResult {
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    /// Set when `y` has zero variance; both R² values are then 0.
    pub r_squared_undefined: bool,
    pub n: usize,
    pub k: usize,
    pub residuals: Vec<f64>,
}

impl OlsResult {
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|j| self.coefficients[j])
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Least squares `min |y - X b|` by Householder QR.
pub fn ols_fit(y: &[f64], x: &DesignMatrix) -> Result<OlsResult> {
    let n = x.n_rows();
    let k = x.n_cols();
    if y.len() != n {
        return Err(Error::invalid(format!("y has {} rows, X has {n}", y.len())));
    }
    if k == 0 || n <= k {
        return Err(Error::invalid(format!("need more rows than columns (n={n}, k={k})")));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("y has non-finite entries"));
    }

    // a[j] is column j; reflections are applied in place, r[j][j..] kept on top.
    let mut a: Vec<Vec<f64>> = (0..k).map(|j| x.column(j)).collect();
    let col_norms: Vec<f64> = a.iter().map(|c| dot(c, c).sqrt()).collect();
    let mut qty = y.to_vec();
    let mut dependent = Vec::new();
    for j in 0..k {
        let norm = dot(&a[j][j..], &a[j][j..]).sqrt();
        if norm <= RANK_TOL * col_norms[j].max(f64::MIN_POSITIVE) {
            dependent.push(j);
            continue;
        }
        let alpha = if a[j][j] > 0.0 { -norm } else { norm };
        let mut v = a[j][j..].to_vec();
        v[0] -= alpha;
        let vv = dot(&v, &v);
        for col in a.iter_mut().skip(j) {
            let s = 2.0 * dot(&v, &col[j..]) / vv;
            for (c, vi) in col[j..].iter_mut().zip(&v) {
                *c -= s * vi;
            }
        }
        let s = 2.0 * dot(&v, &qty[j..]) / vv;
        for (c, vi) in qty[j..].iter_mut().zip(&v) {
            *c -= s * vi;
        }
    }
    if !dependent.is_empty() {
        return Err(Error::RankDeficient { columns: dependent });
    }

    let r = |i: usize, j: usize| a[j][i];
    let mut beta = vec![0.0; k];
    for i in (0..k).rev() {
        let s: f64 = (i + 1..k).map(|j| r(i, j) * beta[j]).sum();
        beta[i] = (qty[i] - s) / r(i, i);
    }

    // rinv is upper triangular with R rinv = I.
    let mut rinv = vec![vec![0.0; k]; k];
    for c in 0..k {
        for i in (0..=c).rev() {
            let rhs = if i == c { 1.0 } else { 0.0 };
            let s: f64 = (i + 1..=c).map(|j| r(i, j) * rinv[j][c]).sum();
            rinv[i][c] = (rhs - s) / r(i, i);
        }
    }

    let residuals: Vec<f64> = x
        .rows()
        .iter()
        .zip(y)
        .map(|(row, yi)| yi - dot(row, &beta))
        .collect();
    let rss = dot(&residuals, &residuals);
    let sigma2 = rss / (n - k) as f64;
    let std_errors = (0..k)
        .map(|i| (sigma2 * rinv[i].iter().map(|v| v * v).sum::<f64>()).sqrt())
        .collect();

    let y_mean = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - y_mean).powi(2)).sum();
    let (r_squared, adj_r_squared, r_squared_undefined) = if tss == 0.0 {
        (0.0, 0.0, true)
    } else {
        let r2 = 1.0 - rss / tss;
        (r2, 1.0 - (1.0 - r2) * (n - 1) as f64 / (n - k) as f64, false)
    };
    Ok(OlsResult {
        names: x.names().to_vec(),
        coefficients: beta,
        std_errors,
        r_squared,
        adj_r_squared,
        r_squared_undefined,
        n,
        k,
        residuals,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionRow {
    pub window_start: usize,
    pub window_end: usize,
    /// `log(Z_{p,f} / Z_{1,f})` at window end.
    pub rel_log_return: f64,
    /// Change in the log of top-`K` entropy.
    pub delta_log_entropy: f64,
    /// Cap-weighted cumulative excess growth over the window, daily grid.
    pub delta_gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionDataset {
    pub p: f64,
    pub f: Frequency,
    pub k: usize,
    pub rows: Vec<AttributionRow>,
}

pub const ATTRIBUTION_COLUMNS: [&str; 2] = ["delta_log_entropy", "delta_gamma"];

impl AttributionDataset {
    pub fn fit(&self) -> Result<OlsResult> {
        let y: Vec<f64> = self.rows.iter().map(|r| r.rel_log_return).collect();
        let h: Vec<f64> = self.rows.iter().map(|r| r.delta_log_entropy).collect();
        let g: Vec<f64> = self.rows.iter().map(|r| r.delta_gamma).collect();
        ols_fit(&y, &DesignMatrix::with_intercept(&[&h, &g], &ATTRIBUTION_COLUMNS)?)
    }
}

/// Joins the `(p, f)` rows with their `(1, f)` benchmarks window by window
/// and attaches entropy and excess-growth changes of the top-`K` market.
pub fn build_attribution_dataset(
    panel: &MarketPanel,
    results: &[GridRow],
    p: f64,
    f: Frequency,
    k: usize,
) -> Result<AttributionDataset> {
    let mut windows: Vec<(usize, usize)> = results
        .iter()
        .filter(|r| r.f == f && (r.p == p || r.p == 1.0))
        .map(|r| (r.window_start, r.window_end))
        .collect();
    windows.sort_unstable();
    windows.dedup();
    if windows.is_empty() {
        return Err(Error::invalid(format!("no results for p={p}, f={f}")));
    }
    let find = |w: (usize, usize), q: f64| {
        results
            .iter()
            .find(|r| r.f == f && r.p == q && (r.window_start, r.window_end) == w)
    };
    let mut rows = Vec::with_capacity(windows.len());
    for w in windows {
        let bench = find(w, 1.0).ok_or_else(|| Error::BenchmarkMissing {
            f: f.to_string(),
            window_start: w.0,
            window_end: w.1,
        })?;
        let run = find(w, p).ok_or(Error::MissingWindow(w.0, w.1))?;
        if w.1 >= panel.n_days() || w.0 >= w.1 {
            return Err(Error::MissingWindow(w.0, w.1));
        }
        let h0 = macrostats::top_k_entropy(panel, w.0, k)?;
        let h1 = macrostats::top_k_entropy(panel, w.1, k)?;
        if !(h0 > 0.0 && h1 > 0.0) {
            return Err(Error::invalid("top-K entropy is zero; log change undefined"));
        }
        let gamma = macrostats::cumulative_egr_between(panel, k, 1, Weighting::Cap, w.0, w.1)?;
        rows.push(AttributionRow {
            window_start: w.0,
            window_end: w.1,
            rel_log_return: (run.final_wealth / bench.final_wealth).ln(),
            delta_log_entropy: h1.ln() - h0.ln(),
            delta_gamma: gamma.total(),
        });
    }
    Ok(AttributionDataset { p, f, k, rows })
}
