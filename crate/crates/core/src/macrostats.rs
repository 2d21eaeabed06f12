//! Capital distribution, market diversity and excess growth rates.
//!
//! All logarithms are natural except in capital-distribution curve points,
//! which are base 10 for plotting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market_data::{MarketPanel, Universe};
use crate::stats::{self, BinnedMean};
use crate::synthetic::NormalSource;

/// Ranked weights `mu_(1) >= mu_(2) >= ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct CapitalDistribution {
    weights: Vec<f64>,
}

impl CapitalDistribution {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `(log10 k, log10 mu_(k))` for `k = 1..m`.
    pub fn curve_points(&self) -> Vec<(f64, f64)> {
        self.weights
            .iter()
            .enumerate()
            .map(|(k, w)| (((k + 1) as f64).log10(), w.log10()))
            .collect()
    }
}

pub fn capital_distribution(weights: &[f64]) -> CapitalDistribution {
    let mut w = weights.to_vec();
    w.sort_by(|a, b| b.total_cmp(a));
    CapitalDistribution { weights: w }
}

/// `-sum mu ln mu`, with `0 ln 0 = 0`.
pub fn shannon_entropy(weights: &[f64]) -> f64 {
    -weights
        .iter()
        .filter(|w| **w > 0.0)
        .map(|w| w * w.ln())
        .sum::<f64>()
}

/// `(sum mu^p)^(1/p)` for `p` in `(0, 1]`.
pub fn diversity_p(weights: &[f64], p: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::invalid(format!("diversity exponent p={p} outside (0, 1]")));
    }
    if p == 1.0 {
        return Ok(weights.iter().sum());
    }
    Ok(weights.iter().map(|w| w.powf(p)).sum::<f64>().powf(1.0 / p))
}

fn check_pair(w: &[f64], r: &[f64]) -> Result<f64> {
    if w.len() != r.len() {
        return Err(Error::invalid("weights and returns differ in length"));
    }
    if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::invalid("weights must be finite and nonnegative"));
    }
    let total: f64 = w.iter().sum();
    if total <= 0.0 {
        return Err(Error::invalid("weights sum to zero"));
    }
    for (i, (wi, ri)) in w.iter().zip(r).enumerate() {
        if *wi > 0.0 {
            if *ri == f64::NEG_INFINITY {
                return Err(Error::TotalLoss { index: i });
            }
            if !ri.is_finite() {
                return Err(Error::invalid(format!("return {i} is not finite")));
            }
        }
    }
    Ok(total)
}

/// Excess growth rate `log(sum w e^r) - sum w r`.
///
/// Weights are normalized by their sum; constituents with zero weight are
/// ignored. The log-sum-exp is shifted by the largest supported return. The
/// result is clamped at zero against rounding.
pub fn excess_growth_rate(w: &[f64], r: &[f64]) -> Result<f64> {
    let total = check_pair(w, r)?;
    let support = || w.iter().zip(r).filter(|(wi, _)| **wi > 0.0);
    let shift = support().map(|(_, ri)| *ri).fold(f64::NEG_INFINITY, f64::max);
    let (mut lse, mut avg) = (0.0, 0.0);
    for (wi, ri) in support() {
        let wi = wi / total;
        lse += wi * (ri - shift).exp();
        avg += wi * (ri - shift);
    }
    Ok((lse.ln() - avg).max(0.0))
}

/// Quadratic Taylor approximation `(sum w r^2 - (sum w r)^2) / 2`.
pub fn egr_quadratic_approx(w: &[f64], r: &[f64]) -> Result<f64> {
    let total = check_pair(w, r)?;
    let (mut m1, mut m2) = (0.0, 0.0);
    for (wi, ri) in w.iter().zip(r).filter(|(wi, _)| **wi > 0.0) {
        let wi = wi / total;
        m1 += wi * ri;
        m2 += wi * ri * ri;
    }
    Ok(0.5 * (m2 - m1 * m1))
}

/// Weights applied to the universe at the start of each period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "p")]
pub enum Weighting {
    Cap,
    Equal,
    /// Diversity weights `mu^p / sum mu^p` over the cap weights.
    Diversity(f64),
}

pub fn weights_for(panel: &MarketPanel, universe: &Universe, weighting: Weighting) -> Result<Vec<f64>> {
    match weighting {
        Weighting::Equal => {
            if universe.is_empty() {
                return Err(Error::invalid("empty universe"));
            }
            Ok(vec![1.0 / universe.len() as f64; universe.len()])
        }
        Weighting::Cap => Ok(panel.capitalization_weights(universe)?.weights),
        Weighting::Diversity(p) => {
            let mu = panel.capitalization_weights(universe)?;
            Ok(crate::backtest::diversity_weights(&mu, p)?.weights)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EgrSeries {
    pub grid: Vec<usize>,
    /// `per_period[l]` is the excess growth over `(grid[l-1], grid[l]]`;
    /// `per_period[0]` is 0.
    pub per_period: Vec<f64>,
    pub cumulative: Vec<f64>,
    pub weighting: Weighting,
    pub k: usize,
    pub dt: usize,
}

impl EgrSeries {
    pub fn total(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    /// Per-period values without the leading zero.
    pub fn periods(&self) -> &[f64] {
        &self.per_period[1..]
    }

    /// Cumulative value at grid point `t`, if `t` lies on the grid.
    pub fn at(&self, t: usize) -> Option<f64> {
        self.grid
            .binary_search(&t)
            .ok()
            .map(|l| self.cumulative[l])
    }
}

/// Excess growth of one period `[t0, t1]` on the top-`k` universe at `t0`.
/// Stocks absent at `t1` are dropped and the remaining weights renormalized.
pub fn period_egr(panel: &MarketPanel, k: usize, weighting: Weighting, t0: usize, t1: usize) -> Result<f64> {
    let universe = panel.top_k_universe(t0, k)?;
    let w = weights_for(panel, &universe, weighting)?;
    let mut ws = Vec::with_capacity(w.len());
    let mut rs = Vec::with_capacity(w.len());
    for (&i, wi) in universe.members.iter().zip(&w) {
        if let Some(r) = panel.log_return_between(i, t0, t1) {
            ws.push(*wi);
            rs.push(r);
        }
    }
    if ws.is_empty() {
        return Ok(0.0);
    }
    excess_growth_rate(&ws, &rs)
}

/// Cumulative excess growth on the grid `start, start + dt, ...` up to `end`.
pub fn cumulative_egr_between(
    panel: &MarketPanel,
    k: usize,
    dt: usize,
    weighting: Weighting,
    start: usize,
    end: usize,
) -> Result<EgrSeries> {
    if k < 1 {
        return Err(Error::invalid("K must be at least 1"));
    }
    if dt < 1 {
        return Err(Error::invalid("dt must be at least 1"));
    }
    if end >= panel.n_days() || start + dt > end {
        return Err(Error::invalid(format!(
            "range {start}..={end} cannot hold one period of {dt} days"
        )));
    }
    let grid: Vec<usize> = (start..=end).step_by(dt).collect();
    let mut per_period = vec![0.0];
    let mut cumulative = vec![0.0];
    for w in grid.windows(2) {
        let g = period_egr(panel, k, weighting, w[0], w[1])?;
        per_period.push(g);
        cumulative.push(cumulative.last().unwrap() + g);
    }
    Ok(EgrSeries {
        grid,
        per_period,
        cumulative,
        weighting,
        k,
        dt,
    })
}

pub fn cumulative_egr(panel: &MarketPanel, k: usize, dt: usize, weighting: Weighting) -> Result<EgrSeries> {
    cumulative_egr_between(panel, k, dt, weighting, 0, panel.n_days() - 1)
}

/// Entropy of top-`k` cap weights on day `t`.
pub fn top_k_entropy(panel: &MarketPanel, t: usize, k: usize) -> Result<f64> {
    let u = panel.top_k_universe(t, k)?;
    Ok(shannon_entropy(panel.capitalization_weights(&u)?.weights()))
}

pub fn top_k_entropy_path(panel: &MarketPanel, k: usize) -> Result<Vec<f64>> {
    (0..panel.n_days()).map(|t| top_k_entropy(panel, t, k)).collect()
}

/// Entropy of a fixed set of stocks, restricted to those still present.
pub fn cohort_entropy(panel: &MarketPanel, cohort: &[usize], t: usize) -> f64 {
    let caps: Vec<f64> = cohort.iter().filter_map(|&i| panel.cap(i, t)).collect();
    let total: f64 = caps.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let w: Vec<f64> = caps.iter().map(|c| c / total).collect();
    shannon_entropy(&w)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CohortPath {
    pub start: usize,
    pub end: usize,
    /// Entropy for `t = start..=end`.
    pub values: Vec<f64>,
}

impl CohortPath {
    /// Least-squares slope of entropy against the day ordinal.
    pub fn slope(&self) -> Option<f64> {
        let x: Vec<f64> = (self.start..=self.end).map(|t| t as f64).collect();
        stats::ls_slope(&x, &self.values)
    }
}

/// `s` roughly equal subintervals sharing endpoints.
pub fn subinterval_bounds(n_days: usize, s: usize) -> Result<Vec<(usize, usize)>> {
    let last = n_days.saturating_sub(1);
    if s == 0 || last < s {
        return Err(Error::invalid(format!("cannot split {n_days} days into {s} subintervals")));
    }
    Ok((0..s)
        .map(|j| (j * last / s, (j + 1) * last / s))
        .collect())
}

/// Entropy of the top-`k` stocks frozen at the start of each subinterval.
pub fn frozen_cohort_paths(panel: &MarketPanel, k: usize, subintervals: usize) -> Result<Vec<CohortPath>> {
    subinterval_bounds(panel.n_days(), subintervals)?
        .into_iter()
        .map(|(start, end)| {
            let cohort = panel.top_k_universe(start, k)?.members;
            Ok(CohortPath {
                start,
                end,
                values: (start..=end).map(|t| cohort_entropy(panel, &cohort, t)).collect(),
            })
        })
        .collect()
}

/// Entropy of `batches` random `k`-subsets of the top-`m` stocks per
/// subinterval. Returned as `[subinterval][batch]`.
pub fn random_cohort_paths(
    panel: &MarketPanel,
    k: usize,
    m: usize,
    subintervals: usize,
    batches: usize,
    seed: u64,
) -> Result<Vec<Vec<CohortPath>>> {
    let mut rng = NormalSource::new(seed);
    subinterval_bounds(panel.n_days(), subintervals)?
        .into_iter()
        .map(|(start, end)| {
            let pool = panel.top_k_universe(start, m.max(k))?.members;
            (0..batches)
                .map(|_| {
                    let mut pool = pool.clone();
                    let take = k.min(pool.len());
                    for j in 0..take {
                        let span = (pool.len() - j) as u64;
                        let pick = j + (rng.next_u64() % span) as usize;
                        pool.swap(j, pick);
                    }
                    pool.truncate(take);
                    Ok(CohortPath {
                        start,
                        end,
                        values: (start..=end).map(|t| cohort_entropy(panel, &pool, t)).collect(),
                    })
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsReport {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub acf: Vec<f64>,
    pub pearson: Option<f64>,
    pub winsorized_pearson: Option<f64>,
    pub winsor_q: f64,
    /// Set when a correlation was requested but a series is constant.
    pub correlation_undefined: bool,
}

/// Moments, autocorrelations and (optionally) plain and winsorized
/// correlation with a paired series. Skewness and kurtosis use central
/// moments with the `1/n` normalization.
pub fn series_stats(x: &[f64], max_lag: usize, winsor_q: f64, paired: Option<&[f64]>) -> Result<StatsReport> {
    if x.len() <= max_lag || x.len() < 2 {
        return Err(Error::invalid(format!(
            "series of length {} too short for {max_lag} lags",
            x.len()
        )));
    }
    if !(0.0..0.5).contains(&winsor_q) {
        return Err(Error::invalid("winsor_q must be in [0, 0.5)"));
    }
    let n = x.len() as f64;
    let mean = stats::mean(x);
    let central = |p: i32| x.iter().map(|v| (v - mean).powi(p)).sum::<f64>() / n;
    let (m2, m3, m4) = (central(2), central(3), central(4));
    let (skewness, excess_kurtosis) = if m2 > 0.0 {
        (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
    } else {
        (f64::NAN, f64::NAN)
    };
    let denom = m2 * n;
    let acf = (1..=max_lag)
        .map(|lag| {
            if denom == 0.0 {
                return f64::NAN;
            }
            let s: f64 = (0..x.len() - lag).map(|t| (x[t] - mean) * (x[t + lag] - mean)).sum();
            s / denom
        })
        .collect();

    let (pearson, winsorized_pearson, undefined) = match paired {
        None => (None, None, false),
        Some(y) => {
            if y.len() != x.len() {
                return Err(Error::invalid("paired series differs in length"));
            }
            let p = stats::pearson(x, y);
            let wp = stats::pearson(&stats::winsorize(x, winsor_q), &stats::winsorize(y, winsor_q));
            (p, wp, p.is_none() || wp.is_none())
        }
    };
    Ok(StatsReport {
        n: x.len(),
        mean,
        sd: stats::sample_sd(x),
        skewness,
        excess_kurtosis,
        acf,
        pearson,
        winsorized_pearson,
        winsor_q,
        correlation_undefined: undefined,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointRow {
    pub start: usize,
    pub end: usize,
    pub delta_gamma: f64,
    pub entropy_range: f64,
    pub entropy_change: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointTable {
    pub rows: Vec<JointRow>,
    /// ΔΓ averaged within equal-count bins of entropy range.
    pub bins: Vec<BinnedMean>,
}

impl JointTable {
    pub fn delta_gamma(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.delta_gamma).collect()
    }

    pub fn entropy_range(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.entropy_range).collect()
    }
}

pub const JOINT_BINS: usize = 20;

/// Daily cap-weighted excess growth accumulated within disjoint windows next
/// to the range and net change of top-`k` entropy over the same window.
pub fn diversity_egr_joint(panel: &MarketPanel, k: usize, window: usize) -> Result<JointTable> {
    if window < 2 {
        return Err(Error::invalid("window must be at least 2 days"));
    }
    let daily = cumulative_egr(panel, k, 1, Weighting::Cap)?;
    let entropy = top_k_entropy_path(panel, k)?;
    let last = panel.n_days() - 1;
    let mut rows = Vec::new();
    let mut start = 0;
    while start + window <= last {
        let end = start + window;
        let h = &entropy[start..=end];
        let max = h.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = h.iter().cloned().fold(f64::INFINITY, f64::min);
        rows.push(JointRow {
            start,
            end,
            delta_gamma: daily.cumulative[end] - daily.cumulative[start],
            entropy_range: max - min,
            entropy_change: entropy[end] - entropy[start],
        });
        start = end;
    }
    let x: Vec<f64> = rows.iter().map(|r| r.entropy_range).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.delta_gamma).collect();
    let bins = stats::binned_means(&x, &y, JOINT_BINS);
    Ok(JointTable { rows, bins })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::read_panel;
    use proptest::prelude::*;

    const LN2: f64 = std::f64::consts::LN_2;

    fn direct_egr(w: &[f64], r: &[f64]) -> f64 {
        let a: f64 = w.iter().zip(r).map(|(w, r)| w * r.exp()).sum();
        a.ln() - w.iter().zip(r).map(|(w, r)| w * r).sum::<f64>()
    }

    #[test]
    fn capital_distribution_sorts() {
        assert_eq!(capital_distribution(&[0.2, 0.5, 0.3]).weights(), &[0.5, 0.3, 0.2]);
        assert_eq!(capital_distribution(&[0.25; 4]).weights(), &[0.25; 4]);
        let z = 11.0 / 6.0;
        let pareto = [1.0 / z, 0.5 / z, 1.0 / (3.0 * z)];
        let cd = capital_distribution(&[pareto[2], pareto[0], pareto[1]]);
        let expect = [0.545454545454545, 0.272727272727273, 0.181818181818182];
        for (a, b) in cd.weights().iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
        let pts = cd.curve_points();
        assert_eq!(pts[0].0, 0.0);
        assert!((pts[1].1 - cd.weights()[1].log10()).abs() < 1e-15);
    }

    #[test]
    fn entropy_values() {
        assert!((shannon_entropy(&[1.0 / 500.0; 500]) - 6.214608098422191).abs() < 1e-12);
        assert_eq!(shannon_entropy(&[1.0]), 0.0);
        assert_eq!(shannon_entropy(&[1.0, 0.0]), 0.0);
        // -(0.5 ln 0.5 + 2 * 0.25 ln 0.25) = 1.5 ln 2
        assert!((shannon_entropy(&[0.5, 0.25, 0.25]) - 1.5 * LN2).abs() < 1e-15);
        assert!((1.5 * LN2 - 1.039721).abs() < 1e-6);
    }

    #[test]
    fn diversity_values() {
        assert!((diversity_p(&[0.7, 0.2, 0.1], 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((diversity_p(&[0.5, 0.5], 0.5).unwrap() - 2.0).abs() < 1e-12);
        let n = 7;
        let d = diversity_p(&vec![1.0 / n as f64; n], 0.5).unwrap();
        assert!((d - n as f64).abs() < 1e-12);
        assert!((diversity_p(&[0.8, 0.2], 0.5).unwrap() - 1.8).abs() < 1e-12);
        assert!(diversity_p(&[1.0], 0.0).is_err());
        assert!(diversity_p(&[1.0], 1.5).is_err());
    }

    #[test]
    fn egr_examples() {
        assert_eq!(excess_growth_rate(&[0.3, 0.7], &[0.05, 0.05]).unwrap(), 0.0);
        let g = excess_growth_rate(&[0.5, 0.5], &[LN2, 0.0]).unwrap();
        assert!((g - (1.5f64.ln() - 0.5 * LN2)).abs() < 1e-15);
        assert!((g - 0.058891).abs() < 1e-6);
        assert_eq!(excess_growth_rate(&[1.0, 0.0], &[0.3, -2.0]).unwrap(), 0.0);
        assert!(matches!(
            excess_growth_rate(&[0.5, 0.5], &[f64::NEG_INFINITY, 0.0]),
            Err(Error::TotalLoss { index: 0 })
        ));
        // zero weight on a total loss is harmless
        assert_eq!(excess_growth_rate(&[1.0, 0.0], &[0.1, f64::NEG_INFINITY]).unwrap(), 0.0);
        // overflow-safe
        let g = excess_growth_rate(&[0.5, 0.5], &[1000.0 + LN2, 1000.0]).unwrap();
        assert!((g - 0.0588915).abs() < 1e-6);
    }

    #[test]
    fn quadratic_approx_examples() {
        let w = [0.5, 0.5];
        let r = [0.01, -0.01];
        let approx = egr_quadratic_approx(&w, &r).unwrap();
        let exact = excess_growth_rate(&w, &r).unwrap();
        assert!((approx - 5.0e-5).abs() < 1e-18);
        assert!((exact - direct_egr(&w, &r)).abs() < 1e-15);
        assert!((approx - exact).abs() <= 1e-6);
        let approx = egr_quadratic_approx(&w, &[LN2, 0.0]).unwrap();
        assert!((approx - LN2 * LN2 / 8.0).abs() < 1e-15);
        assert!((approx - 0.060057).abs() < 1e-6);
        assert_eq!(egr_quadratic_approx(&w, &[0.2, 0.2]).unwrap(), 0.0);
    }

    fn lockstep_panel() -> MarketPanel {
        let mut s = String::from("date,id,cap,total_return,delist_return\n");
        for (d, f) in [(1, 1.0), (2, 1.1), (3, 0.9), (4, 1.3), (5, 1.2)] {
            s.push_str(&format!("2021-03-{d:02},A,{},,\n2021-03-{d:02},B,{},,\n", 10.0 * f, 30.0 * f));
        }
        read_panel(s.as_bytes()).unwrap()
    }

    #[test]
    fn lockstep_has_no_excess_growth() {
        let p = lockstep_panel();
        for weighting in [Weighting::Cap, Weighting::Equal] {
            let s = cumulative_egr(&p, 2, 1, weighting).unwrap();
            assert!(s.cumulative.iter().all(|g| g.abs() < 1e-15));
        }
        let joint = diversity_egr_joint(&p, 2, 2).unwrap();
        assert_eq!(joint.rows.len(), 2);
        for r in &joint.rows {
            assert!(r.delta_gamma.abs() < 1e-15);
            assert!(r.entropy_range.abs() < 1e-12);
        }
    }

    #[test]
    fn two_period_hand_example() {
        let p = read_panel(
            "date,id,cap,total_return,delist_return\n\
             2021-01-04,A,10,,\n2021-01-05,A,20,,\n2021-01-06,A,20,,\n\
             2021-01-04,B,10,,\n2021-01-05,B,10,,\n2021-01-06,B,20,,\n"
                .as_bytes(),
        )
        .unwrap();
        let s = cumulative_egr(&p, 2, 1, Weighting::Equal).unwrap();
        let one = 1.5f64.ln() - 0.5 * LN2;
        assert_eq!(s.grid, vec![0, 1, 2]);
        assert!((s.cumulative[2] - 2.0 * one).abs() < 1e-15);
        // 0.117782 is twice the six-digit rounding of one period
        assert!((s.cumulative[2] - 0.117782).abs() < 2e-6);
        for l in 1..s.grid.len() {
            assert_eq!(s.cumulative[l] - s.cumulative[l - 1], s.per_period[l]);
        }
        assert!(cumulative_egr(&p, 0, 1, Weighting::Equal).is_err());
        assert!(cumulative_egr(&p, 2, 3, Weighting::Equal).is_err());
    }

    #[test]
    fn absent_stock_is_dropped_and_renormalized() {
        let p = read_panel(
            "date,id,cap,total_return,delist_return\n\
             2021-01-04,A,10,,\n2021-01-05,A,20,,\n\
             2021-01-04,B,10,,\n2021-01-05,B,10,,\n\
             2021-01-04,C,10,,\n"
                .as_bytes(),
        )
        .unwrap();
        let g = period_egr(&p, 3, Weighting::Equal, 0, 1).unwrap();
        assert!((g - (1.5f64.ln() - 0.5 * LN2)).abs() < 1e-15);
    }

    #[test]
    fn stats_examples() {
        let alt: Vec<f64> = (0..200).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let s = series_stats(&alt, 3, 0.01, Some(&alt)).unwrap();
        assert!((s.acf[0] + 1.0).abs() < 0.01);
        assert!((s.acf[1] - 1.0).abs() < 0.02);
        assert!((s.pearson.unwrap() - 1.0).abs() < 1e-12);
        assert!((s.winsorized_pearson.unwrap() - 1.0).abs() < 1e-12);
        assert!(s.skewness.abs() < 1e-12);
        assert!((s.excess_kurtosis + 2.0).abs() < 1e-12);

        let flat = vec![2.0; 10];
        let s = series_stats(&alt[..10], 1, 0.05, Some(&flat)).unwrap();
        assert!(s.correlation_undefined);
        assert!(s.pearson.is_none());
        assert!(series_stats(&alt[..3], 3, 0.01, None).is_err());
    }

    #[test]
    fn frozen_cohort_and_subintervals() {
        let b = subinterval_bounds(9, 4).unwrap();
        assert_eq!(b, vec![(0, 2), (2, 4), (4, 6), (6, 8)]);
        let p = lockstep_panel();
        let paths = frozen_cohort_paths(&p, 2, 2).unwrap();
        assert_eq!(paths.len(), 2);
        assert!(paths[0].slope().unwrap().abs() < 1e-12);
        let rnd = random_cohort_paths(&p, 1, 2, 2, 3, 9).unwrap();
        assert_eq!(rnd.len(), 2);
        assert_eq!(rnd[0].len(), 3);
        assert!(rnd[0].iter().all(|c| c.values.iter().all(|h| *h == 0.0)));
    }

    proptest! {
        #[test]
        fn egr_is_numeraire_invariant(
            raw in prop::collection::vec((0.01f64..1.0, -0.5f64..0.5), 1..20),
            c in -5.0f64..5.0,
        ) {
            let total: f64 = raw.iter().map(|x| x.0).sum();
            let w: Vec<f64> = raw.iter().map(|x| x.0 / total).collect();
            let r: Vec<f64> = raw.iter().map(|x| x.1).collect();
            let shifted: Vec<f64> = r.iter().map(|x| x + c).collect();
            let g = excess_growth_rate(&w, &r).unwrap();
            prop_assert!(g >= 0.0);
            prop_assert!((g - excess_growth_rate(&w, &shifted).unwrap()).abs() < 1e-12);
            prop_assert!((g - direct_egr(&w, &r)).abs() < 1e-12);
        }

        #[test]
        fn entropy_is_bounded(raw in prop::collection::vec(1e-6f64..1.0, 1..50)) {
            let total: f64 = raw.iter().sum();
            let w: Vec<f64> = raw.iter().map(|x| x / total).collect();
            let h = shannon_entropy(&w);
            prop_assert!(h >= 0.0);
            prop_assert!(h <= (w.len() as f64).ln() + 1e-12);
            let cd = capital_distribution(&w);
            prop_assert!((shannon_entropy(cd.weights()) - h).abs() < 1e-12);
        }
    }
}
