//! Diversity-weighted portfolio backtests under proportional transaction
//! costs.
//!
//! A run is confined to one window `[start, end]`. On `start` the portfolio
//! buys the diversity weights of the top-`K` cap weights at no cost. On each
//! following day:
//!
//! 1. holdings grow by the day's return. In cash-bucket mode the
//!    cap-implied price return drives the holding and the dividend residual
//!    of the total return is credited to cash; in daily-reinvest mode the
//!    holding grows by the full total return. A missing total return falls
//!    back to the price return.
//! 2. a holding whose stock is no longer listed receives its delist return
//!    (0 if none was provided) and moves to cash, where it earns nothing.
//! 3. every `f` days after `start` (never on `end`) the portfolio re-forms the
//!    top-`K` support and trades to the new targets, paying costs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::macrostats;
use crate::market_data::{MarketPanel, WeightVector};
use crate::synthetic::TRADING_DAYS_PER_YEAR;

pub const DEFAULT_K: usize = 500;
pub const DEFAULT_COST_RATE: f64 = 0.0025;
pub const DEFAULT_INITIAL_WEALTH: f64 = 1000.0;
const BISECTION_REL_TOL: f64 = 1e-12;

/// `w_i ∝ mu_i^p`; `p = 0` is equal weighting and `p = 1` returns `mu`.
pub fn diversity_weights(mu: &WeightVector, p: f64) -> Result<WeightVector> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("p={p} outside [0, 1]")));
    }
    let n = mu.weights.len();
    if n == 0 {
        return Err(Error::invalid("empty weight vector"));
    }
    let weights = if p == 1.0 {
        mu.weights.clone()
    } else if p == 0.0 {
        vec![1.0 / n as f64; n]
    } else {
        let raw: Vec<f64> = mu.weights.iter().map(|m| m.powf(p)).collect();
        let total: f64 = raw.iter().sum();
        raw.iter().map(|r| r / total).collect()
    };
    Ok(WeightVector {
        universe: mu.universe.clone(),
        weights,
    })
}

/// Rebalancing frequency in trading days.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Frequency {
    Every(usize),
    Never,
}

impl Frequency {
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") || s == "∞" {
            return Ok(Frequency::Never);
        }
        match s.parse::<usize>() {
            Ok(f) if f >= 1 => Ok(Frequency::Every(f)),
            _ => Err(Error::invalid(format!("bad rebalance frequency '{s}'"))),
        }
    }

    fn is_rebalance_day(self, start: usize, t: usize) -> bool {
        match self {
            Frequency::Every(f) => (t - start) % f == 0,
            Frequency::Never => false,
        }
    }
}

impl std::fmt::Display for Frequency {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Frequency::Every(n) => write!(f, "{n}"),
            Frequency::Never => write!(f, "inf"),
        }
    }
}

impl Serialize for Frequency {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Frequency {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            N(usize),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::N(n) => Frequency::parse(&n.to_string()),
            Raw::S(s) => Frequency::parse(&s),
        }
        .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DividendMode {
    #[default]
    CashBucket,
    DailyReinvest,
}

impl std::str::FromStr for DividendMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cash-bucket" => Ok(DividendMode::CashBucket),
            "daily-reinvest" => Ok(DividendMode::DailyReinvest),
            _ => Err(Error::invalid(format!("unknown dividend mode '{s}'"))),
        }
    }
}

/// Parameters of one portfolio run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub p: f64,
    pub f: Frequency,
    pub k: usize,
    pub cost_rate: f64,
    pub initial_wealth: f64,
    pub dividend_mode: DividendMode,
}

impl RunSpec {
    pub fn new(p: f64, f: Frequency) -> Self {
        Self {
            p,
            f,
            k: DEFAULT_K,
            cost_rate: DEFAULT_COST_RATE,
            initial_wealth: DEFAULT_INITIAL_WEALTH,
            dividend_mode: DividendMode::CashBucket,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::invalid(format!("p={} outside [0, 1]", self.p)));
        }
        if !(0.0..1.0).contains(&self.cost_rate) {
            return Err(Error::invalid(format!("cost rate {} outside [0, 1)", self.cost_rate)));
        }
        if self.k < 1 {
            return Err(Error::invalid("K must be at least 1"));
        }
        if !(self.initial_wealth.is_finite() && self.initial_wealth > 0.0) {
            return Err(Error::invalid("initial wealth must be positive"));
        }
        Ok(())
    }
}

/// A grid of runs over a list of windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestConfig {
    pub p_list: Vec<f64>,
    pub f_list: Vec<Frequency>,
    pub k: usize,
    pub cost_rate: f64,
    pub initial_wealth: f64,
    pub dividend_mode: DividendMode,
    pub windows: Vec<(usize, usize)>,
}

impl BacktestConfig {
    pub fn spec(&self, p: f64, f: Frequency) -> RunSpec {
        RunSpec {
            p,
            f,
            k: self.k,
            cost_rate: self.cost_rate,
            initial_wealth: self.initial_wealth,
            dividend_mode: self.dividend_mode,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Holding {
    pub stock: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PortfolioState {
    pub date: usize,
    pub holdings: Vec<Holding>,
    pub cash: f64,
}

impl PortfolioState {
    pub fn all_cash(date: usize, cash: f64) -> Self {
        Self {
            date,
            holdings: Vec::new(),
            cash,
        }
    }

    pub fn wealth(&self) -> f64 {
        self.cash + self.holdings.iter().map(|h| h.value).sum::<f64>()
    }

    pub fn support_size(&self) -> usize {
        self.holdings.iter().filter(|h| h.value > 0.0).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TradeSummary {
    pub pre_trade_wealth: f64,
    pub post_trade_wealth: f64,
    /// Dollar volume bought plus sold.
    pub turnover: f64,
    pub cost: f64,
}

/// Trades `state` into `targets`, sweeping in cash. Post-trade wealth `V`
/// solves `V = W - c * sum_i |w_i V - h_i|`, found by bisection on
/// `[W (1 - c) / (1 + c), W]`. Holdings not in `targets` are sold.
pub fn rebalance_with_costs(
    state: &PortfolioState,
    targets: &WeightVector,
    c: f64,
) -> Result<(PortfolioState, TradeSummary)> {
    if !(0.0..1.0).contains(&c) {
        return Err(Error::invalid(format!("cost rate {c} outside [0, 1)")));
    }
    if targets.weights().is_empty() {
        return Err(Error::invalid("empty support at rebalance"));
    }
    let w_pre = state.wealth();
    let mut sorted: Vec<(usize, f64)> = state.holdings.iter().map(|h| (h.stock, h.value)).collect();
    sorted.sort_unstable_by_key(|x| x.0);
    let mut in_target = vec![false; sorted.len()];
    let held: Vec<f64> = targets
        .members()
        .iter()
        .map(|i| match sorted.binary_search_by_key(i, |x| x.0) {
            Ok(j) => {
                in_target[j] = true;
                sorted[j].1
            }
            Err(_) => 0.0,
        })
        .collect();
    let sold_outside: f64 = sorted
        .iter()
        .zip(&in_target)
        .filter(|(_, inside)| !**inside)
        .map(|(h, _)| h.1)
        .sum();
    let volume = |v: f64| {
        sold_outside
            + targets
                .weights()
                .iter()
                .zip(&held)
                .map(|(w, h)| (w * v - h).abs())
                .sum::<f64>()
    };
    let excess = |v: f64| v + c * volume(v) - w_pre;

    let v = if c == 0.0 || excess(w_pre) <= 0.0 {
        w_pre
    } else {
        let mut lo = w_pre * (1.0 - c) / (1.0 + c);
        let mut hi = w_pre;
        if excess(lo) > BISECTION_REL_TOL * w_pre {
            return Err(Error::Internal("no post-trade wealth in bracket".into()));
        }
        while hi - lo > BISECTION_REL_TOL * w_pre {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if excess(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let turnover = volume(v);
    let holdings = targets
        .members()
        .iter()
        .zip(targets.weights())
        .map(|(&stock, w)| Holding { stock, value: w * v })
        .collect();
    Ok((
        PortfolioState {
            date: state.date,
            holdings,
            cash: 0.0,
        },
        TradeSummary {
            pre_trade_wealth: w_pre,
            post_trade_wealth: v,
            turnover,
            cost: w_pre - v,
        },
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RebalanceRecord {
    pub t: usize,
    pub turnover: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WealthSeries {
    pub spec: RunSpec,
    pub start: usize,
    pub end: usize,
    /// `wealth[j]` is the wealth on day `start + j`.
    pub wealth: Vec<f64>,
    pub support: Vec<usize>,
    pub rebalances: Vec<RebalanceRecord>,
    pub total_costs: f64,
    /// Delistings that had no delist return and were treated as 0.
    pub missing_delist_returns: usize,
    /// Set when wealth reached zero; the series stops on that day.
    pub wiped_out: bool,
}

impl WealthSeries {
    pub fn final_wealth(&self) -> f64 {
        *self.wealth.last().unwrap()
    }

    pub fn log_return(&self) -> f64 {
        (self.final_wealth() / self.wealth[0]).ln()
    }
}

fn targets_at(panel: &MarketPanel, t: usize, spec: &RunSpec) -> Result<WeightVector> {
    let universe = panel.top_k_universe(t, spec.k)?;
    if universe.is_empty() {
        return Err(Error::invalid(format!("empty support at day {t}")));
    }
    let mu = panel.capitalization_weights(&universe)?;
    diversity_weights(&mu, spec.p)
}

pub fn check_window(panel: &MarketPanel, (start, end): (usize, usize)) -> Result<()> {
    if start >= end || end >= panel.n_days() {
        return Err(Error::invalid(format!(
            "window {start}..{end} not inside calendar of {} days",
            panel.n_days()
        )));
    }
    Ok(())
}

/// Runs one portfolio over `window`.
pub fn run_backtest(panel: &MarketPanel, spec: &RunSpec, window: (usize, usize)) -> Result<WealthSeries> {
    spec.validate()?;
    check_window(panel, window)?;
    let (start, end) = window;

    let init = targets_at(panel, start, spec)?;
    let (mut state, _) = rebalance_with_costs(&PortfolioState::all_cash(start, spec.initial_wealth), &init, 0.0)?;
    let mut series = WealthSeries {
        spec: *spec,
        start,
        end,
        wealth: vec![state.wealth()],
        support: vec![state.support_size()],
        rebalances: Vec::new(),
        total_costs: 0.0,
        missing_delist_returns: 0,
        wiped_out: false,
    };

    for t in start + 1..=end {
        state.date = t;
        let mut delisted = 0.0;
        state.holdings.retain_mut(|h| {
            let i = h.stock;
            match (panel.cap(i, t), panel.cap(i, t - 1)) {
                (Some(now), Some(before)) => {
                    let price = now / before - 1.0;
                    let total = panel.total_return(i, t).unwrap_or(price);
                    match spec.dividend_mode {
                        DividendMode::DailyReinvest => h.value *= 1.0 + total,
                        DividendMode::CashBucket => {
                            let dividend = total - price;
                            if dividend >= 0.0 {
                                state.cash += h.value * dividend;
                                h.value *= 1.0 + price;
                            } else {
                                h.value *= 1.0 + total;
                            }
                        }
                    }
                    true
                }
                _ => {
                    let r = match panel.delist_return(i) {
                        Some(r) => r,
                        None => {
                            series.missing_delist_returns += 1;
                            0.0
                        }
                    };
                    delisted += h.value * (1.0 + r);
                    false
                }
            }
        });
        state.cash += delisted;

        if t < end && spec.f.is_rebalance_day(start, t) {
            let targets = targets_at(panel, t, spec)?;
            let (next, trade) = rebalance_with_costs(&state, &targets, spec.cost_rate)?;
            state = next;
            series.total_costs += trade.cost;
            series.rebalances.push(RebalanceRecord {
                t,
                turnover: trade.turnover,
                cost: trade.cost,
            });
        }

        let wealth = state.wealth();
        series.wealth.push(wealth.max(0.0));
        series.support.push(state.support_size());
        if wealth <= 0.0 {
            series.wiped_out = true;
            break;
        }
    }
    Ok(series)
}

/// `max_t 1 - x(t) / max_{s <= t} x(s)`.
pub fn max_drawdown(path: &[f64]) -> f64 {
    let mut peak = f64::NEG_INFINITY;
    let mut worst: f64 = 0.0;
    for &x in path {
        peak = peak.max(x);
        if peak > 0.0 {
            worst = worst.max(1.0 - x / peak);
        }
    }
    worst
}

/// Annualized Sharpe ratio of daily simple returns at a zero risk-free rate.
/// `None` when fewer than two returns exist or they are constant.
pub fn sharpe_ratio(wealth: &[f64]) -> Option<f64> {
    let rets: Vec<f64> = wealth.windows(2).map(|w| w[1] / w[0] - 1.0).collect();
    if rets.len() < 2 {
        return None;
    }
    let sd = crate::stats::sample_sd(&rets);
    if !(sd > 0.0) {
        return None;
    }
    Some(crate::stats::mean(&rets) / sd * (TRADING_DAYS_PER_YEAR as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerfStats {
    pub start: usize,
    pub end: usize,
    pub rel_log_return: f64,
    pub max_drawdown: f64,
    pub sharpe: Option<f64>,
    pub diversity_drawdown: f64,
}

/// Risk and relative-performance statistics of `series` against `benchmark`;
/// `entropy_path` covers the same window.
pub fn performance_stats(series: &WealthSeries, benchmark: &WealthSeries, entropy_path: &[f64]) -> Result<PerfStats> {
    if series.start != benchmark.start || series.end != benchmark.end {
        return Err(Error::invalid("series and benchmark windows differ"));
    }
    if entropy_path.len() != series.end - series.start + 1 {
        return Err(Error::invalid("entropy path does not cover the window"));
    }
    Ok(PerfStats {
        start: series.start,
        end: series.end,
        rel_log_return: series.log_return() - benchmark.log_return(),
        max_drawdown: max_drawdown(&series.wealth),
        sharpe: sharpe_ratio(&series.wealth),
        diversity_drawdown: max_drawdown(entropy_path),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub window_start: usize,
    pub window_end: usize,
    pub p: f64,
    pub f: Frequency,
    pub final_wealth: f64,
    pub rel_log_return: f64,
    pub max_drawdown: f64,
    pub sharpe: Option<f64>,
    pub total_costs: f64,
    pub diversity_drawdown: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpreadRow {
    pub window_start: usize,
    pub window_end: usize,
    pub f: Frequency,
    /// `log(Z_{0,f} / Z_{0,inf})` at window end.
    pub spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridResults {
    pub rows: Vec<GridRow>,
    pub frequency_spread: Vec<SpreadRow>,
    #[serde(skip)]
    pub series: Vec<WealthSeries>,
}

impl GridResults {
    pub fn row(&self, window: (usize, usize), p: f64, f: Frequency) -> Option<&GridRow> {
        self.rows
            .iter()
            .find(|r| (r.window_start, r.window_end) == window && r.p == p && r.f == f)
    }
}

fn sorted_unique(mut ps: Vec<f64>) -> Vec<f64> {
    ps.sort_by(f64::total_cmp);
    ps.dedup();
    ps
}

/// Runs every `(p, f)` of the grid on every window. Benchmarks `(1, f)` are
/// always included in the rows; equal-weight runs `(0, f)` and `(0, inf)` are
/// added as needed for the frequency spread. Runs execute in parallel on the
/// current rayon pool; output order is fixed.
pub fn run_grid(panel: &MarketPanel, config: &BacktestConfig) -> Result<GridResults> {
    if config.p_list.is_empty() || config.f_list.is_empty() || config.windows.is_empty() {
        return Err(Error::invalid("grid needs at least one p, f and window"));
    }
    for w in &config.windows {
        check_window(panel, *w)?;
    }
    let mut with_bench = config.p_list.clone();
    with_bench.push(1.0);
    let row_ps = sorted_unique(with_bench);
    let mut f_all = config.f_list.clone();
    f_all.push(Frequency::Never);
    f_all.sort();
    f_all.dedup();

    let mut jobs: Vec<(usize, f64, Frequency)> = Vec::new();
    for (wi, _) in config.windows.iter().enumerate() {
        for &f in &f_all {
            let in_rows = config.f_list.contains(&f);
            let mut ps: Vec<f64> = if in_rows { row_ps.clone() } else { Vec::new() };
            ps.push(0.0);
            for p in sorted_unique(ps) {
                jobs.push((wi, p, f));
            }
        }
    }

    let entropies: Vec<Vec<f64>> = config
        .windows
        .par_iter()
        .map(|&(s, e)| (s..=e).map(|t| macrostats::top_k_entropy(panel, t, config.k)).collect())
        .collect::<Result<_>>()?;
    let series: Vec<WealthSeries> = jobs
        .par_iter()
        .map(|&(wi, p, f)| run_backtest(panel, &config.spec(p, f), config.windows[wi]))
        .collect::<Result<_>>()?;

    let find = |wi: usize, p: f64, f: Frequency| {
        jobs.iter()
            .position(|j| *j == (wi, p, f))
            .map(|j| &series[j])
    };
    let mut rows = Vec::new();
    let mut frequency_spread = Vec::new();
    for (wi, &(ws, we)) in config.windows.iter().enumerate() {
        for &f in &config.f_list {
            let bench = find(wi, 1.0, f).expect("benchmark scheduled");
            for &p in &row_ps {
                let s = find(wi, p, f).expect("run scheduled");
                let perf = performance_stats(s, bench, &entropies[wi])?;
                rows.push(GridRow {
                    window_start: ws,
                    window_end: we,
                    p,
                    f,
                    final_wealth: s.final_wealth(),
                    rel_log_return: perf.rel_log_return,
                    max_drawdown: perf.max_drawdown,
                    sharpe: perf.sharpe,
                    total_costs: s.total_costs,
                    diversity_drawdown: perf.diversity_drawdown,
                });
            }
            let eq = find(wi, 0.0, f).expect("equal weight scheduled");
            let hold = find(wi, 0.0, Frequency::Never).expect("buy and hold scheduled");
            frequency_spread.push(SpreadRow {
                window_start: ws,
                window_end: we,
                f,
                spread: eq.log_return() - hold.log_return(),
            });
        }
    }
    Ok(GridResults {
        rows,
        frequency_spread,
        series,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::{read_panel, Universe};
    use crate::synthetic::{simulate_atlas, AtlasParams};

    fn wv(members: Vec<usize>, weights: Vec<f64>) -> WeightVector {
        WeightVector {
            universe: Universe { date: 0, members },
            weights,
        }
    }

    fn small_atlas(n: usize, horizon: usize, seed: u64) -> MarketPanel {
        let params = AtlasParams {
            n,
            gamma: (0..n).map(|k| 0.05 * (2.0 * k as f64 / (n - 1) as f64 - 1.0)).collect(),
            sigma: (0..n).map(|k| 0.15 + 0.2 * k as f64 / (n - 1) as f64).collect(),
            dt: 1.0 / 252.0,
            horizon,
            init_log_caps: (0..n).map(|i| 20.0 - 0.1 * i as f64).collect(),
            seed,
        };
        simulate_atlas(&params).unwrap()
    }

    #[test]
    fn diversity_weight_endpoints() {
        let mu = wv(vec![0, 1, 2], vec![0.6, 0.3, 0.1]);
        assert_eq!(diversity_weights(&mu, 1.0).unwrap().weights, mu.weights);
        assert_eq!(diversity_weights(&mu, 0.0).unwrap().weights, vec![1.0 / 3.0; 3]);
        let w = diversity_weights(&wv(vec![0, 1], vec![0.8, 0.2]), 0.5).unwrap();
        assert!((w.weights[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((w.weights[1] - 1.0 / 3.0).abs() < 1e-15);
        assert!(diversity_weights(&mu, 1.5).is_err());
    }

    #[test]
    fn rebalance_closed_forms() {
        let c = 0.0025;
        let state = PortfolioState {
            date: 0,
            holdings: vec![Holding { stock: 0, value: 60.0 }, Holding { stock: 1, value: 40.0 }],
            cash: 0.0,
        };
        let (next, trade) = rebalance_with_costs(&state, &wv(vec![0, 1], vec![0.6, 0.4]), c).unwrap();
        assert_eq!(next.wealth(), 100.0);
        assert_eq!(trade.cost, 0.0);

        let state = PortfolioState {
            date: 0,
            holdings: vec![Holding { stock: 0, value: 100.0 }, Holding { stock: 1, value: 0.0 }],
            cash: 0.0,
        };
        let (next, _) = rebalance_with_costs(&state, &wv(vec![0, 1], vec![0.0, 1.0]), c).unwrap();
        assert!((next.wealth() - 100.0 * (1.0 - c) / (1.0 + c)).abs() < 1e-9);
        assert!((next.wealth() - 99.501247).abs() < 1e-6);

        let (next, trade) = rebalance_with_costs(
            &PortfolioState::all_cash(0, 100.0),
            &wv(vec![3, 4, 5], vec![0.2, 0.3, 0.5]),
            c,
        )
        .unwrap();
        assert!((next.wealth() - 100.0 / (1.0 + c)).abs() < 1e-9);
        assert!((trade.turnover - next.wealth()).abs() < 1e-9);
        assert_eq!(next.cash, 0.0);

        // position outside the target support is sold
        let state = PortfolioState {
            date: 0,
            holdings: vec![Holding { stock: 9, value: 50.0 }],
            cash: 50.0,
        };
        let (next, trade) = rebalance_with_costs(&state, &wv(vec![1], vec![1.0]), c).unwrap();
        assert!((trade.turnover - (50.0 + next.wealth())).abs() < 1e-9);
        assert!(next.holdings.iter().all(|h| h.stock == 1));
        assert!(rebalance_with_costs(&state, &wv(vec![1], vec![1.0]), 1.0).is_err());
    }

    #[test]
    fn zero_cost_conserves_wealth() {
        let state = PortfolioState {
            date: 0,
            holdings: vec![Holding { stock: 0, value: 70.0 }],
            cash: 30.0,
        };
        let (next, trade) = rebalance_with_costs(&state, &wv(vec![1, 2], vec![0.5, 0.5]), 0.0).unwrap();
        assert_eq!(next.wealth(), 100.0);
        assert_eq!(trade.cost, 0.0);
    }

    #[test]
    fn frequency_parsing() {
        assert_eq!(Frequency::parse("inf").unwrap(), Frequency::Never);
        assert_eq!(Frequency::parse("20").unwrap(), Frequency::Every(20));
        assert!(Frequency::parse("0").is_err());
        let f: Frequency = serde_json::from_str("5").unwrap();
        assert_eq!(f, Frequency::Every(5));
        let f: Frequency = serde_json::from_str("\"inf\"").unwrap();
        assert_eq!(f, Frequency::Never);
    }

    #[test]
    fn drawdown_and_sharpe() {
        assert_eq!(max_drawdown(&[1.0, 2.0, 3.0]), 0.0);
        assert!((max_drawdown(&[100.0, 120.0, 90.0, 110.0]) - 0.25).abs() < 1e-15);
        assert_eq!(sharpe_ratio(&[1.0, 1.0, 1.0]), None);
        let s = sharpe_ratio(&[100.0, 101.0, 100.0, 102.0]).unwrap();
        assert!(s.is_finite());
    }

    #[test]
    fn cap_weight_replicates_index() {
        let panel = small_atlas(6, 60, 5);
        let mut spec = RunSpec::new(1.0, Frequency::Every(1));
        spec.k = 6;
        spec.cost_rate = 0.0;
        let s = run_backtest(&panel, &spec, (0, 60)).unwrap();
        let m0 = panel.total_cap(0);
        for (j, z) in s.wealth.iter().enumerate() {
            let expect = spec.initial_wealth * panel.total_cap(j) / m0;
            assert!((z / expect - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn buy_and_hold_identity() {
        let panel = small_atlas(5, 40, 9);
        let mut spec = RunSpec::new(0.3, Frequency::Never);
        spec.k = 5;
        spec.cost_rate = 0.0025;
        let s = run_backtest(&panel, &spec, (3, 40)).unwrap();
        let mu = panel.capitalization_weights(&panel.top_k_universe(3, 5).unwrap()).unwrap();
        let w = diversity_weights(&mu, 0.3).unwrap();
        for (j, z) in s.wealth.iter().enumerate() {
            let t = 3 + j;
            let expect: f64 = w
                .members()
                .iter()
                .zip(w.weights())
                .map(|(&i, wi)| wi * 1000.0 * panel.cap(i, t).unwrap() / panel.cap(i, 3).unwrap())
                .sum();
            assert!((z - expect).abs() < 1e-9 * expect);
        }
        assert_eq!(s.total_costs, 0.0);
    }

    #[test]
    fn delisting_moves_to_cash_until_rebalance() {
        let panel = read_panel(
            "date,id,cap,total_return,delist_return\n\
             2020-01-01,A,100,,\n2020-01-02,A,100,0,\n2020-01-03,A,100,0,\n2020-01-06,A,200,1,\n\
             2020-01-01,B,100,,\n2020-01-02,B,100,0,-0.5\n\
             2020-01-01,C,100,,\n2020-01-02,C,100,0,\n2020-01-03,C,100,0,\n2020-01-06,C,100,0,\n"
                .as_bytes(),
        )
        .unwrap();
        let mut spec = RunSpec::new(0.0, Frequency::Never);
        spec.k = 3;
        let s = run_backtest(&panel, &spec, (0, 3)).unwrap();
        let third = 1000.0 / 3.0;
        assert!((s.wealth[1] - 1000.0).abs() < 1e-9);
        // B delisted at -50%: its cash sits idle while A doubles.
        assert!((s.wealth[2] - (2.5 * third)).abs() < 1e-9);
        assert!((s.wealth[3] - (3.5 * third)).abs() < 1e-9);
        assert_eq!(s.missing_delist_returns, 0);
        assert_eq!(s.support[2], 2);
    }

    #[test]
    fn missing_delist_return_is_zero_and_flagged() {
        let panel = read_panel(
            "date,id,cap,total_return,delist_return\n\
             2020-01-01,A,100,,\n2020-01-02,A,100,0,\n2020-01-03,A,100,0,\n\
             2020-01-01,B,100,,\n2020-01-02,B,100,0,\n"
                .as_bytes(),
        )
        .unwrap();
        let mut spec = RunSpec::new(1.0, Frequency::Never);
        spec.k = 2;
        let s = run_backtest(&panel, &spec, (0, 2)).unwrap();
        assert!((s.final_wealth() - 1000.0).abs() < 1e-9);
        assert_eq!(s.missing_delist_returns, 1);
    }

    #[test]
    fn dividend_modes() {
        // cap unchanged, total return 1% (pure dividend)
        let panel = read_panel(
            "date,id,cap,total_return,delist_return\n\
             2020-01-01,A,100,,\n2020-01-02,A,100,0.01,\n2020-01-03,A,110,0.11,\n"
                .as_bytes(),
        )
        .unwrap();
        let mut spec = RunSpec::new(1.0, Frequency::Never);
        spec.k = 1;
        let bucket = run_backtest(&panel, &spec, (0, 2)).unwrap();
        // holding 1000 -> 1000 -> 1100, cash 10 + 10
        assert!((bucket.final_wealth() - 1120.0).abs() < 1e-9);
        spec.dividend_mode = DividendMode::DailyReinvest;
        let reinvest = run_backtest(&panel, &spec, (0, 2)).unwrap();
        assert!((reinvest.final_wealth() - 1000.0 * 1.01 * 1.11).abs() < 1e-9);
    }

    #[test]
    fn grid_endpoints() {
        let panel = small_atlas(8, 120, 21);
        let config = BacktestConfig {
            p_list: vec![0.0, 0.5],
            f_list: vec![Frequency::Every(5), Frequency::Never],
            k: 4,
            cost_rate: 0.0025,
            initial_wealth: 1000.0,
            dividend_mode: DividendMode::CashBucket,
            windows: vec![(0, 60), (60, 120)],
        };
        let res = run_grid(&panel, &config).unwrap();
        assert_eq!(res.rows.len(), 2 * 2 * 3);
        for r in res.rows.iter().filter(|r| r.p == 1.0) {
            assert_eq!(r.rel_log_return, 0.0);
        }
        for s in res.frequency_spread.iter().filter(|s| s.f == Frequency::Never) {
            assert_eq!(s.spread, 0.0);
        }
        assert!(run_backtest(&panel, &config.spec(0.0, Frequency::Every(1)), (5, 5)).is_err());
    }
}
