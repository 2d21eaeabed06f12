//! Rank-indexed statistics: quadratic variation by rank, rank transitions and
//! the discrete intensity of rank switching.
//!
//! Ranks are always taken within the full universe of the day, with the
//! panel's tie rule.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::market_data::MarketPanel;
use crate::stats::moving_average;

pub const MAX_RANK_CHANGE: i64 = 50;
pub const TRANSITION_SMOOTHING: usize = 25;
pub const LAMBDA_SMOOTHING: usize = 10;
const NEGATIVE_TOLERANCE: f64 = -1e-9;

fn check_k(panel: &MarketPanel, k: usize, min: usize) -> Result<()> {
    if k < min {
        return Err(Error::invalid(format!("K must be at least {min}")));
    }
    let largest = (0..panel.n_days()).map(|t| panel.universe_size(t)).max().unwrap_or(0);
    if k > largest {
        return Err(Error::invalid(format!(
            "K={k} exceeds every day's universe (largest {largest})"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankQvSeries {
    pub k: usize,
    /// `qv[t][k - 1]`.
    pub qv: Vec<Vec<f64>>,
}

impl RankQvSeries {
    pub fn terminal(&self) -> &[f64] {
        self.qv.last().unwrap()
    }
}

/// Rank-`k` discrete quadratic variation: squared one-day log-cap moves of
/// whichever stock holds rank `k`. A day contributes nothing to rank `k` when
/// that stock is absent the next day or fewer than `k` stocks exist.
pub fn rank_quadratic_variation(panel: &MarketPanel, k: usize) -> Result<RankQvSeries> {
    check_k(panel, k, 1)?;
    let mut qv = Vec::with_capacity(panel.n_days());
    let mut acc = vec![0.0; k];
    qv.push(acc.clone());
    for t in 0..panel.n_days() - 1 {
        for (rank, &i) in panel.ranked(t).iter().take(k).enumerate() {
            if let Some(r) = panel.log_return(i as usize, t) {
                acc[rank] += r * r;
            }
        }
        qv.push(acc.clone());
    }
    Ok(RankQvSeries { k, qv })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionProfile {
    pub mean_change: Vec<f64>,
    pub p_plus: Vec<f64>,
    pub p_zero: Vec<f64>,
    pub p_minus: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankTransitionStats {
    pub k: usize,
    /// `counts[k - 1][c + 50]` for truncated change `c` in `-50..=50`.
    pub counts: Vec<Vec<u64>>,
    pub observations: Vec<u64>,
    pub raw: TransitionProfile,
    /// Centered moving average over rank, half-width 25.
    pub smoothed: TransitionProfile,
}

/// Next-day rank change of the stock holding each rank, truncated to
/// `[-50, 50]`; a delisting counts as `+50`.
pub fn rank_transition_stats(panel: &MarketPanel, k: usize) -> Result<RankTransitionStats> {
    check_k(panel, k, 1)?;
    let width = (2 * MAX_RANK_CHANGE + 1) as usize;
    let mut counts = vec![vec![0u64; width]; k];
    let mut next_rank = vec![u32::MAX; panel.n_stocks()];
    for t in 0..panel.n_days() - 1 {
        let next = panel.ranked(t + 1);
        for (r, &i) in next.iter().enumerate() {
            next_rank[i as usize] = r as u32;
        }
        for (r, &i) in panel.ranked(t).iter().take(k).enumerate() {
            let change = match next_rank[i as usize] {
                u32::MAX => MAX_RANK_CHANGE,
                l => (l as i64 - r as i64).clamp(-MAX_RANK_CHANGE, MAX_RANK_CHANGE),
            };
            counts[r][(change + MAX_RANK_CHANGE) as usize] += 1;
        }
        for &i in next {
            next_rank[i as usize] = u32::MAX;
        }
    }

    let observations: Vec<u64> = counts.iter().map(|c| c.iter().sum()).collect();
    let mut raw = TransitionProfile {
        mean_change: Vec::with_capacity(k),
        p_plus: Vec::with_capacity(k),
        p_zero: Vec::with_capacity(k),
        p_minus: Vec::with_capacity(k),
    };
    for (c, &n) in counts.iter().zip(&observations) {
        let n = n as f64;
        let mid = MAX_RANK_CHANGE as usize;
        let minus: u64 = c[..mid].iter().sum();
        let plus: u64 = c[mid + 1..].iter().sum();
        let sum: f64 = c
            .iter()
            .enumerate()
            .map(|(j, &cnt)| (j as f64 - mid as f64) * cnt as f64)
            .sum();
        raw.mean_change.push(sum / n);
        raw.p_plus.push(plus as f64 / n);
        raw.p_zero.push(c[mid] as f64 / n);
        raw.p_minus.push(minus as f64 / n);
    }
    let smoothed = TransitionProfile {
        mean_change: moving_average(&raw.mean_change, TRANSITION_SMOOTHING),
        p_plus: moving_average(&raw.p_plus, TRANSITION_SMOOTHING),
        p_zero: moving_average(&raw.p_zero, TRANSITION_SMOOTHING),
        p_minus: moving_average(&raw.p_minus, TRANSITION_SMOOTHING),
    };
    Ok(RankTransitionStats {
        k,
        counts,
        observations,
        raw,
        smoothed,
    })
}

/// One day's rank-switching increments for ranks `1..=ordered_next.len()`.
///
/// `ordered_next[j]` is the `(j+1)`-th largest log cap on the next day and
/// `followed_next[j]` the next-day log cap of the stock that held rank `j+1`
/// today. The increments solve
/// `ΔY_(k) = ΔY_{i_k} + (ΔΛ_k - ΔΛ_{k-1}) / 2` with `ΔΛ_0 = 0`; today's
/// values cancel between the two sides.
pub fn switching_increments(ordered_next: &[f64], followed_next: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    ordered_next
        .iter()
        .zip(followed_next)
        .map(|(o, f)| {
            acc += 2.0 * (o - f);
            acc
        })
        .collect()
}

/// Increments between two cross-sections of the same `n` stocks, for ranks
/// `1..=n`. The last entry closes the telescoping sum and is zero up to
/// rounding.
pub fn switching_increments_between(y0: &[f64], y1: &[f64]) -> Vec<f64> {
    assert_eq!(y0.len(), y1.len());
    let order = |y: &[f64]| {
        let mut idx: Vec<usize> = (0..y.len()).collect();
        idx.sort_unstable_by(|&a, &b| y[b].total_cmp(&y[a]).then(a.cmp(&b)));
        idx
    };
    let ordered_next: Vec<f64> = order(y1).into_iter().map(|i| y1[i]).collect();
    let followed_next: Vec<f64> = order(y0).into_iter().map(|i| y1[i]).collect();
    switching_increments(&ordered_next, &followed_next)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankSwitchIntensity {
    pub k: usize,
    /// `lambda[t][k - 1]` for ranks `1..K-1`.
    pub lambda: Vec<Vec<f64>>,
    /// Days whose increment was zeroed because of an exit or entry at or
    /// above the rank, per rank.
    pub skipped_days: Vec<u64>,
    /// Largest `|ΔΛ_K|` over days where exactly `K` stocks are present on both
    /// days with no exit or entry.
    pub max_closure_residual: Option<f64>,
}

impl RankSwitchIntensity {
    pub fn terminal(&self) -> &[f64] {
        self.lambda.last().unwrap()
    }

    pub fn smoothed_terminal(&self) -> Vec<f64> {
        moving_average(self.terminal(), LAMBDA_SMOOTHING)
    }
}

/// Cumulative rank-switching intensity between ranks `k` and `k + 1`, for
/// `k = 1..K-1`.
///
/// On a day where the stock holding rank `j` exits, or a newly listed stock
/// takes rank `j`, increments at ranks `≥ j` are set to zero and counted in
/// `skipped_days`.
pub fn rank_switch_intensity(panel: &MarketPanel, k: usize) -> Result<RankSwitchIntensity> {
    check_k(panel, k, 2)?;
    let reported = k - 1;
    let mut lambda = Vec::with_capacity(panel.n_days());
    let mut acc = vec![0.0; reported];
    let mut skipped_days = vec![0u64; reported];
    let mut closure: Option<f64> = None;
    lambda.push(acc.clone());
    let mut ordered_next = Vec::with_capacity(k);
    let mut followed_next = Vec::with_capacity(k);
    for t in 0..panel.n_days() - 1 {
        let today = panel.ranked(t);
        let next = panel.ranked(t + 1);
        let depth = k.min(today.len()).min(next.len());
        ordered_next.clear();
        followed_next.clear();
        for j in 0..depth {
            let entrant = panel.first_day(next[j] as usize) == t + 1;
            let Some(f) = panel.cap(today[j] as usize, t + 1) else {
                break;
            };
            if entrant {
                break;
            }
            ordered_next.push(panel.cap(next[j] as usize, t + 1).unwrap().ln());
            followed_next.push(f.ln());
        }
        let valid = ordered_next.len();
        let inc = switching_increments(&ordered_next, &followed_next);
        for (j, d) in inc.iter().enumerate().take(reported) {
            if *d < NEGATIVE_TOLERANCE {
                return Err(Error::Internal(format!(
                    "negative rank-switching increment {d} at rank {} on day {t}",
                    j + 1
                )));
            }
            acc[j] += d.max(0.0);
        }
        for s in skipped_days.iter_mut().skip(valid) {
            *s += 1;
        }
        if valid == k && today.len() == k && next.len() == k {
            let r = inc[k - 1].abs();
            closure = Some(closure.map_or(r, |c: f64| c.max(r)));
        }
        lambda.push(acc.clone());
    }
    Ok(RankSwitchIntensity {
        k,
        lambda,
        skipped_days,
        max_closure_residual: closure,
    })
}
