//! Synthetic panels from the first-order rank-based (generalized Atlas) model.
//!
//! Log caps follow an Euler–Maruyama step with coefficients picked by the
//! rank at the start of the step:
//!
//! `Y_i(t+1) = Y_i(t) + gamma[rank_i(t)] * dt + sigma[rank_i(t)] * sqrt(dt) * Z_i(t)`
//!
//! Random numbers come from ChaCha20 seeded with `seed_from_u64(seed)`.
//! Normals use the Box–Muller transform on pairs of open-interval uniforms
//! built from the top 53 bits of `next_u64`; both outputs of a pair are used.
//! The universe is fixed: no entries, exits or delist returns.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market_data::{MarketPanel, StockSeries, TradingCalendar};

pub const TRADING_DAYS_PER_YEAR: usize = 252;
const SYNTHETIC_START_YEAR: i32 = 2000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtlasParams {
    pub n: usize,
    /// Drift by rank, index 0 is the largest stock.
    pub gamma: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Step size in years.
    pub dt: f64,
    /// Number of steps; the panel has `horizon + 1` days.
    pub horizon: usize,
    pub init_log_caps: Vec<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    /// `sum_{k <= m} (mean(gamma) - gamma_k)` for `m = 1..=n`.
    pub partial_sums: Vec<f64>,
    pub stable: bool,
}

impl AtlasParams {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::invalid("n must be ≥ 2"));
        }
        if self.gamma.len() != self.n || self.sigma.len() != self.n || self.init_log_caps.len() != self.n {
            return Err(Error::invalid("gamma, sigma and init_log_caps must have length n"));
        }
        if self.sigma.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::invalid("every sigma must be positive"));
        }
        if self.gamma.iter().chain(&self.init_log_caps).any(|v| !v.is_finite()) {
            return Err(Error::invalid("gamma and init_log_caps must be finite"));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::invalid("dt must be positive"));
        }
        if self.horizon < 1 {
            return Err(Error::invalid("horizon must be ≥ 1"));
        }
        Ok(())
    }

    /// Ergodicity check for the rank gaps: every top-`m` block (`m < n`) must
    /// grow slower than the average.
    pub fn stability(&self) -> StabilityReport {
        let g_bar = self.gamma.iter().sum::<f64>() / self.gamma.len() as f64;
        let mut acc = 0.0;
        let partial_sums: Vec<f64> = self
            .gamma
            .iter()
            .map(|g| {
                acc += g_bar - g;
                acc
            })
            .collect();
        let stable = partial_sums[..partial_sums.len() - 1].iter().all(|s| *s > 0.0);
        StabilityReport {
            partial_sums,
            stable,
        }
    }
}

/// Linear rank profile: drifts rise from -0.08 at the top to +0.08 at the
/// bottom, volatilities rise from 0.15 to 0.40; daily steps for ten years;
/// initial caps log-spaced over `[1e8, 1e11]`.
pub fn default_atlas_params(n: usize, seed: u64) -> Result<(AtlasParams, StabilityReport)> {
    if n < 2 {
        return Err(Error::invalid("n must be ≥ 2"));
    }
    let span = (n - 1) as f64;
    let gamma = (0..n)
        .map(|k| 0.08 * (2.0 * k as f64 / span - 1.0))
        .collect();
    let sigma = (0..n).map(|k| 0.15 + 0.25 * k as f64 / span).collect();
    let (hi, lo) = (1e11f64.ln(), 1e8f64.ln());
    let init_log_caps = (0..n).map(|i| hi - (hi - lo) * i as f64 / span).collect();
    let params = AtlasParams {
        n,
        gamma,
        sigma,
        dt: 1.0 / TRADING_DAYS_PER_YEAR as f64,
        horizon: 10 * TRADING_DAYS_PER_YEAR,
        init_log_caps,
        seed,
    };
    let report = params.stability();
    Ok((params, report))
}

/// Standard normals by Box–Muller over a ChaCha20 stream.
pub struct NormalSource {
    rng: ChaCha20Rng,
    spare: Option<f64>,
}

impl NormalSource {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha20Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    /// Uniform on the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }
}

fn stock_ids(n: usize) -> Vec<String> {
    let width = n.to_string().len();
    (0..n).map(|i| format!("S{i:0width$}")).collect()
}

/// Simulates log-cap paths. Returned as `paths[i][t]`.
pub fn simulate_log_caps(params: &AtlasParams) -> Result<Vec<Vec<f64>>> {
    params.validate()?;
    let n = params.n;
    let sqrt_dt = params.dt.sqrt();
    let mut normals = NormalSource::new(params.seed);
    let mut paths: Vec<Vec<f64>> = params
        .init_log_caps
        .iter()
        .map(|&y| {
            let mut v = Vec::with_capacity(params.horizon + 1);
            v.push(y);
            v
        })
        .collect();
    let mut y = params.init_log_caps.clone();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rank = vec![0usize; n];
    for _ in 0..params.horizon {
        order.sort_unstable_by(|&a, &b| y[b].total_cmp(&y[a]).then(a.cmp(&b)));
        for (k, &i) in order.iter().enumerate() {
            rank[i] = k;
        }
        for i in 0..n {
            let k = rank[i];
            y[i] += params.gamma[k] * params.dt + params.sigma[k] * sqrt_dt * normals.normal();
            paths[i].push(y[i]);
        }
    }
    Ok(paths)
}

pub fn simulate_atlas(params: &AtlasParams) -> Result<MarketPanel> {
    let paths = simulate_log_caps(params)?;
    let calendar = TradingCalendar::synthetic(
        params.horizon + 1,
        TRADING_DAYS_PER_YEAR,
        SYNTHETIC_START_YEAR,
    )?;
    let stocks = stock_ids(params.n)
        .into_iter()
        .zip(paths)
        .map(|(id, path)| {
            let caps: Vec<f64> = path.iter().map(|y| y.exp()).collect();
            let mut rets = Vec::with_capacity(caps.len());
            rets.push(None);
            rets.extend(caps.windows(2).map(|w| Some(w[1] / w[0] - 1.0)));
            StockSeries::new(id, 0, caps, rets, None)
        })
        .collect::<Result<Vec<_>>>()?;
    MarketPanel::from_series(calendar, stocks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_stock(sigma: f64, seed: u64) -> AtlasParams {
        AtlasParams {
            n: 2,
            gamma: vec![0.0, 0.0],
            sigma: vec![sigma, sigma],
            dt: 1.0 / 252.0,
            horizon: 252,
            init_log_caps: vec![10.0, 9.0],
            seed,
        }
    }

    #[test]
    fn degenerate_diffusion_is_constant() {
        let p = simulate_atlas(&two_stock(1e-12, 3)).unwrap();
        for i in 0..2 {
            let c0 = p.cap(i, 0).unwrap();
            for t in 0..p.n_days() {
                assert!((p.cap(i, t).unwrap() / c0 - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn same_seed_same_panel() {
        let a = simulate_atlas(&two_stock(0.2, 7)).unwrap();
        let b = simulate_atlas(&two_stock(0.2, 7)).unwrap();
        assert_eq!(a, b);
        let c = simulate_atlas(&two_stock(0.2, 8)).unwrap();
        assert_ne!(a, c);
        assert!(a.has_fixed_universe());
        assert!(a.entry_exit_events().is_empty());
    }

    #[test]
    fn default_params() {
        let (p, rep) = default_atlas_params(2, 0).unwrap();
        assert!(p.gamma[1] > p.gamma[0]);
        assert_eq!(p.gamma, vec![-0.08, 0.08]);
        assert!(rep.stable);
        let (p, rep) = default_atlas_params(10, 0).unwrap();
        assert!(rep.stable);
        assert_eq!(rep.partial_sums.len(), 10);
        assert!(rep.partial_sums[9].abs() < 1e-15);
        assert_eq!(p.horizon, 2520);
        assert!((p.init_log_caps[0] - 1e11f64.ln()).abs() < 1e-12);
        assert!((p.init_log_caps[9] - 1e8f64.ln()).abs() < 1e-12);
        assert!(default_atlas_params(1, 0).is_err());
    }

    #[test]
    fn unstable_profile_is_reported() {
        let (mut p, _) = default_atlas_params(5, 0).unwrap();
        p.gamma.reverse();
        assert!(!p.stability().stable);
    }

    #[test]
    fn invalid_params() {
        let mut p = two_stock(0.2, 1);
        p.sigma[0] = 0.0;
        assert!(simulate_atlas(&p).is_err());
        let mut p = two_stock(0.2, 1);
        p.horizon = 0;
        assert!(simulate_atlas(&p).is_err());
        let mut p = two_stock(0.2, 1);
        p.dt = -1.0;
        assert!(simulate_atlas(&p).is_err());
    }

    #[test]
    fn normals_have_unit_moments() {
        let mut src = NormalSource::new(42);
        let xs: Vec<f64> = (0..200_000).map(|_| src.normal()).collect();
        let m = crate::stats::mean(&xs);
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64;
        assert!(m.abs() < 4.0 / (xs.len() as f64).sqrt());
        assert!((v - 1.0).abs() < 0.02);
    }

    #[test]
    fn frozen_ranks_give_rank_moments() {
        // Initial gaps of six decades keep every stock on its starting rank.
        let n = 4;
        let params = AtlasParams {
            n,
            gamma: vec![-0.3, -0.1, 0.1, 0.3],
            sigma: vec![0.1, 0.2, 0.3, 0.4],
            dt: 1.0 / 252.0,
            horizon: 2000,
            init_log_caps: (0..n).map(|i| 40.0 - 14.0 * i as f64).collect(),
            seed: 11,
        };
        let paths = simulate_log_caps(&params).unwrap();
        for (k, path) in paths.iter().enumerate() {
            let inc: Vec<f64> = path.windows(2).map(|w| w[1] - w[0]).collect();
            let m = crate::stats::mean(&inc);
            let sd = crate::stats::sample_sd(&inc);
            let se_mean = sd / (inc.len() as f64).sqrt();
            let expected_var = params.sigma[k].powi(2) * params.dt;
            // variance of the sample variance for Gaussian data is 2 s^4 / (n - 1)
            let se_var = expected_var * (2.0 / (inc.len() as f64 - 1.0)).sqrt();
            assert!((m - params.gamma[k] * params.dt).abs() < 4.0 * se_mean);
            assert!((sd * sd - expected_var).abs() < 4.0 * se_var);
        }
    }
}
