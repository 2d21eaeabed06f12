//! Macroscopic analysis of equity markets.
//!
//! The crate works on an immutable daily [`MarketPanel`] of capitalizations and
//! total returns, loaded from panel-CSV or generated by the rank-based Atlas
//! simulator in [`synthetic`]. On top of the panel it computes capital
//! distribution curves and diversity ([`macrostats`]), excess growth rates,
//! rank-indexed statistics ([`rankstats`]), diversity-weighted portfolio
//! backtests with proportional costs ([`backtest`]) and the OLS attribution of
//! relative performance ([`regression`]).

pub mod backtest;
pub mod cli;
pub mod error;
pub mod macrostats;
pub mod market_data;
pub mod rankstats;
pub mod regression;
pub mod report;
pub mod stats;
pub mod synthetic;

pub use error::{Error, Result};
pub use market_data::{MarketPanel, TradingCalendar, Universe, WeightVector};
