//! Command-line driver.
//!
//! Every flag can also be given in a flat JSON file passed with `--config`,
//! keyed by the flag name (`"p-grid": "0,0.5,1"`); flags win over the file.

mod commands;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::backtest::{DividendMode, Frequency};
use crate::error::{Error, Result};

pub use commands::{analyze, backtest, regress, report, simulate};

const OUTPUTS_SIMULATE: &str = "\
Outputs:
  panel.csv    date,id,cap,total_return,delist_return
  params.json  model parameters and the rank-gap stability report";

const OUTPUTS_ANALYZE: &str = "\
Outputs:
  capdist.csv          date,rank,log10_rank,log10_weight   (year starts and last day)
  entropy_topK.csv     t,entropy                            (+ .json mirror)
  entropy_frozen.csv   subinterval,t,entropy
  entropy_random.csv   subinterval,batch,t,entropy
  cohort_slopes.csv    protocol,subinterval,batch,slope
  egr_dt<d>.csv        t,gamma,cumulative                   (one per --dt value)
  egr_stats.json       moments, autocorrelations and correlation with entropy change
  qv.csv               t,k,qv                               (year starts and last day)
  transitions.csv      k,observations,mean_change,p_plus,p_zero,p_minus,<same>_smoothed
  lambda.csv           t,k,lambda                           (year starts and last day)
  lambda_terminal.csv  k,lambda,lambda_smoothed,skipped_days
  joint.csv            start,end,delta_gamma,entropy_range,entropy_change
  joint_bins.csv       entropy_range_mean,delta_gamma_mean,count
  entry_exit.csv       date,id,kind,weight
  analyze.json         effective K and headline statistics";

const OUTPUTS_BACKTEST: &str = "\
Outputs:
  results.csv           window_start,window_end,p,f,final_wealth,rel_log_return,max_drawdown,sharpe,total_costs,diversity_drawdown
  frequency_spread.csv  window_start,window_end,f,spread
  wealth/p<p>_f<f>_w<start>.csv   t,Z   (with --wealth-curves)
  backtest.json         grid configuration";

const OUTPUTS_REGRESS: &str = "\
Outputs:
  attribution.csv   window_start,window_end,rel_log_return,delta_log_entropy,delta_gamma
  attribution.json  coefficients, standard errors, R², adjusted R², n";

const OUTPUTS_REPORT: &str = "\
Runs simulate (unless --input is given), analyze, backtest and regress into
one directory and writes summary.json.";

#[derive(Debug, Parser)]
#[command(name = "macrolab", version, about = "Macroscopic equity market statistics and diversity-weighted backtests")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a rank-based Atlas panel.
    #[command(after_help = OUTPUTS_SIMULATE)]
    Simulate(Options),
    /// Capital distribution, diversity, excess growth and rank statistics.
    #[command(after_help = OUTPUTS_ANALYZE)]
    Analyze(Options),
    /// Diversity-weighted portfolio grid over yearly windows.
    #[command(after_help = OUTPUTS_BACKTEST)]
    Backtest(Options),
    /// Attribution regression of relative performance.
    #[command(after_help = OUTPUTS_REGRESS)]
    Regress(Options),
    /// Full pipeline.
    #[command(after_help = OUTPUTS_REPORT)]
    Report(Options),
}

#[derive(Debug, Clone, Default, Args, Deserialize, PartialEq)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct Options {
    /// Flat JSON file of defaults for any flag.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Panel CSV to read.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output directory.
    #[arg(long, env = "MACROLAB_OUT")]
    pub out: Option<PathBuf>,
    /// Model parameters JSON for simulate (instead of --n).
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Number of simulated stocks [default: 1000].
    #[arg(long)]
    pub n: Option<usize>,
    /// Simulated years of 252 trading days [default: 10].
    #[arg(long)]
    pub years: Option<usize>,
    /// Random seed [default: 7].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Top-K universe size [default: 500].
    #[arg(long)]
    pub k: Option<usize>,
    /// Excess-growth grid spacings in days [default: 1,5,20,60].
    #[arg(long)]
    pub dt: Option<String>,
    /// Diversity exponents, comma list or lo:step:hi [default: 0,0.25,0.5,0.75,1].
    #[arg(long)]
    pub p_grid: Option<String>,
    /// Rebalance frequencies in days or inf [default: 1,2,5,10,25,50,125,inf].
    #[arg(long)]
    pub f_grid: Option<String>,
    /// Proportional transaction cost [default: 0.0025].
    #[arg(long)]
    pub cost: Option<f64>,
    /// calendar-year, or explicit start:end pairs separated by commas.
    #[arg(long)]
    pub windows: Option<String>,
    /// cash-bucket or daily-reinvest [default: cash-bucket].
    #[arg(long)]
    pub dividend_mode: Option<String>,
    /// Initial wealth of every run [default: 1000].
    #[arg(long)]
    pub initial_wealth: Option<f64>,
    /// Worker threads; 0 uses all cores.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Subintervals for frozen and random cohorts [default: 4].
    #[arg(long)]
    pub subintervals: Option<usize>,
    /// Random cohort batches per subinterval [default: 25].
    #[arg(long)]
    pub batches: Option<usize>,
    /// Window length in days for the diversity/excess-growth table [default: 20].
    #[arg(long)]
    pub joint_window: Option<usize>,
    /// Autocorrelation lags in excess-growth statistics [default: 20].
    #[arg(long)]
    pub max_lag: Option<usize>,
    /// Winsorization quantile for correlations [default: 0.01].
    #[arg(long)]
    pub winsor_q: Option<f64>,
    /// Also write one wealth curve per run.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub wealth_curves: Option<bool>,
    /// Backtest results CSV for regress [default: <out>/results.csv].
    #[arg(long)]
    pub results: Option<PathBuf>,
    /// Diversity exponent regressed [default: 0].
    #[arg(long)]
    pub p: Option<f64>,
    /// Rebalance frequency regressed [default: 10].
    #[arg(long)]
    pub f: Option<String>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident; $($field:ident),* $(,)?) => {
        $( if $dst.$field.is_none() { $dst.$field = $src.$field.clone(); } )*
    };
}

impl Options {
    /// Fills unset fields from `other`.
    pub fn or(mut self, other: &Options) -> Options {
        overlay!(self, other; input, out, params, n, years, seed, k, dt, p_grid, f_grid, cost,
            windows, dividend_mode, initial_wealth, threads, subintervals, batches,
            joint_window, max_lag, winsor_q, wealth_curves, results, p, f);
        self
    }

    /// Applies the `--config` file, if any.
    pub fn resolve(self) -> Result<Options> {
        match &self.config {
            None => Ok(self),
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                let file: Options = serde_json::from_str(&text)?;
                Ok(self.or(&file))
            }
        }
    }

    pub fn out_dir(&self) -> Result<PathBuf> {
        let dir = self.out.clone().unwrap_or_else(|| PathBuf::from("out"));
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(dir)
    }

    pub fn input_path(&self) -> Result<&Path> {
        self.input
            .as_deref()
            .ok_or_else(|| Error::invalid("--input is required"))
    }

    pub fn n_or_default(&self) -> usize {
        self.n.unwrap_or(1000)
    }

    pub fn years_or_default(&self) -> usize {
        self.years.unwrap_or(10)
    }

    pub fn seed_or_default(&self) -> u64 {
        self.seed.unwrap_or(7)
    }

    pub fn k_or_default(&self) -> usize {
        self.k.unwrap_or(crate::backtest::DEFAULT_K)
    }

    pub fn dt_list(&self) -> Result<Vec<usize>> {
        let raw = self.dt.as_deref().unwrap_or("1,5,20,60");
        let list = split(raw)
            .map(|s| {
                s.parse::<usize>()
                    .ok()
                    .filter(|d| *d >= 1)
                    .ok_or_else(|| Error::invalid(format!("bad dt '{s}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        nonempty(list, "--dt")
    }

    pub fn p_list(&self) -> Result<Vec<f64>> {
        parse_p_grid(self.p_grid.as_deref().unwrap_or("0,0.25,0.5,0.75,1"))
    }

    pub fn f_list(&self) -> Result<Vec<Frequency>> {
        let raw = self.f_grid.as_deref().unwrap_or("1,2,5,10,25,50,125,inf");
        let list = split(raw).map(Frequency::parse).collect::<Result<Vec<_>>>()?;
        nonempty(list, "--f-grid")
    }

    pub fn cost_or_default(&self) -> f64 {
        self.cost.unwrap_or(crate::backtest::DEFAULT_COST_RATE)
    }

    pub fn dividend_mode(&self) -> Result<DividendMode> {
        self.dividend_mode
            .as_deref()
            .map_or(Ok(DividendMode::CashBucket), str::parse)
    }

    pub fn windows(&self, calendar: &crate::TradingCalendar) -> Result<Vec<(usize, usize)>> {
        match self.windows.as_deref().unwrap_or("calendar-year") {
            "calendar-year" => {
                let w = calendar.calendar_year_windows();
                nonempty(w, "calendar-year windows")
            }
            raw => {
                let list = split(raw)
                    .map(|pair| {
                        let (a, b) = pair
                            .split_once(':')
                            .ok_or_else(|| Error::invalid(format!("bad window '{pair}'")))?;
                        let start = a.trim().parse::<usize>();
                        let end = b.trim().parse::<usize>();
                        match (start, end) {
                            (Ok(s), Ok(e)) => Ok((s, e)),
                            _ => Err(Error::invalid(format!("bad window '{pair}'"))),
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                nonempty(list, "--windows")
            }
        }
    }

    pub fn regress_target(&self) -> Result<(f64, Frequency)> {
        let p = self.p.unwrap_or(0.0);
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid(format!("p={p} outside [0, 1]")));
        }
        let f = Frequency::parse(self.f.as_deref().unwrap_or("10"))?;
        Ok((p, f))
    }
}

fn split(raw: &str) -> impl Iterator<Item = &str> {
    raw.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn nonempty<T>(list: Vec<T>, what: &str) -> Result<Vec<T>> {
    if list.is_empty() {
        return Err(Error::invalid(format!("{what} is empty")));
    }
    Ok(list)
}

/// Comma list whose items are numbers or inclusive `lo:step:hi` ranges,
/// expanded as `lo + j * step`.
pub fn parse_p_grid(raw: &str) -> Result<Vec<f64>> {
    let bad = |s: &str| Error::invalid(format!("bad p-grid item '{s}'"));
    let mut out = Vec::new();
    for item in split(raw) {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [x] => out.push(x.parse::<f64>().map_err(|_| bad(item))?),
            [lo, step, hi] => {
                let (lo, step, hi) = (
                    lo.parse::<f64>().map_err(|_| bad(item))?,
                    step.parse::<f64>().map_err(|_| bad(item))?,
                    hi.parse::<f64>().map_err(|_| bad(item))?,
                );
                if !(step > 0.0) || hi < lo {
                    return Err(bad(item));
                }
                let count = ((hi - lo) / step + 1e-9).floor() as usize;
                out.extend((0..=count).map(|j| (lo + j as f64 * step).min(hi)));
            }
            _ => return Err(bad(item)),
        }
    }
    if let Some(p) = out.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::invalid(format!("p={p} outside [0, 1]")));
    }
    nonempty(out, "--p-grid")
}

/// Parses `args` and runs the command inside a pool of `--threads` workers.
pub fn run<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::invalid(e.to_string()))?;
    execute(cli.command)
}

pub fn execute(command: Command) -> Result<()> {
    let (opts, job): (Options, fn(&Options) -> Result<()>) = match command {
        Command::Simulate(o) => (o, |o| simulate(o).map(|_| ())),
        Command::Analyze(o) => (o, |o| analyze(o).map(|_| ())),
        Command::Backtest(o) => (o, |o| backtest(o).map(|_| ())),
        Command::Regress(o) => (o, |o| regress(o).map(|_| ())),
        Command::Report(o) => (o, |o| report(o).map(|_| ())),
    };
    let opts = opts.resolve()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Internal(e.to_string()))?;
    pool.install(|| job(&opts))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p_grid_forms() {
        assert_eq!(parse_p_grid("0, 0.5,1").unwrap(), vec![0.0, 0.5, 1.0]);
        let g = parse_p_grid("0:0.01:1").unwrap();
        assert_eq!(g.len(), 101);
        assert_eq!(*g.last().unwrap(), 1.0);
        assert!(parse_p_grid("1.5").is_err());
        assert!(parse_p_grid("").is_err());
    }

    #[test]
    fn flags_override_config() {
        let file: Options = serde_json::from_str(r#"{"k": 50, "cost": 0.01, "p-grid": "0,1"}"#).unwrap();
        let cli = Options {
            k: Some(10),
            ..Options::default()
        };
        let merged = cli.or(&file);
        assert_eq!(merged.k, Some(10));
        assert_eq!(merged.cost, Some(0.01));
        assert_eq!(merged.p_list().unwrap(), vec![0.0, 1.0]);
        assert!(serde_json::from_str::<Options>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn windows_and_frequencies() {
        let o = Options {
            windows: Some("0:10, 10:20".into()),
            f_grid: Some("1,inf".into()),
            ..Options::default()
        };
        let cal = crate::TradingCalendar::synthetic(30, 252, 2000).unwrap();
        assert_eq!(o.windows(&cal).unwrap(), vec![(0, 10), (10, 20)]);
        assert_eq!(o.f_list().unwrap(), vec![Frequency::Every(1), Frequency::Never]);
        assert_eq!(o.regress_target().unwrap(), (0.0, Frequency::Every(10)));
    }
}
