use std::path::{Path, PathBuf};

use serde::Serialize;

use super::Options;
use crate::backtest::{self, BacktestConfig, Frequency, GridResults, GridRow};
use crate::error::{Error, Result};
use crate::macrostats::{self, StatsReport, Weighting};
use crate::market_data::{load_panel, EventKind, MarketPanel};
use crate::rankstats;
use crate::regression::{self, AttributionDataset, OlsResult};
use crate::report::{int, num, opt, save_json, SeriesReport, Table};
use crate::stats;
use crate::synthetic::{self, AtlasParams, StabilityReport, TRADING_DAYS_PER_YEAR};

pub const RESULTS_HEADER: [&str; 10] = [
    "window_start",
    "window_end",
    "p",
    "f",
    "final_wealth",
    "rel_log_return",
    "max_drawdown",
    "sharpe",
    "total_costs",
    "diversity_drawdown",
];

#[derive(Debug, Serialize)]
struct ParamsFile<'a> {
    params: &'a AtlasParams,
    stability: &'a StabilityReport,
}

fn atlas_params(o: &Options) -> Result<AtlasParams> {
    if let Some(path) = &o.params {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let params: AtlasParams = serde_json::from_str(&text)?;
        params.validate()?;
        return Ok(params);
    }
    let (mut params, _) = synthetic::default_atlas_params(o.n_or_default(), o.seed_or_default())?;
    let years = o.years_or_default();
    if years == 0 {
        return Err(Error::invalid("years must be at least 1"));
    }
    params.horizon = years * TRADING_DAYS_PER_YEAR;
    Ok(params)
}

/// Writes `panel.csv` and `params.json`.
pub fn simulate(o: &Options) -> Result<MarketPanel> {
    let params = atlas_params(o)?;
    let panel = synthetic::simulate_atlas(&params)?;
    let dir = o.out_dir()?;
    panel.save(&dir.join("panel.csv"))?;
    save_json(
        &dir.join("params.json"),
        &ParamsFile {
            params: &params,
            stability: &params.stability(),
        },
    )?;
    Ok(panel)
}

fn sample_days(panel: &MarketPanel) -> Vec<usize> {
    let mut days = panel.calendar().year_starts();
    if *days.last().unwrap() != panel.calendar().last() {
        days.push(panel.calendar().last());
    }
    days
}

fn date_str(panel: &MarketPanel, t: usize) -> String {
    panel.calendar().date(t).format("%Y-%m-%d").to_string()
}

#[derive(Debug, Clone, Serialize)]
pub struct EgrStats {
    pub dt: usize,
    pub periods: usize,
    pub total: f64,
    pub annualized_slope: f64,
    pub stats: StatsReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyzeSummary {
    pub n_days: usize,
    pub n_stocks: usize,
    pub k_effective: usize,
    pub egr: Vec<EgrStats>,
    pub frozen_cohort_slopes: Vec<Option<f64>>,
    pub random_cohort_mean_slopes: Vec<Option<f64>>,
    pub qv_terminal_first: f64,
    pub qv_terminal_last: f64,
    pub qv_rank_spearman: Option<f64>,
    pub lambda_rank_spearman: Option<f64>,
    pub joint_spearman: Option<f64>,
    pub entries: usize,
    pub exits: usize,
}

/// Effective top-`K`: the requested size capped at the largest universe.
pub fn effective_k(panel: &MarketPanel, k: usize) -> Result<usize> {
    if k < 1 {
        return Err(Error::invalid("K must be at least 1"));
    }
    let largest = (0..panel.n_days()).map(|t| panel.universe_size(t)).max().unwrap_or(0);
    Ok(k.min(largest))
}

fn load_input(o: &Options) -> Result<MarketPanel> {
    load_panel(o.input_path()?)
}

pub fn analyze(o: &Options) -> Result<AnalyzeSummary> {
    let panel = load_input(o)?;
    analyze_panel(&panel, o, &o.out_dir()?)
}

fn ranks_1_based(n: usize) -> Vec<f64> {
    (1..=n).map(|k| k as f64).collect()
}

pub fn analyze_panel(panel: &MarketPanel, o: &Options, dir: &Path) -> Result<AnalyzeSummary> {
    let k = effective_k(panel, o.k_or_default())?;
    let dts = o.dt_list()?;
    let subintervals = o.subintervals.unwrap_or(4);
    let batches = o.batches.unwrap_or(25);
    let joint_window = o.joint_window.unwrap_or(20);
    let max_lag = o.max_lag.unwrap_or(20);
    let winsor_q = o.winsor_q.unwrap_or(0.01);
    let seed = o.seed_or_default();
    let days = sample_days(panel);

    let ((entropy, (frozen, random)), ((egrs, qv), (transitions, (lambda, joint)))) = rayon::join(
        || {
            rayon::join(
                || macrostats::top_k_entropy_path(panel, k),
                || {
                    rayon::join(
                        || macrostats::frozen_cohort_paths(panel, k, subintervals),
                        || macrostats::random_cohort_paths(panel, k, panel.n_stocks(), subintervals, batches, seed),
                    )
                },
            )
        },
        || {
            rayon::join(
                || {
                    rayon::join(
                        || {
                            use rayon::prelude::*;
                            dts.par_iter()
                                .map(|&d| macrostats::cumulative_egr(panel, k, d, Weighting::Cap))
                                .collect::<Result<Vec<_>>>()
                        },
                        || rankstats::rank_quadratic_variation(panel, k),
                    )
                },
                || {
                    rayon::join(
                        || rankstats::rank_transition_stats(panel, k),
                        || {
                            rayon::join(
                                || {
                                    if k >= 2 {
                                        rankstats::rank_switch_intensity(panel, k).map(Some)
                                    } else {
                                        Ok(None)
                                    }
                                },
                                || macrostats::diversity_egr_joint(panel, k, joint_window),
                            )
                        },
                    )
                },
            )
        },
    );
    let (entropy, frozen, random, egrs, qv, transitions, lambda, joint) =
        (entropy?, frozen?, random?, egrs?, qv?, transitions?, lambda?, joint?);

    let mut cap_table = Table::new(&["date", "rank", "log10_rank", "log10_weight"]);
    for &t in &days {
        let w = panel.capitalization_weights(&panel.full_universe(t)?)?;
        let dist = macrostats::capital_distribution(w.weights());
        for (r, (x, y)) in dist.curve_points().into_iter().enumerate() {
            cap_table.push(vec![date_str(panel, t), int(r + 1), num(x), num(y)]);
        }
    }
    cap_table.save(&dir.join("capdist.csv"))?;

    SeriesReport::new((0..panel.n_days()).collect())
        .column("entropy", entropy.clone())
        .save(dir, "entropy_topK")?;

    let mut frozen_table = Table::new(&["subinterval", "t", "entropy"]);
    let mut slope_table = Table::new(&["protocol", "subinterval", "batch", "slope"]);
    for (s, path) in frozen.iter().enumerate() {
        for (j, h) in path.values.iter().enumerate() {
            frozen_table.push(vec![int(s), int(path.start + j), num(*h)]);
        }
        slope_table.push(vec!["frozen".into(), int(s), String::new(), opt(path.slope())]);
    }
    frozen_table.save(&dir.join("entropy_frozen.csv"))?;
    let mut random_table = Table::new(&["subinterval", "batch", "t", "entropy"]);
    let mut random_means = Vec::new();
    for (s, group) in random.iter().enumerate() {
        let mut slopes = Vec::new();
        for (b, path) in group.iter().enumerate() {
            for (j, h) in path.values.iter().enumerate() {
                random_table.push(vec![int(s), int(b), int(path.start + j), num(*h)]);
            }
            let slope = path.slope();
            slopes.extend(slope);
            slope_table.push(vec!["random".into(), int(s), int(b), opt(slope)]);
        }
        random_means.push((!slopes.is_empty()).then(|| stats::mean(&slopes)));
    }
    random_table.save(&dir.join("entropy_random.csv"))?;
    slope_table.save(&dir.join("cohort_slopes.csv"))?;

    let mut egr_stats = Vec::new();
    for series in &egrs {
        let mut t = Table::new(&["t", "gamma", "cumulative"]);
        for ((g, pg), c) in series.grid.iter().zip(&series.per_period).zip(&series.cumulative) {
            t.push(vec![int(g), num(*pg), num(*c)]);
        }
        t.save(&dir.join(format!("egr_dt{}.csv", series.dt)))?;
        let periods = series.periods();
        let dh: Vec<f64> = series.grid.windows(2).map(|w| entropy[w[1]] - entropy[w[0]]).collect();
        if periods.len() >= 2 {
            let lag = max_lag.min(periods.len() - 1);
            egr_stats.push(EgrStats {
                dt: series.dt,
                periods: periods.len(),
                total: series.total(),
                annualized_slope: series.cumulative[series.cumulative.len() - 1]
                    / (*series.grid.last().unwrap() as f64 / TRADING_DAYS_PER_YEAR as f64),
                stats: macrostats::series_stats(periods, lag, winsor_q, Some(&dh))?,
            });
        }
    }
    save_json(&dir.join("egr_stats.json"), &egr_stats)?;

    let mut qv_table = Table::new(&["t", "k", "qv"]);
    for &t in &days {
        for (r, v) in qv.qv[t].iter().enumerate() {
            qv_table.push(vec![int(t), int(r + 1), num(*v)]);
        }
    }
    qv_table.save(&dir.join("qv.csv"))?;

    let mut tr_table = Table::new(&[
        "k",
        "observations",
        "mean_change",
        "p_plus",
        "p_zero",
        "p_minus",
        "mean_change_smoothed",
        "p_plus_smoothed",
        "p_zero_smoothed",
        "p_minus_smoothed",
    ]);
    for r in 0..k {
        let (raw, sm) = (&transitions.raw, &transitions.smoothed);
        tr_table.push(vec![
            int(r + 1),
            int(transitions.observations[r]),
            num(raw.mean_change[r]),
            num(raw.p_plus[r]),
            num(raw.p_zero[r]),
            num(raw.p_minus[r]),
            num(sm.mean_change[r]),
            num(sm.p_plus[r]),
            num(sm.p_zero[r]),
            num(sm.p_minus[r]),
        ]);
    }
    tr_table.save(&dir.join("transitions.csv"))?;

    let mut lambda_table = Table::new(&["t", "k", "lambda"]);
    let mut terminal_table = Table::new(&["k", "lambda", "lambda_smoothed", "skipped_days"]);
    let mut lambda_rank_spearman = None;
    if let Some(lam) = &lambda {
        for &t in &days {
            for (r, v) in lam.lambda[t].iter().enumerate() {
                lambda_table.push(vec![int(t), int(r + 1), num(*v)]);
            }
        }
        let smoothed = lam.smoothed_terminal();
        for (r, (v, s)) in lam.terminal().iter().zip(&smoothed).enumerate() {
            terminal_table.push(vec![int(r + 1), num(*v), num(*s), int(lam.skipped_days[r])]);
        }
        lambda_rank_spearman = stats::spearman(&ranks_1_based(smoothed.len()), &smoothed);
    }
    lambda_table.save(&dir.join("lambda.csv"))?;
    terminal_table.save(&dir.join("lambda_terminal.csv"))?;

    let mut joint_table = Table::new(&["start", "end", "delta_gamma", "entropy_range", "entropy_change"]);
    for r in &joint.rows {
        joint_table.push(vec![
            int(r.start),
            int(r.end),
            num(r.delta_gamma),
            num(r.entropy_range),
            num(r.entropy_change),
        ]);
    }
    joint_table.save(&dir.join("joint.csv"))?;
    let mut bins_table = Table::new(&["entropy_range_mean", "delta_gamma_mean", "count"]);
    for b in &joint.bins {
        bins_table.push(vec![num(b.x_mean), num(b.y_mean), int(b.count)]);
    }
    bins_table.save(&dir.join("joint_bins.csv"))?;

    let events = panel.entry_exit_events();
    let mut ev_table = Table::new(&["date", "id", "kind", "weight"]);
    for e in &events {
        let kind = match e.kind {
            EventKind::Entry => "entry",
            EventKind::Exit => "exit",
        };
        ev_table.push(vec![date_str(panel, e.date), e.id.clone(), kind.into(), num(e.weight_at_event)]);
    }
    ev_table.save(&dir.join("entry_exit.csv"))?;

    let qv_terminal = qv.terminal();
    let summary = AnalyzeSummary {
        n_days: panel.n_days(),
        n_stocks: panel.n_stocks(),
        k_effective: k,
        egr: egr_stats,
        frozen_cohort_slopes: frozen.iter().map(|p| p.slope()).collect(),
        random_cohort_mean_slopes: random_means,
        qv_terminal_first: qv_terminal[0],
        qv_terminal_last: qv_terminal[k - 1],
        qv_rank_spearman: stats::spearman(&ranks_1_based(k), qv_terminal),
        lambda_rank_spearman,
        joint_spearman: if joint.rows.len() >= 2 {
            stats::spearman(&joint.delta_gamma(), &joint.entropy_range())
        } else {
            None
        },
        entries: events.iter().filter(|e| e.kind == EventKind::Entry).count(),
        exits: events.iter().filter(|e| e.kind == EventKind::Exit).count(),
    };
    save_json(&dir.join("analyze.json"), &summary)?;
    Ok(summary)
}

fn grid_config(o: &Options, panel: &MarketPanel) -> Result<BacktestConfig> {
    Ok(BacktestConfig {
        p_list: o.p_list()?,
        f_list: o.f_list()?,
        k: o.k_or_default(),
        cost_rate: o.cost_or_default(),
        initial_wealth: o.initial_wealth.unwrap_or(backtest::DEFAULT_INITIAL_WEALTH),
        dividend_mode: o.dividend_mode()?,
        windows: o.windows(panel.calendar())?,
    })
}

pub fn backtest(o: &Options) -> Result<GridResults> {
    let panel = load_input(o)?;
    backtest_panel(&panel, o, &o.out_dir()?)
}

pub fn backtest_panel(panel: &MarketPanel, o: &Options, dir: &Path) -> Result<GridResults> {
    let config = grid_config(o, panel)?;
    let results = backtest::run_grid(panel, &config)?;

    let mut table = Table::new(&RESULTS_HEADER);
    for r in &results.rows {
        table.push(vec![
            int(r.window_start),
            int(r.window_end),
            num(r.p),
            r.f.to_string(),
            num(r.final_wealth),
            num(r.rel_log_return),
            num(r.max_drawdown),
            opt(r.sharpe),
            num(r.total_costs),
            num(r.diversity_drawdown),
        ]);
    }
    table.save(&dir.join("results.csv"))?;

    let mut spread = Table::new(&["window_start", "window_end", "f", "spread"]);
    for s in &results.frequency_spread {
        spread.push(vec![int(s.window_start), int(s.window_end), s.f.to_string(), num(s.spread)]);
    }
    spread.save(&dir.join("frequency_spread.csv"))?;

    if o.wealth_curves.unwrap_or(false) {
        let wdir = dir.join("wealth");
        std::fs::create_dir_all(&wdir).map_err(|e| Error::io(&wdir, e))?;
        for s in &results.series {
            let mut t = Table::new(&["t", "Z"]);
            for (j, z) in s.wealth.iter().enumerate() {
                t.push(vec![int(s.start + j), num(*z)]);
            }
            t.save(&wdir.join(format!("p{}_f{}_w{}.csv", num(s.spec.p), s.spec.f, s.start)))?;
        }
    }
    save_json(&dir.join("backtest.json"), &config)?;
    Ok(results)
}

/// Reads a results CSV written by `backtest`.
pub fn read_results(path: &Path) -> Result<Vec<GridRow>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Validation(format!("{other:?}")),
    })?;
    let header = reader.headers()?.clone();
    if header.iter().ne(RESULTS_HEADER) {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header {}", RESULTS_HEADER.join(",")),
        });
    }
    let mut rows = Vec::new();
    for (j, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = j as u64 + 2;
        let bad = |col: &str| Error::Parse {
            line,
            message: format!("bad {col}"),
        };
        let float = |idx: usize| rec[idx].trim().parse::<f64>().map_err(|_| bad(RESULTS_HEADER[idx]));
        let uint = |idx: usize| rec[idx].trim().parse::<usize>().map_err(|_| bad(RESULTS_HEADER[idx]));
        rows.push(GridRow {
            window_start: uint(0)?,
            window_end: uint(1)?,
            p: float(2)?,
            f: Frequency::parse(&rec[3]).map_err(|_| bad("f"))?,
            final_wealth: float(4)?,
            rel_log_return: float(5)?,
            max_drawdown: float(6)?,
            sharpe: if rec[7].trim().is_empty() { None } else { Some(float(7)?) },
            total_costs: float(8)?,
            diversity_drawdown: float(9)?,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct Attribution {
    pub p: f64,
    pub f: Frequency,
    pub k: usize,
    pub fit: OlsResult,
}

pub fn regress(o: &Options) -> Result<Attribution> {
    let panel = load_input(o)?;
    let dir = o.out_dir()?;
    let path: PathBuf = o.results.clone().unwrap_or_else(|| dir.join("results.csv"));
    let rows = read_results(&path)?;
    regress_rows(&panel, &rows, o, &dir)
}

pub fn regress_rows(panel: &MarketPanel, rows: &[GridRow], o: &Options, dir: &Path) -> Result<Attribution> {
    let (p, f) = o.regress_target()?;
    let dataset: AttributionDataset = regression::build_attribution_dataset(panel, rows, p, f, o.k_or_default())?;
    let mut table = Table::new(&["window_start", "window_end", "rel_log_return", "delta_log_entropy", "delta_gamma"]);
    for r in &dataset.rows {
        table.push(vec![
            int(r.window_start),
            int(r.window_end),
            num(r.rel_log_return),
            num(r.delta_log_entropy),
            num(r.delta_gamma),
        ]);
    }
    table.save(&dir.join("attribution.csv"))?;
    let fit = dataset.fit()?;
    let out = Attribution {
        p,
        f,
        k: dataset.k,
        fit,
    };
    save_json(&dir.join("attribution.json"), &out)?;
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub source: String,
    pub analyze: AnalyzeSummary,
    pub windows: usize,
    pub grid_rows: usize,
    pub attribution: Attribution,
}

pub fn report(o: &Options) -> Result<Summary> {
    let dir = o.out_dir()?;
    let (panel, source) = match &o.input {
        Some(path) => (load_panel(path)?, path.display().to_string()),
        None => (simulate(o)?, "synthetic".to_string()),
    };
    let analyze = analyze_panel(&panel, o, &dir)?;
    let grid = backtest_panel(&panel, o, &dir)?;
    let attribution = regress_rows(&panel, &grid.rows, o, &dir)?;
    let summary = Summary {
        source,
        windows: grid_config(o, &panel)?.windows.len(),
        grid_rows: grid.rows.len(),
        analyze,
        attribution,
    };
    save_json(&dir.join("summary.json"), &summary)?;
    Ok(summary)
}
