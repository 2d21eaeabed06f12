//! Daily market panel: calendar, per-stock capitalization and return series,
//! ranked universes and capitalization weights.
//!
//! ## panel-CSV
//!
//! | column          | example      | notes                                          |
//! |-----------------|--------------|------------------------------------------------|
//! | `date`          | `2001-03-14` | ISO-8601                                        |
//! | `id`            | `AAPL`       | one contiguous presence interval per id         |
//! | `cap`           | `2.5e9`      | strictly positive                               |
//! | `total_return`  | `0.0123`     | simple return earned on that day; may be empty |
//! | `delist_return` | `-0.3`       | only on a stock's last row; may be empty       |
//!
//! Rows may come in any order. The trading calendar is the sorted set of
//! distinct dates in the file.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use serde::Serialize;

use crate::error::{Error, Result};

pub const PANEL_HEADER: [&str; 5] = ["date", "id", "cap", "total_return", "delist_return"];

const DATE_FORMAT: &str = "%Y-%m-%d";

/// Strictly increasing list of trading dates; ordinal 0 is the first date.
#[derive(Debug, Clone, PartialEq)]
pub struct TradingCalendar {
    dates: Vec<NaiveDate>,
    index: HashMap<NaiveDate, usize>,
}

impl TradingCalendar {
    pub fn new(dates: Vec<NaiveDate>) -> Result<Self> {
        if dates.is_empty() {
            return Err(Error::Validation("calendar has no dates".into()));
        }
        if let Some(w) = dates.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::Validation(format!(
                "calendar not strictly increasing at {} -> {}",
                w[0], w[1]
            )));
        }
        let index = dates.iter().enumerate().map(|(t, d)| (*d, t)).collect();
        Ok(Self { dates, index })
    }

    /// Synthetic calendar with exactly `days_per_year` weekdays in each
    /// calendar year, starting on the first weekday of `start_year`.
    pub fn synthetic(days: usize, days_per_year: usize, start_year: i32) -> Result<Self> {
        if days_per_year == 0 || days_per_year > 260 {
            return Err(Error::invalid("days_per_year must be in 1..=260"));
        }
        let mut dates = Vec::with_capacity(days);
        let mut year = start_year;
        while dates.len() < days {
            let mut d = NaiveDate::from_ymd_opt(year, 1, 1)
                .ok_or_else(|| Error::invalid(format!("year {year} out of range")))?;
            let mut taken = 0;
            while taken < days_per_year && dates.len() < days {
                if d.weekday().number_from_monday() <= 5 {
                    dates.push(d);
                    taken += 1;
                }
                d = d.succ_opt().ok_or_else(|| Error::invalid("date overflow"))?;
            }
            year += 1;
        }
        Self::new(dates)
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn last(&self) -> usize {
        self.dates.len() - 1
    }

    pub fn date(&self, t: usize) -> NaiveDate {
        self.dates[t]
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn ordinal(&self, date: NaiveDate) -> Option<usize> {
        self.index.get(&date).copied()
    }

    /// Ordinals of the first trading day of each calendar year.
    pub fn year_starts(&self) -> Vec<usize> {
        let mut starts = vec![0];
        for t in 1..self.dates.len() {
            if self.dates[t].year() != self.dates[t - 1].year() {
                starts.push(t);
            }
        }
        starts
    }

    /// Calendar-year windows `[start, end]` sharing endpoints: each window
    /// starts on the first trading day of a year and ends on the first trading
    /// day of the next, the last one ending on the final date.
    pub fn calendar_year_windows(&self) -> Vec<(usize, usize)> {
        let mut bounds = self.year_starts();
        if *bounds.last().unwrap() != self.last() {
            bounds.push(self.last());
        }
        bounds.windows(2).map(|w| (w[0], w[1])).collect()
    }
}

/// One stock's contiguous presence interval.
#[derive(Debug, Clone, PartialEq)]
pub struct StockSeries {
    id: String,
    first_day: usize,
    caps: Vec<f64>,
    total_returns: Vec<Option<f64>>,
    delist_return: Option<f64>,
}

impl StockSeries {
    pub fn new(
        id: impl Into<String>,
        first_day: usize,
        caps: Vec<f64>,
        total_returns: Vec<Option<f64>>,
        delist_return: Option<f64>,
    ) -> Result<Self> {
        let id = id.into();
        if caps.is_empty() {
            return Err(Error::Validation(format!("stock {id} has no observations")));
        }
        if caps.len() != total_returns.len() {
            return Err(Error::Validation(format!(
                "stock {id}: {} caps but {} returns",
                caps.len(),
                total_returns.len()
            )));
        }
        if let Some(c) = caps.iter().find(|c| !(c.is_finite() && **c > 0.0)) {
            return Err(Error::Validation(format!("stock {id}: nonpositive cap {c}")));
        }
        Ok(Self {
            id,
            first_day,
            caps,
            total_returns,
            delist_return,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn first_day(&self) -> usize {
        self.first_day
    }

    pub fn last_day(&self) -> usize {
        self.first_day + self.caps.len() - 1
    }
}

/// Stocks present on one day, ranked by descending cap with ties broken by
/// ascending identifier.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Universe {
    pub date: usize,
    pub members: Vec<usize>,
}

impl Universe {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    pub universe: Universe,
    pub weights: Vec<f64>,
}

impl WeightVector {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn members(&self) -> &[usize] {
        &self.universe.members
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Entry,
    Exit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntryExitEvent {
    pub kind: EventKind,
    pub stock: usize,
    pub id: String,
    pub date: usize,
    pub weight_at_event: f64,
}

/// One panel-CSV row after parsing.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelRecord {
    pub date: NaiveDate,
    pub id: String,
    pub cap: f64,
    pub total_return: Option<f64>,
    pub delist_return: Option<f64>,
}

/// Immutable daily market panel.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketPanel {
    calendar: TradingCalendar,
    stocks: Vec<StockSeries>,
    id_index: HashMap<String, usize>,
    ranked: Vec<Vec<u32>>,
}

impl MarketPanel {
    /// Builds a panel from per-stock series. Stocks are reordered by ascending
    /// identifier so that index order doubles as the tie-break order.
    pub fn from_series(calendar: TradingCalendar, mut stocks: Vec<StockSeries>) -> Result<Self> {
        stocks.sort_by(|a, b| a.id.cmp(&b.id));
        if let Some(w) = stocks.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(Error::Validation(format!("duplicate stock id {}", w[0].id)));
        }
        if stocks.len() > u32::MAX as usize {
            return Err(Error::Validation("too many stocks".into()));
        }
        let n_days = calendar.len();
        for s in &stocks {
            if s.last_day() >= n_days {
                return Err(Error::Validation(format!(
                    "stock {} extends past the calendar",
                    s.id
                )));
            }
            if s.delist_return.is_some_and(|r| !r.is_finite() || r < -1.0) {
                return Err(Error::Validation(format!(
                    "stock {}: delist_return must be finite and >= -1",
                    s.id
                )));
            }
        }

        let mut ranked: Vec<Vec<u32>> = vec![Vec::new(); n_days];
        for (i, s) in stocks.iter().enumerate() {
            for t in s.first_day..=s.last_day() {
                ranked[t].push(i as u32);
            }
        }
        for day in ranked.iter_mut().enumerate() {
            let (t, members) = day;
            members.sort_unstable_by(|&a, &b| {
                let ca = stocks[a as usize].caps[t - stocks[a as usize].first_day];
                let cb = stocks[b as usize].caps[t - stocks[b as usize].first_day];
                cb.total_cmp(&ca).then(a.cmp(&b))
            });
        }
        let id_index = stocks
            .iter()
            .enumerate()
            .map(|(i, s)| (s.id.clone(), i))
            .collect();
        Ok(Self {
            calendar,
            stocks,
            id_index,
            ranked,
        })
    }

    /// Builds and validates a panel from unordered rows.
    pub fn from_records(records: Vec<PanelRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::Validation("panel has no rows".into()));
        }
        let mut dates: Vec<NaiveDate> = records.iter().map(|r| r.date).collect();
        dates.sort_unstable();
        dates.dedup();
        let calendar = TradingCalendar::new(dates)?;

        let mut by_id: BTreeMap<String, BTreeMap<usize, PanelRecord>> = BTreeMap::new();
        let mut duplicates = Vec::new();
        for r in records {
            let t = calendar.ordinal(r.date).expect("calendar built from rows");
            let rows = by_id.entry(r.id.clone()).or_default();
            if rows.contains_key(&t) {
                duplicates.push(format!("({}, {})", r.id, r.date));
            } else {
                rows.insert(t, r);
            }
        }
        if !duplicates.is_empty() {
            return Err(Error::Validation(format!(
                "duplicate (id, date): {}",
                duplicates.join(", ")
            )));
        }

        let mut gaps = Vec::new();
        let mut misplaced_delist = Vec::new();
        let mut stocks = Vec::with_capacity(by_id.len());
        for (id, rows) in by_id {
            let first = *rows.keys().next().unwrap();
            let last = *rows.keys().next_back().unwrap();
            if last - first + 1 != rows.len() {
                for t in first..=last {
                    if !rows.contains_key(&t) {
                        gaps.push(format!("({}, {})", id, calendar.date(t)));
                    }
                }
                continue;
            }
            let mut caps = Vec::with_capacity(rows.len());
            let mut rets = Vec::with_capacity(rows.len());
            let mut delist = None;
            for (t, r) in rows {
                caps.push(r.cap);
                rets.push(r.total_return);
                if let Some(d) = r.delist_return {
                    if t == last {
                        delist = Some(d);
                    } else {
                        misplaced_delist.push(format!("({}, {})", id, r.date));
                    }
                }
            }
            stocks.push(StockSeries::new(id, first, caps, rets, delist)?);
        }
        if !gaps.is_empty() {
            return Err(Error::Validation(format!(
                "gap in presence interval: {}",
                gaps.join(", ")
            )));
        }
        if !misplaced_delist.is_empty() {
            return Err(Error::Validation(format!(
                "delist_return only allowed on a stock's last row: {}",
                misplaced_delist.join(", ")
            )));
        }
        Self::from_series(calendar, stocks)
    }

    pub fn calendar(&self) -> &TradingCalendar {
        &self.calendar
    }

    pub fn n_days(&self) -> usize {
        self.calendar.len()
    }

    pub fn n_stocks(&self) -> usize {
        self.stocks.len()
    }

    pub fn stock_id(&self, i: usize) -> &str {
        &self.stocks[i].id
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.id_index.get(id).copied()
    }

    pub fn first_day(&self, i: usize) -> usize {
        self.stocks[i].first_day
    }

    pub fn last_day(&self, i: usize) -> usize {
        self.stocks[i].last_day()
    }

    pub fn is_present(&self, i: usize, t: usize) -> bool {
        let s = &self.stocks[i];
        t >= s.first_day && t <= s.last_day()
    }

    pub fn cap(&self, i: usize, t: usize) -> Option<f64> {
        let s = &self.stocks[i];
        t.checked_sub(s.first_day)
            .and_then(|off| s.caps.get(off))
            .copied()
    }

    pub fn total_return(&self, i: usize, t: usize) -> Option<f64> {
        let s = &self.stocks[i];
        t.checked_sub(s.first_day)
            .and_then(|off| s.total_returns.get(off))
            .copied()
            .flatten()
    }

    pub fn delist_return(&self, i: usize) -> Option<f64> {
        self.stocks[i].delist_return
    }

    /// Present stocks at `t`, ranked. Entry `k` is the stock of rank `k + 1`.
    pub fn ranked(&self, t: usize) -> &[u32] {
        &self.ranked[t]
    }

    pub fn universe_size(&self, t: usize) -> usize {
        self.ranked[t].len()
    }

    fn check_day(&self, t: usize) -> Result<()> {
        if t >= self.n_days() {
            return Err(Error::invalid(format!(
                "day {t} out of range (calendar has {} days)",
                self.n_days()
            )));
        }
        Ok(())
    }

    pub fn full_universe(&self, t: usize) -> Result<Universe> {
        self.check_day(t)?;
        Ok(Universe {
            date: t,
            members: self.ranked[t].iter().map(|&i| i as usize).collect(),
        })
    }

    /// The largest `min(k, |A_t|)` stocks at `t`.
    pub fn top_k_universe(&self, t: usize, k: usize) -> Result<Universe> {
        self.check_day(t)?;
        if k == 0 {
            return Err(Error::invalid("K must be at least 1"));
        }
        Ok(Universe {
            date: t,
            members: self.ranked[t].iter().take(k).map(|&i| i as usize).collect(),
        })
    }

    pub fn capitalization_weights(&self, universe: &Universe) -> Result<WeightVector> {
        if universe.is_empty() {
            return Err(Error::invalid("empty universe"));
        }
        let t = universe.date;
        let caps = universe
            .members
            .iter()
            .map(|&i| {
                self.cap(i, t).ok_or_else(|| {
                    Error::invalid(format!("stock {} absent on day {t}", self.stock_id(i)))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let total: f64 = caps.iter().sum();
        Ok(WeightVector {
            universe: universe.clone(),
            weights: caps.iter().map(|c| c / total).collect(),
        })
    }

    /// Log-cap change from `t` to `t + 1`; `None` when the stock is absent on
    /// either day.
    pub fn log_return(&self, i: usize, t: usize) -> Option<f64> {
        self.log_return_between(i, t, t + 1)
    }

    pub fn log_return_between(&self, i: usize, t0: usize, t1: usize) -> Option<f64> {
        Some(self.cap(i, t1)?.ln() - self.cap(i, t0)?.ln())
    }

    /// Present caps at `t` in rank order.
    pub fn ranked_caps(&self, t: usize) -> impl Iterator<Item = f64> + '_ {
        self.ranked[t]
            .iter()
            .map(move |&i| self.cap(i as usize, t).unwrap())
    }

    pub fn total_cap(&self, t: usize) -> f64 {
        self.ranked_caps(t).sum()
    }

    pub fn entry_exit_events(&self) -> Vec<EntryExitEvent> {
        let last = self.calendar.last();
        let mut events = Vec::new();
        for (i, s) in self.stocks.iter().enumerate() {
            if s.first_day > 0 {
                let t = s.first_day;
                events.push(EntryExitEvent {
                    kind: EventKind::Entry,
                    stock: i,
                    id: s.id.clone(),
                    date: t,
                    weight_at_event: s.caps[0] / self.total_cap(t),
                });
            }
            if s.last_day() < last {
                let t = s.last_day();
                events.push(EntryExitEvent {
                    kind: EventKind::Exit,
                    stock: i,
                    id: s.id.clone(),
                    date: t,
                    weight_at_event: s.caps[s.caps.len() - 1] / self.total_cap(t),
                });
            }
        }
        events.sort_by(|a, b| a.date.cmp(&b.date).then(a.stock.cmp(&b.stock)));
        events
    }

    /// Stocks present on every day of the calendar.
    pub fn has_fixed_universe(&self) -> bool {
        let last = self.calendar.last();
        self.stocks
            .iter()
            .all(|s| s.first_day == 0 && s.last_day() == last)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(PANEL_HEADER)?;
        for t in 0..self.n_days() {
            let date = self.calendar.date(t).format(DATE_FORMAT).to_string();
            let mut present: Vec<usize> = self.ranked[t].iter().map(|&i| i as usize).collect();
            present.sort_unstable();
            for i in present {
                let s = &self.stocks[i];
                let off = t - s.first_day;
                let tr = s.total_returns[off].map(fmt_f64).unwrap_or_default();
                let dr = if t == s.last_day() {
                    s.delist_return.map(fmt_f64).unwrap_or_default()
                } else {
                    String::new()
                };
                w.write_record([date.as_str(), &s.id, &fmt_f64(s.caps[off]), &tr, &dr])?;
            }
        }
        w.flush().map_err(|e| Error::io("<panel writer>", e))?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

fn parse_error(line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_optional(field: &str, name: &str, line: u64) -> Result<Option<f64>> {
    if field.trim().is_empty() {
        return Ok(None);
    }
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| parse_error(line, format!("bad {name} '{field}'")))?;
    if !v.is_finite() {
        return Err(parse_error(line, format!("{name} must be finite")));
    }
    Ok(Some(v))
}

/// Parses panel-CSV rows without cross-row validation.
pub fn read_records<R: Read>(reader: R) -> Result<Vec<PanelRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    let header: Vec<&str> = header.iter().map(str::trim).collect();
    if header != PANEL_HEADER {
        return Err(parse_error(
            1,
            format!(
                "header must be '{}', found '{}'",
                PANEL_HEADER.join(","),
                header.join(",")
            ),
        ));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let date_s = rec[0].trim();
        if date_s.is_empty() {
            return Err(parse_error(line, "missing date"));
        }
        let date = NaiveDate::parse_from_str(date_s, DATE_FORMAT)
            .map_err(|_| parse_error(line, format!("bad date '{date_s}'")))?;
        let id = rec[1].trim();
        if id.is_empty() {
            return Err(parse_error(line, "missing id"));
        }
        let cap = parse_optional(&rec[2], "cap", line)?
            .ok_or_else(|| parse_error(line, "missing cap"))?;
        if cap <= 0.0 {
            return Err(parse_error(line, format!("nonpositive cap {cap}")));
        }
        let total_return = parse_optional(&rec[3], "total_return", line)?;
        let delist_return = parse_optional(&rec[4], "delist_return", line)?;
        out.push(PanelRecord {
            date,
            id: id.to_string(),
            cap,
            total_return,
            delist_return,
        });
    }
    Ok(out)
}

pub fn read_panel<R: Read>(reader: R) -> Result<MarketPanel> {
    MarketPanel::from_records(read_records(reader)?)
}

pub fn load_panel(path: &Path) -> Result<MarketPanel> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_panel(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn panel(csv: &str) -> Result<MarketPanel> {
        read_panel(csv.as_bytes())
    }

    fn one_day(caps: &[(&str, f64)]) -> MarketPanel {
        let mut s = String::from("date,id,cap,total_return,delist_return\n");
        for (id, c) in caps {
            s.push_str(&format!("2020-01-02,{id},{c},,\n"));
        }
        panel(&s).unwrap()
    }

    fn names(p: &MarketPanel, u: &Universe) -> Vec<String> {
        u.members.iter().map(|&i| p.stock_id(i).to_string()).collect()
    }

    #[test]
    fn minimal_file() {
        let p = panel(
            "date,id,cap,total_return,delist_return\n\
             2020-01-03,A,12,0.0909,\n\
             2020-01-01,A,10,,\n\
             2020-01-02,A,11,0.1,\n",
        )
        .unwrap();
        assert_eq!(p.n_stocks(), 1);
        assert_eq!(p.n_days(), 3);
        assert_eq!(p.first_day(0), 0);
        assert_eq!(p.last_day(0), 2);
        assert_eq!(p.cap(0, 1), Some(11.0));
        assert_eq!(p.total_return(0, 0), None);
        assert_eq!(p.total_return(0, 1), Some(0.1));
    }

    #[test]
    fn negative_cap_names_row() {
        let err = panel(
            "date,id,cap,total_return,delist_return\n\
             2020-01-01,A,10,,\n\
             2020-01-02,A,-5,,\n",
        )
        .unwrap_err();
        match err {
            Error::Parse { line, message } => {
                assert_eq!(line, 3);
                assert!(message.contains("nonpositive"));
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn bad_date_and_missing_fields() {
        let err = panel("date,id,cap,total_return,delist_return\n2020-13-01,A,1,,\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = panel("date,id,cap,total_return,delist_return\n2020-01-01,,1,,\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = panel("date,id,cap,total_return,delist_return\n2020-01-01,A,,,\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = panel("date,id,cap\n2020-01-01,A,1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn gap_is_rejected() {
        let err = panel(
            "date,id,cap,total_return,delist_return\n\
             2020-01-01,A,10,,\n\
             2020-01-01,B,10,,\n\
             2020-01-02,B,10,,\n\
             2020-01-03,A,10,,\n",
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("gap in presence interval"), "{msg}");
        assert!(msg.contains("(A, 2020-01-02)"), "{msg}");
    }

    #[test]
    fn duplicate_is_rejected() {
        let err = panel(
            "date,id,cap,total_return,delist_return\n\
             2020-01-01,A,10,,\n\
             2020-01-01,A,11,,\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("duplicate (id, date)"));
    }

    #[test]
    fn delist_return_only_on_last_row() {
        let err = panel(
            "date,id,cap,total_return,delist_return\n\
             2020-01-01,A,10,,-0.5\n\
             2020-01-02,A,10,,\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("last row"));
    }

    #[test]
    fn top_k_ordering_and_ties() {
        let p = one_day(&[("C", 1.0), ("A", 5.0), ("B", 3.0)]);
        assert_eq!(names(&p, &p.top_k_universe(0, 2).unwrap()), ["A", "B"]);
        let p = one_day(&[("B", 5.0), ("A", 5.0)]);
        assert_eq!(names(&p, &p.top_k_universe(0, 1).unwrap()), ["A"]);
        let p = one_day(&[("A", 5.0)]);
        assert_eq!(names(&p, &p.top_k_universe(0, 3).unwrap()), ["A"]);
        assert!(p.top_k_universe(1, 1).is_err());
        assert!(p.top_k_universe(0, 0).is_err());
    }

    #[test]
    fn weights() {
        let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-15);
        let p = one_day(&[("A", 3.0), ("B", 1.0)]);
        let w = p.capitalization_weights(&p.full_universe(0).unwrap()).unwrap();
        assert!(close(w.weights(), &[0.75, 0.25]));
        let p = one_day(&[("A", 5.0), ("B", 5.0), ("C", 5.0), ("D", 5.0)]);
        let w = p.capitalization_weights(&p.full_universe(0).unwrap()).unwrap();
        assert!(close(w.weights(), &[0.25; 4]));
        let p = one_day(&[("A", 8.0), ("B", 2.0)]);
        let w = p.capitalization_weights(&p.full_universe(0).unwrap()).unwrap();
        assert!(close(w.weights(), &[0.8, 0.2]));
        let empty = Universe {
            date: 0,
            members: vec![],
        };
        assert!(p.capitalization_weights(&empty).is_err());
    }

    #[test]
    fn log_returns() {
        let p = panel(
            "date,id,cap,total_return,delist_return\n\
             2020-01-01,A,10,,\n2020-01-02,A,10,,\n2020-01-03,A,20,,\n\
             2020-01-01,B,10,,\n2020-01-02,B,10,,\n",
        )
        .unwrap();
        let a = p.index_of("A").unwrap();
        let b = p.index_of("B").unwrap();
        assert_eq!(p.log_return(a, 0), Some(0.0));
        assert!((p.log_return(a, 1).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(p.log_return(b, 1), None);
    }

    #[test]
    fn events() {
        let p = one_day(&[("A", 1.0)]);
        assert!(p.entry_exit_events().is_empty());

        let mut s = String::from("date,id,cap,total_return,delist_return\n");
        for d in 1..=10 {
            s.push_str(&format!("2020-01-{d:02},A,99,,\n"));
            if d >= 6 {
                s.push_str(&format!("2020-01-{d:02},B,1,,\n"));
            }
            if d <= 8 {
                s.push_str(&format!("2020-01-{d:02},C,100,,\n"));
            }
        }
        let p = panel(&s).unwrap();
        let ev = p.entry_exit_events();
        assert_eq!(ev.len(), 2);
        assert_eq!(ev[0].kind, EventKind::Entry);
        assert_eq!((ev[0].id.as_str(), ev[0].date), ("B", 5));
        assert!((ev[0].weight_at_event - 1.0 / 200.0).abs() < 1e-15);
        assert_eq!(ev[1].kind, EventKind::Exit);
        assert_eq!((ev[1].id.as_str(), ev[1].date), ("C", 7));
        assert!((ev[1].weight_at_event - 0.5).abs() < 1e-15);
    }

    #[test]
    fn calendar_windows() {
        let cal = TradingCalendar::synthetic(2521, 252, 2000).unwrap();
        let w = cal.calendar_year_windows();
        assert_eq!(w.len(), 10);
        assert_eq!(w[0], (0, 252));
        assert_eq!(w[9], (2268, 2520));
        assert!(TradingCalendar::new(vec![cal.date(1), cal.date(0)]).is_err());
    }
}
