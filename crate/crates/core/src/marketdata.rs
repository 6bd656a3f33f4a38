//! Quote ingestion and the three preprocessing steps: forward-fill
//! completion, listing/delisting screening, and unit-norm normalization.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use chrono::NaiveDate;

use crate::{Error, Result};

/// One daily observation for one ticker.
#[derive(Debug, Clone, PartialEq)]
pub struct RawQuote {
    pub ticker: String,
    pub date: NaiveDate,
    pub close: Option<f64>,
    pub shares_issued: Option<f64>,
}

/// Quotes grouped by ticker, each group sorted by date.
pub type QuoteBook = BTreeMap<String, Vec<RawQuote>>;

/// Groups quotes by ticker and sorts each group by date.
///
/// Rejects duplicate `(ticker, date)` pairs and an empty input.
pub fn group_quotes(quotes: impl IntoIterator<Item = RawQuote>) -> Result<QuoteBook> {
    let mut book = QuoteBook::new();
    for q in quotes {
        book.entry(q.ticker.clone()).or_default().push(q);
    }
    if book.is_empty() {
        return Err(Error::EmptyUniverse("no quotes"));
    }
    for group in book.values_mut() {
        group.sort_by_key(|q| q.date);
        if let Some(pair) = group.windows(2).find(|w| w[0].date == w[1].date) {
            return Err(Error::DuplicateQuote {
                ticker: pair[0].ticker.clone(),
                date: pair[0].date,
            });
        }
    }
    Ok(book)
}

/// The trading days of one study (or target) year.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TradingCalendar {
    dates: Vec<NaiveDate>,
}

impl TradingCalendar {
    pub fn new(dates: Vec<NaiveDate>) -> Result<Self> {
        if dates.len() < 2 {
            return Err(Error::Parameter(format!(
                "calendar needs at least 2 dates, got {}",
                dates.len()
            )));
        }
        if let Some(w) = dates.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::Parameter(format!(
                "calendar dates not strictly increasing at {}",
                w[1]
            )));
        }
        Ok(Self { dates })
    }

    /// Every date that appears in `book` within `[from, to]`.
    pub fn from_quotes(book: &QuoteBook, from: NaiveDate, to: NaiveDate) -> Result<Self> {
        let mut dates: Vec<NaiveDate> = book
            .values()
            .flatten()
            .map(|q| q.date)
            .filter(|d| *d >= from && *d <= to)
            .collect();
        dates.sort_unstable();
        dates.dedup();
        Self::new(dates)
    }

    /// Calendar for a whole calendar year.
    pub fn for_year(book: &QuoteBook, year: i32) -> Result<Self> {
        let from =
            NaiveDate::from_ymd_opt(year, 1, 1).ok_or_else(|| Error::Parameter(format!("invalid year {year}")))?;
        let to =
            NaiveDate::from_ymd_opt(year, 12, 31).ok_or_else(|| Error::Parameter(format!("invalid year {year}")))?;
        Self::from_quotes(book, from, to)
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    /// Number of trading days `m`.
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn first(&self) -> NaiveDate {
        self.dates[0]
    }

    pub fn last(&self) -> NaiveDate {
        self.dates[self.dates.len() - 1]
    }

    pub fn position(&self, date: NaiveDate) -> Option<usize> {
        self.dates.binary_search(&date).ok()
    }
}

/// Lays one ticker's closes onto the calendar; days without a row are absent.
pub fn align_closes(quotes: &[RawQuote], calendar: &TradingCalendar) -> Vec<Option<f64>> {
    align_field(quotes, calendar, |q| q.close)
}

/// Lays one ticker's share counts onto the calendar.
pub fn align_shares(quotes: &[RawQuote], calendar: &TradingCalendar) -> Vec<Option<f64>> {
    align_field(quotes, calendar, |q| q.shares_issued)
}

fn align_field(
    quotes: &[RawQuote],
    calendar: &TradingCalendar,
    field: impl Fn(&RawQuote) -> Option<f64>,
) -> Vec<Option<f64>> {
    let mut out = alloc::vec![None; calendar.len()];
    for q in quotes {
        if let Some(i) = calendar.position(q.date) {
            out[i] = field(q);
        }
    }
    out
}

/// Replaces every absent value by the most recent present one.
///
/// Returns `None` when the first value is absent.
pub fn forward_fill(values: &[Option<f64>]) -> Option<Vec<f64>> {
    let mut last = (*values.first()?)?;
    Some(
        values
            .iter()
            .map(|v| {
                if let Some(x) = v {
                    last = *x;
                }
                last
            })
            .collect(),
    )
}

/// Dense close series for one ticker over the calendar.
pub fn complete_series(quotes: &[RawQuote], calendar: &TradingCalendar) -> Result<Vec<f64>> {
    forward_fill(&align_closes(quotes, calendar)).ok_or_else(|| Error::NotCompletable {
        ticker: quotes.first().map(|q| q.ticker.clone()).unwrap_or_default(),
    })
}

/// Tickers that were trading on both the first and the last calendar day.
///
/// `all_series` holds each ticker's calendar-aligned closes.
pub fn screen_universe(
    all_series: &BTreeMap<String, Vec<Option<f64>>>,
    calendar: &TradingCalendar,
) -> Result<Vec<String>> {
    let last = calendar.len() - 1;
    let survivors: Vec<String> = all_series
        .iter()
        .filter(|(_, s)| s.len() == calendar.len() && s[0].is_some() && s[last].is_some())
        .map(|(t, _)| t.clone())
        .collect();
    if survivors.is_empty() {
        return Err(Error::EmptyUniverse("no ticker survives screening"));
    }
    Ok(survivors)
}

/// A stock's price curve scaled to unit Euclidean norm.
#[derive(Debug, Clone, PartialEq)]
pub struct StockVector {
    pub ticker: String,
    pub components: Vec<f64>,
}

impl AsRef<[f64]> for StockVector {
    fn as_ref(&self) -> &[f64] {
        &self.components
    }
}

pub fn normalize(ticker: &str, series: &[f64]) -> Result<StockVector> {
    let norm = libm::sqrt(series.iter().map(|x| x * x).sum::<f64>());
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::ZeroVector);
    }
    Ok(StockVector {
        ticker: ticker.into(),
        components: series.iter().map(|x| x / norm).collect(),
    })
}

/// Preprocessed study-year universe.
#[derive(Debug, Clone)]
pub struct MarketFrame {
    pub calendar: TradingCalendar,
    pub stocks: Vec<StockVector>,
    /// Market capitalization on the selection date, aligned with `stocks`.
    pub caps: Vec<f64>,
}

impl MarketFrame {
    /// Stock count `n`.
    pub fn len(&self) -> usize {
        self.stocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stocks.is_empty()
    }

    pub fn cap(&self, ticker: &str) -> Option<f64> {
        self.stocks
            .iter()
            .position(|s| s.ticker == ticker)
            .map(|i| self.caps[i])
    }
}

/// Completion, screening and normalization, in that order, plus market caps
/// (close times shares, both forward-filled) on `selection_date`.
pub fn build_market_frame(
    book: &QuoteBook,
    calendar: &TradingCalendar,
    selection_date: NaiveDate,
) -> Result<MarketFrame> {
    let sel = calendar
        .position(selection_date)
        .ok_or_else(|| Error::Parameter(format!("selection date {selection_date} is not a trading day")))?;
    let aligned: BTreeMap<String, Vec<Option<f64>>> = book
        .iter()
        .map(|(t, q)| (t.clone(), align_closes(q, calendar)))
        .collect();
    let survivors = screen_universe(&aligned, calendar)?;

    let mut stocks = Vec::with_capacity(survivors.len());
    let mut caps = Vec::with_capacity(survivors.len());
    for ticker in survivors {
        let closes = forward_fill(&aligned[&ticker]).ok_or_else(|| Error::NotCompletable { ticker: ticker.clone() })?;
        let shares = align_shares(&book[&ticker], calendar);
        let shares_at = shares[..=sel]
            .iter()
            .rev()
            .find_map(|s| *s)
            .ok_or_else(|| Error::MissingShares {
                ticker: ticker.clone(),
                date: selection_date,
            })?;
        caps.push(closes[sel] * shares_at);
        stocks.push(normalize(&ticker, &closes)?);
    }
    Ok(MarketFrame {
        calendar: calendar.clone(),
        stocks,
        caps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn d(m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2017, m, day).unwrap()
    }

    fn q(t: &str, date: NaiveDate, close: Option<f64>, shares: f64) -> RawQuote {
        RawQuote {
            ticker: t.into(),
            date,
            close,
            shares_issued: Some(shares),
        }
    }

    fn cal4() -> TradingCalendar {
        TradingCalendar::new(vec![d(1, 3), d(1, 4), d(1, 5), d(1, 6)]).unwrap()
    }

    #[test]
    fn groups_and_sorts() {
        let book = group_quotes(vec![
            q("B", d(1, 4), Some(2.0), 1.0),
            q("A", d(1, 5), Some(1.0), 1.0),
            q("A", d(1, 3), None, 1.0),
            q("B", d(1, 3), Some(2.0), 1.0),
            q("A", d(1, 4), Some(1.0), 1.0),
            q("B", d(1, 5), Some(2.0), 1.0),
        ])
        .unwrap();
        assert_eq!(book.len(), 2);
        assert!(book.values().all(|g| g.len() == 3));
        assert_eq!(book["A"][0].date, d(1, 3));
        assert_eq!(book["A"][0].close, None);
    }

    #[test]
    fn duplicate_quote_rejected() {
        let err = group_quotes(vec![q("A", d(1, 3), Some(1.0), 1.0), q("A", d(1, 3), Some(1.5), 1.0)]).unwrap_err();
        assert_eq!(
            err,
            Error::DuplicateQuote {
                ticker: "A".into(),
                date: d(1, 3)
            }
        );
        assert!(matches!(group_quotes(vec![]), Err(Error::EmptyUniverse(_))));
    }

    #[test]
    fn calendar_rules() {
        assert!(TradingCalendar::new(vec![d(1, 3)]).is_err());
        assert!(TradingCalendar::new(vec![d(1, 3), d(1, 3)]).is_err());
        assert!(TradingCalendar::new(vec![d(1, 4), d(1, 3)]).is_err());
    }

    #[test]
    fn forward_fill_cases() {
        assert_eq!(
            forward_fill(&[Some(10.0), None, None, Some(11.0)]),
            Some(vec![10.0, 10.0, 10.0, 11.0])
        );
        assert_eq!(forward_fill(&[Some(1.0), Some(2.0)]), Some(vec![1.0, 2.0]));
        assert_eq!(forward_fill(&[None, Some(5.0), Some(6.0)]), None);
    }

    #[test]
    fn complete_series_not_completable() {
        let cal = cal4();
        let quotes = vec![q("X", d(1, 4), Some(5.0), 1.0)];
        assert_eq!(
            complete_series(&quotes, &cal),
            Err(Error::NotCompletable { ticker: "X".into() })
        );
    }

    #[test]
    fn screening_removes_listed_and_delisted() {
        let cal = cal4();
        let mut all = BTreeMap::new();
        all.insert("STAY".into(), vec![Some(1.0), None, Some(1.0), Some(1.0)]);
        all.insert("LIST".into(), vec![None, Some(1.0), Some(1.0), Some(1.0)]);
        all.insert("DELIST".into(), vec![Some(1.0), Some(1.0), None, None]);
        assert_eq!(screen_universe(&all, &cal).unwrap(), vec![String::from("STAY")]);
        all.remove("STAY");
        assert!(matches!(screen_universe(&all, &cal), Err(Error::EmptyUniverse(_))));
    }

    #[test]
    fn normalize_cases() {
        let v = normalize("a", &[3.0, 4.0]).unwrap();
        assert!((v.components[0] - 0.6).abs() < 1e-15);
        assert!((v.components[1] - 0.8).abs() < 1e-15);

        let v = normalize("a", &[7.0; 9]).unwrap();
        assert!(v.components.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-15));

        let v = normalize("a", &[1.0, 2.0, 2.0]).unwrap();
        let want = [1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0];
        for (a, b) in v.components.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(normalize("z", &[0.0, 0.0]), Err(Error::ZeroVector));
    }

    #[test]
    fn frame_composition_by_hand() {
        // GAP has one missing close, GONE delists after day 2.
        let cal = cal4();
        let book = group_quotes(vec![
            q("GAP", d(1, 3), Some(1.0), 10.0),
            q("GAP", d(1, 4), None, 10.0),
            q("GAP", d(1, 5), Some(2.0), 10.0),
            q("GAP", d(1, 6), Some(2.0), 10.0),
            q("FULL", d(1, 3), Some(3.0), 5.0),
            q("FULL", d(1, 4), Some(3.0), 5.0),
            q("FULL", d(1, 5), Some(3.0), 5.0),
            q("FULL", d(1, 6), Some(4.0), 6.0),
            q("GONE", d(1, 3), Some(9.0), 1.0),
            q("GONE", d(1, 4), Some(9.0), 1.0),
        ])
        .unwrap();
        let frame = build_market_frame(&book, &cal, d(1, 6)).unwrap();
        assert_eq!(frame.len(), 2);
        assert_eq!(frame.stocks[0].ticker, "FULL");
        assert_eq!(frame.stocks[1].ticker, "GAP");
        // GAP completes to (1, 1, 2, 2), norm sqrt(10).
        let s10 = libm::sqrt(10.0);
        let want = [1.0 / s10, 1.0 / s10, 2.0 / s10, 2.0 / s10];
        for (a, b) in frame.stocks[1].components.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        // FULL is (3, 3, 3, 4), norm sqrt(43).
        let s43 = libm::sqrt(43.0);
        assert!((frame.stocks[0].components[3] - 4.0 / s43).abs() < 1e-15);
        assert_eq!(frame.caps, vec![24.0, 20.0]);
        assert_eq!(frame.cap("GAP"), Some(20.0));
        assert_eq!(frame.cap("GONE"), None);
    }

    #[test]
    fn frame_identity_path() {
        let cal = cal4();
        let mut quotes = Vec::new();
        for (i, day) in [3, 4, 5, 6].into_iter().enumerate() {
            quotes.push(q("A", d(1, day), Some(1.0 + i as f64), 2.0));
            quotes.push(q("B", d(1, day), Some(5.0), 2.0));
        }
        let book = group_quotes(quotes).unwrap();
        let frame = build_market_frame(&book, &cal, d(1, 6)).unwrap();
        assert_eq!(frame.stocks[0], normalize("A", &[1.0, 2.0, 3.0, 4.0]).unwrap());
        assert_eq!(frame.stocks[1], normalize("B", &[5.0; 4]).unwrap());
    }

    #[test]
    fn frame_requires_selection_date_in_calendar() {
        let cal = cal4();
        let book = group_quotes(vec![q("A", d(1, 3), Some(1.0), 1.0)]).unwrap();
        assert!(matches!(
            build_market_frame(&book, &cal, d(2, 1)),
            Err(Error::Parameter(_))
        ));
    }
}
