//! Capitalization-weighted index with divisor maintenance.
//!
//! The level is `sum(P_i * N_i) / D * B`. Whenever a non-trading event
//! changes the basket's capitalization (share change, delisting, rights or
//! bonus issue), the divisor is rescaled by `M_new / M_old` so the level is
//! continuous across the event.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use chrono::NaiveDate;

use crate::marketdata::{align_closes, align_shares, QuoteBook, TradingCalendar};
use crate::{Error, Result};

pub const DEFAULT_BASE_LEVEL: f64 = 1000.0;

/// Per-ticker prices at one instant.
pub type Prices = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct Constituent {
    pub ticker: String,
    pub shares: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivisorState {
    pub divisor: f64,
    pub base_level: f64,
    pub base_date: NaiveDate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ActionKind {
    ShareChange,
    Delisting,
    RightsOrBonusIssue,
}

impl FromStr for ActionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "share_change" => Ok(ActionKind::ShareChange),
            "delisting" => Ok(ActionKind::Delisting),
            "rights_or_bonus_issue" => Ok(ActionKind::RightsOrBonusIssue),
            _ => Err(Error::Parameter(format!("unknown corporate action `{s}`"))),
        }
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ActionKind::ShareChange => "share_change",
            ActionKind::Delisting => "delisting",
            ActionKind::RightsOrBonusIssue => "rights_or_bonus_issue",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorporateAction {
    pub kind: ActionKind,
    pub ticker: String,
    pub effective_date: NaiveDate,
    /// Share count after the event (share changes and issues).
    pub new_shares: Option<f64>,
    /// Ex-event price used to value the stock at the event instant
    /// (issues only; defaults to the pre-event price).
    pub replacement_price: Option<f64>,
}

/// Total capitalization of the basket.
pub fn basket_cap(date: NaiveDate, prices: &Prices, constituents: &[Constituent]) -> Result<f64> {
    constituents
        .iter()
        .map(|c| {
            prices
                .get(&c.ticker)
                .map(|p| p * c.shares)
                .ok_or_else(|| Error::MissingPrice {
                    ticker: c.ticker.clone(),
                    date,
                })
        })
        .sum()
}

/// Chooses `D` so that the level on `base_date` equals `base_level`,
/// i.e. `D` is the basket's base-date capitalization.
pub fn init_divisor(
    constituents: &[Constituent],
    prices_at_base: &Prices,
    base_level: f64,
    base_date: NaiveDate,
) -> Result<DivisorState> {
    if !(base_level > 0.0) {
        return Err(Error::Parameter(format!(
            "base level must be positive, got {base_level}"
        )));
    }
    let cap = basket_cap(base_date, prices_at_base, constituents)?;
    if !(cap > 0.0) {
        return Err(Error::DegenerateUniverse(cap));
    }
    Ok(DivisorState {
        divisor: cap,
        base_level,
        base_date,
    })
}

pub fn index_value(
    date: NaiveDate,
    prices: &Prices,
    constituents: &[Constituent],
    state: &DivisorState,
) -> Result<f64> {
    Ok(basket_cap(date, prices, constituents)? / state.divisor * state.base_level)
}

/// `D_new = D_old * M_new / M_old`.
pub fn rescale_divisor(state: &DivisorState, m_old: f64, m_new: f64) -> Result<DivisorState> {
    if !(m_old > 0.0) {
        return Err(Error::DegenerateUniverse(m_old));
    }
    if !(m_new > 0.0) {
        return Err(Error::DegenerateUniverse(m_new));
    }
    Ok(DivisorState {
        divisor: state.divisor * (m_new / m_old),
        ..*state
    })
}

/// Applies `action` to the basket. For issues with a replacement price,
/// `prices` is updated to that price.
pub fn apply_action(constituents: &mut Vec<Constituent>, prices: &mut Prices, action: &CorporateAction) -> Result<()> {
    let pos = constituents
        .iter()
        .position(|c| c.ticker == action.ticker)
        .ok_or_else(|| Error::Parameter(format!("{} is not a constituent", action.ticker)))?;
    let new_shares = || match action.new_shares {
        Some(s) if s > 0.0 => Ok(s),
        other => Err(Error::Parameter(format!(
            "{} for {} needs positive new_shares, got {other:?}",
            action.kind, action.ticker
        ))),
    };
    match action.kind {
        ActionKind::ShareChange => constituents[pos].shares = new_shares()?,
        ActionKind::Delisting => {
            constituents.remove(pos);
        }
        ActionKind::RightsOrBonusIssue => {
            constituents[pos].shares = new_shares()?;
            if let Some(p) = action.replacement_price {
                if !(p > 0.0) {
                    return Err(Error::Parameter(format!(
                        "replacement price for {} must be positive",
                        action.ticker
                    )));
                }
                prices.insert(action.ticker.clone(), p);
            }
        }
    }
    Ok(())
}

/// Applies `action` and rescales the divisor so the level at the event
/// instant is unchanged.
pub fn adjust_divisor(
    state: &DivisorState,
    constituents: &mut Vec<Constituent>,
    action: &CorporateAction,
    prices_at_event: &Prices,
) -> Result<DivisorState> {
    let date = action.effective_date;
    let m_old = basket_cap(date, prices_at_event, constituents)?;
    let mut after = prices_at_event.clone();
    let mut basket = constituents.clone();
    apply_action(&mut basket, &mut after, action)?;
    let m_new = basket_cap(date, &after, &basket)?;
    let next = rescale_divisor(state, m_old, m_new)?;
    *constituents = basket;
    Ok(next)
}

/// Closes of each ticker aligned to a calendar.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceTable {
    pub calendar: TradingCalendar,
    pub closes: BTreeMap<String, Vec<Option<f64>>>,
}

impl PriceTable {
    pub fn from_book(book: &QuoteBook, calendar: &TradingCalendar) -> Self {
        Self {
            calendar: calendar.clone(),
            closes: book
                .iter()
                .map(|(t, q)| (t.clone(), align_closes(q, calendar)))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexSeries {
    pub dates: Vec<NaiveDate>,
    pub values: Vec<f64>,
    /// Divisor in force for each day's valuation.
    pub divisors: Vec<f64>,
}

impl IndexSeries {
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DivisorEvent {
    pub date: NaiveDate,
    pub action: CorporateAction,
    pub divisor_before: f64,
    pub divisor_after: f64,
    pub level_before: f64,
    pub level_after: f64,
}

/// Index levels over the table's calendar with the first day as base.
///
/// Actions take effect on the first trading day on or after their
/// effective date, before that day's valuation, using the previous
/// close of every constituent. Actions dated on the base day only change
/// the initial basket. Gaps in a constituent's closes carry the last close,
/// or the replacement price after an issue.
pub fn compute_series(
    table: &PriceTable,
    constituents: Vec<Constituent>,
    base_level: f64,
    actions: &[CorporateAction],
) -> Result<(IndexSeries, Vec<DivisorEvent>)> {
    let dates = table.calendar.dates();
    let (first, last) = (table.calendar.first(), table.calendar.last());
    let mut pending: Vec<&CorporateAction> = actions.iter().collect();
    if let Some(a) = pending
        .iter()
        .find(|a| a.effective_date < first || a.effective_date > last)
    {
        return Err(Error::Parameter(format!(
            "{} for {} on {} is outside {first}..{last}",
            a.kind, a.ticker, a.effective_date
        )));
    }
    pending.sort_by_key(|a| a.effective_date);
    let mut pending = pending.into_iter().peekable();

    let mut basket = constituents;
    let mut prices = Prices::new();
    for c in &basket {
        let p = table
            .closes
            .get(&c.ticker)
            .and_then(|s| s[0])
            .ok_or_else(|| Error::MissingPrice {
                ticker: c.ticker.clone(),
                date: first,
            })?;
        prices.insert(c.ticker.clone(), p);
    }
    while let Some(a) = pending.next_if(|a| a.effective_date <= first) {
        let mut scratch = prices.clone();
        apply_action(&mut basket, &mut scratch, a)?;
    }
    let mut state = init_divisor(&basket, &prices, base_level, first)?;

    let mut series = IndexSeries {
        dates: dates.to_vec(),
        values: Vec::with_capacity(dates.len()),
        divisors: Vec::with_capacity(dates.len()),
    };
    let mut events = Vec::new();
    series.values.push(index_value(first, &prices, &basket, &state)?);
    series.divisors.push(state.divisor);

    for (i, &date) in dates.iter().enumerate().skip(1) {
        while let Some(a) = pending.next_if(|a| a.effective_date <= date) {
            let level_before = index_value(date, &prices, &basket, &state)?;
            let divisor_before = state.divisor;
            state = adjust_divisor(&state, &mut basket, a, &prices)?;
            // the ex-event price is what a gap day carries forward
            if a.kind == ActionKind::RightsOrBonusIssue {
                if let Some(p) = a.replacement_price {
                    prices.insert(a.ticker.clone(), p);
                }
            }
            let level_after = index_value(date, &prices, &basket, &state)?;
            events.push(DivisorEvent {
                date,
                action: a.clone(),
                divisor_before,
                divisor_after: state.divisor,
                level_before,
                level_after,
            });
        }
        for c in &basket {
            if let Some(p) = table.closes.get(&c.ticker).and_then(|s| s[i]) {
                prices.insert(c.ticker.clone(), p);
            }
        }
        series.values.push(index_value(date, &prices, &basket, &state)?);
        series.divisors.push(state.divisor);
    }
    Ok((series, events))
}

/// Basket with each ticker's most recent share count on or before `date`.
pub fn constituents_from_book(book: &QuoteBook, tickers: &[String], date: NaiveDate) -> Result<Vec<Constituent>> {
    tickers
        .iter()
        .map(|t| {
            let shares = book
                .get(t)
                .and_then(|q| q.iter().filter(|q| q.date <= date).rev().find_map(|q| q.shares_issued))
                .filter(|s| *s > 0.0)
                .ok_or_else(|| Error::MissingShares {
                    ticker: t.clone(),
                    date,
                })?;
            Ok(Constituent {
                ticker: t.clone(),
                shares,
            })
        })
        .collect()
}

/// Corporate actions implied by the quote data: a share change whenever a
/// constituent's share count moves, and a delisting on the day after its
/// last close when it stops trading before the calendar ends.
pub fn infer_actions(
    book: &QuoteBook,
    calendar: &TradingCalendar,
    constituents: &[Constituent],
) -> Vec<CorporateAction> {
    let dates = calendar.dates();
    let mut out = Vec::new();
    for c in constituents {
        let Some(quotes) = book.get(&c.ticker) else { continue };
        let closes = align_closes(quotes, calendar);
        let shares = align_shares(quotes, calendar);
        let Some(last_trade) = closes.iter().rposition(Option::is_some) else {
            continue;
        };
        let mut current = c.shares;
        for (i, s) in shares.iter().enumerate().take(last_trade + 1).skip(1) {
            if let Some(s) = *s {
                if s > 0.0 && s != current {
                    out.push(CorporateAction {
                        kind: ActionKind::ShareChange,
                        ticker: c.ticker.clone(),
                        effective_date: dates[i],
                        new_shares: Some(s),
                        replacement_price: None,
                    });
                    current = s;
                }
            }
        }
        if last_trade + 1 < dates.len() {
            out.push(CorporateAction {
                kind: ActionKind::Delisting,
                ticker: c.ticker.clone(),
                effective_date: dates[last_trade + 1],
                new_shares: None,
                replacement_price: None,
            });
        }
    }
    out.sort_by(|a, b| a.effective_date.cmp(&b.effective_date).then(a.ticker.cmp(&b.ticker)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn d(day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2018, 1, day).unwrap()
    }

    fn basket(spec: &[(&str, f64)]) -> Vec<Constituent> {
        spec.iter()
            .map(|(t, s)| Constituent {
                ticker: (*t).into(),
                shares: *s,
            })
            .collect()
    }

    fn prices(spec: &[(&str, f64)]) -> Prices {
        spec.iter().map(|(t, p)| ((*t).into(), *p)).collect()
    }

    #[test]
    fn divisor_forced_by_base_level() {
        let b = basket(&[("A", 6.0), ("B", 4.0)]);
        let p = prices(&[("A", 10.0), ("B", 10.0)]);
        let s = init_divisor(&b, &p, 1000.0, d(2)).unwrap();
        assert_eq!(s.divisor, 100.0);
        assert!((index_value(d(2), &p, &b, &s).unwrap() - 1000.0).abs() < 1e-10);

        let one = basket(&[("A", 100.0)]);
        let s = init_divisor(&one, &prices(&[("A", 10.0)]), 1000.0, d(2)).unwrap();
        assert_eq!(s.divisor, 1000.0);
        assert_eq!(index_value(d(2), &prices(&[("A", 10.0)]), &one, &s).unwrap(), 1000.0);
    }

    #[test]
    fn five_stock_divisor() {
        // caps 10*3 + 20*1 + 5*8 + 7*2 + 1*16 = 120
        let b = basket(&[("A", 3.0), ("B", 1.0), ("C", 8.0), ("D", 2.0), ("E", 16.0)]);
        let p = prices(&[("A", 10.0), ("B", 20.0), ("C", 5.0), ("D", 7.0), ("E", 1.0)]);
        let s = init_divisor(&b, &p, 1000.0, d(2)).unwrap();
        assert_eq!(s.divisor, 120.0);
    }

    #[test]
    fn degenerate_and_missing() {
        let b = basket(&[("A", 0.0)]);
        assert!(matches!(
            init_divisor(&b, &prices(&[("A", 1.0)]), 1000.0, d(2)),
            Err(Error::DegenerateUniverse(_))
        ));
        let b = basket(&[("A", 1.0), ("Z", 1.0)]);
        let s = DivisorState {
            divisor: 1.0,
            base_level: 1000.0,
            base_date: d(2),
        };
        assert_eq!(
            index_value(d(3), &prices(&[("A", 1.0)]), &b, &s),
            Err(Error::MissingPrice {
                ticker: "Z".into(),
                date: d(3)
            })
        );
    }

    #[test]
    fn level_scales_with_prices() {
        let b = basket(&[("A", 6.0), ("B", 4.0), ("C", 1.0)]);
        let p0 = prices(&[("A", 10.0), ("B", 10.0), ("C", 20.0)]);
        let s = init_divisor(&b, &p0, 1000.0, d(2)).unwrap();
        assert!((index_value(d(3), &p0, &b, &s).unwrap() - 1000.0).abs() < 1e-9);
        let doubled: Prices = p0.iter().map(|(t, p)| (t.clone(), 2.0 * p)).collect();
        assert!((index_value(d(3), &doubled, &b, &s).unwrap() - 2000.0).abs() < 1e-9);
        // mixed: 6*11 + 4*9 + 1*26 = 128 over base cap 120 => 1066.666...
        let mixed = prices(&[("A", 11.0), ("B", 9.0), ("C", 26.0)]);
        let want = 128.0 / 120.0 * 1000.0;
        assert!((index_value(d(3), &mixed, &b, &s).unwrap() - want).abs() < 1e-9);
    }

    #[test]
    fn rescale_ratio() {
        let s = DivisorState {
            divisor: 2.0,
            base_level: 1000.0,
            base_date: d(2),
        };
        assert!((rescale_divisor(&s, 100.0, 110.0).unwrap().divisor - 2.2).abs() < 1e-15);
        assert!(rescale_divisor(&s, 0.0, 1.0).is_err());
    }

    #[test]
    fn delisting_ten_percent() {
        let mut b = basket(&[("A", 9.0), ("B", 1.0)]);
        let p = prices(&[("A", 10.0), ("B", 10.0)]);
        let s = init_divisor(&b, &p, 1000.0, d(2)).unwrap();
        let before = index_value(d(3), &p, &b, &s).unwrap();
        let action = CorporateAction {
            kind: ActionKind::Delisting,
            ticker: "B".into(),
            effective_date: d(3),
            new_shares: None,
            replacement_price: None,
        };
        let s2 = adjust_divisor(&s, &mut b, &action, &p).unwrap();
        assert!((s2.divisor - 0.9 * s.divisor).abs() < 1e-15);
        assert_eq!(b.len(), 1);
        let after = index_value(d(3), &p, &b, &s2).unwrap();
        assert!(((after - before) / before).abs() < 1e-10);
    }

    #[test]
    fn share_change_continuity() {
        let mut b = basket(&[("A", 100.0), ("B", 50.0)]);
        let p = prices(&[("A", 4.0), ("B", 8.0)]);
        let s = init_divisor(&b, &p, 1000.0, d(2)).unwrap();
        let before = index_value(d(3), &p, &b, &s).unwrap();
        let action = CorporateAction {
            kind: ActionKind::ShareChange,
            ticker: "A".into(),
            effective_date: d(3),
            new_shares: Some(150.0),
            replacement_price: None,
        };
        let s2 = adjust_divisor(&s, &mut b, &action, &p).unwrap();
        // M_old = 800, M_new = 1000
        assert!((s2.divisor / s.divisor - 1.25).abs() < 1e-15);
        let after = index_value(d(3), &p, &b, &s2).unwrap();
        assert!(((after - before) / before).abs() < 1e-10);
    }

    #[test]
    fn action_validation() {
        let mut b = basket(&[("A", 1.0)]);
        let mut p = prices(&[("A", 1.0)]);
        let mut a = CorporateAction {
            kind: ActionKind::ShareChange,
            ticker: "Q".into(),
            effective_date: d(3),
            new_shares: Some(2.0),
            replacement_price: None,
        };
        assert!(apply_action(&mut b, &mut p, &a).is_err());
        a.ticker = "A".into();
        a.new_shares = None;
        assert!(apply_action(&mut b, &mut p, &a).is_err());
        assert_eq!("delisting".parse::<ActionKind>().unwrap(), ActionKind::Delisting);
        assert!("split".parse::<ActionKind>().is_err());
    }

    fn table(closes: &[(&str, Vec<Option<f64>>)]) -> PriceTable {
        let n = closes[0].1.len();
        PriceTable {
            calendar: TradingCalendar::new((0..n as u32).map(|i| d(2 + i)).collect()).unwrap(),
            closes: closes.iter().map(|(t, c)| ((*t).into(), c.clone())).collect(),
        }
    }

    #[test]
    fn constant_prices_constant_series() {
        let t = table(&[("A", vec![Some(5.0); 4]), ("B", vec![Some(2.0); 4])]);
        let (s, ev) = compute_series(&t, basket(&[("A", 1.0), ("B", 3.0)]), 1000.0, &[]).unwrap();
        assert!(ev.is_empty());
        assert!(s.values.iter().all(|v| (v - 1000.0).abs() < 1e-10));
    }

    #[test]
    fn delisting_mid_series_is_continuous() {
        let t = table(&[
            ("A", vec![Some(5.0), Some(6.0), Some(6.0), Some(7.0)]),
            ("B", vec![Some(2.0), Some(3.0), None, None]),
        ]);
        let action = CorporateAction {
            kind: ActionKind::Delisting,
            ticker: "B".into(),
            effective_date: d(4),
            new_shares: None,
            replacement_price: None,
        };
        let b = basket(&[("A", 1.0), ("B", 5.0)]);
        let (s, ev) = compute_series(&t, b, 1000.0, &[action]).unwrap();
        assert_eq!(ev.len(), 1);
        assert!(((ev[0].level_after - ev[0].level_before) / ev[0].level_before).abs() < 1e-10);
        // day 1 level: (6 + 15) / 15 * 1000 = 1400; day 2 keeps 1400 (A flat)
        assert!((s.values[1] - 1400.0).abs() < 1e-9);
        assert!((s.values[2] - 1400.0).abs() < 1e-9);
        assert!((s.values[3] - 1400.0 * 7.0 / 6.0).abs() < 1e-9);
    }

    #[test]
    fn infers_delisting_and_share_change() {
        use crate::marketdata::{group_quotes, RawQuote};
        let mut q = Vec::new();
        for i in 0..4u32 {
            q.push(RawQuote {
                ticker: "A".into(),
                date: d(2 + i),
                close: Some(1.0),
                shares_issued: Some(if i < 2 { 10.0 } else { 12.0 }),
            });
            if i < 2 {
                q.push(RawQuote {
                    ticker: "B".into(),
                    date: d(2 + i),
                    close: Some(1.0),
                    shares_issued: Some(5.0),
                });
            }
        }
        let book = group_quotes(q).unwrap();
        let cal = TradingCalendar::for_year(&book, 2018).unwrap();
        let b = constituents_from_book(&book, &["A".into(), "B".into()], d(2)).unwrap();
        let acts = infer_actions(&book, &cal, &b);
        assert_eq!(acts.len(), 2);
        assert_eq!(acts[0].kind, ActionKind::ShareChange);
        assert_eq!(acts[0].effective_date, d(4));
        assert_eq!(acts[1].kind, ActionKind::Delisting);
        assert_eq!(acts[1].ticker, "B");
        assert!(matches!(
            constituents_from_book(&book, &["C".into()], d(2)),
            Err(Error::MissingShares { .. })
        ));
    }
}
