//! Deterministic synthetic markets with a sector-factor return model.
//!
//! Stock `i` belongs to sector `i % n_sectors`. Its daily return is the
//! sector's factor return plus idiosyncratic noise, floored at -99%.
//! Randomness comes from ChaCha8 seeded with `seed`, drawn in a fixed
//! order, so a configuration always yields the same market.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use chrono::{Datelike, NaiveDate, Weekday};
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::index::{IndexSeries, DEFAULT_BASE_LEVEL};
use crate::marketdata::RawQuote;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_stocks: usize,
    /// Trading days per year.
    pub m_days: usize,
    pub n_sectors: usize,
    pub sector_vol: f64,
    pub idio_vol: f64,
    /// Mean and standard deviation of log market cap.
    pub cap_log_mean: f64,
    pub cap_log_sd: f64,
    pub seed: u64,
    pub start_year: i32,
    pub years: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_stocks: 300,
            m_days: 244,
            n_sectors: 8,
            sector_vol: 0.015,
            idio_vol: 0.01,
            cap_log_mean: 23.0,
            cap_log_sd: 1.0,
            seed: 42,
            start_year: 2017,
            years: 2,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Parameter(msg));
        if self.n_sectors < 1 || self.n_stocks < self.n_sectors {
            return bad(format!(
                "need n_stocks >= n_sectors >= 1, got {} and {}",
                self.n_stocks, self.n_sectors
            ));
        }
        if !(self.sector_vol >= 0.0 && self.idio_vol >= 0.0 && self.cap_log_sd >= 0.0)
            || !self.sector_vol.is_finite()
            || !self.idio_vol.is_finite()
            || !self.cap_log_sd.is_finite()
            || !self.cap_log_mean.is_finite()
        {
            return bad("volatilities must be finite and non-negative".into());
        }
        if self.m_days < 20 || self.m_days > 260 {
            return bad(format!("m_days must be in 20..=260, got {}", self.m_days));
        }
        if self.years < 1 {
            return bad("years must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthMarket {
    pub tickers: Vec<String>,
    pub sectors: Vec<usize>,
    pub dates: Vec<NaiveDate>,
    /// One quote per ticker per date, ticker-major.
    pub quotes: Vec<RawQuote>,
    /// Capitalization-weighted index of every stock, base 1000 on the
    /// first date.
    pub benchmark: IndexSeries,
}

/// The first `m_days` weekdays of each year.
pub fn synthetic_calendar(start_year: i32, years: usize, m_days: usize) -> Result<Vec<NaiveDate>> {
    let mut dates = Vec::with_capacity(years * m_days);
    for y in 0..years as i32 {
        let year = start_year + y;
        let mut d =
            NaiveDate::from_ymd_opt(year, 1, 1).ok_or_else(|| Error::Parameter(format!("invalid year {year}")))?;
        let mut taken = 0;
        while taken < m_days && d.year() == year {
            if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
                dates.push(d);
                taken += 1;
            }
            d = d.succ_opt().ok_or_else(|| Error::Parameter("date overflow".into()))?;
        }
        if taken < m_days {
            return Err(Error::Parameter(format!("{year} has fewer than {m_days} weekdays")));
        }
    }
    Ok(dates)
}

pub fn generate_market(config: &SynthConfig) -> Result<SynthMarket> {
    config.validate()?;
    let dates = synthetic_calendar(config.start_year, config.years, config.m_days)?;
    let n = config.n_stocks;
    let days = dates.len();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let jitter = Uniform::new(-0.05, 0.05).map_err(|e| Error::Parameter(format!("{e}")))?;
    let normal = |rng: &mut ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };

    let sectors: Vec<usize> = (0..n).map(|i| i % config.n_sectors).collect();
    let start: Vec<f64> = (0..n).map(|_| 100.0 * (1.0 + jitter.sample(&mut rng))).collect();
    let shares: Vec<f64> = start
        .iter()
        .map(|p0| libm::exp(config.cap_log_mean + config.cap_log_sd * normal(&mut rng)) / p0)
        .collect();

    // prices[t][i]
    let mut prices: Vec<Vec<f64>> = Vec::with_capacity(days);
    prices.push(start);
    for t in 1..days {
        let factors: Vec<f64> = (0..config.n_sectors)
            .map(|_| config.sector_vol * normal(&mut rng))
            .collect();
        let prev = &prices[t - 1];
        let today = (0..n)
            .map(|i| {
                let r = factors[sectors[i]] + config.idio_vol * normal(&mut rng);
                prev[i] * (1.0 + r.max(-0.99))
            })
            .collect();
        prices.push(today);
    }

    let tickers: Vec<String> = (0..n).map(|i| format!("S{i:04}")).collect();
    let mut quotes = Vec::with_capacity(n * days);
    for (i, ticker) in tickers.iter().enumerate() {
        for (t, date) in dates.iter().enumerate() {
            quotes.push(RawQuote {
                ticker: ticker.clone(),
                date: *date,
                close: Some(prices[t][i]),
                shares_issued: Some(shares[i]),
            });
        }
    }

    let cap = |t: usize| -> f64 { (0..n).map(|i| prices[t][i] * shares[i]).sum() };
    let divisor = cap(0);
    let benchmark = IndexSeries {
        dates: dates.clone(),
        values: (0..days).map(|t| cap(t) / divisor * DEFAULT_BASE_LEVEL).collect(),
        divisors: alloc::vec![divisor; days],
    };

    Ok(SynthMarket {
        tickers,
        sectors,
        dates,
        quotes,
        benchmark,
    })
}
