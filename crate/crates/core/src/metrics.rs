//! Index evaluation: Pearson correlation of levels, and Alpha, Beta and
//! Jensen's Alpha of monthly returns against a benchmark.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use chrono::Datelike;

use crate::index::IndexSeries;
use crate::{Error, Result};

/// Monthly risk-free rate used when none is given (0.2%).
pub const DEFAULT_RISK_FREE: f64 = 0.002;

/// Simple returns, one per calendar month after the first.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    /// `(year, month)` each return ends in.
    pub months: Vec<(i32, u32)>,
    pub returns: Vec<f64>,
}

/// Month-end-to-month-end returns; the first month only provides the
/// starting level.
pub fn monthly_returns(series: &IndexSeries) -> Result<ReturnSeries> {
    let mut month_ends: Vec<((i32, u32), f64)> = Vec::new();
    for (d, v) in series.dates.iter().zip(&series.values) {
        let key = (d.year(), d.month());
        match month_ends.last_mut() {
            Some((k, last)) if *k == key => *last = *v,
            _ => month_ends.push((key, *v)),
        }
    }
    if month_ends.len() < 2 {
        return Err(Error::InsufficientData("monthly returns need at least two months"));
    }
    let (months, returns) = month_ends
        .windows(2)
        .map(|w| (w[1].0, (w[1].1 - w[0].1) / w[0].1))
        .unzip();
    Ok(ReturnSeries { months, returns })
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn same_len(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Alignment(format!("lengths {} and {}", x.len(), y.len())));
    }
    Ok(())
}

/// Sample covariance (denominator `n - 1`).
fn covariance(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / (x.len() - 1) as f64
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    same_len(x, y)?;
    if x.len() < 2 {
        return Err(Error::InsufficientData("correlation needs at least two samples"));
    }
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation);
    }
    Ok(sxy / (libm::sqrt(sxx) * libm::sqrt(syy)))
}

/// Mean excess return over the market.
pub fn alpha(ri: &[f64], rm: &[f64]) -> Result<f64> {
    same_len(ri, rm)?;
    if ri.is_empty() {
        return Err(Error::InsufficientData("alpha needs at least one return"));
    }
    Ok(mean(ri) - mean(rm))
}

pub fn beta(ri: &[f64], rm: &[f64]) -> Result<f64> {
    same_len(ri, rm)?;
    if ri.len() < 2 {
        return Err(Error::InsufficientData("beta needs at least two returns"));
    }
    let var = covariance(rm, rm);
    if !(var > 0.0) {
        return Err(Error::UndefinedBeta);
    }
    Ok(covariance(ri, rm) / var)
}

/// `mean(Ri) - [r_rf + beta * (mean(Rm) - r_rf)]`.
pub fn jensen_alpha(ri: &[f64], rm: &[f64], risk_free: f64) -> Result<f64> {
    let b = beta(ri, rm)?;
    Ok(mean(ri) - (risk_free + b * (mean(rm) - risk_free)))
}

/// Sample standard deviation.
pub fn stability_std(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::InsufficientData("standard deviation needs at least two values"));
    }
    Ok(libm::sqrt(covariance(values, values).max(0.0)))
}

/// Mean of `|value - baseline|`.
pub fn mean_baseline_distance(values: &[f64], baseline: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InsufficientData("no values"));
    }
    Ok(values.iter().map(|v| (v - baseline).abs()).sum::<f64>() / values.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Metric {
    Pearson,
    Alpha,
    Beta,
    JensenAlpha,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Pearson, Metric::Alpha, Metric::Beta, Metric::JensenAlpha];

    /// The value a perfect tracker of the benchmark would have.
    pub fn baseline(self) -> f64 {
        match self {
            Metric::Pearson | Metric::Beta => 1.0,
            Metric::Alpha | Metric::JensenAlpha => 0.0,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Pearson => "pearson",
            Metric::Alpha => "alpha",
            Metric::Beta => "beta",
            Metric::JensenAlpha => "jensen_alpha",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub pearson: f64,
    pub alpha: f64,
    pub beta: f64,
    pub jensen_alpha: f64,
    pub risk_free: f64,
}

impl MetricsReport {
    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Pearson => self.pearson,
            Metric::Alpha => self.alpha,
            Metric::Beta => self.beta,
            Metric::JensenAlpha => self.jensen_alpha,
        }
    }
}

/// Restricts `benchmark` to the dates of `index`. Every index date must be
/// present in the benchmark.
pub fn align_to(index: &IndexSeries, benchmark: &IndexSeries) -> Result<IndexSeries> {
    let mut out = IndexSeries {
        dates: Vec::with_capacity(index.len()),
        values: Vec::with_capacity(index.len()),
        divisors: Vec::with_capacity(index.len()),
    };
    for d in &index.dates {
        let i = benchmark
            .dates
            .binary_search(d)
            .map_err(|_| Error::Alignment(format!("benchmark has no level on {d}")))?;
        out.dates.push(*d);
        out.values.push(benchmark.values[i]);
        out.divisors
            .push(benchmark.divisors.get(i).copied().unwrap_or(f64::NAN));
    }
    Ok(out)
}

/// All four metrics of `index` against `benchmark` over the index's dates.
pub fn evaluate(index: &IndexSeries, benchmark: &IndexSeries, risk_free: f64) -> Result<MetricsReport> {
    let bench = align_to(index, benchmark)?;
    let ri = monthly_returns(index)?.returns;
    let rm = monthly_returns(&bench)?.returns;
    Ok(MetricsReport {
        pearson: pearson(&index.values, &bench.values)?,
        alpha: alpha(&ri, &rm)?,
        beta: beta(&ri, &rm)?,
        jensen_alpha: jensen_alpha(&ri, &rm, risk_free)?,
        risk_free,
    })
}
