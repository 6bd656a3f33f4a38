//! CSV readers and writers for every artifact the pipeline exchanges.
//!
//! | file | header |
//! |------|--------|
//! | quotes | `date,ticker,close,shares_issued` |
//! | corporate actions | `effective_date,ticker,kind,new_shares,replacement_price` |
//! | constituents | `rank,ticker,source_eigenvector,extremum_kind,market_cap` |
//! | index series | `date,level,divisor` |
//! | benchmark | `date,level` |
//! | metrics | `index_name,year,pearson,alpha,beta,jensen_alpha` |
//! | eigenbasis | `index,eigenvalue,phi_1..phi_n` |
//!
//! Sparse matrices are dumped as `i j value` lines with 0-based indices.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::NaiveDate;
use mfindex_core::index::{ActionKind, CorporateAction, DivisorEvent, IndexSeries};
use mfindex_core::linalg::CsrMatrix;
use mfindex_core::marketdata::{group_quotes, QuoteBook, RawQuote};
use mfindex_core::spectral::EigenBasis;

use crate::{Error, Result};

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(csv::Writer::from_writer(file))
}

fn finish(mut w: csv::Writer<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Column positions for the named fields; every name must be present.
fn columns<const N: usize>(rdr: &mut csv::Reader<File>, path: &Path, names: [&str; N]) -> Result<[usize; N]> {
    let headers = rdr.headers()?.clone();
    let mut out = [0; N];
    for (slot, name) in out.iter_mut().zip(names) {
        *slot = headers.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("missing column `{name}`"),
        })?;
    }
    Ok(out)
}

struct Row<'a> {
    path: &'a Path,
    line: u64,
    record: csv::StringRecord,
}

impl Row<'_> {
    fn fail(&self, message: String) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            line: self.line,
            message,
        }
    }

    fn field(&self, col: usize) -> Result<&str> {
        self.record
            .get(col)
            .ok_or_else(|| self.fail(format!("missing field {}", col + 1)))
    }

    fn date(&self, col: usize) -> Result<NaiveDate> {
        let s = self.field(col)?;
        s.parse().map_err(|_| self.fail(format!("invalid date `{s}`")))
    }

    fn number(&self, col: usize) -> Result<f64> {
        let s = self.field(col)?;
        s.parse().map_err(|_| self.fail(format!("invalid number `{s}`")))
    }

    /// Empty and `NA` mean absent.
    fn optional(&self, col: usize) -> Result<Option<f64>> {
        let s = self.field(col)?;
        if s.is_empty() || s == "NA" {
            return Ok(None);
        }
        s.parse()
            .map(Some)
            .map_err(|_| self.fail(format!("invalid number `{s}`")))
    }
}

fn rows<'a>(rdr: &'a mut csv::Reader<File>, path: &'a Path) -> impl Iterator<Item = Result<Row<'a>>> + 'a {
    rdr.records().map(move |r| {
        let record = r.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        Ok(Row {
            path,
            line: record.position().map_or(0, |p| p.line()),
            record,
        })
    })
}

/// Reads a quote file, keeping rows with dates inside `window` when given.
pub fn read_quotes(path: &Path, window: Option<(NaiveDate, NaiveDate)>) -> Result<QuoteBook> {
    let mut rdr = reader(path)?;
    let [c_date, c_ticker, c_close, c_shares] = columns(&mut rdr, path, ["date", "ticker", "close", "shares_issued"])?;
    let mut quotes = Vec::new();
    for row in rows(&mut rdr, path) {
        let row = row?;
        let date = row.date(c_date)?;
        if let Some((from, to)) = window {
            if date < from || date > to {
                continue;
            }
        }
        let ticker = row.field(c_ticker)?;
        if ticker.is_empty() {
            return Err(row.fail("empty ticker".into()));
        }
        let close = row.optional(c_close)?;
        if close.is_some_and(|c| !(c > 0.0)) {
            return Err(row.fail(format!("close must be positive, got {close:?}")));
        }
        let shares_issued = row.optional(c_shares)?;
        if shares_issued.is_some_and(|s| !(s >= 0.0)) {
            return Err(row.fail(format!("shares_issued must be non-negative, got {shares_issued:?}")));
        }
        quotes.push(RawQuote {
            ticker: ticker.to_string(),
            date,
            close,
            shares_issued,
        });
    }
    Ok(group_quotes(quotes)?)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

pub fn write_quotes(path: &Path, quotes: &[RawQuote]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["date", "ticker", "close", "shares_issued"])?;
    for q in quotes {
        w.write_record([q.date.to_string(), q.ticker.clone(), opt(q.close), opt(q.shares_issued)])?;
    }
    finish(w, path)
}

pub fn read_actions(path: &Path) -> Result<Vec<CorporateAction>> {
    let mut rdr = reader(path)?;
    let [c_date, c_ticker, c_kind, c_shares, c_price] = columns(
        &mut rdr,
        path,
        ["effective_date", "ticker", "kind", "new_shares", "replacement_price"],
    )?;
    let mut out = Vec::new();
    for row in rows(&mut rdr, path) {
        let row = row?;
        let kind: ActionKind = row
            .field(c_kind)?
            .parse()
            .map_err(|e: mfindex_core::Error| row.fail(e.to_string()))?;
        out.push(CorporateAction {
            kind,
            ticker: row.field(c_ticker)?.to_string(),
            effective_date: row.date(c_date)?,
            new_shares: row.optional(c_shares)?,
            replacement_price: row.optional(c_price)?,
        });
    }
    Ok(out)
}

pub fn write_actions(path: &Path, actions: &[CorporateAction]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["effective_date", "ticker", "kind", "new_shares", "replacement_price"])?;
    for a in actions {
        w.write_record([
            a.effective_date.to_string(),
            a.ticker.clone(),
            a.kind.to_string(),
            a.new_shares.map_or_else(String::new, |x| x.to_string()),
            a.replacement_price.map_or_else(String::new, |x| x.to_string()),
        ])?;
    }
    finish(w, path)
}

/// One row of a constituent list.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstituentRow {
    pub rank: usize,
    pub ticker: String,
    /// 1-based, in ascending eigenvalue order.
    pub source_eigenvector: usize,
    pub extremum_kind: String,
    pub market_cap: f64,
}

pub fn write_constituents(path: &Path, rows_out: &[ConstituentRow]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["rank", "ticker", "source_eigenvector", "extremum_kind", "market_cap"])?;
    for r in rows_out {
        w.write_record([
            r.rank.to_string(),
            r.ticker.clone(),
            r.source_eigenvector.to_string(),
            r.extremum_kind.clone(),
            r.market_cap.to_string(),
        ])?;
    }
    finish(w, path)
}

pub fn read_constituents(path: &Path) -> Result<Vec<ConstituentRow>> {
    let mut rdr = reader(path)?;
    let [c_rank, c_ticker, c_src, c_kind, c_cap] = columns(
        &mut rdr,
        path,
        ["rank", "ticker", "source_eigenvector", "extremum_kind", "market_cap"],
    )?;
    let mut out = Vec::new();
    for row in rows(&mut rdr, path) {
        let row = row?;
        let int = |c: usize| -> Result<usize> {
            let s = row.field(c)?;
            s.parse().map_err(|_| row.fail(format!("invalid integer `{s}`")))
        };
        out.push(ConstituentRow {
            rank: int(c_rank)?,
            ticker: row.field(c_ticker)?.to_string(),
            source_eigenvector: int(c_src)?,
            extremum_kind: row.field(c_kind)?.to_string(),
            market_cap: row.number(c_cap)?,
        });
    }
    Ok(out)
}

pub fn write_series(path: &Path, series: &IndexSeries) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["date", "level", "divisor"])?;
    for ((d, v), div) in series.dates.iter().zip(&series.values).zip(&series.divisors) {
        w.write_record([d.to_string(), v.to_string(), div.to_string()])?;
    }
    finish(w, path)
}

/// Reads `date,level[,divisor]`. Files without a divisor column (the
/// benchmark format) get NaN divisors.
pub fn read_series(path: &Path) -> Result<IndexSeries> {
    let mut rdr = reader(path)?;
    let [c_date, c_level] = columns(&mut rdr, path, ["date", "level"])?;
    let c_div = rdr.headers()?.iter().position(|h| h == "divisor");
    let mut s = IndexSeries {
        dates: Vec::new(),
        values: Vec::new(),
        divisors: Vec::new(),
    };
    for row in rows(&mut rdr, path) {
        let row = row?;
        let date = row.date(c_date)?;
        if s.dates.last().is_some_and(|last| *last >= date) {
            return Err(row.fail(format!("dates must be strictly increasing at {date}")));
        }
        s.dates.push(date);
        s.values.push(row.number(c_level)?);
        s.divisors.push(match c_div {
            Some(c) => row.number(c)?,
            None => f64::NAN,
        });
    }
    Ok(s)
}

pub fn write_benchmark(path: &Path, series: &IndexSeries) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["date", "level"])?;
    for (d, v) in series.dates.iter().zip(&series.values) {
        w.write_record([d.to_string(), v.to_string()])?;
    }
    finish(w, path)
}

pub fn write_events(path: &Path, events: &[DivisorEvent]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record([
        "date",
        "ticker",
        "kind",
        "divisor_before",
        "divisor_after",
        "level_before",
        "level_after",
    ])?;
    for e in events {
        w.write_record([
            e.date.to_string(),
            e.action.ticker.clone(),
            e.action.kind.to_string(),
            e.divisor_before.to_string(),
            e.divisor_after.to_string(),
            e.level_before.to_string(),
            e.level_after.to_string(),
        ])?;
    }
    finish(w, path)
}

/// One row of the per-index, per-year metrics table.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub index_name: String,
    pub year: i32,
    pub pearson: f64,
    pub alpha: f64,
    pub beta: f64,
    pub jensen_alpha: f64,
}

pub fn write_metrics(path: &Path, rows_out: &[MetricsRow]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["index_name", "year", "pearson", "alpha", "beta", "jensen_alpha"])?;
    for r in rows_out {
        w.write_record([
            r.index_name.clone(),
            r.year.to_string(),
            r.pearson.to_string(),
            r.alpha.to_string(),
            r.beta.to_string(),
            r.jensen_alpha.to_string(),
        ])?;
    }
    finish(w, path)
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRow>> {
    let mut rdr = reader(path)?;
    let [c_name, c_year, c_p, c_a, c_b, c_j] = columns(
        &mut rdr,
        path,
        ["index_name", "year", "pearson", "alpha", "beta", "jensen_alpha"],
    )?;
    let mut out = Vec::new();
    for row in rows(&mut rdr, path) {
        let row = row?;
        let y = row.field(c_year)?;
        out.push(MetricsRow {
            index_name: row.field(c_name)?.to_string(),
            year: y.parse().map_err(|_| row.fail(format!("invalid year `{y}`")))?,
            pearson: row.number(c_p)?,
            alpha: row.number(c_a)?,
            beta: row.number(c_b)?,
            jensen_alpha: row.number(c_j)?,
        });
    }
    Ok(out)
}

/// Stability of one metric within a group (an index across years, or a
/// year across indexes).
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityRow {
    pub scope: String,
    pub group: String,
    pub metric: String,
    pub std: Option<f64>,
    pub mean_distance: f64,
}

pub fn write_stability(path: &Path, rows_out: &[StabilityRow]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["scope", "group", "metric", "std", "mean_distance"])?;
    for r in rows_out {
        w.write_record([
            r.scope.clone(),
            r.group.clone(),
            r.metric.clone(),
            opt(r.std),
            r.mean_distance.to_string(),
        ])?;
    }
    finish(w, path)
}

pub fn write_eigenbasis(path: &Path, basis: &EigenBasis) -> Result<()> {
    let mut w = writer(path)?;
    let n = basis.vectors.first().map_or(0, Vec::len);
    let mut header = vec!["index".to_string(), "eigenvalue".to_string()];
    header.extend((1..=n).map(|i| format!("phi_{i}")));
    w.write_record(&header)?;
    for (i, (l, v)) in basis.values.iter().zip(&basis.vectors).enumerate() {
        let mut rec = vec![(i + 1).to_string(), l.to_string()];
        rec.extend(v.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    finish(w, path)
}

pub fn write_triplets<'a>(path: &Path, entries: impl IntoIterator<Item = (usize, usize, f64)> + 'a) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    for (i, j, v) in entries {
        writeln!(w, "{i} {j} {v}").map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn write_matrix(path: &Path, m: &CsrMatrix) -> Result<()> {
    write_triplets(path, m.triplets())
}
