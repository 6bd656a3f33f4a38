//! The subcommands as library functions. Each stage reads and writes
//! artifact files, so any stage can be rerun from the previous one's output.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate};
use mfindex_core::index::{
    compute_series, constituents_from_book, infer_actions, CorporateAction, DivisorEvent, IndexSeries, PriceTable,
};
use mfindex_core::manifold::LaplaceOperator;
use mfindex_core::marketdata::{build_market_frame, QuoteBook, TradingCalendar};
use mfindex_core::metrics::{evaluate, mean_baseline_distance, stability_std, Metric, MetricsReport};
use mfindex_core::selection::{accumulate_features, select_constituents};
use mfindex_core::spectral::{solve_generalized_with, EigenBasis};
use mfindex_core::synth::generate_market;

use crate::io::{self, ConstituentRow, MetricsRow, StabilityRow};
use crate::{Error, PipelineConfig, Result};

pub fn index_name(n: usize) -> String {
    format!("MF{n}")
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn year_window(year: i32) -> Result<(NaiveDate, NaiveDate)> {
    let day = |m, d| NaiveDate::from_ymd_opt(year, m, d).ok_or_else(|| Error::Config(format!("invalid year {year}")));
    Ok((day(1, 1)?, day(12, 31)?))
}

/// Everything `select` computes for one study year.
#[derive(Debug, Clone)]
pub struct SelectionOutcome {
    pub tickers: Vec<String>,
    pub caps: Vec<f64>,
    pub operator: LaplaceOperator,
    pub basis: EigenBasis,
    /// One list per entry of `n_list`, ranked by descending market cap.
    pub lists: Vec<(usize, Vec<ConstituentRow>)>,
}

/// Runs marketdata, manifold, spectral and selection on the study year.
/// Eigenpairs are requested `batch` at a time until the largest `N` can
/// be served.
pub fn select_lists(book: &QuoteBook, study_year: i32, cfg: &PipelineConfig) -> Result<SelectionOutcome> {
    cfg.validate()?;
    let calendar = TradingCalendar::for_year(book, study_year)?;
    let frame = build_market_frame(book, &calendar, calendar.last())?;
    let n = frame.len();
    if let Some(&too_big) = cfg.n_list.iter().find(|&&m| m >= n) {
        return Err(Error::Config(format!(
            "N = {too_big} is not below the surviving universe size {n}"
        )));
    }
    let operator = LaplaceOperator::build(&frame.stocks, cfg.k, cfg.t, cfg.mode)?;
    let target = cfg.n_list.iter().copied().max().unwrap_or(1);
    let opts = cfg.solver_options();

    let mut p = cfg.batch.min(n);
    let basis = loop {
        let basis = solve_generalized_with(&operator.weights, &operator.mass, p, &opts)?;
        match accumulate_features(&basis, &operator.graph, target) {
            Ok(_) => break basis,
            Err(mfindex_core::Error::InsufficientFeatures { .. }) if p < n => p = (p + cfg.batch).min(n),
            Err(e) => return Err(e.into()),
        }
    };

    let mut lists = Vec::with_capacity(cfg.n_list.len());
    for &m in &cfg.n_list {
        let set = select_constituents(&basis, &operator.graph, m, &frame.caps)?;
        let mut rows: Vec<ConstituentRow> = set
            .iter()
            .map(|(x, from)| ConstituentRow {
                rank: 0,
                ticker: frame.stocks[x].ticker.clone(),
                source_eigenvector: from.eigenvector + 1,
                extremum_kind: from.kind.to_string(),
                market_cap: frame.caps[x],
            })
            .collect();
        rows.sort_by(|a, b| {
            b.market_cap
                .total_cmp(&a.market_cap)
                .then_with(|| a.ticker.cmp(&b.ticker))
        });
        for (i, r) in rows.iter_mut().enumerate() {
            r.rank = i + 1;
        }
        lists.push((m, rows));
    }
    Ok(SelectionOutcome {
        tickers: frame.stocks.iter().map(|s| s.ticker.clone()).collect(),
        caps: frame.caps,
        operator,
        basis,
        lists,
    })
}

/// Writes one constituent CSV per `N` into `dir` and returns their paths.
pub fn write_selection(dir: &Path, outcome: &SelectionOutcome, dump_operator: bool) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut paths = Vec::new();
    for (m, rows) in &outcome.lists {
        let path = dir.join(format!("{}_constituents.csv", index_name(*m)));
        io::write_constituents(&path, rows)?;
        paths.push(path);
    }
    if dump_operator {
        io::write_matrix(&dir.join("W.txt"), &outcome.operator.weights.entries)?;
        io::write_triplets(
            &dir.join("A.txt"),
            outcome.operator.mass.diag.iter().enumerate().map(|(i, a)| (i, i, *a)),
        )?;
        io::write_eigenbasis(&dir.join("eigenbasis.csv"), &outcome.basis)?;
    }
    Ok(paths)
}

pub fn cmd_select(cfg: &PipelineConfig) -> Result<Vec<PathBuf>> {
    let (study, _) = cfg.year_pair()?;
    let book = io::read_quotes(cfg.quotes_path()?, Some(year_window(study)?))?;
    let outcome = select_lists(&book, study, cfg)?;
    write_selection(&cfg.out_dir, &outcome, cfg.dump_operator)
}

/// Target-year index over `tickers`. Quote-implied share changes and
/// delistings are applied unless `explicit` has actions for that ticker.
pub fn build_index(
    book: &QuoteBook,
    tickers: &[String],
    target_year: i32,
    explicit: &[CorporateAction],
    base_level: f64,
) -> Result<(IndexSeries, Vec<DivisorEvent>)> {
    let calendar = TradingCalendar::for_year(book, target_year)?;
    let basket = constituents_from_book(book, tickers, calendar.first())?;
    let in_window = |a: &&CorporateAction| a.effective_date >= calendar.first() && a.effective_date <= calendar.last();
    let mut actions: Vec<CorporateAction> = explicit
        .iter()
        .filter(|a| tickers.contains(&a.ticker))
        .filter(in_window)
        .cloned()
        .collect();
    let overridden: Vec<&String> = actions.iter().map(|a| &a.ticker).collect();
    let inferred: Vec<CorporateAction> = infer_actions(book, &calendar, &basket)
        .into_iter()
        .filter(|a| !overridden.contains(&&a.ticker))
        .collect();
    actions.extend(inferred);
    actions.sort_by(|a, b| {
        a.effective_date
            .cmp(&b.effective_date)
            .then_with(|| a.ticker.cmp(&b.ticker))
    });
    let table = PriceTable::from_book(book, &calendar);
    Ok(compute_series(&table, basket, base_level, &actions)?)
}

/// Cap-weighted index of every stock priced on the first target-year day.
pub fn composite_benchmark(book: &QuoteBook, target_year: i32, base_level: f64) -> Result<IndexSeries> {
    let calendar = TradingCalendar::for_year(book, target_year)?;
    let first = calendar.first();
    let tickers: Vec<String> = book
        .iter()
        .filter(|(_, q)| q.iter().any(|q| q.date == first && q.close.is_some()))
        .filter(|(_, q)| {
            q.iter()
                .any(|q| q.date <= first && q.shares_issued.is_some_and(|s| s > 0.0))
        })
        .map(|(t, _)| t.clone())
        .collect();
    if tickers.is_empty() {
        return Err(mfindex_core::Error::EmptyUniverse("no stock priced on the first target day").into());
    }
    Ok(build_index(book, &tickers, target_year, &[], base_level)?.0)
}

fn series_stem(constituents: &Path, rows: usize) -> String {
    constituents
        .file_stem()
        .and_then(|s| s.to_str())
        .and_then(|s| s.strip_suffix("_constituents"))
        .map_or_else(|| index_name(rows), str::to_string)
}

/// Writes `<name>_series.csv` and `<name>_events.csv` next to `out_dir`
/// for each constituent file.
pub fn cmd_index(cfg: &PipelineConfig, constituent_files: &[PathBuf]) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    if constituent_files.is_empty() {
        return Err(Error::Config("no constituent files given".into()));
    }
    let (_, target) = cfg.year_pair()?;
    let book = io::read_quotes(cfg.quotes_path()?, Some(year_window(target)?))?;
    let explicit = match &cfg.actions {
        Some(p) => io::read_actions(p)?,
        None => Vec::new(),
    };
    ensure_dir(&cfg.out_dir)?;
    let mut out = Vec::new();
    for file in constituent_files {
        let rows = io::read_constituents(file)?;
        let tickers: Vec<String> = rows.iter().map(|r| r.ticker.clone()).collect();
        let (series, events) = build_index(&book, &tickers, target, &explicit, cfg.base_level)?;
        let name = series_stem(file, rows.len());
        let path = cfg.out_dir.join(format!("{name}_series.csv"));
        io::write_series(&path, &series)?;
        io::write_events(&cfg.out_dir.join(format!("{name}_events.csv")), &events)?;
        out.push(path);
    }
    Ok(out)
}

fn split_by_year(series: &IndexSeries) -> BTreeMap<i32, IndexSeries> {
    let mut out: BTreeMap<i32, IndexSeries> = BTreeMap::new();
    for i in 0..series.len() {
        let s = out.entry(series.dates[i].year()).or_insert_with(|| IndexSeries {
            dates: Vec::new(),
            values: Vec::new(),
            divisors: Vec::new(),
        });
        s.dates.push(series.dates[i]);
        s.values.push(series.values[i]);
        s.divisors.push(series.divisors[i]);
    }
    out
}

/// Metrics for each named series and each calendar year it covers.
pub fn evaluate_all(
    named: &[(String, IndexSeries)],
    benchmark: &IndexSeries,
    risk_free: f64,
) -> Result<Vec<MetricsRow>> {
    let mut rows = Vec::new();
    for (name, series) in named {
        for (year, part) in split_by_year(series) {
            let MetricsReport {
                pearson,
                alpha,
                beta,
                jensen_alpha,
                ..
            } = evaluate(&part, benchmark, risk_free)?;
            rows.push(MetricsRow {
                index_name: name.clone(),
                year,
                pearson,
                alpha,
                beta,
                jensen_alpha,
            });
        }
    }
    rows.sort_by(|a, b| a.index_name.cmp(&b.index_name).then(a.year.cmp(&b.year)));
    Ok(rows)
}

fn metric_value(row: &MetricsRow, m: Metric) -> f64 {
    match m {
        Metric::Pearson => row.pearson,
        Metric::Alpha => row.alpha,
        Metric::Beta => row.beta,
        Metric::JensenAlpha => row.jensen_alpha,
    }
}

/// Spread of each metric for every index across years and for every year
/// across indexes. `std` is absent for single-member groups.
pub fn stability(rows: &[MetricsRow]) -> Result<Vec<StabilityRow>> {
    let mut groups: BTreeMap<(&str, String), Vec<&MetricsRow>> = BTreeMap::new();
    for r in rows {
        groups.entry(("index", r.index_name.clone())).or_default().push(r);
        groups.entry(("year", r.year.to_string())).or_default().push(r);
    }
    let mut out = Vec::new();
    for ((scope, group), members) in groups {
        for m in Metric::ALL {
            let values: Vec<f64> = members.iter().map(|r| metric_value(r, m)).collect();
            out.push(StabilityRow {
                scope: scope.to_string(),
                group: group.clone(),
                metric: m.to_string(),
                std: if values.len() >= 2 {
                    Some(stability_std(&values)?)
                } else {
                    None
                },
                mean_distance: mean_baseline_distance(&values, m.baseline())?,
            });
        }
    }
    Ok(out)
}

fn write_reports(dir: &Path, rows: &[MetricsRow]) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let metrics = dir.join("metrics.csv");
    io::write_metrics(&metrics, rows)?;
    let stab = dir.join("stability.csv");
    io::write_stability(&stab, &stability(rows)?)?;
    Ok(vec![metrics, stab])
}

fn series_name(path: &Path) -> String {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("index");
    stem.strip_suffix("_series").unwrap_or(stem).to_string()
}

pub fn cmd_metrics(cfg: &PipelineConfig, series_files: &[PathBuf]) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    if series_files.is_empty() {
        return Err(Error::Config("no series files given".into()));
    }
    let bench_path = cfg
        .benchmark
        .as_deref()
        .ok_or_else(|| Error::Config("`benchmark` is required".into()))?;
    let benchmark = io::read_series(bench_path)?;
    let named = series_files
        .iter()
        .map(|p| Ok((series_name(p), io::read_series(p)?)))
        .collect::<Result<Vec<_>>>()?;
    let rows = evaluate_all(&named, &benchmark, cfg.risk_free)?;
    write_reports(&cfg.out_dir, &rows)
}

pub fn cmd_synth(cfg: &PipelineConfig) -> Result<Vec<PathBuf>> {
    let market = generate_market(&cfg.synth)?;
    ensure_dir(&cfg.out_dir)?;
    let quotes = cfg.out_dir.join("quotes.csv");
    io::write_quotes(&quotes, &market.quotes)?;
    let bench = cfg.out_dir.join("benchmark.csv");
    io::write_benchmark(&bench, &market.benchmark)?;
    Ok(vec![quotes, bench])
}

/// Target years available in the data: every year whose predecessor also
/// has quotes.
fn data_years(book: &QuoteBook) -> Vec<i32> {
    let years: std::collections::BTreeSet<i32> = book.values().flatten().map(|q| q.date.year()).collect();
    years.iter().copied().filter(|y| years.contains(&(y - 1))).collect()
}

/// Select on year `Y - 1`, index year `Y`, for each target year, then
/// metrics over all of them. Without a benchmark file, a composite of
/// every listed stock is used and written per year.
pub fn cmd_backtest(cfg: &PipelineConfig) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let book = io::read_quotes(cfg.quotes_path()?, None)?;
    let years = if cfg.years.is_empty() {
        data_years(&book)
    } else {
        cfg.years.clone()
    };
    if years.is_empty() {
        return Err(Error::Config("no consecutive year pair in the quote data".into()));
    }
    let explicit = match &cfg.actions {
        Some(p) => io::read_actions(p)?,
        None => Vec::new(),
    };
    let given = cfg.benchmark.as_deref().map(io::read_series).transpose()?;

    let mut written = Vec::new();
    let mut rows = Vec::new();
    for &year in &years {
        let dir = cfg.out_dir.join(year.to_string());
        let outcome = select_lists(&book, year - 1, cfg)?;
        written.extend(write_selection(&dir, &outcome, cfg.dump_operator)?);
        let benchmark = match &given {
            Some(b) => b.clone(),
            None => {
                let b = composite_benchmark(&book, year, cfg.base_level)?;
                let path = dir.join("benchmark.csv");
                io::write_benchmark(&path, &b)?;
                written.push(path);
                b
            }
        };
        let mut named = Vec::new();
        for (m, list) in &outcome.lists {
            let tickers: Vec<String> = list.iter().map(|r| r.ticker.clone()).collect();
            let (series, events) = build_index(&book, &tickers, year, &explicit, cfg.base_level)?;
            let name = index_name(*m);
            let path = dir.join(format!("{name}_series.csv"));
            io::write_series(&path, &series)?;
            io::write_events(&dir.join(format!("{name}_events.csv")), &events)?;
            written.push(path);
            named.push((name, series));
        }
        rows.extend(evaluate_all(&named, &benchmark, cfg.risk_free)?);
    }
    rows.sort_by(|a, b| a.index_name.cmp(&b.index_name).then(a.year.cmp(&b.year)));
    written.extend(write_reports(&cfg.out_dir, &rows)?);
    Ok(written)
}
