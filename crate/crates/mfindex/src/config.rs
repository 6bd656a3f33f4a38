//! Flat `key = value` configuration.
//!
//! ```text
//! # comments run to end of line
//! quotes = data/quotes.csv
//! study_year = 2017
//! n_list = 50, 100, 150
//! t = auto
//! ```
//!
//! Command-line flags are applied through the same keys, after the file.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use mfindex_core::index::DEFAULT_BASE_LEVEL;
use mfindex_core::manifold::{Bandwidth, OperatorMode};
use mfindex_core::metrics::DEFAULT_RISK_FREE;
use mfindex_core::spectral::SolverOptions;
use mfindex_core::synth::SynthConfig;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub quotes: Option<PathBuf>,
    pub benchmark: Option<PathBuf>,
    pub actions: Option<PathBuf>,
    pub study_year: Option<i32>,
    pub target_year: Option<i32>,
    /// Target years for `backtest`; empty means every year with a
    /// preceding year in the data.
    pub years: Vec<i32>,
    pub k: usize,
    pub t: Bandwidth,
    pub mode: OperatorMode,
    pub n_list: Vec<usize>,
    pub base_level: f64,
    /// Eigenpairs requested per round while selection is incomplete.
    pub batch: usize,
    pub dense_threshold: usize,
    pub out_dir: PathBuf,
    pub risk_free: f64,
    /// Also write W, A and the eigenbasis next to the constituent lists.
    pub dump_operator: bool,
    /// Synthetic market parameters; `seed` lives here.
    pub synth: SynthConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            quotes: None,
            benchmark: None,
            actions: None,
            study_year: None,
            target_year: None,
            years: Vec::new(),
            k: 10,
            t: Bandwidth::Auto,
            mode: OperatorMode::Balanced,
            n_list: vec![50, 100, 150, 180, 380],
            base_level: DEFAULT_BASE_LEVEL,
            batch: 32,
            dense_threshold: SolverOptions::default().dense_threshold,
            out_dir: PathBuf::from("out"),
            risk_free: DEFAULT_RISK_FREE,
            dump_operator: false,
            synth: SynthConfig::default(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value `{value}` for `{key}`")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::default();
        cfg.apply_text(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            e => e,
        })?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", no + 1)))?;
            self.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", no + 1)))?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let path = || Some(PathBuf::from(value));
        match key {
            "quotes" => self.quotes = path(),
            "benchmark" => self.benchmark = path(),
            "actions" => self.actions = path(),
            "study_year" => self.study_year = Some(parse(key, value)?),
            "target_year" => self.target_year = Some(parse(key, value)?),
            "years" => self.years = parse_list(key, value)?,
            "k" => self.k = parse(key, value)?,
            "t" => self.t = parse(key, value)?,
            "mode" => self.mode = parse(key, value)?,
            "n_list" => self.n_list = parse_list(key, value)?,
            "base_level" => self.base_level = parse(key, value)?,
            "batch" => self.batch = parse(key, value)?,
            "dense_threshold" => self.dense_threshold = parse(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            "risk_free" => self.risk_free = parse(key, value)?,
            "dump_operator" => self.dump_operator = parse(key, value)?,
            "seed" => self.synth.seed = parse(key, value)?,
            "n_stocks" => self.synth.n_stocks = parse(key, value)?,
            "m_days" => self.synth.m_days = parse(key, value)?,
            "n_sectors" => self.synth.n_sectors = parse(key, value)?,
            "sector_vol" => self.synth.sector_vol = parse(key, value)?,
            "idio_vol" => self.synth.idio_vol = parse(key, value)?,
            "cap_log_mean" => self.synth.cap_log_mean = parse(key, value)?,
            "cap_log_sd" => self.synth.cap_log_sd = parse(key, value)?,
            "start_year" => self.synth.start_year = parse(key, value)?,
            "synth_years" => self.synth.years = parse(key, value)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// `(study_year, target_year)`, deriving one from the other.
    pub fn year_pair(&self) -> Result<(i32, i32)> {
        match (self.study_year, self.target_year) {
            (Some(s), Some(t)) if t == s + 1 => Ok((s, t)),
            (Some(s), Some(t)) => Err(Error::Config(format!(
                "target_year must follow study_year, got {s} and {t}"
            ))),
            (Some(s), None) => Ok((s, s + 1)),
            (None, Some(t)) => Ok((t - 1, t)),
            (None, None) => Err(Error::Config("study_year or target_year is required".into())),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.k == 0 {
            return bad("k must be at least 1");
        }
        if self.batch == 0 {
            return bad("batch must be at least 1");
        }
        if self.n_list.is_empty() || self.n_list.contains(&0) {
            return bad("n_list must hold positive counts");
        }
        if !(self.base_level > 0.0) || !self.base_level.is_finite() {
            return bad("base_level must be positive");
        }
        if !self.risk_free.is_finite() {
            return bad("risk_free must be finite");
        }
        Ok(())
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            dense_threshold: self.dense_threshold,
            seed: self.synth.seed,
            ..SolverOptions::default()
        }
    }

    pub fn quotes_path(&self) -> Result<&Path> {
        self.quotes
            .as_deref()
            .ok_or_else(|| Error::Config("`quotes` is required".into()))
    }
}
