//! Manifold-feature (MF) stock index construction.
//!
//! Stocks are treated as points on a manifold embedded in `m`-dimensional
//! price space. The crate builds a discrete Laplace-Beltrami operator over
//! their k-nearest-neighbour graph, solves the generalized eigenproblem
//! `W phi = lambda A phi`, picks index constituents as local extrema of the
//! low-frequency eigenvectors, and evaluates a divisor-maintained,
//! capitalization-weighted index against a benchmark.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, pipeline
//! orchestration and the command line live in the `mfindex` crate.
//!
//! | Stage | Module |
//! |-------|--------|
//! | completion, screening, normalization | [`marketdata`] |
//! | KNN graph, weight and mass matrices | [`manifold`] |
//! | generalized eigenpairs | [`spectral`] |
//! | extremum detection, constituent selection | [`selection`] |
//! | index level and divisor bookkeeping | [`index`] |
//! | Pearson, Alpha, Beta, Jensen's Alpha | [`metrics`] |
//! | deterministic synthetic markets | [`synth`] |

#![no_std]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Index loops mirror the textbook form of the matrix algorithms.
#![allow(clippy::needless_range_loop)]

extern crate alloc;

mod error;
pub mod index;
pub mod linalg;
pub mod manifold;
pub mod marketdata;
pub mod metrics;
pub mod selection;
pub mod spectral;
pub mod synth;

pub use chrono::NaiveDate;
pub use error::{Error, Result};
