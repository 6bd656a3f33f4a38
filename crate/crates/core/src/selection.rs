//! Feature points: strict local extrema of eigenvectors over each point's
//! own KNN list, accumulated from the lowest eigenvalue upward.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use core::fmt;

use crate::manifold::AdjacencyGraph;
use crate::spectral::EigenBasis;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ExtremumKind {
    Max,
    Min,
}

impl fmt::Display for ExtremumKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExtremumKind::Max => "max",
            ExtremumKind::Min => "min",
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Extrema {
    pub maxima: Vec<usize>,
    pub minima: Vec<usize>,
}

/// `x` is a maximum when every `y` in `N_x` has `phi(y) < phi(x)`, and a
/// minimum when every `y` has `phi(y) > phi(x)`. Ties disqualify.
pub fn detect_extrema(phi: &[f64], graph: &AdjacencyGraph) -> Extrema {
    assert_eq!(phi.len(), graph.len(), "field length must match graph size");
    let mut out = Extrema::default();
    for (x, &fx) in phi.iter().enumerate() {
        let ns = graph.neighbors(x);
        if ns.iter().all(|&y| phi[y] < fx) {
            out.maxima.push(x);
        } else if ns.iter().all(|&y| phi[y] > fx) {
            out.minima.push(x);
        }
    }
    out
}

/// Where a feature point came from. `eigenvector` is 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Provenance {
    pub eigenvector: usize,
    pub kind: ExtremumKind,
}

/// Insertion-ordered set of point indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FeatureSet {
    members: Vec<usize>,
    provenance: Vec<Provenance>,
    seen: BTreeSet<usize>,
}

impl FeatureSet {
    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn provenance(&self) -> &[Provenance] {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, point: usize) -> bool {
        self.seen.contains(&point)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, Provenance)> + '_ {
        self.members.iter().copied().zip(self.provenance.iter().copied())
    }

    /// Adds `point` unless already present; the first provenance wins.
    pub fn insert(&mut self, point: usize, from: Provenance) -> bool {
        if !self.seen.insert(point) {
            return false;
        }
        self.members.push(point);
        self.provenance.push(from);
        true
    }

    /// Adds the extrema of one eigenvector in ascending point order.
    pub fn absorb(&mut self, eigenvector: usize, extrema: &Extrema) {
        let mut all: Vec<(usize, ExtremumKind)> = extrema
            .maxima
            .iter()
            .map(|&x| (x, ExtremumKind::Max))
            .chain(extrema.minima.iter().map(|&x| (x, ExtremumKind::Min)))
            .collect();
        all.sort_unstable();
        for (x, kind) in all {
            self.insert(x, Provenance { eigenvector, kind });
        }
    }

    /// Drops smallest-cap members (ties by ascending index) until `target`
    /// remain.
    pub fn trim_by_cap(&mut self, target: usize, caps: &[f64]) {
        if self.len() <= target {
            return;
        }
        let mut order: Vec<usize> = self.members.clone();
        order.sort_by(|&a, &b| caps[a].total_cmp(&caps[b]).then(a.cmp(&b)));
        let drop: BTreeSet<usize> = order[..self.len() - target].iter().copied().collect();
        let mut kept = FeatureSet::default();
        for (x, p) in self.iter() {
            if !drop.contains(&x) {
                kept.insert(x, p);
            }
        }
        *self = kept;
    }
}

/// Feature points of eigenvectors `0, 1, ...` until at least `target`
/// are collected. Errors if the basis runs out first.
pub fn accumulate_features(basis: &EigenBasis, graph: &AdjacencyGraph, target: usize) -> Result<FeatureSet> {
    let mut set = FeatureSet::default();
    for (k, phi) in basis.vectors.iter().enumerate() {
        if set.len() >= target {
            break;
        }
        set.absorb(k, &detect_extrema(phi, graph));
    }
    if set.len() < target {
        return Err(Error::InsufficientFeatures {
            found: set.len(),
            needed: target,
        });
    }
    Ok(set)
}

/// Exactly `target` constituents: accumulated feature points, trimmed by
/// smallest market cap.
pub fn select_constituents(
    basis: &EigenBasis,
    graph: &AdjacencyGraph,
    target: usize,
    caps: &[f64],
) -> Result<FeatureSet> {
    if target == 0 {
        return Err(Error::Parameter("constituent count must be at least 1".into()));
    }
    if caps.len() != graph.len() {
        return Err(Error::Parameter(alloc::format!(
            "{} caps for {} points",
            caps.len(),
            graph.len()
        )));
    }
    let mut set = accumulate_features(basis, graph, target)?;
    set.trim_by_cap(target, caps);
    Ok(set)
}
