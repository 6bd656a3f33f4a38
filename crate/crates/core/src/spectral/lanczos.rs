//! Lanczos iteration with full reorthogonalization for the lowest
//! eigenpairs of a sparse symmetric matrix.
//!
//! A single Krylov sequence cannot see more than one copy of a repeated
//! eigenvalue, so after the first run converges the requested pairs, the
//! solver restarts on the orthogonal complement of what it has found and
//! checks whether anything lies below the current top eigenvalue. Any such
//! pair is swapped in, and the check repeats until the complement's
//! smallest eigenvalue is no lower than the set already held.

use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use super::householder::{symmetric_eigen, tridiagonal_eigen, tridiagonal_eigen_last};
use crate::linalg::{axpy, dot, norm, CsrMatrix};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub(crate) struct LanczosConfig {
    /// Ritz residual tolerance, relative to the operator's norm bound.
    pub tol: f64,
    pub seed: u64,
    /// Cap on deflated verification runs.
    pub max_runs: usize,
}

pub(crate) struct LanczosOutput {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub matvecs: usize,
}

struct Workspace<'a> {
    op: &'a CsrMatrix,
    rng: ChaCha8Rng,
    scale: f64,
    tol: f64,
    matvecs: usize,
}

impl Workspace<'_> {
    fn random_unit(&mut self, deflate: &[Vec<f64>], basis: &[Vec<f64>]) -> Option<Vec<f64>> {
        let n = self.op.dim();
        for _ in 0..8 {
            let mut v: Vec<f64> = (0..n)
                .map(|_| (self.rng.next_u64() >> 11) as f64 * (2.0 / (1u64 << 53) as f64) - 1.0)
                .collect();
            let before = norm(&v);
            orthogonalize(&mut v, deflate, basis);
            orthogonalize(&mut v, deflate, basis);
            let after = norm(&v);
            if after > 1e-8 * before {
                v.iter_mut().for_each(|x| *x /= after);
                return Some(v);
            }
        }
        None
    }

    /// One Lanczos sequence on the complement of `deflate`. Returns the
    /// lowest `want` Ritz pairs once all of them have converged, plus any
    /// other converged pair with value below `below`.
    fn run(&mut self, deflate: &[Vec<f64>], want: usize, below: f64) -> Result<Vec<(f64, Vec<f64>)>> {
        let n = self.op.dim();
        let free = n - deflate.len();
        let want = want.min(free);
        if want == 0 {
            return Ok(Vec::new());
        }
        let mut basis: Vec<Vec<f64>> = Vec::new();
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let start = self.random_unit(deflate, &basis).ok_or(Error::Convergence {
            residual: f64::NAN,
            iterations: 0,
        })?;
        basis.push(start);
        let mut next_check = free.min(want + 10);
        let mut w = vec![0.0; n];

        loop {
            let j = basis.len() - 1;
            self.op.mul_vec_into(&basis[j], &mut w);
            self.matvecs += 1;
            let a = dot(&basis[j], &w);
            alpha.push(a);
            axpy(-a, &basis[j], &mut w);
            if j > 0 {
                axpy(-beta[j - 1], &basis[j - 1], &mut w);
            }
            orthogonalize(&mut w, deflate, &basis);
            orthogonalize(&mut w, deflate, &basis);
            let b = norm(&w);
            let dim = basis.len();
            let exhausted = dim >= free;

            if exhausted || dim >= next_check {
                let (theta, last) = tridiagonal_eigen_last(&alpha, &beta)?;
                let limit = self.tol * self.scale;
                let converged = |i: usize| exhausted || (b * last[i]).abs() <= limit;
                if exhausted || (0..want).all(converged) {
                    let (_, z) = tridiagonal_eigen(&alpha, &beta)?;
                    let picked = (0..dim).filter(|&i| i < want || (converged(i) && theta[i] < below));
                    return Ok(picked
                        .map(|i| {
                            let mut y = vec![0.0; n];
                            for (zj, qj) in z[i].iter().zip(&basis) {
                                axpy(*zj, qj, &mut y);
                            }
                            (theta[i], y)
                        })
                        .collect());
                }
                next_check = free.min(dim + (dim / 4).max(8));
            }

            if b <= 1e-12 * self.scale {
                // invariant subspace found; continue from a fresh direction
                let v = self.random_unit(deflate, &basis).ok_or(Error::Convergence {
                    residual: b,
                    iterations: dim,
                })?;
                beta.push(0.0);
                basis.push(v);
            } else {
                beta.push(b);
                basis.push(w.iter().map(|x| x / b).collect());
            }
        }
    }
}

/// Two classical Gram-Schmidt passes are applied by the caller; this is one.
fn orthogonalize(v: &mut [f64], deflate: &[Vec<f64>], basis: &[Vec<f64>]) {
    for q in deflate.iter().chain(basis) {
        let c = dot(q, v);
        axpy(-c, q, v);
    }
}

pub(crate) fn lowest_eigenpairs(op: &CsrMatrix, p: usize, cfg: LanczosConfig) -> Result<LanczosOutput> {
    let n = op.dim();
    let mut ws = Workspace {
        op,
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        scale: op.inf_norm().max(f64::MIN_POSITIVE),
        tol: cfg.tol,
        matvecs: 0,
    };
    let mut found = ws.run(&[], p, f64::NEG_INFINITY)?;
    found.sort_by(|a, b| a.0.total_cmp(&b.0));
    let gap = 1e-9 * ws.scale;

    let mut runs = 1;
    while found.len() < n {
        let top = found[found.len() - 1].0;
        let deflate: Vec<Vec<f64>> = found.iter().map(|(_, v)| v.clone()).collect();
        let extra: Vec<(f64, Vec<f64>)> = ws
            .run(&deflate, 1, top - gap)?
            .into_iter()
            .filter(|(theta, _)| *theta < top - gap)
            .collect();
        if extra.is_empty() {
            break;
        }
        runs += 1;
        if runs > cfg.max_runs {
            return Err(Error::Convergence {
                residual: top - extra[0].0,
                iterations: ws.matvecs,
            });
        }
        found.extend(extra);
        found.sort_by(|a, b| a.0.total_cmp(&b.0));
        found.truncate(p);
    }

    let (values, vectors) = rayleigh_ritz(op, found.into_iter().map(|(_, v)| v).collect())?;
    Ok(LanczosOutput {
        values,
        vectors,
        matvecs: ws.matvecs,
    })
}

/// Re-orthonormalizes `vs` and diagonalizes the operator restricted to
/// their span.
fn rayleigh_ritz(op: &CsrMatrix, mut vs: Vec<Vec<f64>>) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    for i in 0..vs.len() {
        let (done, rest) = vs.split_at_mut(i);
        let v = &mut rest[0];
        orthogonalize(v, done, &[]);
        orthogonalize(v, done, &[]);
        let nv = norm(v);
        v.iter_mut().for_each(|x| *x /= nv);
    }
    let images: Vec<Vec<f64>> = vs.iter().map(|v| op.mul_vec(v)).collect();
    let k = vs.len();
    let h: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| 0.5 * (dot(&vs[i], &images[j]) + dot(&vs[j], &images[i])))
                .collect()
        })
        .collect();
    let (values, u) = symmetric_eigen(h)?;
    let n = op.dim();
    let vectors = u
        .iter()
        .map(|ui| {
            let mut y = vec![0.0; n];
            for (c, v) in ui.iter().zip(&vs) {
                axpy(*c, v, &mut y);
            }
            y
        })
        .collect();
    Ok((values, vectors))
}
