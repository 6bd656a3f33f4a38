//! Generalized symmetric eigenproblem `W phi = lambda A phi` with diagonal,
//! positive `A`.
//!
//! Both solvers work on the similar standard problem
//! `S y = lambda y`, `S = A^{-1/2} W A^{-1/2}`, and map back with
//! `phi = A^{-1/2} y`, which makes the returned vectors A-orthonormal.

mod householder;
mod jacobi;
mod lanczos;

use alloc::vec::Vec;

pub use householder::{symmetric_eigen, tridiagonal_eigen};
pub use jacobi::jacobi_eigen;

use crate::linalg::{dot, norm, CsrMatrix};
use crate::manifold::{MassMatrix, WeightMatrix};
use crate::{Error, Result};

/// Largest problem the dense oracle accepts.
pub const DENSE_ORACLE_LIMIT: usize = 2000;

/// Ascending eigenpairs. `vectors[i]` belongs to `values[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenBasis {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

impl EigenBasis {
    pub fn count(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Keeps only the lowest `p` pairs.
    pub fn truncate(&mut self, p: usize) {
        self.values.truncate(p);
        self.vectors.truncate(p);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Problems up to this size are solved densely.
    pub dense_threshold: usize,
    /// Lanczos Ritz residual tolerance, relative to a bound on `||S||`.
    pub tol: f64,
    pub seed: u64,
    pub max_runs: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            dense_threshold: 300,
            tol: 1e-12,
            seed: 0x4d46_1dc0_ffee_5eed,
            max_runs: 256,
        }
    }
}

/// The lowest `p` eigenpairs with default options.
pub fn solve_generalized(w: &WeightMatrix, a: &MassMatrix, p: usize) -> Result<EigenBasis> {
    solve_generalized_with(w, a, p, &SolverOptions::default())
}

pub fn solve_generalized_with(w: &WeightMatrix, a: &MassMatrix, p: usize, opts: &SolverOptions) -> Result<EigenBasis> {
    let n = w.entries.dim();
    check_shapes(w, a)?;
    if p == 0 || p > n {
        return Err(Error::Parameter(alloc::format!(
            "requested {p} eigenpairs of a {n}-point problem"
        )));
    }
    let inv_sqrt: Vec<f64> = a.diag.iter().map(|x| 1.0 / libm::sqrt(*x)).collect();
    let s = w.entries.scale(&inv_sqrt, &inv_sqrt);

    let (values, ys, iterations) = if n <= opts.dense_threshold {
        let (mut vals, mut vecs) = symmetric_eigen(s.to_dense())?;
        vals.truncate(p);
        vecs.truncate(p);
        (vals, vecs, n)
    } else {
        let out = lanczos::lowest_eigenpairs(
            &s,
            p,
            lanczos::LanczosConfig {
                tol: opts.tol,
                seed: opts.seed,
                max_runs: opts.max_runs,
            },
        )?;
        (out.values, out.vectors, out.matvecs)
    };

    let basis = finish(values, ys, &inv_sqrt, a);
    let worst = max_residual(w, a, &basis);
    if !(worst <= 1e-8) {
        return Err(Error::Convergence {
            residual: worst,
            iterations,
        });
    }
    Ok(basis)
}

/// Every eigenpair, computed densely by Jacobi rotations.
pub fn dense_oracle(w: &WeightMatrix, a: &MassMatrix) -> Result<EigenBasis> {
    let n = w.entries.dim();
    check_shapes(w, a)?;
    if n > DENSE_ORACLE_LIMIT {
        return Err(Error::TooLarge {
            n,
            limit: DENSE_ORACLE_LIMIT,
        });
    }
    let inv_sqrt: Vec<f64> = a.diag.iter().map(|x| 1.0 / libm::sqrt(*x)).collect();
    let dense = w.entries.to_dense();
    let s: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| inv_sqrt[i] * dense[i][j] * inv_sqrt[j]).collect())
        .collect();
    let (values, ys) = jacobi_eigen(s)?;
    Ok(finish(values, ys, &inv_sqrt, a))
}

fn check_shapes(w: &WeightMatrix, a: &MassMatrix) -> Result<()> {
    if w.entries.dim() != a.diag.len() {
        return Err(Error::Parameter(alloc::format!(
            "weight matrix is {0}x{0} but mass matrix has {1} entries",
            w.entries.dim(),
            a.diag.len()
        )));
    }
    if let Some((index, &value)) = a.diag.iter().enumerate().find(|(_, x)| !(**x > 0.0)) {
        return Err(Error::SingularMass { index, value });
    }
    Ok(())
}

fn finish(values: Vec<f64>, ys: Vec<Vec<f64>>, inv_sqrt: &[f64], a: &MassMatrix) -> EigenBasis {
    let vectors = ys
        .into_iter()
        .map(|y| {
            let mut phi: Vec<f64> = y.iter().zip(inv_sqrt).map(|(v, s)| v * s).collect();
            let an = libm::sqrt(a_inner(a, &phi, &phi));
            let pivot = phi
                .iter()
                .copied()
                .fold(0.0f64, |best, x| if x.abs() > best.abs() { x } else { best });
            let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
            phi.iter_mut().for_each(|x| *x *= sign / an);
            phi
        })
        .collect();
    EigenBasis { values, vectors }
}

/// `x^T A y`.
pub fn a_inner(a: &MassMatrix, x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).zip(&a.diag).map(|((xi, yi), ai)| xi * yi * ai).sum()
}

/// `||W phi - lambda A phi|| / max(1, ||W phi||)`.
pub fn relative_residual(w: &WeightMatrix, a: &MassMatrix, lambda: f64, phi: &[f64]) -> f64 {
    let wphi = w.entries.mul_vec(phi);
    let r: Vec<f64> = wphi
        .iter()
        .zip(phi)
        .zip(&a.diag)
        .map(|((wv, p), ai)| wv - lambda * ai * p)
        .collect();
    norm(&r) / norm(&wphi).max(1.0)
}

pub fn max_residual(w: &WeightMatrix, a: &MassMatrix, basis: &EigenBasis) -> f64 {
    basis
        .values
        .iter()
        .zip(&basis.vectors)
        .map(|(l, phi)| relative_residual(w, a, *l, phi))
        .fold(0.0, f64::max)
}

/// Largest deviation of the Gram matrix `Phi^T A Phi` from the identity,
/// as `(max off-diagonal, max diagonal)`.
pub fn a_orthonormality_error(a: &MassMatrix, basis: &EigenBasis) -> (f64, f64) {
    let mut off: f64 = 0.0;
    let mut diag: f64 = 0.0;
    let scaled: Vec<Vec<f64>> = basis
        .vectors
        .iter()
        .map(|v| v.iter().zip(&a.diag).map(|(x, ai)| x * ai).collect())
        .collect();
    for (i, vi) in basis.vectors.iter().enumerate() {
        for (j, sj) in scaled.iter().enumerate() {
            let g = dot(vi, sj);
            if i == j {
                diag = diag.max((g - 1.0).abs());
            } else {
                off = off.max(g.abs());
            }
        }
    }
    (off, diag)
}

/// Standard-form operator `A^{-1/2} W A^{-1/2}`.
pub fn standard_form(w: &WeightMatrix, a: &MassMatrix) -> CsrMatrix {
    let inv_sqrt: Vec<f64> = a.diag.iter().map(|x| 1.0 / libm::sqrt(*x)).collect();
    w.entries.scale(&inv_sqrt, &inv_sqrt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::OperatorMode;
    use alloc::vec;

    fn two_point(w: f64) -> (WeightMatrix, MassMatrix) {
        (
            WeightMatrix {
                entries: CsrMatrix::from_dense(&[vec![w, -w], vec![-w, w]]),
                t: 1.0,
                mode: OperatorMode::Balanced,
            },
            MassMatrix { diag: vec![w, w] },
        )
    }

    #[test]
    fn two_point_by_hand() {
        // det(W - l A) = w^2 ((1 - l)^2 - 1) = 0  =>  l = 0, 2
        let (w, a) = two_point(0.37);
        for basis in [solve_generalized(&w, &a, 2).unwrap(), dense_oracle(&w, &a).unwrap()] {
            assert!(basis.values[0].abs() < 1e-15);
            assert!((basis.values[1] - 2.0).abs() < 1e-14);
            let phi = &basis.vectors[0];
            assert!((phi[0] - phi[1]).abs() < 1e-14);
            // phi^T A phi = 1 => phi = 1/sqrt(2w)
            assert!((phi[0] - 1.0 / libm::sqrt(0.74)).abs() < 1e-14);
        }
    }

    #[test]
    fn identity_problem() {
        let diag = vec![0.5, 2.0, 3.0, 1.5];
        let w = WeightMatrix {
            entries: CsrMatrix::from_dense(&[
                vec![0.5, 0.0, 0.0, 0.0],
                vec![0.0, 2.0, 0.0, 0.0],
                vec![0.0, 0.0, 3.0, 0.0],
                vec![0.0, 0.0, 0.0, 1.5],
            ]),
            t: 1.0,
            mode: OperatorMode::Paper,
        };
        let a = MassMatrix { diag };
        let basis = dense_oracle(&w, &a).unwrap();
        assert!(basis.values.iter().all(|l| (l - 1.0).abs() < 1e-15));
        let (off, diag) = a_orthonormality_error(&a, &basis);
        assert!(off < 1e-15 && diag < 1e-15);
    }

    #[test]
    fn sign_convention() {
        let (w, a) = two_point(1.0);
        let basis = solve_generalized(&w, &a, 2).unwrap();
        for v in &basis.vectors {
            let pivot = v
                .iter()
                .copied()
                .fold(0.0f64, |b, x| if x.abs() > b.abs() { x } else { b });
            assert!(pivot > 0.0);
        }
    }

    #[test]
    fn rejects_bad_requests() {
        let (w, a) = two_point(1.0);
        assert!(matches!(solve_generalized(&w, &a, 0), Err(Error::Parameter(_))));
        assert!(matches!(solve_generalized(&w, &a, 3), Err(Error::Parameter(_))));
        let bad = MassMatrix { diag: vec![1.0] };
        assert!(solve_generalized(&w, &bad, 1).is_err());
    }

    #[test]
    fn lanczos_handles_repeated_eigenvalues() {
        // Three disconnected 2-cliques: eigenvalue 0 and 2, each threefold.
        let mut rows = vec![Vec::new(); 6];
        for c in 0..3 {
            let (i, j) = (2 * c, 2 * c + 1);
            rows[i] = vec![(i, 1.0), (j, -1.0)];
            rows[j] = vec![(j, 1.0), (i, -1.0)];
        }
        let w = WeightMatrix {
            entries: CsrMatrix::from_rows(6, rows),
            t: 1.0,
            mode: OperatorMode::Balanced,
        };
        let a = MassMatrix { diag: vec![1.0; 6] };
        let opts = SolverOptions {
            dense_threshold: 0,
            ..SolverOptions::default()
        };
        let basis = solve_generalized_with(&w, &a, 4, &opts).unwrap();
        let want = [0.0, 0.0, 0.0, 2.0];
        for (l, w) in basis.values.iter().zip(want) {
            assert!((l - w).abs() < 1e-12, "{:?}", basis.values);
        }
        let (off, _) = a_orthonormality_error(&a, &basis);
        assert!(off < 1e-12);
    }
}
