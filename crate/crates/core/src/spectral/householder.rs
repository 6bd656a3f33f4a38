//! Householder tridiagonalization and implicit QL iteration for real
//! symmetric matrices (the EISPACK `tred2` / `tql2` pair).

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Reduces symmetric `a` (row-major, consumed) to tridiagonal form.
/// Returns `(diag, offdiag, v)` where `v` holds the orthogonal transform
/// row-major and `offdiag[i]` couples `i - 1` and `i` (`offdiag[0] = 0`).
fn tred2(mut v: Vec<Vec<f64>>) -> (Vec<f64>, Vec<f64>, Vec<Vec<f64>>) {
    let n = v.len();
    let mut d: Vec<f64> = v[n - 1].clone();
    let mut e = vec![0.0; n];

    for i in (1..n).rev() {
        let scale: f64 = d[..i].iter().map(|x| x.abs()).sum();
        let mut h = 0.0;
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[i - 1][j];
                v[i][j] = 0.0;
                v[j][i] = 0.0;
            }
        } else {
            for dk in d[..i].iter_mut() {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = libm::sqrt(h);
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e[..i].iter_mut() {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[j][i] = f;
                g = e[j] + v[j][j] * f;
                for k in j + 1..i {
                    g += v[k][j] * d[k];
                    e[k] += v[k][j] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[k][j] -= f * e[k] + g * d[k];
                }
                d[j] = v[i - 1][j];
                v[i][j] = 0.0;
            }
        }
        d[i] = h;
    }

    for i in 0..n - 1 {
        v[n - 1][i] = v[i][i];
        v[i][i] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[k][i + 1] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[k][i + 1] * v[k][j];
                }
                for k in 0..=i {
                    v[k][j] -= g * d[k];
                }
            }
        }
        for row in v.iter_mut().take(i + 1) {
            row[i + 1] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[n - 1][j];
        v[n - 1][j] = 0.0;
    }
    v[n - 1][n - 1] = 1.0;
    e[0] = 0.0;
    (d, e, v)
}

/// Diagonalizes the symmetric tridiagonal matrix `(d, e)` in place, with
/// `e[i]` coupling `i - 1` and `i`. Every row of `z` (length `n`) is
/// post-multiplied by the accumulated rotations, so passing identity rows
/// yields eigenvector components; passing only some rows tracks only
/// those components. On return `d` is ascending and the columns of `z`
/// are permuted to match.
pub(crate) fn tql2(d: &mut [f64], e: &mut [f64], z: &mut [Vec<f64>]) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let max_iter = 60 * n.max(1);
    let mut iter_total = 0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            loop {
                iter_total += 1;
                if iter_total > max_iter {
                    return Err(Error::Convergence {
                        residual: e[l].abs(),
                        iterations: iter_total,
                    });
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = libm::hypot(p, 1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d[l + 2..].iter_mut() {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = libm::hypot(p, e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for row in z.iter_mut() {
                        let hk = row[i + 1];
                        row[i + 1] = s * row[i] + c * hk;
                        row[i] = c * row[i] - s * hk;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }

    // selection sort keeps the permutation cheap to apply to z
    for i in 0..n.saturating_sub(1) {
        let mut k = i;
        for j in i + 1..n {
            if d[j] < d[k] {
                k = j;
            }
        }
        if k != i {
            d.swap(i, k);
            for row in z.iter_mut() {
                row.swap(i, k);
            }
        }
    }
    Ok(())
}

/// All eigenpairs of a dense symmetric matrix, ascending. Eigenvector `i`
/// is `vectors[i]`.
pub fn symmetric_eigen(a: Vec<Vec<f64>>) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = a.len();
    if n == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    if n == 1 {
        return Ok((vec![a[0][0]], vec![vec![1.0]]));
    }
    let (mut d, mut e, mut v) = tred2(a);
    tql2(&mut d, &mut e, &mut v)?;
    Ok((d, transpose(&v)))
}

/// All eigenpairs of the symmetric tridiagonal matrix with diagonal
/// `diag` and off-diagonal `off` (`off[i]` couples `i` and `i + 1`).
pub fn tridiagonal_eigen(diag: &[f64], off: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = shifted_offdiag(off, n);
    let mut z: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row = vec![0.0; n];
            row[i] = 1.0;
            row
        })
        .collect();
    tql2(&mut d, &mut e, &mut z)?;
    Ok((d, transpose(&z)))
}

/// Eigenvalues of a symmetric tridiagonal matrix together with the last
/// component of each eigenvector.
pub fn tridiagonal_eigen_last(diag: &[f64], off: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = shifted_offdiag(off, n);
    let mut last = vec![0.0; n];
    if n > 0 {
        last[n - 1] = 1.0;
    }
    let mut z = vec![last];
    tql2(&mut d, &mut e, &mut z)?;
    Ok((d, z.pop().unwrap_or_default()))
}

fn shifted_offdiag(off: &[f64], n: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    if n > 1 {
        e[1..].copy_from_slice(&off[..n - 1]);
    }
    e
}

fn transpose(v: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = v.len();
    let m = v.first().map_or(0, Vec::len);
    (0..m).map(|j| (0..n).map(|i| v[i][j]).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_decomposition(a: &[Vec<f64>], vals: &[f64], vecs: &[Vec<f64>]) {
        let n = a.len();
        for (l, v) in vals.iter().zip(vecs) {
            for i in 0..n {
                let av: f64 = (0..n).map(|j| a[i][j] * v[j]).sum();
                assert!((av - l * v[i]).abs() < 1e-12, "residual too large");
            }
        }
        for i in 0..n {
            for j in 0..n {
                let ip: f64 = vecs[i].iter().zip(&vecs[j]).map(|(x, y)| x * y).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((ip - want).abs() < 1e-12);
            }
        }
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn dense_small() {
        let a = vec![
            vec![4.0, 1.0, -2.0, 2.0],
            vec![1.0, 2.0, 0.0, 1.0],
            vec![-2.0, 0.0, 3.0, -2.0],
            vec![2.0, 1.0, -2.0, -1.0],
        ];
        let (vals, vecs) = symmetric_eigen(a.clone()).unwrap();
        check_decomposition(&a, &vals, &vecs);
        let trace: f64 = vals.iter().sum();
        assert!((trace - 8.0).abs() < 1e-12);
    }

    #[test]
    fn dense_diagonal_and_repeated() {
        let a = vec![vec![2.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 2.0]];
        let (vals, vecs) = symmetric_eigen(a.clone()).unwrap();
        assert_eq!(vals, vec![1.0, 2.0, 2.0]);
        check_decomposition(&a, &vals, &vecs);
    }

    #[test]
    fn tridiagonal_path_graph() {
        // Path Laplacian on 5 nodes: eigenvalues 2 - 2 cos(k pi / 5).
        let d = [1.0, 2.0, 2.0, 2.0, 1.0];
        let off = [-1.0; 4];
        let (vals, vecs) = tridiagonal_eigen(&d, &off).unwrap();
        for (k, l) in vals.iter().enumerate() {
            let want = 2.0 - 2.0 * libm::cos(k as f64 * core::f64::consts::PI / 5.0);
            assert!((l - want).abs() < 1e-13);
        }
        let (vals2, last) = tridiagonal_eigen_last(&d, &off).unwrap();
        assert_eq!(vals, vals2);
        for (v, l) in vecs.iter().zip(&last) {
            assert!((v[4] - l).abs() < 1e-14);
        }
    }
}
