//! Independent reference computations used as test oracles. None of these
//! go through nalgebra's decompositions.
#![allow(dead_code)]

use eiv_core::DenseMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha20Rng, rows: usize, cols: usize) -> DenseMatrix {
    let v: Vec<f64> = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
    DenseMatrix::from_row_major(rows, cols, &v).unwrap()
}

pub fn to_vecs(a: &DenseMatrix) -> Vec<Vec<f64>> {
    (0..a.rows())
        .map(|i| (0..a.cols()).map(|j| a.get(i, j)).collect())
        .collect()
}

pub fn loop_matmul(a: &DenseMatrix, b: &DenseMatrix) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; b.cols()]; a.rows()];
    for i in 0..a.rows() {
        for j in 0..b.cols() {
            let mut s = 0.0;
            for k in 0..a.cols() {
                s += a.get(i, k) * b.get(k, j);
            }
            out[i][j] = s;
        }
    }
    out
}

pub fn loop_gram(a: &DenseMatrix) -> Vec<Vec<f64>> {
    let (n, d) = a.shape();
    let mut g = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..d {
            let mut s = 0.0;
            for k in 0..n {
                s += a.get(k, i) * a.get(k, j);
            }
            g[i][j] = s;
        }
    }
    g
}

pub fn loop_inner(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    let mut s = 0.0;
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            s += a.get(i, j) * b.get(i, j);
        }
    }
    s
}

pub fn loop_frobenius(a: &DenseMatrix) -> f64 {
    loop_inner(a, a).sqrt()
}

/// Cyclic Jacobi eigenvalues of a symmetric matrix, ascending.
pub fn jacobi_eigenvalues(m: &[Vec<f64>]) -> Vec<f64> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m.to_vec();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Singular values via the Gram eigenvalues, descending.
pub fn oracle_singulars(a: &DenseMatrix) -> Vec<f64> {
    let g = if a.rows() >= a.cols() {
        loop_gram(a)
    } else {
        loop_gram(&a.transpose())
    };
    let mut s: Vec<f64> = jacobi_eigenvalues(&g).into_iter().map(|e| e.max(0.0).sqrt()).collect();
    s.reverse();
    s
}

/// Largest singular value by power iteration on `AᵀA`.
pub fn power_iteration_operator_norm(a: &DenseMatrix, iters: usize) -> f64 {
    let (m, n) = a.shape();
    let mut x = vec![1.0; n];
    for (j, xj) in x.iter_mut().enumerate() {
        *xj += 0.01 * j as f64;
    }
    let mut sigma = 0.0;
    for _ in 0..iters {
        let mut ax = vec![0.0; m];
        for i in 0..m {
            for j in 0..n {
                ax[i] += a.get(i, j) * x[j];
            }
        }
        let mut atax = vec![0.0; n];
        for j in 0..n {
            for i in 0..m {
                atax[j] += a.get(i, j) * ax[i];
            }
        }
        let norm = atax.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        x = atax.iter().map(|v| v / norm).collect();
        sigma = norm.sqrt();
    }
    sigma
}

/// Threshold `θ` with `Σ max(s_i - θ, 0) = radius`, by bisection.
pub fn l1_threshold_bisection(s: &[f64], radius: f64) -> f64 {
    let total: f64 = s.iter().sum();
    if total <= radius {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, s.iter().copied().fold(0.0, f64::max));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let mass: f64 = s.iter().map(|x| (x - mid).max(0.0)).sum();
        if mass > radius {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn max_abs_diff(a: &[Vec<f64>], b: &DenseMatrix) -> f64 {
    let mut m = 0.0_f64;
    for (i, row) in a.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            m = m.max((v - b.get(i, j)).abs());
        }
    }
    m
}

/// Sum of the oracle singular values.
pub fn oracle_nuclear(a: &DenseMatrix) -> f64 {
    oracle_singulars(a).iter().sum()
}

/// Random matrix on the sphere of radius `r` in Frobenius norm.
pub fn random_direction(rng: &mut ChaCha20Rng, rows: usize, cols: usize, r: f64) -> DenseMatrix {
    let g = gaussian(rng, rows, cols);
    g.scale(r / g.frobenius_norm())
}
