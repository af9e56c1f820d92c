#![allow(dead_code)]

use nalgebra::DMatrix;
use ppc_core::{FourierBasis, FunctionSet};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Singular values by one-sided (Hestenes) Jacobi rotations on plain vectors,
/// sorted descending, `min(rows, cols)` of them.
pub fn jacobi_singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    let (rows, cols) = a.shape();
    // work on whichever orientation has fewer columns
    let (n, k, get): (usize, usize, Box<dyn Fn(usize, usize) -> f64>) = if cols <= rows {
        (rows, cols, Box::new(|i, j| a[(i, j)]))
    } else {
        (cols, rows, Box::new(|i, j| a[(j, i)]))
    };
    let mut c: Vec<Vec<f64>> = (0..k).map(|j| (0..n).map(|i| get(i, j)).collect()).collect();
    for _ in 0..100 {
        let mut rotated = false;
        for p in 0..k {
            for q in (p + 1)..k {
                let alpha: f64 = c[p].iter().map(|x| x * x).sum();
                let beta: f64 = c[q].iter().map(|x| x * x).sum();
                let gamma: f64 = c[p].iter().zip(&c[q]).map(|(x, y)| x * y).sum();
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for i in 0..n {
                    let (x, y) = (c[p][i], c[q][i]);
                    c[p][i] = cs * x - sn * y;
                    c[q][i] = sn * x + cs * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut s: Vec<f64> = c.iter().map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    s.sort_by(|x, y| y.partial_cmp(x).unwrap());
    s
}

/// `m` random orthonormal rows of length `d` (Gram-Schmidt on Gaussian rows).
pub fn random_orthonormal_rows(rng: &mut ChaCha8Rng, m: usize, d: usize) -> DMatrix<f64> {
    random_orthonormal_rows_after(rng, m, d, Vec::new())
}

/// `m` orthonormal rows of length `d`, each orthogonal to the ones vector.
pub fn centered_orthonormal_rows(rng: &mut ChaCha8Rng, m: usize, d: usize) -> DMatrix<f64> {
    let all = random_orthonormal_rows_after(rng, m, d, vec![vec![1.0 / (d as f64).sqrt(); d]]);
    all.rows(1, m).into_owned()
}

fn random_orthonormal_rows_after(rng: &mut ChaCha8Rng, m: usize, d: usize, mut rows: Vec<Vec<f64>>) -> DMatrix<f64> {
    let target = rows.len() + m;
    while rows.len() < target {
        let mut v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        for _ in 0..2 {
            for r in &rows {
                let dot: f64 = r.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(r).for_each(|(x, y)| *x -= dot * y);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            rows.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j])
}

pub fn random_frame(rng: &mut ChaCha8Rng, basis: &FourierBasis, m: usize) -> FunctionSet {
    FunctionSet::new(basis.clone(), random_orthonormal_rows(rng, m, basis.dim())).unwrap()
}

pub fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    random_orthonormal_rows(rng, n, n)
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn unit_draw(rng: &mut ChaCha8Rng) -> f64 {
    rng.random::<f64>()
}

/// Composite Simpson rule on `[a, b]` with `intervals` (even) subintervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    let h = (b - a) / intervals as f64;
    let mut sum = f(a) + f(b);
    for i in 1..intervals {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + i as f64 * h);
    }
    sum * h / 3.0
}
