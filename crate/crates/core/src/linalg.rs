//! Small dense helpers shared by the decompositions: deterministic sign and
//! ordering conventions on top of nalgebra's eigen and singular value solvers.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Flip `v` so its largest-magnitude entry is positive (first index wins ties).
/// Returns whether the vector was flipped.
pub fn fix_sign(v: &mut [f64]) -> bool {
    let mut best = 0usize;
    let mut best_abs = -1.0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > best_abs {
            best_abs = x.abs();
            best = i;
        }
    }
    if !v.is_empty() && v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
        true
    } else {
        false
    }
}

fn lexicographic_desc(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match y.partial_cmp(x).unwrap_or(Ordering::Equal) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

/// Sort `(value, vector)` pairs by value descending. Runs of values within
/// `tie_tol` of their neighbour are ordered by their vectors, lexicographically
/// descending.
pub(crate) fn sort_pairs_desc(pairs: &mut [(f64, Vec<f64>)], tie_tol: f64) {
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal));
    let mut start = 0;
    while start < pairs.len() {
        let mut end = start + 1;
        while end < pairs.len() && (pairs[end - 1].0 - pairs[end].0).abs() <= tie_tol {
            end += 1;
        }
        if end - start > 1 {
            pairs[start..end].sort_by(|a, b| lexicographic_desc(&a.1, &b.1));
        }
        start = end;
    }
}

/// Eigen-decomposition of a symmetric positive semidefinite matrix with
/// eigenvalues in descending order, eigenvectors as *rows* with the sign
/// convention of [`fix_sign`], and negative round-off clipped to zero.
pub struct SortedEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

pub fn sorted_psd_eigen(sym: DMatrix<f64>) -> Result<SortedEigen> {
    let n = sym.nrows();
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("symmetric eigen-decomposition did not converge".into()))?;
    let scale: f64 = eig.eigenvalues.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let mut pairs: Vec<(f64, Vec<f64>)> = (0..n)
        .map(|k| {
            let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
            fix_sign(&mut v);
            (eig.eigenvalues[k], v)
        })
        .collect();
    for (val, _) in pairs.iter_mut() {
        if *val < 0.0 {
            if *val < -1e-8 * scale.max(f64::MIN_POSITIVE) {
                return Err(Error::Numerical(format!(
                    "covariance has a negative eigenvalue {val:e} (scale {scale:e})"
                )));
            }
            *val = 0.0;
        }
    }
    sort_pairs_desc(&mut pairs, 1e-12 * scale.max(f64::MIN_POSITIVE));
    let mut vectors = DMatrix::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (r, (val, v)) in pairs.into_iter().enumerate() {
        values.push(val);
        vectors.row_mut(r).copy_from_slice(&v);
    }
    Ok(SortedEigen { values, vectors })
}

/// Singular values (descending) and vectors of an `m x p` matrix: the
/// columns of `u` and `v` are the left and right vectors, `min(m, p)` of each.
pub struct SingularPairs {
    pub values: Vec<f64>,
    pub u: DMatrix<f64>,
    pub v: DMatrix<f64>,
}

/// SVD through the symmetric eigenproblem of `[[0, A], [A', 0]]`, whose
/// eigenpairs are `(+-s, (u; +-v) / sqrt 2)`. Singular values come out with
/// absolute accuracy near machine precision, small ones included.
pub fn singular_pairs(a: &DMatrix<f64>) -> Result<SingularPairs> {
    let (m, p) = a.shape();
    let r = m.min(p);
    let mut joint = DMatrix::zeros(m + p, m + p);
    joint.view_mut((0, m), (m, p)).copy_from(a);
    joint.view_mut((m, 0), (p, m)).copy_from(&a.transpose());
    let eig = SymmetricEigen::try_new(joint, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("singular value decomposition did not converge".into()))?;
    let mut order: Vec<usize> = (0..m + p).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap_or(Ordering::Equal));
    let mut values = Vec::with_capacity(r);
    let mut u = DMatrix::zeros(m, r);
    let mut v = DMatrix::zeros(p, r);
    let scale = a.amax().max(f64::MIN_POSITIVE);
    for (col, &k) in order.iter().take(r).enumerate() {
        let w = eig.eigenvectors.column(k);
        let (mut left, mut right) = (w.rows(0, m).into_owned(), w.rows(m, p).into_owned());
        // the split is exact for s > 0; renormalize to absorb round-off
        for half in [&mut left, &mut right] {
            let n = half.norm();
            if n > 0.0 {
                *half /= n;
            }
        }
        let s = eig.eigenvalues[k].max(0.0);
        if s > 1e-12 * scale && (a * &right - &left * s).amax() > 1e-10 * scale {
            return Err(Error::Numerical("singular value decomposition failed its residual check".into()));
        }
        values.push(s);
        u.set_column(col, &left);
        v.set_column(col, &right);
    }
    Ok(SingularPairs { values, u, v })
}

/// Extend the orthonormal rows of `rows` (k x n) to an n x n orthonormal
/// matrix by Gram-Schmidt on the unit vectors e_0, e_1, ... in order.
pub fn complete_orthonormal_rows(rows: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    let mut basis: Vec<DVector<f64>> = (0..rows.nrows()).map(|r| rows.row(r).transpose()).collect();
    let mut k = 0;
    while basis.len() < n && k < n {
        let mut e = DVector::zeros(n);
        e[k] = 1.0;
        // twice is enough
        for _ in 0..2 {
            for b in &basis {
                let d = b.dot(&e);
                e.axpy(-d, b, 1.0);
            }
        }
        let norm = e.norm();
        if norm > 1e-8 {
            basis.push(e / norm);
        }
        k += 1;
    }
    let mut out = DMatrix::zeros(basis.len(), n);
    for (r, b) in basis.iter().enumerate() {
        out.row_mut(r).copy_from_slice(b.as_slice());
    }
    out
}

/// Symmetric inverse square root together with the reciprocal condition number.
pub(crate) fn inverse_sqrt_spd(sym: &DMatrix<f64>, rcond_floor: f64) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::try_new(sym.clone(), f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("symmetric eigen-decomposition did not converge".into()))?;
    let max = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let rcond = if max > 0.0 { min / max } else { 0.0 };
    if !(rcond >= rcond_floor) {
        return Err(Error::IllConditioned {
            rcond,
            floor: rcond_floor,
        });
    }
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| 1.0 / v.sqrt()));
    Ok(&eig.eigenvectors * d * eig.eigenvectors.transpose())
}

/// Max absolute deviation of `m` from the identity.
pub fn identity_defect(m: &DMatrix<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let want = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((m[(i, j)] - want).abs());
        }
    }
    worst
}
