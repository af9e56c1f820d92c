//! Raw VARIMAX rotation of a block of principal components, computed on their
//! evaluation matrix with pairwise planar (Jacobi) rotations.

use nalgebra::DMatrix;

use crate::basis::FunctionSet;
use crate::error::{Error, Result};
use crate::fpca::FpcaResult;
use crate::linalg::fix_sign;

#[derive(Debug, Clone, Copy)]
pub struct VarimaxOptions {
    /// Normalize each grid point's loadings before rotating.
    pub kaiser: bool,
    pub max_sweeps: usize,
    pub tolerance: f64,
}

impl Default for VarimaxOptions {
    fn default() -> Self {
        Self {
            kaiser: false,
            max_sweeps: 500,
            tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct VarimaxResult {
    /// Orthonormal `M x M` matrix with `nu = T gamma`; rows ordered by
    /// explained variance.
    pub rotation: DMatrix<f64>,
    pub rotated_components: FunctionSet,
    /// Criterion before rotating, then after each sweep.
    pub criterion_trace: Vec<f64>,
    /// `N^-1`-scaled variance of each rotated component.
    pub explained_variance: Vec<f64>,
    pub converged: bool,
}

/// `sum_ij a_ij^4 - (1/n) sum_i (sum_j a_ij^2)^2` over the rows of `a`.
pub fn varimax_criterion(a: &DMatrix<f64>) -> f64 {
    let n = a.ncols() as f64;
    a.row_iter()
        .map(|row| {
            let s2: f64 = row.iter().map(|x| x * x).sum();
            let s4: f64 = row.iter().map(|x| x.powi(4)).sum();
            s4 - s2 * s2 / n
        })
        .sum()
}

/// Rotation maximizing the VARIMAX criterion of `loadings` (`M x n`, one row
/// per component). Returns `(T, criterion trace, converged)`.
pub fn varimax_rotation(loadings: &DMatrix<f64>, opts: &VarimaxOptions) -> (DMatrix<f64>, Vec<f64>, bool) {
    let m = loadings.nrows();
    let n = loadings.ncols();
    let mut a = loadings.clone();
    if opts.kaiser {
        for mut col in a.column_iter_mut() {
            let h = col.norm();
            if h > 0.0 {
                col /= h;
            }
        }
    }
    let mut t = DMatrix::<f64>::identity(m, m);
    let mut trace = vec![varimax_criterion(&a)];
    let nf = n as f64;
    let mut converged = false;

    for _ in 0..opts.max_sweeps {
        for r in 0..m {
            for s in (r + 1)..m {
                let (mut sa, mut sb, mut sc, mut sd) = (0.0, 0.0, 0.0, 0.0);
                for j in 0..n {
                    let (x, y) = (a[(r, j)], a[(s, j)]);
                    let u = x * x - y * y;
                    let v = 2.0 * x * y;
                    sa += u;
                    sb += v;
                    sc += u * u - v * v;
                    sd += 2.0 * u * v;
                }
                let num = sd - 2.0 * sa * sb / nf;
                let den = sc - (sa * sa - sb * sb) / nf;
                let phi = 0.25 * num.atan2(den);
                if phi.abs() < 1e-15 {
                    continue;
                }
                let (sn, cs) = phi.sin_cos();
                for j in 0..n {
                    let (x, y) = (a[(r, j)], a[(s, j)]);
                    a[(r, j)] = cs * x + sn * y;
                    a[(s, j)] = -sn * x + cs * y;
                }
                for j in 0..m {
                    let (x, y) = (t[(r, j)], t[(s, j)]);
                    t[(r, j)] = cs * x + sn * y;
                    t[(s, j)] = -sn * x + cs * y;
                }
            }
        }
        let value = varimax_criterion(&a);
        let last = *trace.last().expect("nonempty");
        trace.push(value);
        if value - last < opts.tolerance * last.abs().max(1.0) {
            converged = true;
            break;
        }
    }
    (t, trace, converged)
}

/// VARIMAX rotation of the first `m` components, evaluated on `grid`.
pub fn varimax(fpca: &FpcaResult, m: usize, grid: &[f64], opts: &VarimaxOptions) -> Result<VarimaxResult> {
    if m < 2 {
        return Err(Error::invalid("VARIMAX needs at least 2 components"));
    }
    if m > fpca.num_components() {
        return Err(Error::OutOfRange(format!(
            "cannot rotate {m} of {} components",
            fpca.num_components()
        )));
    }
    if grid.len() < m {
        return Err(Error::invalid(format!(
            "evaluation grid of {} points is smaller than {m} components",
            grid.len()
        )));
    }
    let gamma = fpca.leading(m);
    let b = gamma.evaluate(grid);
    let (t, criterion_trace, converged) = varimax_rotation(&b, opts);

    let lambda = &fpca.eigenvalues[..m];
    let variance: Vec<f64> = (0..m)
        .map(|i| (0..m).map(|k| t[(i, k)] * t[(i, k)] * lambda[k]).sum())
        .collect();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&x, &y| variance[y].partial_cmp(&variance[x]).expect("finite"));

    let mut rotation = DMatrix::zeros(m, m);
    let mut explained_variance = Vec::with_capacity(m);
    for (r, &i) in order.iter().enumerate() {
        let mut row: Vec<f64> = t.row(i).iter().copied().collect();
        let coefs: Vec<f64> = (gamma.coefficients().transpose() * nalgebra::DVector::from_column_slice(&row))
            .iter()
            .copied()
            .collect();
        let mut probe = coefs.clone();
        if fix_sign(&mut probe) {
            row.iter_mut().for_each(|x| *x = -*x);
        }
        rotation.row_mut(r).copy_from_slice(&row);
        explained_variance.push(variance[i]);
    }
    let rotated = &rotation * gamma.coefficients();
    Ok(VarimaxResult {
        rotation,
        rotated_components: FunctionSet::new(gamma.basis().clone(), rotated)?,
        criterion_trace,
        explained_variance,
        converged,
    })
}
