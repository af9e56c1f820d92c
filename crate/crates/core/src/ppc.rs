//! Principal periodic components.
//!
//! The leading principal components `gamma` (an orthonormal frame of the
//! subspace they span) and a periodic reference frame `f` are rotated towards
//! each other through the singular value decomposition
//! `Sigma_gf = U' W V` of their cross-Gram matrix. The rotated components
//! `xi_j = u_j' gamma` are the PPCs, `theta_j = v_j' f` their exactly periodic
//! benchmarks, and the singular values are the correlations
//! `rho_j = <xi_j, theta_j>` (cosines of the principal angles between the
//! two subspaces).

use nalgebra::{DMatrix, DVector};

use crate::basis::{gram_matrix, FunctionSet, PeriodicSubBasis};
use crate::error::{Error, Result};
use crate::fpca::FpcaResult;
use crate::linalg::{
    complete_orthonormal_rows, fix_sign, identity_defect, inverse_sqrt_spd, singular_pairs, sorted_psd_eigen,
};
use crate::smoothing::FunctionalSample;
use crate::varimax::VarimaxResult;

/// Singular values within this distance of each other are treated as tied.
pub const TIE_TOLERANCE: f64 = 1e-10;
/// Singular values at or below this are treated as zero.
pub const ZERO_TOLERANCE: f64 = 1e-12;
/// Frames whose Gram matrix deviates from the identity by more than this are
/// rejected by the orthonormal entry points.
const FRAME_TOLERANCE: f64 = 1e-8;
/// Reciprocal condition number floor for the general (non-orthonormal) path.
pub const RCOND_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct PpcResult {
    /// `M x M` orthonormal; row `j` rotates `gamma` into `xi_j`.
    pub u_hat: DMatrix<f64>,
    /// `P x P` orthonormal; row `j` rotates `f` into `theta_j`.
    pub v_hat: DMatrix<f64>,
    /// All `M` rotated components. Those past `min(M, P)` have no benchmark.
    pub ppcs: FunctionSet,
    /// All `P` rotated reference functions.
    pub benchmarks: FunctionSet,
    /// `rho_j` for `j < min(M, P)`, descending in `[0, 1]`.
    pub correlations: Vec<f64>,
}

impl PpcResult {
    pub fn n_pairs(&self) -> usize {
        self.correlations.len()
    }

    pub fn m(&self) -> usize {
        self.ppcs.len()
    }
}

/// Rotate the leading components toward the periodic sub-basis.
pub fn ppc_rotation(gamma: &FunctionSet, periodic: &PeriodicSubBasis) -> Result<PpcResult> {
    gamma.basis().ensure_same(periodic.parent())?;
    rotate_toward(gamma, &periodic.frame(), None)
}

/// As [`ppc_rotation`], with the score variances of the components (the fPCA
/// eigenvalues) used to resolve tied correlations: inside a tie the PPCs are
/// the principal axes of their score covariance, by decreasing variance.
pub fn ppc_rotation_weighted(
    gamma: &FunctionSet,
    variances: &[f64],
    periodic: &PeriodicSubBasis,
) -> Result<PpcResult> {
    gamma.basis().ensure_same(periodic.parent())?;
    if variances.len() != gamma.len() {
        return Err(Error::invalid(format!(
            "{} variances for {} components",
            variances.len(),
            gamma.len()
        )));
    }
    rotate_toward(gamma, &periodic.frame(), Some(variances))
}

/// Rotate an orthonormal frame `gamma` toward any orthonormal reference frame.
pub fn rotate_toward(gamma: &FunctionSet, reference: &FunctionSet, variances: Option<&[f64]>) -> Result<PpcResult> {
    if gamma.is_empty() || reference.is_empty() {
        return Err(Error::invalid("both frames need at least one function"));
    }
    let sigma_gg = gram_matrix(gamma, gamma)?;
    let sigma_ff = gram_matrix(reference, reference)?;
    for (name, g) in [("component", &sigma_gg), ("reference", &sigma_ff)] {
        let defect = identity_defect(g);
        if defect > FRAME_TOLERANCE {
            return Err(Error::invalid(format!(
                "{name} frame is not orthonormal (Gram defect {defect:e}); use canonical_correlations"
            )));
        }
    }
    let sigma = gram_matrix(gamma, reference)?;
    let (u_hat, v_hat, correlations) = rotations(&sigma, variances)?;
    let ppcs = &u_hat * gamma.coefficients();
    let benchmarks = &v_hat * reference.coefficients();
    Ok(PpcResult {
        ppcs: FunctionSet::new(gamma.basis().clone(), ppcs)?,
        benchmarks: FunctionSet::new(gamma.basis().clone(), benchmarks)?,
        u_hat,
        v_hat,
        correlations,
    })
}

/// Full orthonormal rotations `(U, V)` with `U sigma V' = diag(rho)`.
///
/// Deterministic conventions: within a run of tied nonzero singular values
/// the right singular vectors are replaced by the orthonormalized projections
/// of the reference unit vectors onto their span (in reference order), and
/// the left vectors follow; with `variances` the run is further rotated to the
/// eigenvectors of `U_c diag(variances) U_c'`. Vectors for zero singular values are completed by
/// Gram-Schmidt from unit vectors. Each pair is signed so that its right
/// vector's largest entry is positive.
fn rotations(sigma: &DMatrix<f64>, variances: Option<&[f64]>) -> Result<(DMatrix<f64>, DMatrix<f64>, Vec<f64>)> {
    let (m, p) = sigma.shape();
    let r = m.min(p);
    let svd = singular_pairs(sigma)?;
    let mut values: Vec<f64> = svd.values.iter().map(|s| s.clamp(0.0, 1.0)).collect();
    let rank = values.iter().take_while(|&&s| s > ZERO_TOLERANCE).count();
    values[rank..].iter_mut().for_each(|s| *s = 0.0);

    let mut left = DMatrix::zeros(rank, m);
    let mut right = DMatrix::zeros(rank, p);
    for row in 0..rank {
        left.row_mut(row).copy_from(&svd.u.column(row).transpose());
        right.row_mut(row).copy_from(&svd.v.column(row).transpose());
    }

    // canonical bases inside tied clusters
    let mut start = 0;
    while start < rank {
        let mut end = start + 1;
        while end < rank && values[end - 1] - values[end] <= TIE_TOLERANCE {
            end += 1;
        }
        if end - start > 1 {
            let c = end - start;
            let block_v = right.rows(start, c).into_owned();
            let block_u = left.rows(start, c).into_owned();
            let mut q = canonical_cluster_basis(&block_v);
            if let Some(var) = variances {
                let u_c = &q * &block_u;
                let weights = DMatrix::from_diagonal(&DVector::from_column_slice(var));
                let cov = &u_c * weights * u_c.transpose();
                q = sorted_psd_eigen((&cov + cov.transpose()) * 0.5)?.vectors * q;
            }
            right.rows_mut(start, c).copy_from(&(&q * block_v));
            left.rows_mut(start, c).copy_from(&(&q * block_u));
            let mean = values[start..end].iter().sum::<f64>() / c as f64;
            values[start..end].iter_mut().for_each(|s| *s = mean);
        }
        start = end;
    }

    for row in 0..rank {
        let mut v: Vec<f64> = right.row(row).iter().copied().collect();
        if fix_sign(&mut v) {
            right.row_mut(row).neg_mut();
            left.row_mut(row).neg_mut();
        }
    }

    let mut u_hat = complete_orthonormal_rows(&left, m);
    let mut v_hat = complete_orthonormal_rows(&right, p);
    for (mat, from) in [(&mut u_hat, rank), (&mut v_hat, rank)] {
        for row in from..mat.nrows() {
            let mut v: Vec<f64> = mat.row(row).iter().copied().collect();
            if fix_sign(&mut v) {
                mat.row_mut(row).neg_mut();
            }
        }
    }
    values.truncate(r);
    Ok((u_hat, v_hat, values))
}

/// `c x c` orthogonal matrix `Q` such that the rows of `Q block` are the
/// Gram-Schmidt orthonormalization of the projections of `e_0, e_1, ...`
/// onto the row space of `block` (`c x p`, orthonormal rows).
fn canonical_cluster_basis(block: &DMatrix<f64>) -> DMatrix<f64> {
    let (c, p) = block.shape();
    let mut picked: Vec<DVector<f64>> = Vec::with_capacity(c);
    for k in 0..p {
        if picked.len() == c {
            break;
        }
        // coordinates of the projection of e_k in the block's row basis
        let mut a: DVector<f64> = block.column(k).into_owned();
        for _ in 0..2 {
            for q in &picked {
                let d = q.dot(&a);
                a.axpy(-d, q, 1.0);
            }
        }
        let norm = a.norm();
        if norm > 1e-6 {
            picked.push(a / norm);
        }
    }
    let mut q = DMatrix::zeros(c, c);
    for (r, v) in picked.iter().enumerate() {
        q.row_mut(r).copy_from(&v.transpose());
    }
    if picked.len() < c {
        q = complete_orthonormal_rows(&q.rows(0, picked.len()).into_owned(), c);
    }
    q
}

/// Canonical correlations between two frames that need not be orthonormal.
#[derive(Debug, Clone)]
pub struct CanonicalCorrelations {
    /// Rows `u_j` with `u_j' Sigma_gg u_j = 1`.
    pub u: DMatrix<f64>,
    /// Rows `v_j` with `v_j' Sigma_ff v_j = 1`.
    pub v: DMatrix<f64>,
    pub correlations: Vec<f64>,
}

/// Canonical correlation solution from explicit Gram matrices: `u_j` is
/// proportional to the `j`-th eigenvector of
/// `Sigma_gg^-1 Sigma_gf Sigma_ff^-1 Sigma_fg`, and likewise for `v_j`.
/// Computed by whitening both frames and taking an SVD.
pub fn canonical_correlations(
    sigma_gg: &DMatrix<f64>,
    sigma_ff: &DMatrix<f64>,
    sigma_gf: &DMatrix<f64>,
) -> Result<CanonicalCorrelations> {
    let (m, p) = sigma_gf.shape();
    if sigma_gg.shape() != (m, m) || sigma_ff.shape() != (p, p) {
        return Err(Error::invalid("Gram matrix shapes do not match the cross-Gram matrix"));
    }
    let wg = inverse_sqrt_spd(sigma_gg, RCOND_FLOOR)?;
    let wf = inverse_sqrt_spd(sigma_ff, RCOND_FLOOR)?;
    let k = &wg * sigma_gf * &wf;
    let (a, b, correlations) = rotations(&k, None)?;
    Ok(CanonicalCorrelations {
        u: a * wg,
        v: b * wf,
        correlations,
    })
}

/// Canonical correlations between the spans of two arbitrary function sets.
pub fn canonical_correlations_of(gamma: &FunctionSet, reference: &FunctionSet) -> Result<CanonicalCorrelations> {
    canonical_correlations(
        &gram_matrix(gamma, gamma)?,
        &gram_matrix(reference, reference)?,
        &gram_matrix(gamma, reference)?,
    )
}

/// Projection scores of a sample onto a set of functions.
#[derive(Debug, Clone)]
pub struct ComponentScores {
    /// `N x m`.
    pub scores: DMatrix<f64>,
    /// `(N - 1)^-1 sum_i s_ij^2` per function.
    pub variances: Vec<f64>,
}

pub fn scores(sample: &FunctionalSample, functions: &FunctionSet) -> Result<ComponentScores> {
    sample.basis().ensure_same(functions.basis())?;
    let n = sample.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "score variances need at least 2 curves, got {n}"
        )));
    }
    let s = sample.coefficients() * functions.coefficients().transpose();
    let variances = score_variances(&s);
    Ok(ComponentScores { scores: s, variances })
}

pub(crate) fn score_variances(s: &DMatrix<f64>) -> Vec<f64> {
    let denom = (s.nrows() - 1) as f64;
    s.column_iter().map(|c| c.norm_squared() / denom).collect()
}

fn cumulative(v: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    v.iter()
        .map(|x| {
            acc += x;
            acc
        })
        .collect()
}

/// Score variances of the leading fPCs, PPCs, benchmarks and (optionally)
/// VARIMAX components, all with the `(N - 1)^-1` normalization.
#[derive(Debug, Clone)]
pub struct VarianceDecomposition {
    pub lambda_gamma: Vec<f64>,
    pub lambda_xi: Vec<f64>,
    pub lambda_theta: Vec<f64>,
    pub lambda_nu: Option<Vec<f64>>,
    pub cumulative_gamma: Vec<f64>,
    pub cumulative_xi: Vec<f64>,
    pub cumulative_theta: Vec<f64>,
    pub cumulative_nu: Option<Vec<f64>>,
    /// `(N - 1)^-1 sum_i ||z_i||^2`.
    pub total_variance: f64,
}

pub fn variance_decomposition(
    centered: &FunctionalSample,
    fpca: &FpcaResult,
    ppc: &PpcResult,
    varimax: Option<&VarimaxResult>,
) -> Result<VarianceDecomposition> {
    let m = ppc.m();
    let lambda_gamma = scores(centered, &fpca.leading(m))?.variances;
    let lambda_xi = scores(centered, &ppc.ppcs)?.variances;
    let lambda_theta = scores(centered, &ppc.benchmarks.head(ppc.n_pairs()))?.variances;
    let lambda_nu = varimax
        .map(|v| scores(centered, &v.rotated_components).map(|s| s.variances))
        .transpose()?;
    let total_variance = centered.coefficients().norm_squared() / (centered.len() - 1) as f64;
    Ok(VarianceDecomposition {
        cumulative_gamma: cumulative(&lambda_gamma),
        cumulative_xi: cumulative(&lambda_xi),
        cumulative_theta: cumulative(&lambda_theta),
        cumulative_nu: lambda_nu.as_deref().map(cumulative),
        lambda_gamma,
        lambda_xi,
        lambda_theta,
        lambda_nu,
        total_variance,
    })
}

/// Cumulative benchmark variance as a share of cumulative PPC variance.
#[derive(Debug, Clone, PartialEq)]
pub struct AiDiagnostic {
    /// `AI_j` for `j = 1..`; `None` where the denominator vanishes.
    pub ai: Vec<Option<f64>>,
    /// Advisory cutoff: the largest `j` whose drop `AI_j - AI_{j+1}` exceeds
    /// twice the median drop.
    pub suggested_j: Option<usize>,
}

pub fn annual_information(decomp: &VarianceDecomposition) -> Result<AiDiagnostic> {
    let len = decomp.cumulative_theta.len().min(decomp.cumulative_xi.len());
    if len == 0 {
        return Err(Error::invalid("annual information needs at least one PPC/benchmark pair"));
    }
    let ai: Vec<Option<f64>> = (0..len)
        .map(|j| {
            let den = decomp.cumulative_xi[j];
            (den > 0.0).then(|| decomp.cumulative_theta[j] / den)
        })
        .collect();
    Ok(AiDiagnostic {
        suggested_j: elbow(&ai),
        ai,
    })
}

fn elbow(ai: &[Option<f64>]) -> Option<usize> {
    let drops: Vec<(usize, f64)> = ai
        .windows(2)
        .enumerate()
        .filter_map(|(j, w)| Some((j + 1, w[0]? - w[1]?)))
        .collect();
    if drops.is_empty() {
        return None;
    }
    let mut sorted: Vec<f64> = drops.iter().map(|d| d.1).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        0.5 * (sorted[mid - 1] + sorted[mid])
    };
    drops.iter().rev().find(|d| d.1 > 2.0 * median).map(|d| d.0)
}

/// Split of each curve into mean, nearly periodic, aperiodic and
/// small-eigenvalue parts (all `N x dim` except the mean).
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub mean: DVector<f64>,
    pub nearly_periodic: DMatrix<f64>,
    pub aperiodic: DMatrix<f64>,
    pub remainder: DMatrix<f64>,
    pub j: usize,
    pub m: usize,
}

/// `z_i = mu + sum_{j<=J} s^xi_ij xi_j + sum_{J<j<=M} s^xi_ij xi_j
///  + sum_{j>M} s^gamma_ij gamma_j`.
pub fn decompose(
    centered: &FunctionalSample,
    mean: &DVector<f64>,
    fpca: &FpcaResult,
    ppc: &PpcResult,
    j: usize,
) -> Result<Decomposition> {
    centered.basis().ensure_same(ppc.ppcs.basis())?;
    centered.basis().ensure_same(fpca.components.basis())?;
    let m = ppc.m();
    let k = fpca.num_components();
    if j == 0 || j > m {
        return Err(Error::invalid(format!("cutoff J = {j} must lie in 1..={m}")));
    }
    if m > k {
        return Err(Error::invalid(format!("{m} PPCs but only {k} components")));
    }
    if mean.len() != centered.basis().dim() {
        return Err(Error::invalid("mean function has the wrong length"));
    }
    let z = centered.coefficients();
    let xi = ppc.ppcs.coefficients();
    let s_xi = z * xi.transpose();
    let nearly_periodic = s_xi.columns(0, j) * xi.rows(0, j);
    let aperiodic = s_xi.columns(j, m - j) * xi.rows(j, m - j);
    let tail = fpca.components.coefficients().rows(m, k - m);
    let remainder = (z * tail.transpose()) * tail;
    Ok(Decomposition {
        mean: mean.clone(),
        nearly_periodic,
        aperiodic,
        remainder,
        j,
        m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::FourierBasis;

    fn unit(basis: &FourierBasis, entries: &[(usize, f64)]) -> DMatrix<f64> {
        let mut row = DMatrix::zeros(1, basis.dim());
        for &(slot, v) in entries {
            row[(0, slot)] = v;
        }
        row
    }

    #[test]
    fn perfect_alignment() {
        let basis = FourierBasis::new(1.0, 6, true).unwrap();
        let periodic = PeriodicSubBasis::new(&basis, 1, 2).unwrap();
        // f1 is index 1
        let gamma = FunctionSet::new(basis.clone(), unit(&basis, &[(1, 1.0)])).unwrap();
        let r = ppc_rotation(&gamma, &periodic).unwrap();
        assert_eq!(r.n_pairs(), 1);
        assert!((r.correlations[0] - 1.0).abs() < 1e-15);
        assert!((r.ppcs.coefficients()[(0, 1)] - 1.0).abs() < 1e-15);
        assert!((r.benchmarks.coefficients()[(0, 1)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn half_angle_projection() {
        let basis = FourierBasis::new(1.0, 6, true).unwrap();
        let periodic = PeriodicSubBasis::new(&basis, 2, 2).unwrap(); // indices 3, 4
        let s = 0.5f64.sqrt();
        let gamma = FunctionSet::new(basis.clone(), unit(&basis, &[(3, s), (1, s)])).unwrap();
        let r = ppc_rotation(&gamma, &periodic).unwrap();
        assert!((r.correlations[0] - s).abs() < 1e-15);
        let theta = r.benchmarks.row(0);
        assert!((theta[3] - 1.0).abs() < 1e-15);
        assert!(theta[4].abs() < 1e-15);
        // second benchmark exists but pairs with nothing
        assert_eq!(r.benchmarks.len(), 2);
    }

    #[test]
    fn rejects_non_orthonormal_frames() {
        let basis = FourierBasis::new(1.0, 4, true).unwrap();
        let periodic = PeriodicSubBasis::new(&basis, 1, 2).unwrap();
        let gamma = FunctionSet::new(basis.clone(), unit(&basis, &[(1, 2.0)])).unwrap();
        assert!(matches!(ppc_rotation(&gamma, &periodic), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn tied_correlations_use_canonical_benchmarks() {
        // gamma spans the whole annual plane in a rotated parameterization
        let basis = FourierBasis::new(1.0, 6, true).unwrap();
        let periodic = PeriodicSubBasis::new(&basis, 1, 2).unwrap();
        let (s, c) = 0.4f64.sin_cos();
        let mut g = DMatrix::zeros(2, basis.dim());
        g[(0, 1)] = c;
        g[(0, 2)] = s;
        g[(1, 1)] = -s;
        g[(1, 2)] = c;
        let r = ppc_rotation(&FunctionSet::new(basis.clone(), g).unwrap(), &periodic).unwrap();
        assert!((r.correlations[0] - 1.0).abs() < 1e-14);
        assert!((r.correlations[1] - 1.0).abs() < 1e-14);
        assert!((r.benchmarks.coefficients()[(0, 1)] - 1.0).abs() < 1e-12);
        assert!((r.benchmarks.coefficients()[(1, 2)] - 1.0).abs() < 1e-12);
        assert!((r.ppcs.coefficients()[(0, 1)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rank_deficient_completion() {
        // three components, only one touches the periodic plane
        let basis = FourierBasis::new(1.0, 8, true).unwrap();
        let periodic = PeriodicSubBasis::new(&basis, 2, 4).unwrap(); // 3,4,7,8
        let mut g = DMatrix::zeros(3, basis.dim());
        g[(0, 1)] = 1.0;
        g[(1, 2)] = 0.6;
        g[(1, 4)] = 0.8;
        g[(2, 5)] = 1.0;
        let r = ppc_rotation(&FunctionSet::new(basis.clone(), g).unwrap(), &periodic).unwrap();
        assert_eq!(r.correlations.len(), 3);
        assert!((r.correlations[0] - 0.8).abs() < 1e-14);
        assert_eq!(&r.correlations[1..], &[0.0, 0.0]);
        assert!(identity_defect(&(&r.u_hat * r.u_hat.transpose())) < 1e-12);
        assert!(identity_defect(&(&r.v_hat * r.v_hat.transpose())) < 1e-12);
        let cross = gram_matrix(&r.ppcs, &r.benchmarks).unwrap();
        for i in 0..3 {
            for k in 0..4 {
                let want = if i == k && i < 3 { r.correlations[i] } else { 0.0 };
                assert!((cross[(i, k)] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn general_path_matches_orthonormal_path() {
        let basis = FourierBasis::new(1.0, 8, true).unwrap();
        let periodic = PeriodicSubBasis::new(&basis, 1, 4).unwrap();
        let mut g = DMatrix::zeros(2, basis.dim());
        g[(0, 1)] = 0.6;
        g[(0, 5)] = 0.8;
        g[(1, 2)] = 0.28;
        g[(1, 7)] = 0.96;
        let gamma = FunctionSet::new(basis.clone(), g.clone()).unwrap();
        let direct = ppc_rotation(&gamma, &periodic).unwrap();
        // skew both frames with invertible mixing
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.1, 1.0]);
        let b = DMatrix::from_row_slice(4, 4, &[1.0, 0.2, 0.0, 0.0, 0.0, 3.0, 0.1, 0.0, 0.4, 0.0, 1.0, 0.0, 0.0, 0.0, 0.3, 0.5]);
        let skew_g = FunctionSet::new(basis.clone(), &a * g).unwrap();
        let skew_f = FunctionSet::new(basis.clone(), &b * periodic.frame().coefficients()).unwrap();
        let general = canonical_correlations_of(&skew_g, &skew_f).unwrap();
        for (x, y) in direct.correlations.iter().zip(&general.correlations) {
            assert!((x - y).abs() < 1e-12);
        }
        // normalization u' Sigma_gg u = 1
        let sgg = gram_matrix(&skew_g, &skew_g).unwrap();
        let u0 = general.u.row(0).transpose();
        assert!(((u0.transpose() * &sgg * &u0)[(0, 0)] - 1.0).abs() < 1e-12);
        assert!(matches!(
            canonical_correlations(
                &DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]),
                &DMatrix::identity(1, 1),
                &DMatrix::zeros(2, 1)
            ),
            Err(Error::IllConditioned { .. })
        ));
    }

    #[test]
    fn single_curve_scores() {
        let basis = FourierBasis::new(1.0, 2, true).unwrap();
        let xi = FunctionSet::new(basis.clone(), unit(&basis, &[(1, 1.0)])).unwrap();
        let z = FunctionalSample::new(FunctionSet::new(basis.clone(), unit(&basis, &[(1, 2.0)])).unwrap());
        assert!(matches!(scores(&z, &xi), Err(Error::InsufficientData(_))));
        let s = z.coefficients() * xi.coefficients().transpose();
        assert_eq!(s[(0, 0)], 2.0);
    }

    #[test]
    fn elbow_heuristic() {
        let ai = [1.0, 0.99, 0.98, 0.97, 0.7, 0.69, 0.68].map(Some);
        assert_eq!(elbow(&ai), Some(4));
        assert_eq!(elbow(&[Some(1.0); 5]), None);
        assert_eq!(elbow(&[Some(1.0)]), None);
    }
}
