//! Functional principal component analysis in coefficient space.
//!
//! Because the basis is orthonormal, the covariance operator of the centered
//! curves is represented exactly by `N^-1 C'C` for the coefficient matrix `C`,
//! and its eigenvectors are the coefficient vectors of the eigenfunctions.

use nalgebra::DMatrix;

use crate::basis::FunctionSet;
use crate::error::{Error, Result};
use crate::linalg::sorted_psd_eigen;
use crate::smoothing::FunctionalSample;

/// Eigenvalues at or below this fraction of the total count as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct FpcaResult {
    /// One eigenfunction per row, a complete orthonormal system of the
    /// coefficient space ordered by eigenvalue.
    pub components: FunctionSet,
    /// Eigenvalues of the `N^-1`-scaled covariance kernel, descending.
    pub eigenvalues: Vec<f64>,
    /// `N x dim` scores `<z_i, gamma_j>`.
    pub scores: DMatrix<f64>,
    pub total_variance: f64,
}

/// How many leading components to keep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    Count(usize),
    /// Smallest number of components explaining at least this fraction.
    Fraction(f64),
}

impl FpcaResult {
    /// Number of eigenvalues above `RANK_TOLERANCE * total`.
    pub fn rank(&self) -> usize {
        let floor = RANK_TOLERANCE * self.total_variance;
        self.eigenvalues.iter().take_while(|&&v| v > floor).count()
    }

    pub fn num_components(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Size `M` of the leading subspace selected by `rule`.
    pub fn truncate(&self, rule: Truncation) -> Result<usize> {
        select_count(&self.eigenvalues, self.total_variance, rule)
    }

    /// The leading `m` eigenfunctions.
    pub fn leading(&self, m: usize) -> FunctionSet {
        self.components.head(m)
    }

    /// Cumulative explained fractions for the leading components.
    pub fn cumulative_fraction(&self) -> Vec<f64> {
        let mut cum = 0.0;
        self.eigenvalues
            .iter()
            .map(|v| {
                cum += v;
                if self.total_variance > 0.0 {
                    cum / self.total_variance
                } else {
                    0.0
                }
            })
            .collect()
    }
}

/// Number of leading eigenvalues kept by `rule`, for eigenvalues sorted in
/// descending order that sum to `total`.
pub(crate) fn select_count(eigenvalues: &[f64], total: f64, rule: Truncation) -> Result<usize> {
    match rule {
        Truncation::Count(m) => {
            if m == 0 || m > eigenvalues.len() {
                return Err(Error::OutOfRange(format!(
                    "cannot keep {m} of {} components",
                    eigenvalues.len()
                )));
            }
            Ok(m)
        }
        Truncation::Fraction(q) => {
            if !(q > 0.0 && q <= 1.0) {
                return Err(Error::OutOfRange(format!("variance fraction must be in (0, 1], got {q}")));
            }
            let floor = RANK_TOLERANCE * total;
            let rank = eigenvalues.iter().take_while(|&&v| v > floor).count();
            if rank == 0 {
                return Err(Error::InsufficientData("sample has no variation".into()));
            }
            let mut cum = 0.0;
            for (j, v) in eigenvalues.iter().take(rank).enumerate() {
                cum += v;
                if cum / total >= q - 1e-12 {
                    return Ok(j + 1);
                }
            }
            Ok(rank)
        }
    }
}

pub(crate) fn covariance(centered: &DMatrix<f64>) -> DMatrix<f64> {
    let n = centered.nrows() as f64;
    let mut cov = centered.transpose() * centered / n;
    cov = (&cov + cov.transpose()) * 0.5;
    cov
}

pub fn fpca(sample: &FunctionalSample) -> Result<FpcaResult> {
    if !sample.is_centered() {
        return Err(Error::InvalidState("fPCA needs a cross-sectionally centered sample".into()));
    }
    if sample.len() < 2 {
        return Err(Error::InsufficientData(format!("fPCA needs at least 2 curves, got {}", sample.len())));
    }
    let coefs = sample.coefficients();
    let eig = sorted_psd_eigen(covariance(coefs))?;
    let total_variance = eig.values.iter().sum();
    let scores = coefs * eig.vectors.transpose();
    Ok(FpcaResult {
        components: FunctionSet::new(sample.basis().clone(), eig.vectors)?,
        eigenvalues: eig.values,
        scores,
        total_variance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::FourierBasis;
    use crate::smoothing::center_crosssection;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn centered(basis: &FourierBasis, coefs: DMatrix<f64>) -> FunctionalSample {
        let s = FunctionalSample::new(FunctionSet::new(basis.clone(), coefs).unwrap());
        center_crosssection(&s).unwrap().0
    }

    #[test]
    fn single_direction() {
        let basis = FourierBasis::new(1.0, 4, true).unwrap();
        let mut c = DMatrix::zeros(2, 5);
        c[(0, 1)] = -1.0;
        c[(1, 1)] = 1.0;
        let r = fpca(&centered(&basis, c)).unwrap();
        assert!((r.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!(r.eigenvalues[1..].iter().all(|&v| v.abs() < 1e-14));
        assert!((r.components.coefficients()[(0, 1)].abs() - 1.0).abs() < 1e-14);
        assert_eq!(r.rank(), 1);
    }

    #[test]
    fn rejects_uncentered() {
        let basis = FourierBasis::new(1.0, 2, true).unwrap();
        let s = FunctionalSample::new(FunctionSet::new(basis, DMatrix::zeros(3, 3)).unwrap());
        assert!(matches!(fpca(&s), Err(Error::InvalidState(_))));
    }

    #[test]
    fn recovers_generative_variances() {
        let basis = FourierBasis::new(1.0, 6, true).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let a = Normal::new(0.0, 2.0).unwrap();
        let b = Normal::new(0.0, 1.0).unwrap();
        let s = 0.5f64.sqrt();
        let c = DMatrix::from_fn(2000, 7, |_, _| 0.0);
        let mut c = c;
        for i in 0..2000 {
            let (x, y) = (a.sample(&mut rng), b.sample(&mut rng));
            // directions (phi1 + phi3)/sqrt2 and (phi2 - phi5)/sqrt2
            c[(i, 1)] += s * x;
            c[(i, 3)] += s * x;
            c[(i, 2)] += s * y;
            c[(i, 5)] -= s * y;
        }
        let r = fpca(&centered(&basis, c)).unwrap();
        assert!((r.eigenvalues[0] - 4.0).abs() < 0.4);
        assert!((r.eigenvalues[1] - 1.0).abs() < 0.1);
        assert_eq!(r.rank(), 2);
    }

    #[test]
    fn invariants_on_random_sample() {
        let basis = FourierBasis::new(2.0, 10, true).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let c = DMatrix::from_fn(30, 11, |_, j| normal.sample(&mut rng) / (1.0 + j as f64));
        let sample = centered(&basis, c);
        let r = fpca(&sample).unwrap();
        let g = r.components.coefficients();
        let gram = g * g.transpose();
        assert!(crate::linalg::identity_defect(&gram) < 1e-10);
        assert!(r.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        assert!(r.eigenvalues.iter().all(|&v| v >= 0.0));
        let n = sample.len() as f64;
        for j in 0..r.rank() {
            let v: f64 = r.scores.column(j).iter().map(|s| s * s).sum::<f64>() / n;
            assert!((v - r.eigenvalues[j]).abs() <= 1e-8 * r.eigenvalues[j]);
        }
        // reconstruction from scores
        let back = &r.scores * g;
        assert!((back - sample.coefficients()).amax() < 1e-8);
    }

    #[test]
    fn rank_of_low_dimensional_data() {
        let basis = FourierBasis::new(1.0, 12, true).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let dirs = DMatrix::from_fn(3, 13, |_, _| normal.sample(&mut rng));
        let scores = DMatrix::from_fn(50, 3, |_, _| normal.sample(&mut rng));
        let r = fpca(&centered(&basis, scores * dirs)).unwrap();
        assert_eq!(r.rank(), 3);
    }

    fn with_eigenvalues(values: Vec<f64>) -> FpcaResult {
        let basis = FourierBasis::new(1.0, values.len() - 1, true).unwrap();
        let total = values.iter().sum();
        FpcaResult {
            components: FunctionSet::identity(&basis),
            scores: DMatrix::zeros(2, values.len()),
            eigenvalues: values,
            total_variance: total,
        }
    }

    #[test]
    fn truncation_rules() {
        let r = with_eigenvalues(vec![3.0, 1.0]);
        assert_eq!(r.truncate(Truncation::Fraction(0.75)).unwrap(), 1);
        assert_eq!(r.truncate(Truncation::Fraction(0.76)).unwrap(), 2);
        assert_eq!(r.truncate(Truncation::Fraction(1.0)).unwrap(), 2);
        let r = with_eigenvalues(vec![3.0, 1.0, 0.0, 0.0]);
        assert_eq!(r.truncate(Truncation::Fraction(1.0)).unwrap(), 2);
        assert_eq!(r.truncate(Truncation::Count(3)).unwrap(), 3);
        assert!(r.truncate(Truncation::Count(0)).is_err());
        assert!(r.truncate(Truncation::Count(5)).is_err());
        assert!(r.truncate(Truncation::Fraction(0.0)).is_err());
        assert!(r.truncate(Truncation::Fraction(1.5)).is_err());
    }
}
