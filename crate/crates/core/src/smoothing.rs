//! Penalized least-squares smoothing of gridded curves in a Fourier basis,
//! with the smoothing parameter chosen by generalized cross validation, plus
//! the time-series demeaning and cross-sectional centering steps.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::basis::{FourierBasis, FunctionSet};
use crate::error::{Error, Result};

/// Discrete observations `Y_ij` on a grid shared by all curves.
#[derive(Debug, Clone, PartialEq)]
pub struct RawCurveSet {
    times: Vec<f64>,
    values: DMatrix<f64>,
    ids: Vec<String>,
}

impl RawCurveSet {
    /// `values` is `N x n`: one row per curve, one column per time.
    pub fn new(times: Vec<f64>, values: DMatrix<f64>, ids: Vec<String>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::invalid("time grid is empty"));
        }
        if let Some(j) = times.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::invalid(format!(
                "times must be strictly increasing (positions {j} and {})",
                j + 1
            )));
        }
        if values.ncols() != times.len() {
            return Err(Error::invalid(format!(
                "{} values per curve but {} times",
                values.ncols(),
                times.len()
            )));
        }
        if ids.len() != values.nrows() {
            return Err(Error::invalid(format!(
                "{} ids for {} curves",
                ids.len(),
                values.nrows()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            let (row, col) = (k % values.nrows(), k / values.nrows());
            return Err(Error::invalid(format!(
                "non-finite value in curve {row} at time position {col}"
            )));
        }
        Ok(Self { times, values, ids })
    }

    /// Curves labelled `0..N`.
    pub fn unlabeled(times: Vec<f64>, values: DMatrix<f64>) -> Result<Self> {
        let ids = (0..values.nrows()).map(|i| i.to_string()).collect();
        Self::new(times, values, ids)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn num_curves(&self) -> usize {
        self.values.nrows()
    }

    pub fn num_times(&self) -> usize {
        self.times.len()
    }
}

/// `N` curves as coefficient rows in a shared basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalSample {
    functions: FunctionSet,
    demeaned: bool,
    centered: bool,
}

impl FunctionalSample {
    pub fn new(functions: FunctionSet) -> Self {
        Self {
            functions,
            demeaned: false,
            centered: false,
        }
    }

    /// Re-attach state flags, e.g. after deserialization. The flags are
    /// checked against the coefficients.
    pub fn with_state(functions: FunctionSet, demeaned: bool, centered: bool) -> Result<Self> {
        let sample = Self {
            functions,
            demeaned,
            centered,
        };
        sample.check_flags()?;
        Ok(sample)
    }

    fn check_flags(&self) -> Result<()> {
        let c = self.coefficients();
        let scale = c.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        if self.demeaned {
            let slot = self
                .basis()
                .constant_slot()
                .ok_or_else(|| Error::InvalidState("demeaned sample without a constant function".into()))?;
            if c.column(slot).iter().any(|v| v.abs() > 1e-10 * scale) {
                return Err(Error::InvalidState("sample flagged demeaned has a nonzero constant".into()));
            }
        }
        if self.centered && c.nrows() > 0 {
            let n = c.nrows() as f64;
            for col in c.column_iter() {
                if (col.sum() / n).abs() > 1e-10 * scale {
                    return Err(Error::InvalidState("sample flagged centered has nonzero mean".into()));
                }
            }
        }
        Ok(())
    }

    pub fn functions(&self) -> &FunctionSet {
        &self.functions
    }

    pub fn basis(&self) -> &FourierBasis {
        self.functions.basis()
    }

    pub fn coefficients(&self) -> &DMatrix<f64> {
        self.functions.coefficients()
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn is_demeaned(&self) -> bool {
        self.demeaned
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }
}

/// Result of [`smooth`].
#[derive(Debug, Clone)]
pub struct SmoothingFit {
    pub sample: FunctionalSample,
    pub lambda: f64,
    /// Every `(lambda, GCV)` pair evaluated, grid first, then the zoom.
    pub gcv_trace: Vec<(f64, f64)>,
    /// `N x n` residuals `Y_ij - x_i(t_j)`.
    pub residuals: DMatrix<f64>,
    pub edf: f64,
}

/// 25 log-spaced values from 1e-8 to 1e4.
pub fn default_lambda_grid() -> Vec<f64> {
    log_grid(1e-8, 1e4, 25)
}

pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..count)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64))
        .collect()
}

/// A penalized least-squares smoother, diagonalized once so that fits for
/// any smoothing parameter are cheap.
///
/// With `G = Phi'Phi = LL'` and `L^-1 R L^-T = Q S Q'`, the transform
/// `B = L^-T Q` satisfies `B'GB = I`, `B'RB = S`, and the fit for `lambda` has
/// coefficients `B diag(1/(1 + lambda s)) B' Phi' y`. When `G` is singular the
/// smoother falls back to a direct solve per `lambda`.
struct PenalizedSystem {
    design: DMatrix<f64>,
    penalty: DVector<f64>,
    gram: DMatrix<f64>,
    reduced: Option<Reduced>,
}

struct Reduced {
    transform: DMatrix<f64>,
    eigen: DVector<f64>,
}

impl PenalizedSystem {
    fn new(basis: &FourierBasis, times: &[f64]) -> Result<Self> {
        let design = basis.design_matrix(times);
        let gram = design.transpose() * &design;
        let penalty = basis.curvature_penalty_diagonal();
        let reduced = Self::reduce(&gram, &penalty);
        Ok(Self {
            design,
            penalty,
            gram,
            reduced,
        })
    }

    fn reduce(gram: &DMatrix<f64>, penalty: &DVector<f64>) -> Option<Reduced> {
        let chol = Cholesky::new(gram.clone())?;
        let l = chol.l();
        // reject numerically singular Gram matrices
        let diag_min = l.diagonal().iter().copied().fold(f64::INFINITY, f64::min);
        let diag_max = l.diagonal().iter().copied().fold(0.0, f64::max);
        if !(diag_min > 1e-7 * diag_max) {
            return None;
        }
        let l_inv = l.clone().try_inverse()?;
        let r = DMatrix::from_diagonal(penalty);
        let mut m = &l_inv * r * l_inv.transpose();
        m = (&m + m.transpose()) * 0.5;
        let eig = nalgebra::SymmetricEigen::try_new(m, f64::EPSILON, 0)?;
        let eigen = eig.eigenvalues.map(|v| v.max(0.0));
        let transform = l_inv.transpose() * eig.eigenvectors;
        Some(Reduced { transform, eigen })
    }

    fn n(&self) -> usize {
        self.design.nrows()
    }

    /// `dim x n` smoother matrix mapping grid values to coefficients.
    fn smoother_matrix(&self, lambda: f64) -> Result<(DMatrix<f64>, f64)> {
        match &self.reduced {
            Some(red) => {
                let h = red.eigen.map(|s| 1.0 / (1.0 + lambda * s));
                let edf = h.sum();
                let bh = &red.transform * DMatrix::from_diagonal(&h);
                let s = bh * red.transform.transpose() * self.design.transpose();
                Ok((s, edf))
            }
            None => {
                // the Gram matrix was judged singular, so no penalty means no fit
                if lambda == 0.0 {
                    return Err(self.singular(lambda));
                }
                let a = &self.gram + DMatrix::from_diagonal(&(&self.penalty * lambda));
                let chol = Cholesky::new(a).ok_or_else(|| self.singular(lambda))?;
                let s = chol.solve(&self.design.transpose());
                let edf = chol.solve(&self.gram).trace();
                Ok((s, edf))
            }
        }
    }

    fn singular(&self, lambda: f64) -> Error {
        Error::SingularSystem(format!(
            "penalized normal equations are singular at lambda = {lambda:e}; use a positive smoothing parameter"
        ))
    }

    /// Total GCV and edf for each lambda.
    fn gcv_scores(&self, values: &DMatrix<f64>, lambdas: &[f64]) -> Result<Vec<(f64, f64)>> {
        let n = self.n() as f64;
        match &self.reduced {
            Some(red) => {
                // w = B' Phi' y for every curve (dim x N)
                let w = red.transform.transpose() * self.design.transpose() * values.transpose();
                // residual of the unpenalized fit
                let coef0 = &red.transform * &w;
                let fitted0 = &self.design * &coef0;
                let sse0 = (values.transpose() - fitted0).norm_squared();
                let w2: Vec<f64> = w.row_iter().map(|r| r.norm_squared()).collect();
                Ok(lambdas
                    .iter()
                    .map(|&lambda| {
                        let mut edf = 0.0;
                        let mut sse = sse0;
                        for (k, s) in red.eigen.iter().enumerate() {
                            let h = 1.0 / (1.0 + lambda * s);
                            edf += h;
                            sse += w2[k] * (1.0 - h) * (1.0 - h);
                        }
                        (gcv(n, sse, edf), edf)
                    })
                    .collect())
            }
            None => lambdas
                .iter()
                .map(|&lambda| {
                    let (s, edf) = self.smoother_matrix(lambda)?;
                    let coefs = values * s.transpose();
                    let sse = (values - coefs * self.design.transpose()).norm_squared();
                    Ok((gcv(n, sse, edf), edf))
                })
                .collect(),
        }
    }
}

fn gcv(n: f64, sse: f64, edf: f64) -> f64 {
    let dof = n - edf;
    if dof <= 1e-10 * n {
        f64::INFINITY
    } else {
        n * sse / (dof * dof)
    }
}

/// A linear smoother for a fixed smoothing parameter.
#[derive(Debug, Clone)]
pub struct Smoother {
    basis: FourierBasis,
    times: Vec<f64>,
    matrix: DMatrix<f64>,
    lambda: f64,
    edf: f64,
}

impl Smoother {
    pub fn new(basis: &FourierBasis, times: &[f64], lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        let system = PenalizedSystem::new(basis, times)?;
        let (matrix, edf) = system.smoother_matrix(lambda)?;
        Ok(Self {
            basis: basis.clone(),
            times: times.to_vec(),
            matrix,
            lambda,
            edf,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Effective degrees of freedom, the trace of the hat matrix.
    pub fn edf(&self) -> f64 {
        self.edf
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Coefficients (`N x dim`) for grid values (`N x n`).
    pub fn coefficients(&self, values: &DMatrix<f64>) -> DMatrix<f64> {
        values * self.matrix.transpose()
    }

    pub fn fit(&self, values: &DMatrix<f64>) -> FunctionalSample {
        let coefs = self.coefficients(values);
        FunctionalSample::new(FunctionSet::new(self.basis.clone(), coefs).expect("dimensions match"))
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("smoothing parameter must be finite and nonnegative, got {lambda}")))
    }
}

/// Fit every curve with one shared smoothing parameter chosen by GCV.
///
/// The score for a given `lambda` is `sum_i n SSE_i / (n - edf)^2`. The grid
/// minimizer is refined once by ten points between its neighbours.
pub fn smooth(raw: &RawCurveSet, basis: &FourierBasis, lambda_grid: &[f64]) -> Result<SmoothingFit> {
    if lambda_grid.is_empty() {
        return Err(Error::invalid("lambda grid is empty"));
    }
    for &l in lambda_grid {
        check_lambda(l)?;
    }
    let mut grid = lambda_grid.to_vec();
    grid.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    grid.dedup();

    let system = PenalizedSystem::new(basis, raw.times())?;
    if system.reduced.is_none() && grid[0] == 0.0 {
        return Err(system.singular(0.0));
    }
    let scores = system.gcv_scores(raw.values(), &grid)?;
    let mut trace: Vec<(f64, f64)> = grid.iter().zip(&scores).map(|(&l, &(g, _))| (l, g)).collect();
    let best = argmin(&trace);

    if grid.len() > 1 {
        let lo = grid[best.saturating_sub(1)];
        let hi = grid[(best + 1).min(grid.len() - 1)];
        let zoom: Vec<f64> = if lo > 0.0 {
            log_grid(lo, hi, 12)[1..11].to_vec()
        } else {
            (1..11).map(|i| lo + (hi - lo) * i as f64 / 11.0).collect()
        };
        let zoom_scores = system.gcv_scores(raw.values(), &zoom)?;
        trace.extend(zoom.iter().zip(&zoom_scores).map(|(&l, &(g, _))| (l, g)));
    }
    let best = argmin(&trace);
    let lambda = trace[best].0;
    if !trace[best].1.is_finite() {
        return Err(Error::Numerical(
            "GCV is undefined on the whole grid (fit interpolates the data); use larger smoothing parameters".into(),
        ));
    }

    let (s, edf) = system.smoother_matrix(lambda)?;
    Ok(finish(raw, basis, &system, &s, lambda, edf, trace))
}

/// Fit with a fixed smoothing parameter.
pub fn smooth_fixed(raw: &RawCurveSet, basis: &FourierBasis, lambda: f64) -> Result<SmoothingFit> {
    check_lambda(lambda)?;
    let system = PenalizedSystem::new(basis, raw.times())?;
    let (s, edf) = system.smoother_matrix(lambda)?;
    let n = system.n() as f64;
    let coefs = raw.values() * s.transpose();
    let sse = (raw.values() - &coefs * system.design.transpose()).norm_squared();
    let trace = vec![(lambda, gcv(n, sse, edf))];
    Ok(finish(raw, basis, &system, &s, lambda, edf, trace))
}

fn finish(
    raw: &RawCurveSet,
    basis: &FourierBasis,
    system: &PenalizedSystem,
    smoother: &DMatrix<f64>,
    lambda: f64,
    edf: f64,
    gcv_trace: Vec<(f64, f64)>,
) -> SmoothingFit {
    let coefs = raw.values() * smoother.transpose();
    let residuals = raw.values() - &coefs * system.design.transpose();
    SmoothingFit {
        sample: FunctionalSample::new(FunctionSet::new(basis.clone(), coefs).expect("dimensions match")),
        lambda,
        gcv_trace,
        residuals,
        edf,
    }
}

fn argmin(trace: &[(f64, f64)]) -> usize {
    let mut best = 0;
    for (i, &(_, g)) in trace.iter().enumerate() {
        if g < trace[best].1 || (trace[best].1.is_nan() && !g.is_nan()) {
            best = i;
        }
    }
    best
}

/// Remove each curve's time-series average by zeroing its constant coefficient.
pub fn demean_timeseries(sample: &FunctionalSample) -> Result<FunctionalSample> {
    let slot = sample
        .basis()
        .constant_slot()
        .ok_or_else(|| Error::InvalidState("demeaning needs a basis with the constant function".into()))?;
    let mut coefs = sample.coefficients().clone();
    coefs.column_mut(slot).fill(0.0);
    Ok(FunctionalSample {
        functions: FunctionSet::new(sample.basis().clone(), coefs)?,
        demeaned: true,
        centered: sample.centered,
    })
}

/// Subtract the cross-sectional mean function; returns the centered sample
/// and the mean's coefficient vector.
pub fn center_crosssection(sample: &FunctionalSample) -> Result<(FunctionalSample, DVector<f64>)> {
    let n = sample.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!("centering needs at least 2 curves, got {n}")));
    }
    let coefs = sample.coefficients();
    let mean = DVector::from_iterator(coefs.ncols(), coefs.column_iter().map(|c| c.sum() / n as f64));
    let mut centered = coefs.clone();
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    Ok((
        FunctionalSample {
            functions: FunctionSet::new(sample.basis().clone(), centered)?,
            demeaned: sample.demeaned,
            centered: true,
        },
        mean,
    ))
}
