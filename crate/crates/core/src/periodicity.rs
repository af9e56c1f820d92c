//! Bootstrap test of `H0: rho_1 = 1` (the first PPC is exactly periodic)
//! against `rho_1 < 1`.
//!
//! Null curves are built from the observed sample either by swapping the first
//! PPC for its benchmark (replacement), or by additionally rescaling the
//! component scores by `tau` chosen to push `rho_1` toward one at a
//! Kullback-Leibler cost (inflation). Bootstrap samples draw whole null curves
//! and whole residual rows with replacement, re-smooth, and recompute `rho_1`.

use nalgebra::{DMatrix, DVector, QR};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::basis::{FourierBasis, FunctionSet, PeriodicSubBasis};
use crate::error::{Error, Result};
use crate::fpca::{covariance, select_count, Truncation, RANK_TOLERANCE};
use crate::linalg::sorted_psd_eigen;
use crate::pipeline::{analyze, leading_correlation, top_correlation, Analysis};
use crate::smoothing::{smooth, FunctionalSample, RawCurveSet, Smoother};

/// Smallest bootstrap size accepted.
pub const MIN_REPLICATES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NullKind {
    Replacement,
    /// Score inflation with the given weight on `-ln rho_1`.
    Inflation { penalty: f64 },
}

/// A set of curves satisfying (or nearly satisfying) the null hypothesis.
#[derive(Debug, Clone)]
pub struct NullConstruction {
    pub kind: NullKind,
    /// Demeaned, centered null curves.
    pub curves: FunctionalSample,
    /// Cross-sectional mean of the observed sample.
    pub mean: DVector<f64>,
    /// Score multipliers for the leading `M` terms (inflation only).
    pub tau: Option<Vec<f64>>,
    /// `rho_1` recomputed from the null curves.
    pub achieved_rho1: f64,
    pub kl_divergence: Option<f64>,
    /// Whether the optimizer met its gradient tolerance (always true for
    /// replacement).
    pub converged: bool,
    pub iterations: usize,
}

/// `(1/2) sum_j (tau_j^2 - 1 - ln tau_j^2)`.
pub fn kl_divergence(tau: &[f64]) -> Result<f64> {
    if let Some(bad) = tau.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
        return Err(Error::invalid(format!("scale factors must be positive, got {bad}")));
    }
    Ok(0.5 * tau.iter().map(|t| t * t - 1.0 - (t * t).ln()).sum::<f64>())
}

/// Scores and functions of the null expansion
/// `theta_1, xi_2, ..., xi_M, gamma_{M+1}, ...` with the first `m` score
/// columns open to rescaling.
struct NullModel {
    basis: FourierBasis,
    scores: DMatrix<f64>,
    frame: DMatrix<f64>,
    m: usize,
    truncation: Truncation,
    periodic_slots: Vec<usize>,
    /// Orthonormal columns spanning the frame rows, when that span is a
    /// proper subspace.
    subspace: Option<DMatrix<f64>>,
}

impl NullModel {
    fn new(analysis: &Analysis) -> Result<Self> {
        let m = analysis.m;
        let ppc = &analysis.ppc;
        let fpca = &analysis.fpca;
        let z = analysis.centered.coefficients();
        let xi = ppc.ppcs.coefficients();
        let tail_floor = RANK_TOLERANCE * fpca.total_variance;
        let tail: Vec<usize> = (m..fpca.num_components())
            .filter(|&j| fpca.eigenvalues[j] > tail_floor)
            .collect();
        let k = m + tail.len();
        let dim = analysis.centered.basis().dim();
        let mut frame = DMatrix::zeros(k, dim);
        frame.row_mut(0).copy_from(&ppc.benchmarks.coefficients().row(0));
        for j in 1..m {
            frame.row_mut(j).copy_from(&xi.row(j));
        }
        for (r, &j) in tail.iter().enumerate() {
            frame.row_mut(m + r).copy_from(&fpca.components.coefficients().row(j));
        }
        let mut scores = DMatrix::zeros(z.nrows(), k);
        scores.columns_mut(0, m).copy_from(&(z * xi.transpose()));
        for (r, &j) in tail.iter().enumerate() {
            scores.column_mut(m + r).copy_from(&fpca.scores.column(j));
        }
        let subspace = (k < dim).then(|| QR::new(frame.transpose()).q());
        Ok(Self {
            basis: analysis.centered.basis().clone(),
            scores,
            frame,
            m,
            truncation: analysis.truncation,
            periodic_slots: analysis.periodic.slots(),
            subspace,
        })
    }

    fn curves(&self, tau: &[f64]) -> DMatrix<f64> {
        let mut s = self.scores.clone();
        for (j, t) in tau.iter().enumerate() {
            s.column_mut(j).scale_mut(*t);
        }
        s * &self.frame
    }

    fn rho1(&self, tau: &[f64]) -> Result<f64> {
        let z = self.curves(tau);
        if let Some(q) = &self.subspace {
            let fits = match self.truncation {
                Truncation::Count(c) => c <= q.ncols(),
                Truncation::Fraction(_) => true,
            };
            if fits {
                let eig = sorted_psd_eigen(covariance(&(&z * q)))?;
                let total: f64 = eig.values.iter().sum();
                let count = select_count(&eig.values, total, self.truncation)?;
                let components = eig.vectors.rows(0, count) * q.transpose();
                return top_correlation(&components, count, &self.periodic_slots);
            }
        }
        let eig = sorted_psd_eigen(covariance(&z))?;
        let total: f64 = eig.values.iter().sum();
        let count = select_count(&eig.values, total, self.truncation)?;
        top_correlation(&eig.vectors, count, &self.periodic_slots)
    }

    fn sample(&self, tau: &[f64]) -> Result<FunctionalSample> {
        FunctionalSample::with_state(FunctionSet::new(self.basis.clone(), self.curves(tau))?, true, true)
    }
}

/// Replace the first PPC by its benchmark in every curve's expansion.
pub fn replacement_null(analysis: &Analysis) -> Result<NullConstruction> {
    let model = NullModel::new(analysis)?;
    let ones = vec![1.0; model.m];
    Ok(NullConstruction {
        kind: NullKind::Replacement,
        curves: model.sample(&ones)?,
        mean: analysis.mean.clone(),
        tau: None,
        achieved_rho1: model.rho1(&ones)?,
        kl_divergence: None,
        converged: true,
        iterations: 0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerOptions {
    pub gradient_tolerance: f64,
    /// Central difference step in `ln tau`.
    pub step: f64,
    pub max_iterations: usize,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            gradient_tolerance: 1e-6,
            step: 1e-5,
            max_iterations: 2000,
        }
    }
}

struct Minimum {
    x: DVector<f64>,
    value: f64,
    iterations: usize,
    converged: bool,
}

fn central_gradient<F>(f: &mut F, x: &DVector<f64>, h: f64) -> Result<DVector<f64>>
where
    F: FnMut(&DVector<f64>) -> Result<f64>,
{
    let mut g = DVector::zeros(x.len());
    let mut probe = x.clone();
    for j in 0..x.len() {
        probe[j] = x[j] + h;
        let up = f(&probe)?;
        probe[j] = x[j] - h;
        let down = f(&probe)?;
        probe[j] = x[j];
        g[j] = (up - down) / (2.0 * h);
    }
    Ok(g)
}

/// Quasi-Newton (BFGS) minimization with finite-difference gradients and a
/// backtracking Armijo line search. Returns the best point visited.
fn bfgs<F>(mut f: F, x0: DVector<f64>, opts: &OptimizerOptions) -> Result<Minimum>
where
    F: FnMut(&DVector<f64>) -> Result<f64>,
{
    let n = x0.len();
    let mut x = x0;
    let mut fx = f(&x)?;
    if !fx.is_finite() {
        return Err(Error::Numerical("objective is not finite at the starting point".into()));
    }
    let mut g = central_gradient(&mut f, &x, opts.step)?;
    let mut h_inv = DMatrix::<f64>::identity(n, n);
    let mut fresh = true;
    for iter in 0..opts.max_iterations {
        if g.norm() <= opts.gradient_tolerance {
            return Ok(Minimum {
                x,
                value: fx,
                iterations: iter,
                converged: true,
            });
        }
        let mut dir = -(&h_inv * &g);
        if fresh {
            // unit-length first step
            dir /= g.norm();
        }
        let mut slope = g.dot(&dir);
        if slope >= 0.0 {
            dir = -&g / g.norm();
            slope = g.dot(&dir);
            h_inv = DMatrix::identity(n, n);
        }
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let cand = &x + alpha * &dir;
            let fc = f(&cand)?;
            if fc.is_finite() && fc <= fx + 1e-4 * alpha * slope {
                accepted = Some((cand, fc));
                break;
            }
            alpha *= 0.5;
        }
        let Some((x_new, f_new)) = accepted else {
            return Ok(Minimum {
                x,
                value: fx,
                iterations: iter,
                converged: false,
            });
        };
        let g_new = central_gradient(&mut f, &x_new, opts.step)?;
        let s = &x_new - &x;
        let y = &g_new - &g;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            if fresh {
                h_inv = DMatrix::identity(n, n) * (sy / y.dot(&y));
                fresh = false;
            }
            let rho = 1.0 / sy;
            let hy = &h_inv * &y;
            let yhy = y.dot(&hy);
            h_inv += (&s * s.transpose()) * (rho * rho * yhy + rho) - (&hy * s.transpose() + &s * hy.transpose()) * rho;
        }
        x = x_new;
        fx = f_new;
        g = g_new;
    }
    let converged = g.norm() <= opts.gradient_tolerance;
    Ok(Minimum {
        x,
        value: fx,
        iterations: opts.max_iterations,
        converged,
    })
}

fn inflate_from(
    analysis: &Analysis,
    model: &NullModel,
    penalty: f64,
    start: DVector<f64>,
    opts: &OptimizerOptions,
) -> Result<NullConstruction> {
    if !(penalty > 0.0 && penalty.is_finite()) {
        return Err(Error::invalid(format!("penalty must be positive, got {penalty}")));
    }
    let objective = |eta: &DVector<f64>| -> Result<f64> {
        let tau: Vec<f64> = eta.iter().map(|e| e.exp()).collect();
        if tau.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Ok(f64::INFINITY);
        }
        // trial points whose rescaled sample degenerates are infeasible
        let rho = match model.rho1(&tau) {
            Ok(r) if r > 0.0 => r,
            _ => return Ok(f64::INFINITY),
        };
        Ok(kl_divergence(&tau)? - penalty * rho.ln())
    };
    let best = bfgs(objective, start, opts)?;
    debug_assert!(best.value.is_finite());
    let tau: Vec<f64> = best.x.iter().map(|e| e.exp()).collect();
    Ok(NullConstruction {
        kind: NullKind::Inflation { penalty },
        curves: model.sample(&tau)?,
        mean: analysis.mean.clone(),
        achieved_rho1: model.rho1(&tau)?,
        kl_divergence: Some(kl_divergence(&tau)?),
        tau: Some(tau),
        converged: best.converged,
        iterations: best.iterations,
    })
}

/// Replacement null with scores rescaled by the minimizer of
/// `KL(tau) - penalty ln rho_1(tau)`, starting from `tau = 1`.
pub fn inflation_null(analysis: &Analysis, penalty: f64, opts: &OptimizerOptions) -> Result<NullConstruction> {
    let model = NullModel::new(analysis)?;
    inflate_from(analysis, &model, penalty, DVector::zeros(model.m), opts)
}

/// Inflation nulls for an increasing sequence of penalties, each warm-started
/// from the previous optimum.
pub fn inflation_null_sequence(
    analysis: &Analysis,
    penalties: &[f64],
    opts: &OptimizerOptions,
) -> Result<Vec<NullConstruction>> {
    if penalties.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("penalties must be strictly increasing"));
    }
    let model = NullModel::new(analysis)?;
    let mut start = DVector::zeros(model.m);
    let mut out = Vec::with_capacity(penalties.len());
    for &penalty in penalties {
        let null = inflate_from(analysis, &model, penalty, start.clone(), opts)?;
        start = DVector::from_iterator(model.m, null.tau.as_ref().expect("inflation").iter().map(|t| t.ln()));
        out.push(null);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestConfig {
    pub basis: FourierBasis,
    pub lambda_grid: Vec<f64>,
    pub truncation: Truncation,
    pub years: usize,
    pub periodic_count: usize,
    pub replicates: usize,
    pub seed: u64,
    pub null: NullKind,
    /// Re-run the GCV search in every replicate instead of reusing the
    /// smoothing parameter chosen on the data.
    pub reselect_lambda: bool,
    pub optimizer: OptimizerOptions,
}

impl TestConfig {
    pub fn new(basis: FourierBasis, truncation: Truncation, years: usize, periodic_count: usize) -> Self {
        Self {
            basis,
            lambda_grid: crate::smoothing::default_lambda_grid(),
            truncation,
            years,
            periodic_count,
            replicates: 500,
            seed: 0,
            null: NullKind::Replacement,
            reselect_lambda: false,
            optimizer: OptimizerOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PeriodicityTestResult {
    pub observed_rho1: f64,
    pub bootstrap_rho1: Vec<f64>,
    /// `(1 + #{rho* <= observed}) / (B + 1)`.
    pub p_value: f64,
    pub replicates: usize,
    pub seed: u64,
    pub truncation: Truncation,
    /// Smoothing parameter selected on the data.
    pub lambda: f64,
    pub null: NullConstruction,
}

impl PeriodicityTestResult {
    pub fn rejects(&self, alpha: f64) -> bool {
        self.p_value <= alpha
    }
}

/// Random generator for replicate `index`: the master seed selects the key,
/// the replicate index the stream, so draws do not depend on scheduling.
pub fn replicate_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

pub fn bootstrap_test(raw: &RawCurveSet, config: &TestConfig) -> Result<PeriodicityTestResult> {
    if config.replicates < MIN_REPLICATES {
        return Err(Error::invalid(format!(
            "at least {MIN_REPLICATES} bootstrap replicates are required, got {}",
            config.replicates
        )));
    }
    let basis = &config.basis;
    let periodic = PeriodicSubBasis::new(basis, config.years, config.periodic_count)?;
    let fit = smooth(raw, basis, &config.lambda_grid)?;
    let analysis = analyze(&fit.sample, &periodic, config.truncation)?;
    let observed = analysis.ppc.correlations[0];
    let null = match config.null {
        NullKind::Replacement => replacement_null(&analysis)?,
        NullKind::Inflation { penalty } => inflation_null(&analysis, penalty, &config.optimizer)?,
    };

    let times = raw.times();
    let mut null_coefs = null.curves.coefficients().clone();
    for mut row in null_coefs.row_iter_mut() {
        row += null.mean.transpose();
    }
    let null_values = null_coefs * basis.design_matrix(times).transpose();
    let residuals = &fit.residuals;
    let smoother = if config.reselect_lambda {
        None
    } else {
        Some(Smoother::new(basis, times, fit.lambda)?)
    };
    let (n, width) = null_values.shape();

    let run = |b: usize| -> Result<f64> {
        let mut rng = replicate_rng(config.seed, b);
        let curves: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let values = DMatrix::from_fn(n, width, |i, j| null_values[(curves[i], j)] + residuals[(rows[i], j)]);
        let sample = match &smoother {
            Some(s) => s.fit(&values),
            None => {
                let replicate = RawCurveSet::unlabeled(times.to_vec(), values)?;
                smooth(&replicate, basis, &config.lambda_grid)?.sample
            }
        };
        leading_correlation(&sample, &periodic, config.truncation)
    };
    let outcomes: Vec<Result<f64>> = (0..config.replicates).into_par_iter().map(run).collect();
    let mut bootstrap_rho1 = Vec::with_capacity(config.replicates);
    for (index, outcome) in outcomes.into_iter().enumerate() {
        bootstrap_rho1.push(outcome.map_err(|e| Error::Replicate {
            index,
            source: Box::new(e),
        })?);
    }
    let below = bootstrap_rho1.iter().filter(|&&r| r <= observed).count();
    Ok(PeriodicityTestResult {
        observed_rho1: observed,
        p_value: (1 + below) as f64 / (config.replicates + 1) as f64,
        bootstrap_rho1,
        replicates: config.replicates,
        seed: config.seed,
        truncation: config.truncation,
        lambda: fit.lambda,
        null,
    })
}
