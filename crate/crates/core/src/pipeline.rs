//! The end-to-end analysis: smooth, demean, center, fPCA, truncate, rotate.

use nalgebra::{DMatrix, DVector};

use crate::basis::{FourierBasis, PeriodicSubBasis};
use crate::error::Result;
use crate::fpca::{fpca, FpcaResult, Truncation};
use crate::linalg::singular_pairs;
use crate::ppc::{ppc_rotation_weighted, PpcResult};
use crate::smoothing::{center_crosssection, demean_timeseries, smooth, FunctionalSample, RawCurveSet, SmoothingFit};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub lambda_grid: Vec<f64>,
    pub truncation: Truncation,
    pub years: usize,
    /// Number of periodic reference functions.
    pub periodic_count: usize,
}

/// Everything computed from a smoothed sample.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub centered: FunctionalSample,
    pub mean: DVector<f64>,
    pub fpca: FpcaResult,
    pub m: usize,
    pub truncation: Truncation,
    pub periodic: PeriodicSubBasis,
    pub ppc: PpcResult,
}

#[derive(Debug, Clone)]
pub struct PipelineResult {
    pub fit: SmoothingFit,
    pub analysis: Analysis,
}

/// Demean (when needed), center, decompose and rotate a smoothed sample.
pub fn analyze(sample: &FunctionalSample, periodic: &PeriodicSubBasis, truncation: Truncation) -> Result<Analysis> {
    sample.basis().ensure_same(periodic.parent())?;
    let demeaned = if sample.is_demeaned() {
        sample.clone()
    } else {
        demean_timeseries(sample)?
    };
    let (centered, mean) = center_crosssection(&demeaned)?;
    let fpca = fpca(&centered)?;
    let m = fpca.truncate(truncation)?;
    let ppc = ppc_rotation_weighted(&fpca.leading(m), &fpca.eigenvalues[..m], periodic)?;
    Ok(Analysis {
        centered,
        mean,
        fpca,
        m,
        truncation,
        periodic: periodic.clone(),
        ppc,
    })
}

pub fn run_pipeline(raw: &RawCurveSet, basis: &FourierBasis, config: &PipelineConfig) -> Result<PipelineResult> {
    let periodic = PeriodicSubBasis::new(basis, config.years, config.periodic_count)?;
    let fit = smooth(raw, basis, &config.lambda_grid)?;
    let analysis = analyze(&fit.sample, &periodic, config.truncation)?;
    Ok(PipelineResult { fit, analysis })
}

/// Largest singular value of the leading components restricted to the
/// periodic slots, that is `rho_1` without building the rotation.
pub fn top_correlation(components: &DMatrix<f64>, m: usize, periodic_slots: &[usize]) -> Result<f64> {
    let a = DMatrix::from_fn(m, periodic_slots.len(), |i, k| components[(i, periodic_slots[k])]);
    let top = singular_pairs(&a)?.values.first().copied().unwrap_or(0.0);
    Ok(top.clamp(0.0, 1.0))
}

/// `rho_1` of a smoothed, not yet centered coefficient matrix.
pub fn leading_correlation(sample: &FunctionalSample, periodic: &PeriodicSubBasis, truncation: Truncation) -> Result<f64> {
    sample.basis().ensure_same(periodic.parent())?;
    let demeaned = if sample.is_demeaned() {
        sample.clone()
    } else {
        demean_timeseries(sample)?
    };
    let (centered, _) = center_crosssection(&demeaned)?;
    let fpca = fpca(&centered)?;
    let m = fpca.truncate(truncation)?;
    top_correlation(fpca.components.coefficients(), m, &periodic.slots())
}
