//! Principal periodic components: rotation of functional principal components
//! toward a periodic subspace of an orthonormal Fourier basis, with the
//! smoothing, fPCA, VARIMAX, bootstrap testing and simulation pieces around it.

pub mod basis;
pub mod error;
pub mod fpca;
pub mod linalg;
pub mod periodicity;
pub mod pipeline;
pub mod ppc;
pub mod simgen;
pub mod smoothing;
pub mod stability;
pub mod varimax;

pub use basis::{gram_matrix, FourierBasis, FunctionSet, PeriodicSubBasis};
pub use error::{Error, Result};
pub use fpca::{fpca, FpcaResult, Truncation};
pub use ppc::{
    annual_information, canonical_correlations, decompose, ppc_rotation, ppc_rotation_weighted, rotate_toward, scores,
    variance_decomposition, AiDiagnostic, ComponentScores, Decomposition, PpcResult, VarianceDecomposition,
};
pub use smoothing::{
    center_crosssection, default_lambda_grid, demean_timeseries, smooth, smooth_fixed, FunctionalSample,
    RawCurveSet, Smoother, SmoothingFit,
};
pub use varimax::{varimax, VarimaxOptions, VarimaxResult};
pub use periodicity::{
    bootstrap_test, inflation_null, inflation_null_sequence, kl_divergence, replacement_null, NullConstruction,
    NullKind, OptimizerOptions, PeriodicityTestResult, TestConfig,
};
pub use pipeline::{analyze, leading_correlation, run_pipeline, Analysis, PipelineConfig, PipelineResult};
pub use simgen::{generate, level_grid, Scheme, SchemeConfig, SimulatedData};
pub use stability::{aligned_distance, stability_trace, StabilityRow};
