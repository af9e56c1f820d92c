//! The JSON document passed between pipeline stages.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use ppc_core::{
    center_crosssection, demean_timeseries, FourierBasis, FpcaResult, FunctionSet, FunctionalSample, PpcResult,
    VarianceDecomposition,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::io::{basis_labels, read_json, write_json};

pub const SCHEMA_VERSION: u32 = 1;

/// Row-major matrix.
pub type Rows = Vec<Vec<f64>>;

pub fn to_rows(m: &DMatrix<f64>) -> Rows {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn from_rows(rows: &Rows, ncols: usize, what: &str) -> CliResult<DMatrix<f64>> {
    if let Some(i) = rows.iter().position(|r| r.len() != ncols) {
        return Err(CliError::data(format!(
            "bundle field '{what}': row {i} has {} entries, expected {ncols}",
            rows[i].len()
        )));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(DMatrix::from_row_slice(rows.len(), ncols, &flat))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BasisSpec {
    pub span: f64,
    pub origin: f64,
    pub num_functions: usize,
    pub include_constant: bool,
    pub labels: Vec<String>,
}

impl BasisSpec {
    pub fn of(basis: &FourierBasis) -> Self {
        Self {
            span: basis.span(),
            origin: basis.origin(),
            num_functions: basis.num_functions(),
            include_constant: basis.includes_constant(),
            labels: basis_labels(basis),
        }
    }

    pub fn basis(&self) -> CliResult<FourierBasis> {
        Ok(FourierBasis::new(self.span, self.num_functions, self.include_constant)?.with_origin(self.origin))
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Config {
    pub smooth: Option<SmoothConfig>,
    pub fpca: Option<FpcaConfig>,
    pub varimax: Option<VarimaxConfig>,
    pub ppc: Option<PpcConfig>,
    pub test: Option<TestEcho>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SmoothConfig {
    pub input: String,
    pub nbasis: Option<usize>,
    pub span: f64,
    pub origin: f64,
    pub lambda_grid: Vec<f64>,
    pub fixed_lambda: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FpcaConfig {
    pub truncate: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VarimaxConfig {
    pub m: usize,
    pub kaiser: bool,
    pub max_sweeps: usize,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PpcConfig {
    pub years: usize,
    pub p: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestEcho {
    pub input: String,
    pub null: String,
    pub lambda_penalty: Option<f64>,
    pub replicates: usize,
    pub seed: u64,
    pub truncate: String,
    pub years: usize,
    pub p: usize,
    pub reselect_lambda: bool,
    pub lambda_grid: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SmoothingSummary {
    pub lambda: f64,
    pub edf: f64,
    /// `[lambda, GCV]` pairs in evaluation order.
    pub gcv_trace: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FpcaSummary {
    pub m: usize,
    pub rank: usize,
    pub total_variance: f64,
    pub cumulative_fraction: Vec<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Components {
    pub fpc: Option<Rows>,
    pub varimax: Option<Rows>,
    pub ppc: Option<Rows>,
    pub benchmarks: Option<Rows>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VarimaxSummary {
    pub m: usize,
    pub rotation: Rows,
    pub explained_variance: Vec<f64>,
    pub criterion_trace: Vec<f64>,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PpcSummary {
    pub m: usize,
    pub n_pairs: usize,
    pub u_hat: Rows,
    pub v_hat: Rows,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AiSummary {
    pub values: Vec<Option<f64>>,
    pub suggested_j: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VarianceSummary {
    pub lambda_gamma: Vec<f64>,
    pub lambda_xi: Vec<f64>,
    pub lambda_theta: Vec<f64>,
    pub lambda_nu: Option<Vec<f64>>,
    pub cumulative_gamma: Vec<f64>,
    pub cumulative_xi: Vec<f64>,
    pub cumulative_theta: Vec<f64>,
    pub cumulative_nu: Option<Vec<f64>>,
    pub total_variance: f64,
}

impl From<&VarianceDecomposition> for VarianceSummary {
    fn from(v: &VarianceDecomposition) -> Self {
        Self {
            lambda_gamma: v.lambda_gamma.clone(),
            lambda_xi: v.lambda_xi.clone(),
            lambda_theta: v.lambda_theta.clone(),
            lambda_nu: v.lambda_nu.clone(),
            cumulative_gamma: v.cumulative_gamma.clone(),
            cumulative_xi: v.cumulative_xi.clone(),
            cumulative_theta: v.cumulative_theta.clone(),
            cumulative_nu: v.cumulative_nu.clone(),
            total_variance: v.total_variance,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NullSummary {
    pub kind: String,
    pub penalty: Option<f64>,
    pub tau: Option<Vec<f64>>,
    pub achieved_rho1: f64,
    pub kl_divergence: Option<f64>,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestSummary {
    pub observed_rho1: f64,
    pub p_value: f64,
    pub replicates: usize,
    pub seed: u64,
    pub lambda: f64,
    pub null: NullSummary,
    pub bootstrap_rho1: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Bundle {
    pub schema_version: u32,
    pub config: Config,
    pub basis: BasisSpec,
    pub times: Vec<f64>,
    pub ids: Vec<String>,
    pub smoothing: SmoothingSummary,
    /// Smoothed curves, one row per curve.
    pub coefficients: Rows,
    #[serde(default)]
    pub fpca: Option<FpcaSummary>,
    #[serde(default)]
    pub eigenvalues: Option<Vec<f64>>,
    #[serde(default)]
    pub components: Components,
    #[serde(default)]
    pub varimax: Option<VarimaxSummary>,
    #[serde(default)]
    pub ppc: Option<PpcSummary>,
    #[serde(default)]
    pub rho: Option<Vec<f64>>,
    /// `|<gamma_j, theta_j>|` for each PPC pair.
    #[serde(default)]
    pub fpc_rho: Option<Vec<f64>>,
    #[serde(default)]
    pub ai: Option<AiSummary>,
    #[serde(default)]
    pub variance_decomposition: Option<VarianceSummary>,
    #[serde(default)]
    pub test: Option<TestSummary>,
}

#[derive(Deserialize)]
struct VersionProbe {
    schema_version: Option<u32>,
}

/// Demeaned, centered curves and their cross-sectional mean.
pub struct Stage {
    pub basis: FourierBasis,
    pub centered: FunctionalSample,
    pub mean: DVector<f64>,
}

impl Bundle {
    pub fn load(path: &Path) -> CliResult<Self> {
        let probe: VersionProbe = read_json(path)?;
        match probe.schema_version {
            Some(SCHEMA_VERSION) => read_json(path),
            Some(v) => Err(CliError::data(format!(
                "{}: bundle schema version {v} is not supported (expected {SCHEMA_VERSION})",
                path.display()
            ))),
            None => Err(CliError::data(format!("{}: not a result bundle (no schema_version)", path.display()))),
        }
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        write_json(path, self)
    }

    pub fn sample(&self) -> CliResult<FunctionalSample> {
        let basis = self.basis.basis()?;
        let coefs = from_rows(&self.coefficients, basis.dim(), "coefficients")?;
        Ok(FunctionalSample::new(FunctionSet::new(basis, coefs)?))
    }

    /// Demeaned and centered curves, recomputed from the stored coefficients.
    pub fn stage(&self) -> CliResult<Stage> {
        let sample = self.sample()?;
        let (centered, mean) = center_crosssection(&demean_timeseries(&sample)?)?;
        Ok(Stage {
            basis: sample.basis().clone(),
            centered,
            mean,
        })
    }

    pub fn fpca_result(&self, stage: &Stage) -> CliResult<(FpcaResult, usize)> {
        let (Some(summary), Some(eigenvalues), Some(fpc)) = (&self.fpca, &self.eigenvalues, &self.components.fpc)
        else {
            return Err(CliError::data("bundle has no fPCA results; run 'fpca' first"));
        };
        let dim = stage.basis.dim();
        let components = FunctionSet::new(stage.basis.clone(), from_rows(fpc, dim, "components.fpc")?)?;
        if eigenvalues.len() != components.len() {
            return Err(CliError::data("bundle eigenvalues and components disagree in length"));
        }
        let scores = stage.centered.coefficients() * components.coefficients().transpose();
        let result = FpcaResult {
            components,
            eigenvalues: eigenvalues.clone(),
            scores,
            total_variance: summary.total_variance,
        };
        Ok((result, summary.m))
    }

    pub fn ppc_result(&self, basis: &FourierBasis) -> CliResult<PpcResult> {
        let (Some(summary), Some(ppcs), Some(benchmarks), Some(rho)) =
            (&self.ppc, &self.components.ppc, &self.components.benchmarks, &self.rho)
        else {
            return Err(CliError::data("bundle has no PPC results; run 'ppc' first"));
        };
        let dim = basis.dim();
        let ppcs = from_rows(ppcs, dim, "components.ppc")?;
        let benchmarks = from_rows(benchmarks, dim, "components.benchmarks")?;
        let u_hat = from_rows(&summary.u_hat, summary.m, "ppc.u_hat")?;
        let p = benchmarks.nrows();
        let v_hat = from_rows(&summary.v_hat, p, "ppc.v_hat")?;
        Ok(PpcResult {
            u_hat,
            v_hat,
            ppcs: FunctionSet::new(basis.clone(), ppcs)?,
            benchmarks: FunctionSet::new(basis.clone(), benchmarks)?,
            correlations: rho.clone(),
        })
    }

    /// Drop everything computed from the fPCA.
    pub fn clear_downstream(&mut self) {
        self.components = Components::default();
        self.fpca = None;
        self.eigenvalues = None;
        self.varimax = None;
        self.ppc = None;
        self.rho = None;
        self.fpc_rho = None;
        self.ai = None;
        self.variance_decomposition = None;
        self.config.fpca = None;
        self.config.varimax = None;
        self.config.ppc = None;
    }
}
