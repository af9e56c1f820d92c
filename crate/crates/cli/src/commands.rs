use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use ppc_core::smoothing::log_grid;
use ppc_core::{
    annual_information, bootstrap_test, center_crosssection, decompose, demean_timeseries, fpca, generate,
    gram_matrix, ppc_rotation_weighted, smooth, smooth_fixed, stability_trace, varimax, variance_decomposition,
    FourierBasis, NullKind, PeriodicSubBasis, RawCurveSet, Scheme, SchemeConfig, SmoothingFit, TestConfig,
    Truncation, VarimaxOptions,
};
use serde::Serialize;

use crate::bundle::{
    to_rows, AiSummary, BasisSpec, Bundle, Components, Config, FpcaConfig, FpcaSummary, NullSummary, PpcConfig,
    PpcSummary, Rows, SmoothConfig, SmoothingSummary, TestEcho, TestSummary, VarianceSummary, VarimaxConfig,
    VarimaxSummary, SCHEMA_VERSION,
};
use crate::error::{CliError, CliResult};
use crate::io::{fmt_f64, read_curves, sibling, write_coefficients, write_curves, write_json, write_table};
use crate::svg::{line_chart, Series};

const DEFAULT_LAMBDA_GRID: &str = "1e-8:1e4:25";

/// `lo:hi:count` for a log-spaced grid, or a comma-separated list.
pub fn parse_lambda_grid(spec: &str) -> CliResult<Vec<f64>> {
    let bad = || CliError::usage(format!("invalid lambda grid '{spec}': use lo:hi:count or a comma-separated list"));
    let grid = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        let [lo, hi, count] = parts.as_slice() else {
            return Err(bad());
        };
        let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
        let count: usize = count.trim().parse().map_err(|_| bad())?;
        if !(lo > 0.0 && hi >= lo && count >= 1) {
            return Err(bad());
        }
        log_grid(lo, hi, count)
    } else {
        spec.split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<CliResult<Vec<f64>>>()?
    };
    if grid.is_empty() || grid.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
        return Err(bad());
    }
    Ok(grid)
}

/// `count:M` or `frac:q`.
pub fn parse_truncation(spec: &str) -> CliResult<Truncation> {
    let bad = || CliError::usage(format!("invalid truncation '{spec}': use count:M or frac:q"));
    match spec.split_once(':') {
        Some(("count", m)) => Ok(Truncation::Count(m.trim().parse().map_err(|_| bad())?)),
        Some(("frac", q)) => {
            let q: f64 = q.trim().parse().map_err(|_| bad())?;
            if !(q > 0.0 && q <= 1.0) {
                return Err(bad());
            }
            Ok(Truncation::Fraction(q))
        }
        _ => Err(bad()),
    }
}

/// `start:stop:step` (inclusive) or a comma-separated list.
pub fn parse_m_list(spec: &str) -> CliResult<Vec<usize>> {
    let bad = || CliError::usage(format!("invalid M list '{spec}': use start:stop:step or a comma-separated list"));
    if spec.contains(':') {
        let parts = spec
            .split(':')
            .map(|s| s.trim().parse::<usize>().map_err(|_| bad()))
            .collect::<CliResult<Vec<usize>>>()?;
        let [start, stop, step] = parts.as_slice() else {
            return Err(bad());
        };
        if *step == 0 || stop < start {
            return Err(bad());
        }
        Ok((*start..=*stop).step_by(*step).collect())
    } else {
        spec.split(',')
            .map(|s| s.trim().parse::<usize>().map_err(|_| bad()))
            .collect()
    }
}

/// Basis on `[t_1, t_1 + T)`. Without `span`, the grid must be equally
/// spaced and `T = n dt`.
pub fn infer_basis(times: &[f64], nbasis: Option<usize>, span: Option<f64>) -> CliResult<FourierBasis> {
    let n = times.len();
    let origin = times[0];
    let span = match span {
        Some(s) => s,
        None => {
            if n < 2 {
                return Err(CliError::usage("a single time point needs --span"));
            }
            let dt = (times[n - 1] - origin) / (n - 1) as f64;
            let uneven = times
                .iter()
                .enumerate()
                .any(|(j, &t)| (t - origin - j as f64 * dt).abs() > 1e-9 * dt.max(1.0) * n as f64);
            if uneven {
                return Err(CliError::usage("time grid is not equally spaced; pass --span"));
            }
            n as f64 * dt
        }
    };
    if times[n - 1] - origin >= span {
        return Err(CliError::usage(format!(
            "span {span} does not cover the time grid (last time {} from origin {origin})",
            times[n - 1]
        )));
    }
    let basis = match nbasis {
        None => FourierBasis::saturated(span, n)?,
        Some(k) => FourierBasis::new(span, k, true)?,
    };
    Ok(basis.with_origin(origin))
}

fn truncation_label(t: Truncation) -> String {
    match t {
        Truncation::Count(m) => format!("count:{m}"),
        Truncation::Fraction(q) => format!("frac:{q}"),
    }
}

fn path_string(p: &Path) -> String {
    p.display().to_string()
}

fn smoothing_summary(fit: &SmoothingFit) -> SmoothingSummary {
    SmoothingSummary {
        lambda: fit.lambda,
        edf: fit.edf,
        gcv_trace: fit.gcv_trace.iter().map(|&(l, g)| [l, g]).collect(),
    }
}

fn fresh_bundle(config: Config, basis: &FourierBasis, raw: &RawCurveSet, fit: &SmoothingFit) -> Bundle {
    Bundle {
        schema_version: SCHEMA_VERSION,
        config,
        basis: BasisSpec::of(basis),
        times: raw.times().to_vec(),
        ids: raw.ids().to_vec(),
        smoothing: smoothing_summary(fit),
        coefficients: to_rows(fit.sample.coefficients()),
        fpca: None,
        eigenvalues: None,
        components: Components::default(),
        varimax: None,
        ppc: None,
        rho: None,
        fpc_rho: None,
        ai: None,
        variance_decomposition: None,
        test: None,
    }
}

/// Options shared by the commands that start from a curve file.
#[derive(Debug, Args)]
pub struct SmoothingArgs {
    /// Number of sine/cosine functions (default: saturated for the grid)
    #[arg(long)]
    pub nbasis: Option<usize>,
    /// Length of the time domain (default: inferred from an equally spaced grid)
    #[arg(long)]
    pub span: Option<f64>,
    /// Smoothing parameters searched by GCV: lo:hi:count (log-spaced) or a list
    #[arg(long, default_value = DEFAULT_LAMBDA_GRID)]
    pub lambda_grid: String,
}

impl SmoothingArgs {
    fn prepare(&self, raw: &RawCurveSet) -> CliResult<(FourierBasis, Vec<f64>)> {
        let basis = infer_basis(raw.times(), self.nbasis, self.span)?;
        Ok((basis, parse_lambda_grid(&self.lambda_grid)?))
    }
}

// ---------------------------------------------------------------- simulate

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// 1: annual signal mixed with aperiodic terms; 2: high-frequency disturbance
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub scheme: u8,
    /// Scale of the annual (scheme 1) or high-frequency (scheme 2) component
    #[arg(long)]
    pub level: f64,
    /// Number of curves
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of grid points per curve
    #[arg(long, default_value_t = 201)]
    pub grid: usize,
    #[arg(long, default_value_t = 100.0)]
    pub span: f64,
    #[arg(long, default_value_t = 4)]
    pub years: usize,
    /// Standard deviation of the noise added at each grid point
    #[arg(long, default_value_t = 0.0)]
    pub noise_sd: f64,
    /// Frequency of the high-frequency disturbance (scheme 2)
    #[arg(long, default_value_t = 19)]
    pub hfd_frequency: usize,
    /// Curve CSV; the true coefficients go to <stem>_truth.json
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct SimulateEcho {
    scheme: u8,
    level: f64,
    n: usize,
    seed: u64,
    grid: usize,
    span: f64,
    years: usize,
    noise_sd: f64,
    hfd_frequency: usize,
}

#[derive(Serialize)]
struct TruthFile {
    schema_version: u32,
    config: SimulateEcho,
    basis: BasisSpec,
    ids: Vec<String>,
    coefficients: Rows,
}

pub fn simulate(args: &SimulateArgs) -> CliResult<()> {
    let mut cfg = SchemeConfig::new(Scheme::from_number(args.scheme)?, args.level, args.seed);
    cfg.n_curves = args.n;
    cfg.n_grid = args.grid;
    cfg.span = args.span;
    cfg.years = args.years;
    cfg.noise_sd = args.noise_sd;
    cfg.hfd_frequency = args.hfd_frequency;
    let data = generate(&cfg)?;
    write_curves(&args.out, &data.raw)?;
    let truth = TruthFile {
        schema_version: SCHEMA_VERSION,
        config: SimulateEcho {
            scheme: args.scheme,
            level: args.level,
            n: args.n,
            seed: args.seed,
            grid: args.grid,
            span: args.span,
            years: args.years,
            noise_sd: args.noise_sd,
            hfd_frequency: args.hfd_frequency,
        },
        basis: BasisSpec::of(data.truth.basis()),
        ids: data.raw.ids().to_vec(),
        coefficients: to_rows(data.truth.coefficients()),
    };
    write_json(&sibling(&args.out, "_truth.json"), &truth)?;
    println!("wrote {} curves on {} grid points", data.raw.num_curves(), data.raw.num_times());
    Ok(())
}

// ------------------------------------------------------------------ smooth

#[derive(Debug, Args)]
pub struct SmoothArgs {
    /// Curve CSV
    #[arg(long = "in")]
    pub input: PathBuf,
    #[command(flatten)]
    pub smoothing: SmoothingArgs,
    /// Fixed smoothing parameter instead of the GCV search
    #[arg(long, conflicts_with = "lambda_grid")]
    pub lambda: Option<f64>,
    /// Bundle to create; coefficients also go to <stem>_coefficients.csv
    #[arg(long)]
    pub out: PathBuf,
}

pub fn smooth_cmd(args: &SmoothArgs) -> CliResult<()> {
    let raw = read_curves(&args.input)?;
    let (basis, grid) = args.smoothing.prepare(&raw)?;
    let fit = match args.lambda {
        Some(l) => smooth_fixed(&raw, &basis, l)?,
        None => smooth(&raw, &basis, &grid)?,
    };
    let config = Config {
        smooth: Some(SmoothConfig {
            input: path_string(&args.input),
            nbasis: args.smoothing.nbasis,
            span: basis.span(),
            origin: basis.origin(),
            lambda_grid: if args.lambda.is_some() { Vec::new() } else { grid },
            fixed_lambda: args.lambda,
        }),
        ..Config::default()
    };
    let bundle = fresh_bundle(config, &basis, &raw, &fit);
    bundle.save(&args.out)?;
    write_coefficients(
        &sibling(&args.out, "_coefficients.csv"),
        &basis,
        raw.ids(),
        fit.sample.coefficients(),
    )?;
    println!(
        "curves {}  basis dimension {}  lambda {}  edf {}",
        raw.num_curves(),
        basis.dim(),
        fmt_f64(fit.lambda),
        fmt_f64(fit.edf)
    );
    Ok(())
}

// -------------------------------------------------------------------- fpca

#[derive(Debug, Args)]
pub struct FpcaArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// count:M or frac:q
    #[arg(long, default_value = "frac:0.8")]
    pub truncate: String,
    /// Output bundle (default: update the input)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn fpca_cmd(args: &FpcaArgs) -> CliResult<()> {
    let rule = parse_truncation(&args.truncate)?;
    let mut bundle = Bundle::load(&args.input)?;
    let stage = bundle.stage()?;
    let result = fpca(&stage.centered)?;
    let m = result.truncate(rule)?;
    bundle.clear_downstream();
    bundle.config.fpca = Some(FpcaConfig {
        truncate: truncation_label(rule),
    });
    let cumulative = result.cumulative_fraction();
    bundle.fpca = Some(FpcaSummary {
        m,
        rank: result.rank(),
        total_variance: result.total_variance,
        cumulative_fraction: cumulative.clone(),
    });
    bundle.eigenvalues = Some(result.eigenvalues.clone());
    bundle.components.fpc = Some(to_rows(result.components.coefficients()));
    bundle.save(args.out.as_deref().unwrap_or(&args.input))?;
    println!(
        "M {m}  rank {}  explained {}",
        result.rank(),
        fmt_f64(cumulative.get(m - 1).copied().unwrap_or(0.0))
    );
    Ok(())
}

// ----------------------------------------------------------------- varimax

#[derive(Debug, Args)]
pub struct VarimaxArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Number of leading components to rotate
    #[arg(long)]
    pub m: usize,
    /// Row-normalize the loadings before rotating
    #[arg(long)]
    pub kaiser: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn varimax_cmd(args: &VarimaxArgs) -> CliResult<()> {
    let mut bundle = Bundle::load(&args.input)?;
    let stage = bundle.stage()?;
    let (result, _) = bundle.fpca_result(&stage)?;
    let opts = VarimaxOptions {
        kaiser: args.kaiser,
        ..VarimaxOptions::default()
    };
    let v = varimax(&result, args.m, &bundle.times, &opts)?;
    bundle.config.varimax = Some(VarimaxConfig {
        m: args.m,
        kaiser: opts.kaiser,
        max_sweeps: opts.max_sweeps,
        tolerance: opts.tolerance,
    });
    bundle.components.varimax = Some(to_rows(v.rotated_components.coefficients()));
    bundle.varimax = Some(VarimaxSummary {
        m: args.m,
        rotation: to_rows(&v.rotation),
        explained_variance: v.explained_variance.clone(),
        criterion_trace: v.criterion_trace.clone(),
        converged: v.converged,
    });
    bundle.save(args.out.as_deref().unwrap_or(&args.input))?;
    println!(
        "rotated {} components in {} sweeps  converged {}",
        args.m,
        v.criterion_trace.len() - 1,
        v.converged
    );
    Ok(())
}

// --------------------------------------------------------------------- ppc

#[derive(Debug, Args)]
pub struct PpcArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Number of annual cycles in the time domain
    #[arg(long)]
    pub years: usize,
    /// Number of periodic basis functions (lowest annual harmonics first)
    #[arg(long)]
    pub p: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn ppc_cmd(args: &PpcArgs) -> CliResult<()> {
    let mut bundle = Bundle::load(&args.input)?;
    let stage = bundle.stage()?;
    let (result, m) = bundle.fpca_result(&stage)?;
    let periodic = PeriodicSubBasis::new(&stage.basis, args.years, args.p)?;
    let rotation = ppc_rotation_weighted(&result.leading(m), &result.eigenvalues[..m], &periodic)?;

    // VARIMAX at the same M for the cumulative-variance comparison
    let nu = if m >= 2 && bundle.times.len() >= m {
        let opts = match &bundle.config.varimax {
            Some(c) => VarimaxOptions {
                kaiser: c.kaiser,
                max_sweeps: c.max_sweeps,
                tolerance: c.tolerance,
            },
            None => VarimaxOptions::default(),
        };
        Some(varimax(&result, m, &bundle.times, &opts)?)
    } else {
        None
    };
    let vd = variance_decomposition(&stage.centered, &result, &rotation, nu.as_ref())?;
    let ai = annual_information(&vd)?;
    let pairs = rotation.n_pairs();
    let cross = gram_matrix(&result.leading(pairs), &rotation.benchmarks.head(pairs))?;
    let fpc_rho: Vec<f64> = (0..pairs).map(|j| cross[(j, j)].abs()).collect();

    bundle.config.ppc = Some(PpcConfig {
        years: args.years,
        p: args.p,
    });
    bundle.ppc = Some(PpcSummary {
        m,
        n_pairs: pairs,
        u_hat: to_rows(&rotation.u_hat),
        v_hat: to_rows(&rotation.v_hat),
    });
    bundle.components.ppc = Some(to_rows(rotation.ppcs.coefficients()));
    bundle.components.benchmarks = Some(to_rows(rotation.benchmarks.coefficients()));
    bundle.rho = Some(rotation.correlations.clone());
    bundle.fpc_rho = Some(fpc_rho.clone());
    bundle.ai = Some(AiSummary {
        values: ai.ai.clone(),
        suggested_j: ai.suggested_j,
    });
    bundle.variance_decomposition = Some(VarianceSummary::from(&vd));
    bundle.save(args.out.as_deref().unwrap_or(&args.input))?;

    println!("M {m}  pairs {pairs}");
    println!("j\trho_ppc\trho_fpc\tai");
    for j in 0..pairs {
        let ai_j = ai.ai.get(j).copied().flatten().map(fmt_f64).unwrap_or_else(|| "NA".into());
        println!("{}\t{}\t{}\t{ai_j}", j + 1, fmt_f64(rotation.correlations[j]), fmt_f64(fpc_rho[j]));
    }
    match ai.suggested_j {
        Some(j) => println!("suggested J {j}"),
        None => println!("suggested J none"),
    }
    Ok(())
}

// --------------------------------------------------------------- decompose

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Number of PPCs counted as nearly periodic
    #[arg(long)]
    pub j: usize,
    /// Prefix for <prefix>_nearly_periodic.csv, _aperiodic.csv and _remainder.csv
    #[arg(long)]
    pub out: String,
}

pub fn decompose_cmd(args: &DecomposeArgs) -> CliResult<()> {
    let bundle = Bundle::load(&args.input)?;
    let stage = bundle.stage()?;
    let (result, _) = bundle.fpca_result(&stage)?;
    let rotation = bundle.ppc_result(&stage.basis)?;
    let parts = decompose(&stage.centered, &stage.mean, &result, &rotation, args.j)?;
    for (name, coefs) in [
        ("nearly_periodic", &parts.nearly_periodic),
        ("aperiodic", &parts.aperiodic),
        ("remainder", &parts.remainder),
    ] {
        let path = PathBuf::from(format!("{}_{name}.csv", args.out));
        write_coefficients(&path, &stage.basis, &bundle.ids, coefs)?;
    }
    println!("J {}  M {}", parts.j, parts.m);
    Ok(())
}

// -------------------------------------------------------------------- test

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum NullChoice {
    Replace,
    Inflate,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    /// Curve CSV
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "replace")]
    pub null: NullChoice,
    /// Bootstrap replicates (at least 100)
    #[arg(long, default_value_t = 500)]
    pub b: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Weight on -ln rho_1 for the inflation null
    #[arg(long, default_value_t = 1e4)]
    pub lambda_penalty: f64,
    #[arg(long, default_value = "frac:0.8")]
    pub truncate: String,
    #[arg(long, default_value_t = 4)]
    pub years: usize,
    #[arg(long, default_value_t = 2)]
    pub p: usize,
    #[command(flatten)]
    pub smoothing: SmoothingArgs,
    /// Repeat the GCV search in every replicate
    #[arg(long)]
    pub reselect_lambda: bool,
    /// Result bundle
    #[arg(long)]
    pub out: PathBuf,
    /// Histogram CSV (default: <stem>_histogram.csv)
    #[arg(long)]
    pub histogram: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    pub bins: usize,
}

/// Equal-width bins over the range of `values`.
pub fn histogram(values: &[f64], bins: usize) -> Vec<(f64, f64, usize)> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if values.is_empty() || bins == 0 {
        return Vec::new();
    }
    if hi <= lo {
        return vec![(lo, hi, values.len())];
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values {
        let k = (((v - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(k, c)| (lo + k as f64 * width, if k + 1 == bins { hi } else { lo + (k + 1) as f64 * width }, c))
        .collect()
}

pub fn test_cmd(args: &TestArgs) -> CliResult<()> {
    let rule = parse_truncation(&args.truncate)?;
    if args.bins == 0 {
        return Err(CliError::usage("--bins must be positive"));
    }
    let raw = read_curves(&args.input)?;
    let (basis, grid) = args.smoothing.prepare(&raw)?;
    let mut cfg = TestConfig::new(basis.clone(), rule, args.years, args.p);
    cfg.lambda_grid = grid.clone();
    cfg.replicates = args.b;
    cfg.seed = args.seed;
    cfg.reselect_lambda = args.reselect_lambda;
    cfg.null = match args.null {
        NullChoice::Replace => NullKind::Replacement,
        NullChoice::Inflate => NullKind::Inflation {
            penalty: args.lambda_penalty,
        },
    };
    let result = bootstrap_test(&raw, &cfg)?;
    let fit = smooth(&raw, &basis, &grid)?;

    let (kind, penalty) = match result.null.kind {
        NullKind::Replacement => ("replace", None),
        NullKind::Inflation { penalty } => ("inflate", Some(penalty)),
    };
    let config = Config {
        test: Some(TestEcho {
            input: path_string(&args.input),
            null: kind.to_string(),
            lambda_penalty: penalty,
            replicates: args.b,
            seed: args.seed,
            truncate: truncation_label(rule),
            years: args.years,
            p: args.p,
            reselect_lambda: args.reselect_lambda,
            lambda_grid: grid,
        }),
        ..Config::default()
    };
    let mut bundle = fresh_bundle(config, &basis, &raw, &fit);
    bundle.test = Some(TestSummary {
        observed_rho1: result.observed_rho1,
        p_value: result.p_value,
        replicates: result.replicates,
        seed: result.seed,
        lambda: result.lambda,
        null: NullSummary {
            kind: kind.to_string(),
            penalty,
            tau: result.null.tau.clone(),
            achieved_rho1: result.null.achieved_rho1,
            kl_divergence: result.null.kl_divergence,
            converged: result.null.converged,
            iterations: result.null.iterations,
        },
        bootstrap_rho1: result.bootstrap_rho1.clone(),
    });
    bundle.save(&args.out)?;

    let hist_path = args.histogram.clone().unwrap_or_else(|| sibling(&args.out, "_histogram.csv"));
    let header = ["bin_lower", "bin_upper", "count"].map(String::from);
    write_table(
        &hist_path,
        &header,
        histogram(&result.bootstrap_rho1, args.bins)
            .into_iter()
            .map(|(a, b, c)| vec![fmt_f64(a), fmt_f64(b), c.to_string()]),
    )?;
    println!(
        "observed rho1 {}  null rho1 {}  p-value {}",
        fmt_f64(result.observed_rho1),
        fmt_f64(result.null.achieved_rho1),
        fmt_f64(result.p_value)
    );
    Ok(())
}

// --------------------------------------------------------------- stability

#[derive(Debug, Args)]
pub struct StabilityArgs {
    /// Curve CSV
    #[arg(long = "in")]
    pub input: PathBuf,
    /// start:stop:step or a comma-separated list
    #[arg(long, default_value = "5:50:5")]
    pub m_list: String,
    #[arg(long, default_value_t = 4)]
    pub years: usize,
    #[arg(long, default_value_t = 2)]
    pub p: usize,
    #[command(flatten)]
    pub smoothing: SmoothingArgs,
    #[arg(long)]
    pub kaiser: bool,
    /// Trace CSV
    #[arg(long)]
    pub out: PathBuf,
}

pub fn stability_cmd(args: &StabilityArgs) -> CliResult<()> {
    let m_list = parse_m_list(&args.m_list)?;
    let raw = read_curves(&args.input)?;
    let (basis, grid) = args.smoothing.prepare(&raw)?;
    let fit = smooth(&raw, &basis, &grid)?;
    let (centered, _) = center_crosssection(&demean_timeseries(&fit.sample)?)?;
    let result = fpca(&centered)?;
    let periodic = PeriodicSubBasis::new(&basis, args.years, args.p)?;
    let opts = VarimaxOptions {
        kaiser: args.kaiser,
        ..VarimaxOptions::default()
    };
    let rows = stability_trace(&result, &periodic, raw.times(), &m_list, &opts)?;
    let header = [
        "m_prev",
        "m",
        "ppc",
        "varimax_max_variance",
        "varimax_closest_previous",
        "varimax_closest_fpc",
    ]
    .map(String::from);
    write_table(
        &args.out,
        &header,
        rows.iter().map(|r| {
            vec![
                r.m_prev.to_string(),
                r.m.to_string(),
                fmt_f64(r.ppc),
                fmt_f64(r.varimax_max_variance),
                fmt_f64(r.varimax_closest_previous),
                fmt_f64(r.varimax_closest_fpc),
            ]
        }),
    )?;
    let max = |f: fn(&ppc_core::StabilityRow) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    println!(
        "max L2 change: ppc {}  varimax (max variance) {}  varimax (closest previous) {}  varimax (closest fPC) {}",
        fmt_f64(max(|r| r.ppc)),
        fmt_f64(max(|r| r.varimax_max_variance)),
        fmt_f64(max(|r| r.varimax_closest_previous)),
        fmt_f64(max(|r| r.varimax_closest_fpc)),
    );
    Ok(())
}

// ---------------------------------------------------------------- plotdata

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PlotKind {
    Scree,
    Ai,
    Correlations,
    Components,
    Cumvar,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub what: PlotKind,
    /// Tidy CSV with columns x, series, y
    #[arg(long)]
    pub out: PathBuf,
    /// Also draw a line chart
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Number of functions per family for --what components
    #[arg(long, default_value_t = 3)]
    pub count: usize,
}

fn indexed(name: &str, ys: &[f64]) -> Series {
    Series {
        name: name.to_string(),
        points: ys.iter().enumerate().map(|(j, &y)| ((j + 1) as f64, y)).collect(),
    }
}

fn missing(what: &str, command: &str) -> CliError {
    CliError::data(format!("bundle has no {what}; run '{command}' first"))
}

fn plot_series(bundle: &Bundle, kind: PlotKind, count: usize) -> CliResult<(Vec<Series>, &'static str)> {
    Ok(match kind {
        PlotKind::Scree => {
            let eig = bundle.eigenvalues.as_ref().ok_or_else(|| missing("eigenvalues", "fpca"))?;
            let summary = bundle.fpca.as_ref().ok_or_else(|| missing("fPCA summary", "fpca"))?;
            let rank = summary.rank.max(1).min(eig.len());
            let fractions = &summary.cumulative_fraction[..rank.min(summary.cumulative_fraction.len())];
            (
                vec![indexed("eigenvalue", &eig[..rank]), indexed("cumulative_fraction", fractions)],
                "component",
            )
        }
        PlotKind::Ai => {
            let ai = bundle.ai.as_ref().ok_or_else(|| missing("annual information", "ppc"))?;
            let points = ai
                .values
                .iter()
                .enumerate()
                .filter_map(|(j, v)| v.map(|y| ((j + 1) as f64, y)))
                .collect();
            (
                vec![Series {
                    name: "ai".into(),
                    points,
                }],
                "J",
            )
        }
        PlotKind::Correlations => {
            let rho = bundle.rho.as_ref().ok_or_else(|| missing("correlations", "ppc"))?;
            let fpc = bundle.fpc_rho.as_ref().ok_or_else(|| missing("correlations", "ppc"))?;
            (vec![indexed("ppc", rho), indexed("fpc", fpc)], "component")
        }
        PlotKind::Components => {
            let basis = bundle.basis.basis()?;
            let n = bundle.times.len();
            let grid: Vec<f64> = if n >= 2 {
                let (a, b) = (bundle.times[0], bundle.times[n - 1]);
                (0..=400).map(|i| a + (b - a) * i as f64 / 400.0).collect()
            } else {
                bundle.times.clone()
            };
            let mut series = Vec::new();
            for (family, rows) in [
                ("fpc", &bundle.components.fpc),
                ("ppc", &bundle.components.ppc),
                ("benchmark", &bundle.components.benchmarks),
                ("varimax", &bundle.components.varimax),
            ] {
                let Some(rows) = rows else { continue };
                for (j, row) in rows.iter().take(count).enumerate() {
                    if row.len() != basis.dim() {
                        return Err(CliError::data(format!("components.{family} has the wrong row length")));
                    }
                    series.push(Series {
                        name: format!("{family}{}", j + 1),
                        points: grid.iter().map(|&t| (t, basis.evaluate(row, t))).collect(),
                    });
                }
            }
            if series.is_empty() {
                return Err(missing("components", "fpca"));
            }
            (series, "t")
        }
        PlotKind::Cumvar => {
            let vd = bundle
                .variance_decomposition
                .as_ref()
                .ok_or_else(|| missing("variance decomposition", "ppc"))?;
            let mut series = vec![
                indexed("fpc", &vd.cumulative_gamma),
                indexed("ppc", &vd.cumulative_xi),
                indexed("benchmark", &vd.cumulative_theta),
            ];
            if let Some(nu) = &vd.cumulative_nu {
                series.push(indexed("varimax", nu));
            }
            (series, "component")
        }
    })
}

pub fn plotdata_cmd(args: &PlotArgs) -> CliResult<()> {
    let bundle = Bundle::load(&args.input)?;
    let (series, x_label) = plot_series(&bundle, args.what, args.count)?;
    let header = ["x", "series", "y"].map(String::from);
    write_table(
        &args.out,
        &header,
        series
            .iter()
            .flat_map(|s| s.points.iter().map(|&(x, y)| vec![fmt_f64(x), s.name.clone(), fmt_f64(y)])),
    )?;
    if let Some(svg) = &args.svg {
        let title = format!("{:?}", args.what).to_lowercase();
        std::fs::write(svg, line_chart(&title, x_label, &series))
            .map_err(|e| CliError::data(format!("cannot write {}: {e}", svg.display())))?;
    }
    println!("{} series", series.len());
    Ok(())
}
