//! The work behind each subcommand, independent of argument parsing.

use std::path::{Path, PathBuf};

use pdhg_core::identifiability::{
    affine_phase, farkas_identity_errors, nondegeneracy, record_rates, refine_ray, verify_linear_phase, warm_run,
    IndexPartition, LinearPhaseConfig,
};
use pdhg_core::linalg::norm2;
use pdhg_core::model::to_standard_form;
use pdhg_core::operator_lab::{fit_rate_with, RateFit, RateModel};
use pdhg_core::oracle::{classify_lp, exact_optimal_value, to_f64, OptimalValue};
use pdhg_core::pdhg::TraceSink;
use pdhg_core::{demos, Error, GeneralFormLp, PdhgConfig, SolveOutcome, Status, StepSizes};
use serde::Serialize;
use thiserror::Error;

use crate::io::{self, FormatError};
use crate::mps::{self, MpsError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Mps { path: PathBuf, source: MpsError },
    #[error("{path}: {source}")]
    Format { path: PathBuf, source: FormatError },
    #[error("unknown demo `{0}`")]
    UnknownDemo(String),
    #[error(transparent)]
    Core(#[from] Error),
}

impl CliError {
    /// 2 for bad input, 3 when the computation itself broke down.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) => match e {
                Error::NonFinite { .. }
                | Error::Diverged { .. }
                | Error::StepSizesTooLarge { .. }
                | Error::ZeroMatrix
                | Error::ZeroIteration
                | Error::TooFewSamples { .. }
                | Error::DenseLimitExceeded { .. }
                | Error::OracleTooLarge { .. }
                | Error::EliminationBlowup { .. } => 3,
                Error::DimensionMismatch { .. }
                | Error::IndexOutOfRange { .. }
                | Error::NonFiniteEntry { .. }
                | Error::InvalidStepSizes { .. }
                | Error::InvalidBounds { .. }
                | Error::NotRepresentable(_)
                | Error::InvalidConfig(_) => 2,
            },
            _ => 2,
        }
    }
}

/// Exit code of a finished solve.
pub fn status_exit_code(status: Status) -> i32 {
    match status {
        Status::IterationLimit => 4,
        _ => 0,
    }
}

pub const DEMO_NAMES: [&str; 8] = [
    "ex1",
    "ex1_feasible",
    "ex1_both_infeasible",
    "ex1_primal_infeasible",
    "ex1_dual_infeasible",
    "transport_shortfall",
    "unbounded_ray",
    "degenerate_tie",
];

/// `ex1` takes `alpha` and `beta`; the other demos are fixed instances.
pub fn demo(name: &str, alpha: f64, beta: f64) -> Result<GeneralFormLp, CliError> {
    if name == "ex1" {
        return Ok(demos::example1(alpha, beta));
    }
    demos::desk_instances()
        .into_iter()
        .find(|d| d.name == name)
        .map(|d| d.lp.to_general_form())
        .ok_or_else(|| CliError::UnknownDemo(name.to_string()))
}

/// Reads a native JSON instance (first non-blank byte `{`) or an MPS file.
pub fn load(path: &Path) -> Result<GeneralFormLp, CliError> {
    let bytes = std::fs::read(path).map_err(|source| CliError::Io { path: path.into(), source })?;
    if bytes.iter().find(|b| !b.is_ascii_whitespace()) == Some(&b'{') {
        return io::read_instance(&bytes).map_err(|source| CliError::Format { path: path.into(), source });
    }
    let mps_err = |source| CliError::Mps { path: path.into(), source };
    let doc = mps::parse_mps(&bytes).map_err(mps_err)?;
    mps::to_general_form(&doc).map_err(mps_err)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub max_iters: u64,
    pub eps: f64,
    pub kkt_tol: f64,
    pub step_factor: f64,
    pub check_interval: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            max_iters: pdhg_core::pdhg::DEFAULT_MAX_ITERS,
            eps: pdhg_core::pdhg::DEFAULT_EPS,
            kkt_tol: pdhg_core::pdhg::DEFAULT_KKT_TOL,
            step_factor: pdhg_core::linalg::DEFAULT_STEP_FACTOR,
            check_interval: pdhg_core::pdhg::DEFAULT_CHECK_INTERVAL,
        }
    }
}

impl SolveOptions {
    pub fn config(&self, p: &GeneralFormLp) -> Result<PdhgConfig, CliError> {
        if !(self.step_factor > 0.0 && self.step_factor < 1.0) {
            return Err(Error::InvalidConfig("step factor must lie in (0, 1)").into());
        }
        let mut cfg = PdhgConfig::for_matrix(&p.a, self.step_factor)?;
        cfg.max_iters = self.max_iters;
        cfg.eps_pinf = self.eps;
        cfg.eps_dinf = self.eps;
        cfg.kkt_tol = self.kkt_tol;
        cfg.check_interval = self.check_interval;
        Ok(cfg)
    }
}

pub fn solve(
    p: &GeneralFormLp,
    opts: &SolveOptions,
    sink: &mut dyn TraceSink,
) -> Result<(SolveOutcome, StepSizes), CliError> {
    let cfg = opts.config(p)?;
    let out = pdhg_core::run(p, &cfg, sink)?;
    Ok((out, cfg.steps))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyzeOptions {
    pub step_factor: f64,
    pub warm_iters: u64,
    pub horizon: u64,
    pub fit_start: u64,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        let t = LinearPhaseConfig::default();
        AnalyzeOptions { step_factor: 0.9, warm_iters: 20_000, horizon: t.horizon, fit_start: t.fit_start }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitSummary {
    pub slope: f64,
    pub rate: f64,
    pub r_squared: f64,
    pub samples: usize,
}

impl From<&RateFit> for FitSummary {
    fn from(f: &RateFit) -> Self {
        FitSummary { slope: f.slope, rate: f.rate, r_squared: f.r_squared, samples: f.used }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralReport {
    pub skipped: Option<String>,
    pub support_size: Option<usize>,
    pub mu: Option<f64>,
    pub lower_rate: Option<f64>,
    pub projection_defect: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub skipped: Option<String>,
    /// Geometric fit of `‖z^{k+1} − z^k − v‖₂` after the freeze.
    pub difference: Option<FitSummary>,
    /// Power fit of `‖z^k/k − v‖₂`.
    pub iterate: Option<FitSummary>,
    /// Power fit of `‖2Σz^j/(k(k+1)) − v‖₂`.
    pub average: Option<FitSummary>,
    /// Only decided when the spectral section ran.
    pub rate_in_bracket: Option<bool>,
    pub slopes_ok: bool,
}

/// Everything `analyze` reports. Indices refer to the `Ax = b, x ≥ 0`
/// form of the instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub n: usize,
    pub m: usize,
    pub eta: f64,
    pub tau: f64,
    /// Last iteration at which the set of zero coordinates changed.
    pub freeze_k: u64,
    pub freeze_observed: bool,
    pub v_x_norm: f64,
    pub v_y_norm: f64,
    pub ray_residual: f64,
    pub ray_warning: bool,
    pub partition: IndexPartition,
    /// Relative errors of `cᵀv_x = −‖v_x‖²/η` and `bᵀv_y = −‖v_y‖²/τ`.
    pub farkas_x: f64,
    pub farkas_y: f64,
    pub nondegenerate: bool,
    pub spectral: SpectralReport,
    pub rates: RateReport,
    pub v: Vec<f64>,
}

pub fn analyze(p: &GeneralFormLp, opts: &AnalyzeOptions) -> Result<AnalysisReport, CliError> {
    let (lp, _) = to_standard_form(p)?;
    let steps = StepSizes::for_matrix(&lp.a, opts.step_factor)?;
    let warm = warm_run(&lp, steps, opts.warm_iters)?;
    let ray = refine_ray(&lp, steps, &warm)?;
    let n = lp.n();
    let (farkas_x, farkas_y) = farkas_identity_errors(&lp, steps, &ray.v);
    let nondeg = nondegeneracy(&lp, &ray);

    let cfg = LinearPhaseConfig { horizon: opts.horizon, fit_start: opts.fit_start, ..LinearPhaseConfig::default() };
    let (spectral, rates) = match affine_phase(&lp, steps, &warm.support) {
        Ok(phase) => {
            let s = phase.summary();
            let phase_report = verify_linear_phase(&lp, steps, &ray, &phase, &warm, &cfg)?;
            let spectral = SpectralReport {
                skipped: None,
                support_size: Some(s.support_size),
                mu: Some(s.mu),
                lower_rate: Some(s.lower_rate),
                projection_defect: Some(s.projection_defect),
            };
            let rates = RateReport {
                skipped: phase_report.skipped.map(str::to_string),
                difference: phase_report.difference_fit.as_ref().map(FitSummary::from),
                iterate: phase_report.iterate_fit.as_ref().map(FitSummary::from),
                average: phase_report.average_fit.as_ref().map(FitSummary::from),
                rate_in_bracket: phase_report.skipped.is_none().then_some(phase_report.rate_in_bracket),
                slopes_ok: phase_report.slopes_ok,
            };
            (spectral, rates)
        }
        Err(Error::DenseLimitExceeded { size, limit }) => {
            let spectral = SpectralReport {
                skipped: Some(format!("n + m = {size} exceeds the dense limit {limit}")),
                support_size: None,
                mu: None,
                lower_rate: None,
                projection_defect: None,
            };
            let k = warm.freeze.k;
            let start = cfg.fit_start.max(k);
            let samples = record_rates(&lp, steps, &ray.v, k, start, cfg.horizon)?;
            let fit = |s: &[(f64, f64)], model, from: u64| fit_rate_with(s, model, from as f64).ok();
            let iterate = fit(&samples.iterate, RateModel::Power, start);
            let average = fit(&samples.average, RateModel::Power, start);
            let ok = |f: &Option<RateFit>| f.as_ref().is_some_and(|f| (f.slope + 1.0).abs() <= 0.15);
            let rates = RateReport {
                skipped: None,
                difference: fit(&samples.difference, RateModel::Geometric, k).as_ref().map(FitSummary::from),
                slopes_ok: ok(&iterate) && ok(&average),
                iterate: iterate.as_ref().map(FitSummary::from),
                average: average.as_ref().map(FitSummary::from),
                rate_in_bracket: None,
            };
            (spectral, rates)
        }
        Err(e) => return Err(e.into()),
    };

    Ok(AnalysisReport {
        n,
        m: lp.m(),
        eta: steps.eta,
        tau: steps.tau,
        freeze_k: warm.freeze.k,
        freeze_observed: warm.freeze.observed,
        v_x_norm: norm2(&ray.v[..n]),
        v_y_norm: norm2(&ray.v[n..]),
        ray_residual: ray.residual,
        ray_warning: ray.warning,
        partition: ray.partition.clone(),
        farkas_x,
        farkas_y,
        nondegenerate: nondeg.nondegenerate,
        spectral,
        rates,
        v: ray.v,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub class: &'static str,
    pub primal_feasible: bool,
    pub dual_feasible: bool,
    /// Exact optimum as `p/q` when both sides are feasible.
    pub optimal_value: Option<String>,
    pub optimal_value_f64: Option<f64>,
}

pub fn oracle(p: &GeneralFormLp) -> Result<OracleReport, CliError> {
    let cls = classify_lp(p)?;
    let mut report = OracleReport {
        class: cls.class.name(),
        primal_feasible: cls.primal.is_feasible(),
        dual_feasible: cls.dual.is_feasible(),
        optimal_value: None,
        optimal_value_f64: None,
    };
    if report.primal_feasible && report.dual_feasible {
        if let OptimalValue::Finite(v) = exact_optimal_value(p)? {
            report.optimal_value_f64 = Some(to_f64(&v));
            report.optimal_value = Some(v.to_string());
        }
    }
    Ok(report)
}
