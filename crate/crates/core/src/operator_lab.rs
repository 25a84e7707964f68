//! Generic fixed-point iteration `z^{k+1} = T(z^k)`, estimators of the
//! infimal displacement vector, rate fitting and a few small operators with
//! known behavior.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm2, StepSizes};
use crate::pdhg::{apply_stacked, PdhgProblem, ProblemMetric};

/// Warm-up iterations excluded from rate fits.
pub const DEFAULT_K_MIN: f64 = 100.0;
pub const MIN_FIT_SAMPLES: usize = 20;
/// Relative disagreement above which the two estimates of `v` are flagged.
pub const V_DISAGREEMENT_TOL: f64 = 1e-6;

pub trait FixedPointOperator {
    fn dim(&self) -> usize;
    fn apply(&self, z: &[f64]) -> Result<Vec<f64>>;

    /// The norm in which the operator is claimed nonexpansive.
    fn norm(&self, z: &[f64]) -> f64 {
        norm2(z)
    }
}

pub struct Identity {
    pub dim: usize,
}

impl FixedPointOperator for Identity {
    fn dim(&self) -> usize {
        self.dim
    }
    fn apply(&self, z: &[f64]) -> Result<Vec<f64>> {
        Ok(z.to_vec())
    }
}

/// `T(z) = z + v`.
pub struct Translation {
    pub v: Vec<f64>,
}

impl FixedPointOperator for Translation {
    fn dim(&self) -> usize {
        self.v.len()
    }
    fn apply(&self, z: &[f64]) -> Result<Vec<f64>> {
        Ok(z.iter().zip(&self.v).map(|(a, b)| a + b).collect())
    }
}

/// Counterclockwise rotation of the plane by 90°: nonexpansive but not
/// firmly so; its iterates cycle with period four.
pub struct Rotation90;

impl FixedPointOperator for Rotation90 {
    fn dim(&self) -> usize {
        2
    }
    fn apply(&self, z: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![-z[1], z[0]])
    }
}

/// `T(z) = z + exp(-z²) + 1` for `z > 0`, `z + 2` otherwise. Nonexpansive
/// with `v = 1`, but no point attains the displacement: the point where the
/// error drops below `ε` sits at `√(log(1/ε))`.
pub struct ScalarDivergent;

impl FixedPointOperator for ScalarDivergent {
    fn dim(&self) -> usize {
        1
    }
    fn apply(&self, z: &[f64]) -> Result<Vec<f64>> {
        let t = z[0];
        Ok(vec![if t > 0.0 { t + libm::exp(-t * t) + 1.0 } else { t + 2.0 }])
    }
}

/// The PDHG operator of an LP with its matching metric.
pub struct PdhgFixedPoint<'a, P: PdhgProblem + ?Sized> {
    pub problem: &'a P,
    pub steps: StepSizes,
    metric: ProblemMetric<'a>,
}

impl<'a, P: PdhgProblem + ?Sized> PdhgFixedPoint<'a, P> {
    pub fn new(problem: &'a P, steps: StepSizes) -> Result<Self> {
        Ok(PdhgFixedPoint { problem, steps, metric: ProblemMetric::new(problem, steps)? })
    }
}

impl<P: PdhgProblem + ?Sized> FixedPointOperator for PdhgFixedPoint<'_, P> {
    fn dim(&self) -> usize {
        self.problem.n() + self.problem.m()
    }
    fn apply(&self, z: &[f64]) -> Result<Vec<f64>> {
        apply_stacked(self.problem, self.steps, z)
    }
    fn norm(&self, z: &[f64]) -> f64 {
        self.metric.norm(z)
    }
}

/// Iterates `z^0 .. z^k` of a fixed-point run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub points: Vec<Vec<f64>>,
}

/// The three sequences derived from a trajectory, indexed by `k = 1..K`
/// (entry `k - 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedSequences {
    /// `z^k - z^{k-1}`.
    pub difference: Vec<Vec<f64>>,
    /// `(z^k - z^0) / k`.
    pub normalized_iterate: Vec<Vec<f64>>,
    /// `2 / (k (k+1)) · Σ_{j=1..k} (z^j - z^0)`.
    pub normalized_average: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn derived(&self) -> DerivedSequences {
        derived_sequences(&self.points)
    }
}

pub fn derived_sequences(points: &[Vec<f64>]) -> DerivedSequences {
    let mut out =
        DerivedSequences { difference: Vec::new(), normalized_iterate: Vec::new(), normalized_average: Vec::new() };
    let Some(z0) = points.first() else { return out };
    let mut sum = vec![0.0; z0.len()];
    for k in 1..points.len() {
        let kf = k as f64;
        let zk = &points[k];
        out.difference.push(zk.iter().zip(&points[k - 1]).map(|(a, b)| a - b).collect());
        out.normalized_iterate.push(zk.iter().zip(z0).map(|(a, b)| (a - b) / kf).collect());
        for ((s, a), b) in sum.iter_mut().zip(zk).zip(z0) {
            *s += a - b;
        }
        let w = 2.0 / (kf * (kf + 1.0));
        out.normalized_average.push(sum.iter().map(|s| s * w).collect());
    }
    out
}

/// Runs `k` steps from `z0` and keeps every iterate.
pub fn iterate(t: &dyn FixedPointOperator, z0: &[f64], k: usize) -> Result<Trajectory> {
    if k == 0 {
        return Err(Error::ZeroIteration);
    }
    if z0.len() != t.dim() {
        return Err(Error::DimensionMismatch { expected: t.dim(), got: z0.len() });
    }
    let mut points = Vec::with_capacity(k + 1);
    points.push(z0.to_vec());
    for i in 0..k {
        let next = t.apply(&points[i])?;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { k: i as u64 + 1 });
        }
        points.push(next);
    }
    Ok(Trajectory { points })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VEstimate {
    /// `(z^K - z^0) / K`.
    pub normalized_iterate: Vec<f64>,
    /// Mean difference over the last 10% of the budget.
    pub averaged_difference: Vec<f64>,
    /// Relative gap between the two estimates in the operator's norm.
    pub disagreement: f64,
    /// Largest deviation of a single difference in the averaging window
    /// from their mean, relative to the estimate's norm.
    pub difference_spread: f64,
    /// Set when either measure exceeds [`V_DISAGREEMENT_TOL`].
    pub flagged: bool,
}

/// Estimates the infimal displacement vector from a run of `budget` steps.
pub fn estimate_v(t: &dyn FixedPointOperator, z0: &[f64], budget: usize) -> Result<VEstimate> {
    if budget < 100 {
        return Err(Error::InvalidConfig("budget must be at least 100"));
    }
    let dim = t.dim();
    let window = budget / 10;
    let mut z = z0.to_vec();
    let mut z_window_start = Vec::new();
    let mut diffs: Vec<Vec<f64>> = Vec::with_capacity(window);
    for k in 1..=budget {
        let next = t.apply(&z)?;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { k: k as u64 });
        }
        if k == budget - window {
            z_window_start = next.clone();
        }
        if k > budget - window {
            diffs.push(next.iter().zip(&z).map(|(a, b)| a - b).collect());
        }
        z = next;
    }
    let kf = budget as f64;
    let normalized_iterate: Vec<f64> = z.iter().zip(z0).map(|(a, b)| (a - b) / kf).collect();
    let averaged_difference: Vec<f64> = (0..dim).map(|i| (z[i] - z_window_start[i]) / window as f64).collect();

    let gap: Vec<f64> = normalized_iterate.iter().zip(&averaged_difference).map(|(a, b)| a - b).collect();
    let scale = t.norm(&normalized_iterate).max(t.norm(&averaged_difference));
    let disagreement = if scale > 0.0 { t.norm(&gap) / scale } else { 0.0 };
    let mut spread: f64 = 0.0;
    for d in &diffs {
        let dev: Vec<f64> = d.iter().zip(&averaged_difference).map(|(a, b)| a - b).collect();
        spread = spread.max(t.norm(&dev));
    }
    let avg_norm = t.norm(&averaged_difference);
    let difference_spread = if avg_norm > 0.0 {
        spread / avg_norm
    } else if spread > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    let flagged = disagreement > V_DISAGREEMENT_TOL || difference_spread > V_DISAGREEMENT_TOL;
    Ok(VEstimate { normalized_iterate, averaged_difference, disagreement, difference_spread, flagged })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RateModel {
    /// `e_k ≈ C k^slope`, fitted on `(log k, log e)`.
    Power,
    /// `e_k ≈ C γ^k`, fitted on `(k, log e)`.
    Geometric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub model: RateModel,
    /// Slope in the transformed coordinates.
    pub slope: f64,
    pub intercept: f64,
    /// `exp(slope)` for the geometric model; equal to `slope` otherwise.
    pub rate: f64,
    pub r_squared: f64,
    /// Residuals in transformed coordinates, in sample order.
    pub residuals: Vec<f64>,
    pub used: usize,
    /// Samples skipped because the error was not positive and finite.
    pub dropped_nonpositive: usize,
}

/// Least-squares fit skipping samples with `k < 100`.
pub fn fit_rate(samples: &[(f64, f64)], model: RateModel) -> Result<RateFit> {
    fit_rate_with(samples, model, DEFAULT_K_MIN)
}

pub fn fit_rate_with(samples: &[(f64, f64)], model: RateModel, k_min: f64) -> Result<RateFit> {
    let mut pts = Vec::new();
    let mut dropped = 0;
    for &(k, e) in samples {
        if k < k_min {
            continue;
        }
        if !(e > 0.0 && e.is_finite()) || (model == RateModel::Power && k <= 0.0) {
            dropped += 1;
            continue;
        }
        let t = match model {
            RateModel::Power => libm::log(k),
            RateModel::Geometric => k,
        };
        pts.push((t, libm::log(e)));
    }
    if pts.len() < MIN_FIT_SAMPLES {
        return Err(Error::TooFewSamples { needed: MIN_FIT_SAMPLES, got: pts.len() });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidConfig("rate fit needs at least two distinct abscissae"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = pts.iter().map(|p| p.1 - (intercept + slope * p.0)).collect();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    let rate = match model {
        RateModel::Power => slope,
        RateModel::Geometric => libm::exp(slope),
    };
    Ok(RateFit { model, slope, intercept, rate, r_squared, residuals, used: pts.len(), dropped_nonpositive: dropped })
}

/// Smallest `t ≥ 0` (to relative precision `1e-12`) with
/// `|T(t) - t - v| ≤ eps` for a one-dimensional operator whose displacement
/// error decreases along the positive axis. Exponential bracketing, then
/// bisection.
pub fn z_eps_search(t: &dyn FixedPointOperator, v: f64, eps: f64) -> Result<f64> {
    if t.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: t.dim() });
    }
    let err = |z: f64| -> Result<f64> { Ok((t.apply(&[z])?[0] - z - v).abs()) };
    if err(0.0)? <= eps {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    let mut tries = 0;
    while err(hi)? > eps {
        hi *= 2.0;
        tries += 1;
        if tries > 1000 || !hi.is_finite() {
            return Err(Error::InvalidConfig("displacement error never drops below eps"));
        }
    }
    let mut lo = if tries == 0 { 0.0 } else { hi / 2.0 };
    while hi - lo > 1e-12 * hi {
        let mid = 0.5 * (lo + hi);
        if err(mid)? <= eps {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Growth exponent of `z_ε` against `log(1/ε)` over the given tolerances.
pub fn z_eps_growth(t: &dyn FixedPointOperator, v: f64, eps: &[f64]) -> Result<RateFit> {
    let mut samples = Vec::with_capacity(eps.len());
    for &e in eps {
        samples.push((libm::log(1.0 / e), z_eps_search(t, v, e)?));
    }
    fit_rate_with(&samples, RateModel::Power, 0.0)
}

/// `‖Tz₁ − Tz₂‖² + ‖(I−T)z₁ − (I−T)z₂‖² − ‖z₁ − z₂‖²` in the operator's
/// norm: nonpositive for a firmly nonexpansive operator.
pub fn firm_nonexpansiveness_excess(t: &dyn FixedPointOperator, z1: &[f64], z2: &[f64]) -> Result<f64> {
    let t1 = t.apply(z1)?;
    let t2 = t.apply(z2)?;
    let dz: Vec<f64> = z1.iter().zip(z2).map(|(a, b)| a - b).collect();
    let dt: Vec<f64> = t1.iter().zip(&t2).map(|(a, b)| a - b).collect();
    let dr: Vec<f64> = dz.iter().zip(&dt).map(|(a, b)| a - b).collect();
    let (a, b, c) = (t.norm(&dt), t.norm(&dr), t.norm(&dz));
    Ok(a * a + b * b - c * c)
}

/// `‖Tz₁ − Tz₂‖ − ‖z₁ − z₂‖`: nonpositive for a nonexpansive operator.
pub fn nonexpansiveness_excess(t: &dyn FixedPointOperator, z1: &[f64], z2: &[f64]) -> Result<f64> {
    let t1 = t.apply(z1)?;
    let t2 = t.apply(z2)?;
    let dz: Vec<f64> = z1.iter().zip(z2).map(|(a, b)| a - b).collect();
    let dt: Vec<f64> = t1.iter().zip(&t2).map(|(a, b)| a - b).collect();
    Ok(t.norm(&dt) - t.norm(&dz))
}
