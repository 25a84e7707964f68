//! Ray structure of PDHG iterates: the infimal displacement vector `v`, a
//! point `z⋆` with `T(z⋆) = z⋆ + v`, the index partition and auxiliary
//! problem built from `v`, active-set freezing and the affine phase that
//! follows it.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm2, norm_inf, spmv_t, SparseMatrix, StepSizes};
use crate::model::StandardFormLp;
use crate::operator_lab::{fit_rate_with, RateFit, RateModel};
use crate::pdhg::{self, PdhgProblem, PdhgState, ProblemMetric, SignedLp, VarSign, ACTIVE_TOL};

pub const PARTITION_TOL_REL: f64 = 1e-7;
/// Largest `n + m` for which dense spectral analysis is attempted.
pub const DENSE_LIMIT: usize = 2000;
pub const MAX_REFINE_ROUNDS: usize = 5;
pub const RAY_TOL: f64 = 1e-10;
/// Iteration cap for one fixed-point solve of the auxiliary operator.
pub const AUX_MAX_ITERS: u64 = 400_000;
/// Steps along the ray used to measure how well `z⋆` and `v` fit together.
pub const RAY_CHECK_STEPS: usize = 10;

/// `1e-7 · (1 + ‖v‖∞)`.
pub fn partition_tolerance(v: &[f64]) -> f64 {
    PARTITION_TOL_REL * (1.0 + norm_inf(v))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IndexPartition {
    /// `(v_x)_i > tol`: coordinates that grow without bound.
    pub b: Vec<usize>,
    /// The rest: `v_x` and `Aᵀv_y` both vanish.
    pub n1: Vec<usize>,
    /// `(v_x)_i ≤ tol` and `(Aᵀv_y)_i > tol`: coordinates pinned at zero.
    pub n2: Vec<usize>,
    pub tol: f64,
}

/// Splits the columns by the sign pattern of `v = (v_x, v_y)`.
pub fn partition_indices(v: &[f64], a: &SparseMatrix, tol_v: f64) -> Result<IndexPartition> {
    let n = a.n_cols();
    if v.len() != n + a.n_rows() {
        return Err(Error::DimensionMismatch { expected: n + a.n_rows(), got: v.len() });
    }
    let atv = spmv_t(a, &v[n..])?;
    let mut part = IndexPartition { tol: tol_v, ..Default::default() };
    for i in 0..n {
        if v[i] > tol_v {
            part.b.push(i);
        } else if atv[i] > tol_v {
            part.n2.push(i);
        } else {
            part.n1.push(i);
        }
    }
    Ok(part)
}

fn signed(p: &StandardFormLp) -> SignedLp {
    SignedLp { lp: p.clone(), signs: vec![VarSign::NonNegative; p.n()] }
}

/// The always-feasible problem whose PDHG operator is `T` shifted by `v`:
/// cost `c_B + (v_x)_B/η` on `B`, right-hand side `b + v_y/τ`, `x_B` free,
/// `x_{N1} ≥ 0`, `x_{N2} = 0`. Variables that are free or fixed in `p` keep
/// their restriction.
pub fn build_auxiliary(p: &SignedLp, v: &[f64], steps: StepSizes, part: &IndexPartition) -> SignedLp {
    let n = p.lp.n();
    let mut aux = p.clone();
    for &i in &part.b {
        if p.signs[i] == VarSign::NonNegative {
            aux.signs[i] = VarSign::Free;
        }
    }
    for &i in &part.n2 {
        if p.signs[i] == VarSign::NonNegative {
            aux.signs[i] = VarSign::Zero;
        }
    }
    for i in 0..n {
        if aux.signs[i] == VarSign::Free {
            aux.lp.c[i] += v[i] / steps.eta;
        }
    }
    for (bi, vy) in aux.lp.b.iter_mut().zip(&v[n..]) {
        *bi += vy / steps.tau;
    }
    aux
}

pub fn build_auxiliary_standard(p: &StandardFormLp, v: &[f64], steps: StepSizes, part: &IndexPartition) -> SignedLp {
    build_auxiliary(&signed(p), v, steps, part)
}

/// `{i : x_i ≤ tol_a · (1 + ‖x‖∞)}`.
pub fn active_set(x: &[f64], tol_a: f64) -> Vec<usize> {
    let t = tol_a * (1.0 + norm_inf(x));
    (0..x.len()).filter(|&i| x[i] <= t).collect()
}

/// Last iteration at which a trace reported a change of the active set.
pub fn freeze_detector(trace: &[pdhg::TraceRecord]) -> u64 {
    trace.iter().filter(|r| r.active_changed).map(|r| r.k).max().unwrap_or(0)
}

/// Tracks the set of coordinates sitting at a bound along a run.
#[derive(Debug, Clone, PartialEq)]
pub struct FreezeDetector {
    pattern: Vec<i8>,
    pub last_change: u64,
    /// Iterate right after the last change.
    pub z_at_change: Vec<f64>,
}

impl FreezeDetector {
    pub fn new<P: PdhgProblem + ?Sized>(p: &P, state: &PdhgState) -> Self {
        let pattern = bound_pattern(p, &state.x);
        FreezeDetector { pattern, last_change: state.k, z_at_change: state.z() }
    }

    /// Returns true when the pattern changed at this iterate.
    pub fn observe<P: PdhgProblem + ?Sized>(&mut self, p: &P, state: &PdhgState) -> bool {
        let now = bound_pattern(p, &state.x);
        if now != self.pattern {
            self.pattern = now;
            self.last_change = state.k;
            self.z_at_change = state.z();
            true
        } else {
            false
        }
    }

    /// Coordinates not at a bound in the current pattern.
    pub fn support(&self) -> Vec<bool> {
        self.pattern.iter().map(|&s| s == 0).collect()
    }
}

fn bound_pattern<P: PdhgProblem + ?Sized>(p: &P, x: &[f64]) -> Vec<i8> {
    let tol = ACTIVE_TOL * (1.0 + norm_inf(x));
    (0..x.len()).map(|j| p.bound_state(j, x[j], tol)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreezeInfo {
    /// Last observed change, or the budget when the set never settled.
    pub k: u64,
    /// The set stayed fixed for at least `max(100, budget/10)` iterations.
    pub observed: bool,
}

/// A plain PDHG run from `z⁰ = 0` with active-set tracking and the tail
/// average of the differences.
#[derive(Debug, Clone, PartialEq)]
pub struct WarmRun {
    pub state: PdhgState,
    pub budget: u64,
    pub freeze: FreezeInfo,
    pub last_change: u64,
    pub z_at_change: Vec<f64>,
    pub support: Vec<bool>,
    /// Mean of `z^{k+1} - z^k` over the last 10% of the run.
    pub v_avg: Vec<f64>,
}

pub fn warm_run<P: PdhgProblem + ?Sized>(p: &P, steps: StepSizes, budget: u64) -> Result<WarmRun> {
    if budget < 100 {
        return Err(Error::InvalidConfig("warm run needs at least 100 iterations"));
    }
    let mut state = PdhgState::new(p.n(), p.m());
    let mut det = FreezeDetector::new(p, &state);
    let window = budget / 10;
    let mut z_window = Vec::new();
    while state.k < budget {
        pdhg::step(&mut state, p, steps)?;
        det.observe(p, &state);
        if state.k == budget - window {
            z_window = state.z();
        }
    }
    let z = state.z();
    let v_avg = z.iter().zip(&z_window).map(|(a, b)| (a - b) / window as f64).collect();
    let settled = budget - det.last_change;
    let observed = settled >= 100.max(budget / 10);
    let freeze = FreezeInfo { k: if observed { det.last_change } else { budget }, observed };
    Ok(WarmRun {
        support: det.support(),
        state,
        budget,
        freeze,
        last_change: det.last_change,
        z_at_change: det.z_at_change,
        v_avg,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaySolution {
    pub z_star: Vec<f64>,
    pub v: Vec<f64>,
    /// `max_{j<10} ‖T^{j+1}(z⋆) − T^j(z⋆) − v‖_M`.
    pub residual: f64,
    pub partition: IndexPartition,
    pub rounds: usize,
    /// The residual target was missed; the best point found is returned.
    pub warning: bool,
}

/// Refines `(z⋆, v)` from a warm run of a standard-form problem.
///
/// Each round cleans `v` (zeroing `v_x` outside `B`, and all of `v` when it
/// is below the partition tolerance), builds the auxiliary operator `T̃`,
/// iterates it from the current point until its displacement settles, and
/// corrects `v` by that leftover displacement. The point is then moved along
/// the ray until the real operator agrees with `T̃` and `v` is recomputed as
/// `T(z⋆) − z⋆`. Stops once the ray residual is below `1e-10` or after five
/// rounds.
pub fn refine_ray(p: &StandardFormLp, steps: StepSizes, warm: &WarmRun) -> Result<RaySolution> {
    refine_ray_signed(&signed(p), steps, warm)
}

pub fn refine_ray_signed(p: &SignedLp, steps: StepSizes, warm: &WarmRun) -> Result<RaySolution> {
    let metric = ProblemMetric::new(p, steps)?;
    let mut v = warm.v_avg.clone();
    let mut z = warm.state.z();
    let mut best: Option<RaySolution> = None;
    for round in 1..=MAX_REFINE_ROUNDS {
        let part = clean_direction(p, &mut v)?;
        let aux = build_auxiliary(p, &v, steps, &part);
        let (z_aux, leftover) = settle(&aux, steps, &metric, &z)?;
        let v_try: Vec<f64> = v.iter().zip(&leftover).map(|(a, b)| a + b).collect();
        let mut v_clean = v_try.clone();
        let part = clean_direction(p, &mut v_clean)?;
        let z_star = move_along_ray(p, &part, &v_clean, &z_aux);
        let tz = pdhg::apply_stacked(p, steps, &z_star)?;
        let mut v_new: Vec<f64> = tz.iter().zip(&z_star).map(|(a, b)| a - b).collect();
        let part = clean_direction(p, &mut v_new)?;
        let residual = ray_residual(p, steps, &metric, &z_star, &v_new)?;
        let sol = RaySolution {
            z_star: z_star.clone(),
            v: v_new.clone(),
            residual,
            partition: part,
            rounds: round,
            warning: false,
        };
        let better = best.as_ref().is_none_or(|b| residual < b.residual);
        if better {
            best = Some(sol);
        }
        if residual <= RAY_TOL {
            break;
        }
        v = v_new;
        z = z_star;
    }
    let mut best = best.expect("at least one round");
    best.warning = best.residual > RAY_TOL;
    Ok(best)
}

/// Zeroes numerical dust in `v` and returns the matching partition.
fn clean_direction(p: &SignedLp, v: &mut [f64]) -> Result<IndexPartition> {
    let n = p.lp.n();
    let tol = partition_tolerance(v);
    if norm_inf(v) <= tol {
        v.iter_mut().for_each(|e| *e = 0.0);
    }
    if norm_inf(&v[n..]) <= tol {
        v[n..].iter_mut().for_each(|e| *e = 0.0);
    }
    let part = partition_indices(v, &p.lp.a, tol)?;
    for i in 0..n {
        match p.signs[i] {
            VarSign::Free => {}
            VarSign::Zero => v[i] = 0.0,
            VarSign::NonNegative => {
                if v[i] <= tol {
                    v[i] = 0.0;
                }
            }
        }
    }
    Ok(part)
}

/// Iterates the auxiliary operator until its displacement stops changing.
/// Returns the last point and the displacement `T̃(z) − z` there.
fn settle(aux: &SignedLp, steps: StepSizes, metric: &ProblemMetric, z0: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = aux.lp.n();
    let mut state = PdhgState::from_point(z0[..n].to_vec(), z0[n..].to_vec());
    let mut last_d: Vec<f64> = Vec::new();
    let mut quiet = 0;
    while state.k < AUX_MAX_ITERS {
        pdhg::step(&mut state, aux, steps)?;
        let d: Vec<f64> =
            state.x.iter().zip(&state.x_prev).chain(state.y.iter().zip(&state.y_prev)).map(|(a, b)| a - b).collect();
        if !last_d.is_empty() {
            let change: Vec<f64> = d.iter().zip(&last_d).map(|(a, b)| a - b).collect();
            let scale = 1.0 + metric.norm(&state.z());
            if metric.norm(&change) <= 1e-15 * scale {
                quiet += 1;
                if quiet >= 20 {
                    break;
                }
            } else {
                quiet = 0;
            }
        }
        last_d = d;
    }
    Ok((state.z(), last_d))
}

/// Moves a fixed point of `T̃` along the ray until `(x + v_x)_B > 0` and
/// `(Aᵀy + c)_{N2} ≥ 0`, where `T` and `T̃` coincide.
fn move_along_ray(p: &SignedLp, part: &IndexPartition, v: &[f64], z: &[f64]) -> Vec<f64> {
    let n = p.lp.n();
    let mut lambda: f64 = 0.0;
    let x = &z[..n];
    for &i in &part.b {
        if p.signs[i] == VarSign::NonNegative && v[i] > 0.0 {
            // margin of one step so the projection stays inactive
            lambda = lambda.max((-x[i] - v[i]) / v[i] + 1.0);
        }
    }
    if !part.n2.is_empty() {
        let aty = spmv_t(&p.lp.a, &z[n..]).expect("dimensions fixed");
        let atv = spmv_t(&p.lp.a, &v[n..]).expect("dimensions fixed");
        for &i in &part.n2 {
            let rc = aty[i] + p.lp.c[i];
            if atv[i] > 0.0 && rc < 0.0 {
                lambda = lambda.max(-rc / atv[i] + 1.0);
            }
        }
    }
    let lambda = libm::ceil(lambda.max(0.0));
    z.iter().zip(v).map(|(a, b)| a + lambda * b).collect()
}

fn ray_residual(p: &SignedLp, steps: StepSizes, metric: &ProblemMetric, z_star: &[f64], v: &[f64]) -> Result<f64> {
    let mut z = z_star.to_vec();
    let mut worst: f64 = 0.0;
    for _ in 0..RAY_CHECK_STEPS {
        let tz = pdhg::apply_stacked(p, steps, &z)?;
        let dev: Vec<f64> = tz.iter().zip(&z).zip(v).map(|((a, b), c)| a - b - c).collect();
        worst = worst.max(metric.norm(&dev));
        z = tz;
    }
    Ok(worst)
}

/// `max_{k ≤ kmax} ‖T̃^k(z) − (T^k(z) − k v)‖_M` for the auxiliary operator
/// built from the ray's `v` and partition.
pub fn shift_identity_deviation(
    p: &StandardFormLp,
    steps: StepSizes,
    ray: &RaySolution,
    z: &[f64],
    kmax: u64,
) -> Result<f64> {
    let base = signed(p);
    let aux = build_auxiliary(&base, &ray.v, steps, &ray.partition);
    let metric = ProblemMetric::new(p, steps)?;
    let n = p.n();
    let mut s_t = PdhgState::from_point(z[..n].to_vec(), z[n..].to_vec());
    let mut s_aux = s_t.clone();
    let mut worst: f64 = 0.0;
    for k in 1..=kmax {
        pdhg::step(&mut s_t, p, steps)?;
        pdhg::step(&mut s_aux, &aux, steps)?;
        let kf = k as f64;
        let dev: Vec<f64> = s_aux.z().iter().zip(s_t.z()).zip(&ray.v).map(|((a, b), v)| a - (b - kf * v)).collect();
        worst = worst.max(metric.norm(&dev));
    }
    Ok(worst)
}

/// `max_{k<kmax} ‖T^{k+1}(z⋆) − T^k(z⋆) − v‖_M`.
pub fn ray_consistency(p: &StandardFormLp, steps: StepSizes, ray: &RaySolution, kmax: usize) -> Result<f64> {
    let metric = ProblemMetric::new(p, steps)?;
    let n = p.n();
    let mut s = PdhgState::from_point(ray.z_star[..n].to_vec(), ray.z_star[n..].to_vec());
    let mut worst: f64 = 0.0;
    for _ in 0..kmax {
        pdhg::step(&mut s, p, steps)?;
        let dev: Vec<f64> =
            s.x.iter()
                .zip(&s.x_prev)
                .chain(s.y.iter().zip(&s.y_prev))
                .zip(&ray.v)
                .map(|((a, b), v)| a - b - v)
                .collect();
        worst = worst.max(metric.norm(&dev));
    }
    Ok(worst)
}

/// Largest excess of `‖v − (z^k − z⁰)/k‖_M` over `(2/k)‖z⁰ − z⋆‖_M` for
/// `k = 1..=kmax`. Nonpositive when the bound holds.
pub fn last_iterate_bound_excess<P: PdhgProblem + ?Sized>(
    p: &P,
    steps: StepSizes,
    z_star: &[f64],
    v: &[f64],
    z0: &[f64],
    kmax: u64,
) -> Result<f64> {
    let metric = ProblemMetric::new(p, steps)?;
    let n = p.n();
    let d0: Vec<f64> = z0.iter().zip(z_star).map(|(a, b)| a - b).collect();
    let r0 = metric.norm(&d0);
    let mut s = PdhgState::from_point(z0[..n].to_vec(), z0[n..].to_vec());
    let mut worst = f64::NEG_INFINITY;
    for k in 1..=kmax {
        pdhg::step(&mut s, p, steps)?;
        let kf = k as f64;
        let dev: Vec<f64> = s.z().iter().zip(z0).zip(v).map(|((z, z0), v)| v - (z - z0) / kf).collect();
        worst = worst.max(metric.norm(&dev) - 2.0 * r0 / kf);
    }
    Ok(worst)
}

/// Relative errors of the two Farkas identities `cᵀv_x = −‖v_x‖²/η` and
/// `bᵀv_y = −‖v_y‖²/τ`, each divided by the squared norm (zero when the
/// part vanishes).
pub fn farkas_identity_errors(p: &StandardFormLp, steps: StepSizes, v: &[f64]) -> (f64, f64) {
    let n = p.n();
    let (vx, vy) = v.split_at(n);
    let rel = |lhs: f64, sq: f64| if sq > 0.0 { (lhs + sq).abs() / sq } else { 0.0 };
    let sx = crate::linalg::dot(vx, vx);
    let sy = crate::linalg::dot(vy, vy);
    (rel(crate::linalg::dot(&p.c, vx) * steps.eta, sx), rel(crate::linalg::dot(&p.b, vy) * steps.tau, sy))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NondegeneracyReport {
    pub nondegenerate: bool,
    /// Indices of `N1` where `x⋆_i > tol` and `(Aᵀy⋆ + c)_i > tol` are not
    /// exclusive alternatives.
    pub violations: Vec<usize>,
    pub tol: f64,
}

/// Strict complementarity of `z⋆` on `N1`.
pub fn nondegeneracy(p: &StandardFormLp, ray: &RaySolution) -> NondegeneracyReport {
    let n = p.n();
    let tol = PARTITION_TOL_REL * (1.0 + norm_inf(&ray.z_star));
    let aty = spmv_t(&p.a, &ray.z_star[n..]).expect("dimensions fixed");
    let violations: Vec<usize> =
        ray.partition.n1.iter().copied().filter(|&i| (ray.z_star[i] > tol) == (aty[i] + p.c[i] > tol)).collect();
    NondegeneracyReport { nondegenerate: violations.is_empty(), violations, tol }
}

/// The affine map `z ↦ Qz − p` PDHG reduces to once the support `S` of `x`
/// is fixed, with its spectral data.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinePhase {
    pub support: Vec<bool>,
    pub q: DMatrix<f64>,
    pub p: Vec<f64>,
    pub q_inf: DMatrix<f64>,
    /// `√(1 − ητσ²)` for the smallest nonzero singular value of `A_S`.
    pub mu: f64,
    /// Smallest singular value over the 2×2 blocks of nonzero `σ`.
    pub lower_rate: f64,
    /// Singular values of `A_S`, descending.
    pub sigma_list: Vec<f64>,
}

/// Serializable digest of an [`AffinePhase`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineSummary {
    pub support_size: usize,
    pub mu: f64,
    pub lower_rate: f64,
    pub sigma_list: Vec<f64>,
    pub projection_defect: f64,
}

/// Builds `Q`, `p` and `Q∞` densely for support `S`.
pub fn affine_phase<P: PdhgProblem + ?Sized>(prob: &P, steps: StepSizes, support: &[bool]) -> Result<AffinePhase> {
    let (n, m) = (prob.n(), prob.m());
    if n + m > DENSE_LIMIT {
        return Err(Error::DenseLimitExceeded { size: n + m, limit: DENSE_LIMIT });
    }
    if support.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: support.len() });
    }
    let StepSizes { eta, tau } = steps;
    let mut a_s = DMatrix::<f64>::zeros(m, n);
    for (i, j, v) in prob.matrix().triplets() {
        if support[j] {
            a_s[(i, j)] = v;
        }
    }
    let c: Vec<f64> = (0..n).map(|j| if support[j] { prob.cost()[j] } else { 0.0 }).collect();
    let dc = nalgebra::DVector::from_vec(c);
    let b = nalgebra::DVector::from_column_slice(prob.rhs());
    let ada = &a_s * a_s.transpose();

    let mut q = DMatrix::<f64>::identity(n + m, n + m);
    q.view_mut((0, n), (n, m)).copy_from(&(a_s.transpose() * -eta));
    q.view_mut((n, 0), (m, n)).copy_from(&(&a_s * tau));
    let lower_right = DMatrix::<f64>::identity(m, m) - ada * (2.0 * tau * eta);
    q.view_mut((n, n), (m, m)).copy_from(&lower_right);
    let mut pv = Vec::with_capacity(n + m);
    pv.extend((&dc * eta).iter().copied());
    let ydc = &a_s * &dc * (2.0 * tau * eta) + b * tau;
    pv.extend(ydc.iter().copied());

    let svd = a_s.clone().svd(true, true);
    let u = svd.u.expect("requested");
    let vt = svd.v_t.expect("requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let sigma_list: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let smax = sigma_list.first().copied().unwrap_or(0.0);
    let mut q_inf = DMatrix::<f64>::identity(n + m, n + m);
    let mut mu: f64 = 0.0;
    let mut lower_rate = f64::INFINITY;
    for &i in &order {
        let s = svd.singular_values[i];
        if s <= 1e-10 * smax || s == 0.0 {
            continue;
        }
        let vi = vt.row(i).transpose();
        let ui = u.column(i);
        let pv_x = &vi * vi.transpose();
        let pu_y = ui * ui.transpose();
        let mut top = q_inf.view_mut((0, 0), (n, n));
        top -= pv_x;
        let mut bottom = q_inf.view_mut((n, n), (m, m));
        bottom -= pu_y;
        let e = eta * tau * s * s;
        mu = mu.max(libm::sqrt((1.0 - e).max(0.0)));
        lower_rate = lower_rate.min(block_min_singular(eta, tau, s));
    }
    if !lower_rate.is_finite() {
        lower_rate = 0.0;
    }
    Ok(AffinePhase { support: support.to_vec(), q, p: pv, q_inf, mu, lower_rate, sigma_list })
}

/// Smallest singular value of `[[1, −ησ], [τσ, 1 − 2τησ²]]`.
pub fn block_min_singular(eta: f64, tau: f64, sigma: f64) -> f64 {
    let (a, b, c, d) = (1.0, -eta * sigma, tau * sigma, 1.0 - 2.0 * tau * eta * sigma * sigma);
    let fro = a * a + b * b + c * c + d * d;
    let det = (a * d - b * c).abs();
    let disc = libm::sqrt((fro * fro - 4.0 * det * det).max(0.0));
    libm::sqrt(((fro - disc) / 2.0).max(0.0))
}

/// Moduli of the two eigenvalues of the block for `σ`: `√(1 − ητσ²)` when
/// they form a complex pair.
pub fn block_eigen_moduli(eta: f64, tau: f64, sigma: f64) -> (f64, f64) {
    let tr = 2.0 - 2.0 * tau * eta * sigma * sigma;
    let det = 1.0 - eta * tau * sigma * sigma;
    let disc = tr * tr / 4.0 - det;
    if disc < 0.0 {
        let r = libm::sqrt(det);
        (r, r)
    } else {
        let s = libm::sqrt(disc);
        ((tr / 2.0 + s).abs(), (tr / 2.0 - s).abs())
    }
}

impl AffinePhase {
    /// `max |Q∞ (Q − I)|`.
    pub fn projection_defect(&self) -> f64 {
        let dim = self.q.nrows();
        let d = &self.q_inf * (&self.q - DMatrix::<f64>::identity(dim, dim));
        d.amax()
    }

    /// Spectral radius of `Q − Q∞`.
    pub fn spectral_radius_gap(&self) -> f64 {
        let d = &self.q - &self.q_inf;
        d.complex_eigenvalues().iter().map(|z| libm::hypot(z.re, z.im)).fold(0.0, f64::max)
    }

    /// `−Q∞ p`: the displacement the affine phase settles on.
    pub fn limit_displacement(&self) -> Vec<f64> {
        let p = nalgebra::DVector::from_column_slice(&self.p);
        (&self.q_inf * p).iter().map(|v| -v).collect()
    }

    pub fn summary(&self) -> AffineSummary {
        AffineSummary {
            support_size: self.support.iter().filter(|&&s| s).count(),
            mu: self.mu,
            lower_rate: self.lower_rate,
            sigma_list: self.sigma_list.clone(),
            projection_defect: self.projection_defect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearPhaseConfig {
    /// Last iteration of the recording run.
    pub horizon: u64,
    /// First iteration used in the sublinear fits.
    pub fit_start: u64,
    /// Tolerance around the predicted bracket.
    pub slack: f64,
}

impl Default for LinearPhaseConfig {
    fn default() -> Self {
        LinearPhaseConfig { horizon: 100_000, fit_start: 1_000, slack: 0.02 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearPhaseReport {
    /// Reason the check did not run.
    pub skipped: Option<&'static str>,
    pub k_freeze: u64,
    pub mu: f64,
    pub lower_rate: f64,
    /// Geometric fit of `‖z^{k+1} − z^k − v‖₂` after the freeze.
    pub difference_fit: Option<RateFit>,
    pub rate_in_bracket: bool,
    /// Power fits of `‖z^k/k − v‖₂` and of the normalized average error.
    pub iterate_fit: Option<RateFit>,
    pub average_fit: Option<RateFit>,
    pub slopes_ok: bool,
}

/// Samples recorded along a fresh run from `z⁰ = 0`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RateSamples {
    /// `(k, ‖z^{k+1} − z^k − v‖₂)` for `k ≥ K` until rounding noise.
    pub difference: Vec<(f64, f64)>,
    /// `(k, ‖z^k/k − v‖₂)` on a logarithmic grid.
    pub iterate: Vec<(f64, f64)>,
    /// `(k, ‖2Σz^j/(k(k+1)) − v‖₂)` on the same grid.
    pub average: Vec<(f64, f64)>,
}

/// Runs PDHG from zero to `horizon` and records the three error sequences
/// against `v`.
pub fn record_rates<P: PdhgProblem + ?Sized>(
    p: &P,
    steps: StepSizes,
    v: &[f64],
    k_freeze: u64,
    fit_start: u64,
    horizon: u64,
) -> Result<RateSamples> {
    let mut out = RateSamples::default();
    let mut state = PdhgState::new(p.n(), p.m());
    let grid = log_grid(fit_start.max(1), horizon, 80);
    let mut next = 0;
    let mut diff_done = false;
    while state.k < horizon {
        let z_prev = state.z();
        pdhg::step(&mut state, p, steps)?;
        let k_prev = state.k - 1;
        if !diff_done && k_prev >= k_freeze {
            let z = state.z();
            let dev: Vec<f64> = z.iter().zip(&z_prev).zip(v).map(|((a, b), c)| a - b - c).collect();
            let e = norm2(&dev);
            let floor = 1e-12 * (1.0 + norm_inf(&z));
            if e <= floor || out.difference.len() >= 50_000 {
                diff_done = true;
            } else {
                out.difference.push((k_prev as f64, e));
            }
        }
        if next < grid.len() && state.k == grid[next] {
            let kf = state.k as f64;
            let z = state.z();
            let it: Vec<f64> = z.iter().zip(v).map(|(a, b)| a / kf - b).collect();
            let w = 2.0 / (kf * (kf + 1.0));
            let avg: Vec<f64> = state.sum_x.iter().chain(&state.sum_y).zip(v).map(|(s, b)| s * w - b).collect();
            out.iterate.push((kf, norm2(&it)));
            out.average.push((kf, norm2(&avg)));
            next += 1;
        }
        if diff_done && next >= grid.len() {
            break;
        }
    }
    Ok(out)
}

/// Roughly logarithmically spaced distinct integers in `[lo, hi]`.
pub fn log_grid(lo: u64, hi: u64, points: usize) -> Vec<u64> {
    let mut out: Vec<u64> = Vec::new();
    if lo > hi || points == 0 {
        return out;
    }
    let (a, b) = (libm::log(lo as f64), libm::log(hi as f64));
    for i in 0..points {
        let t = if points == 1 { 0.0 } else { i as f64 / (points - 1) as f64 };
        let k = (libm::round(libm::exp(a + t * (b - a))) as u64).clamp(lo, hi);
        if out.last() != Some(&k) {
            out.push(k);
        }
    }
    out
}

/// Checks the three rate regimes after the active set froze: linear
/// convergence of the differences inside `[lower_rate, μ]` (with slack) and
/// `1/k` decay of the normalized iterate and average.
pub fn verify_linear_phase<P: PdhgProblem + ?Sized>(
    p: &P,
    steps: StepSizes,
    ray: &RaySolution,
    phase: &AffinePhase,
    warm: &WarmRun,
    cfg: &LinearPhaseConfig,
) -> Result<LinearPhaseReport> {
    let mut report = LinearPhaseReport {
        skipped: None,
        k_freeze: warm.freeze.k,
        mu: phase.mu,
        lower_rate: phase.lower_rate,
        difference_fit: None,
        rate_in_bracket: false,
        iterate_fit: None,
        average_fit: None,
        slopes_ok: false,
    };
    if !warm.freeze.observed {
        report.skipped = Some("active set did not freeze within the budget");
        return Ok(report);
    }
    let k = warm.freeze.k;
    let samples = record_rates(p, steps, &ray.v, k, cfg.fit_start.max(k), cfg.horizon)?;
    if let Ok(fit) = fit_rate_with(&samples.difference, RateModel::Geometric, k as f64) {
        report.rate_in_bracket = fit.rate >= phase.lower_rate - cfg.slack && fit.rate <= phase.mu + cfg.slack;
        report.difference_fit = Some(fit);
    }
    let start = cfg.fit_start.max(k) as f64;
    report.iterate_fit = fit_rate_with(&samples.iterate, RateModel::Power, start).ok();
    report.average_fit = fit_rate_with(&samples.average, RateModel::Power, start).ok();
    let ok = |f: &Option<RateFit>| f.as_ref().is_some_and(|f| (f.slope + 1.0).abs() <= 0.15);
    report.slopes_ok = ok(&report.iterate_fit) && ok(&report.average_fit);
    Ok(report)
}
