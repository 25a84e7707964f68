//! The PDHG operator for both LP forms and the solve loop that watches the
//! three candidate sequences for infeasibility certificates.
//!
//! Standard form `min cᵀx, Ax = b, x ≥ 0`:
//!   x⁺ = proj_{≥0}(x − η(c + Aᵀy)),  y⁺ = y + τ(A(2x⁺ − x) − b).
//! Bounded inequality form `min cᵀx, Ax ≥ b, l ≤ x ≤ u`:
//!   x⁺ = proj_{[l,u]}(x − η(c − Aᵀy)),  y⁺ = proj_{≥0}(y + τ(b − A(2x⁺ − x))).
//! The second is the first with `y ↦ -y`; [`PdhgProblem::dual_sign`] records
//! which one applies.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::certificates::{self, CandidateKind, CertCheckReport};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm_inf, MNorm, SparseMatrix, StepSizes};
use crate::model::{GeneralFormLp, StandardFormLp};

/// Iterates with norm above this abort the run.
pub const DIVERGENCE_GUARD: f64 = 1e50;
pub const DEFAULT_CHECK_INTERVAL: u64 = 40;
pub const DEFAULT_MAX_ITERS: u64 = 1_000_000;
pub const DEFAULT_EPS: f64 = 1e-8;
pub const DEFAULT_KKT_TOL: f64 = 1e-8;
/// Relative threshold deciding whether a coordinate sits at a bound.
pub const ACTIVE_TOL: f64 = 1e-9;

/// Sign restriction of one variable in a standard-form problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarSign {
    NonNegative,
    Free,
    /// Fixed at zero.
    Zero,
}

impl VarSign {
    pub fn project(self, v: f64) -> f64 {
        match self {
            VarSign::NonNegative => v.max(0.0),
            VarSign::Free => v,
            VarSign::Zero => 0.0,
        }
    }
}

/// A standard-form problem with per-variable sign restrictions, e.g. the
/// auxiliary problem built from an infimal displacement vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignedLp {
    pub lp: StandardFormLp,
    pub signs: Vec<VarSign>,
}

/// Everything the iteration needs from a problem.
pub trait PdhgProblem {
    fn matrix(&self) -> &SparseMatrix;
    fn cost(&self) -> &[f64];
    fn rhs(&self) -> &[f64];
    /// `+1` when `y` multiplies `Ax - b` (standard form), `-1` when it
    /// multiplies `b - Ax` and is kept nonnegative.
    fn dual_sign(&self) -> f64;
    fn project_x(&self, j: usize, v: f64) -> f64;
    fn project_y(&self, v: f64) -> f64;
    /// `-1` at lower bound, `+1` at upper bound, `0` otherwise.
    fn bound_state(&self, j: usize, xj: f64, tol: f64) -> i8;
    /// Relative KKT residual: max of primal, dual and gap terms.
    fn kkt(&self, x: &[f64], y: &[f64]) -> f64;

    fn n(&self) -> usize {
        self.cost().len()
    }

    fn m(&self) -> usize {
        self.rhs().len()
    }
}

impl PdhgProblem for StandardFormLp {
    fn matrix(&self) -> &SparseMatrix {
        &self.a
    }
    fn cost(&self) -> &[f64] {
        &self.c
    }
    fn rhs(&self) -> &[f64] {
        &self.b
    }
    fn dual_sign(&self) -> f64 {
        1.0
    }
    fn project_x(&self, _j: usize, v: f64) -> f64 {
        v.max(0.0)
    }
    fn project_y(&self, v: f64) -> f64 {
        v
    }
    fn bound_state(&self, _j: usize, xj: f64, tol: f64) -> i8 {
        if xj <= tol {
            -1
        } else {
            0
        }
    }
    fn kkt(&self, x: &[f64], y: &[f64]) -> f64 {
        standard_kkt(self, x, y, |_, _| 0.0)
    }
}

impl PdhgProblem for SignedLp {
    fn matrix(&self) -> &SparseMatrix {
        &self.lp.a
    }
    fn cost(&self) -> &[f64] {
        &self.lp.c
    }
    fn rhs(&self) -> &[f64] {
        &self.lp.b
    }
    fn dual_sign(&self) -> f64 {
        1.0
    }
    fn project_x(&self, j: usize, v: f64) -> f64 {
        self.signs[j].project(v)
    }
    fn project_y(&self, v: f64) -> f64 {
        v
    }
    fn bound_state(&self, j: usize, xj: f64, tol: f64) -> i8 {
        match self.signs[j] {
            VarSign::NonNegative if xj <= tol => -1,
            _ => 0,
        }
    }
    fn kkt(&self, x: &[f64], y: &[f64]) -> f64 {
        // reduced cost must vanish on free columns and is unconstrained on
        // fixed ones
        standard_kkt(&self.lp, x, y, |j, d| match self.signs[j] {
            VarSign::NonNegative => 0.0,
            VarSign::Free => d.abs(),
            VarSign::Zero => -(-d).max(0.0),
        })
    }
}

/// Shared standard-form residual; `extra(j, d)` adjusts the dual violation
/// of column `j` with reduced cost `d = c_j + (Aᵀy)_j`.
fn standard_kkt(p: &StandardFormLp, x: &[f64], y: &[f64], extra: impl Fn(usize, f64) -> f64) -> f64 {
    let ax = p.a.spmv_dense(x);
    let aty = p.a.spmv_t_dense(y);
    let primal = ax.iter().zip(&p.b).fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
    let mut dual: f64 = 0.0;
    for j in 0..p.n() {
        let d = p.c[j] + aty[j];
        dual = dual.max((-d).max(0.0) + extra(j, d));
    }
    let pobj = dot(&p.c, x);
    let dobj = -dot(&p.b, y);
    let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
    let primal = primal / (1.0 + norm_inf(&p.b));
    let dual = dual / (1.0 + norm_inf(&p.c));
    primal.max(dual).max(gap)
}

impl PdhgProblem for GeneralFormLp {
    fn matrix(&self) -> &SparseMatrix {
        &self.a
    }
    fn cost(&self) -> &[f64] {
        &self.c
    }
    fn rhs(&self) -> &[f64] {
        &self.b
    }
    fn dual_sign(&self) -> f64 {
        -1.0
    }
    fn project_x(&self, j: usize, v: f64) -> f64 {
        v.max(self.lower[j]).min(self.upper[j])
    }
    fn project_y(&self, v: f64) -> f64 {
        v.max(0.0)
    }
    fn bound_state(&self, j: usize, xj: f64, tol: f64) -> i8 {
        if xj - self.lower[j] <= tol {
            -1
        } else if self.upper[j] - xj <= tol {
            1
        } else {
            0
        }
    }
    fn kkt(&self, x: &[f64], y: &[f64]) -> f64 {
        general_kkt(self, x, y)
    }
}

/// Relative KKT residual of `Ax ≥ b, l ≤ x ≤ u` at `(x, y)` with
/// `r = proj_{C_r}(c − Aᵀy)`.
pub fn general_kkt(p: &GeneralFormLp, x: &[f64], y: &[f64]) -> f64 {
    let ax = p.a.spmv_dense(x);
    let aty = p.a.spmv_t_dense(y);
    let primal = ax.iter().zip(&p.b).fold(0.0f64, |acc, (a, b)| acc.max(b - a));
    let mut dual: f64 = 0.0;
    let mut r = Vec::with_capacity(p.n());
    for j in 0..p.n() {
        let d = p.c[j] - aty[j];
        let rj = p.kind(j).project_reduced_cost(d);
        dual = dual.max((d - rj).abs());
        r.push(rj);
    }
    let pobj = dot(&p.c, x);
    let dobj = dot(&p.b, y) + certificates::bound_term(&r, p);
    let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
    let primal = primal.max(0.0) / (1.0 + norm_inf(&p.b));
    let dual = dual / (1.0 + norm_inf(&p.c));
    primal.max(dual).max(gap)
}

impl SparseMatrix {
    fn spmv_dense(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_rows()];
        self.spmv_into(x, &mut out).expect("dimension checked by caller");
        out
    }

    fn spmv_t_dense(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_cols()];
        self.spmv_t_into(y, &mut out).expect("dimension checked by caller");
        out
    }
}

/// Current and previous iterate plus running sums `Σ_{j=1..k} z^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct PdhgState {
    pub k: u64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub x_prev: Vec<f64>,
    pub y_prev: Vec<f64>,
    pub sum_x: Vec<f64>,
    pub sum_y: Vec<f64>,
    aty: Vec<f64>,
    xbar: Vec<f64>,
    axbar: Vec<f64>,
}

impl PdhgState {
    /// State at `z⁰ = 0`.
    pub fn new(n: usize, m: usize) -> Self {
        Self::from_point(vec![0.0; n], vec![0.0; m])
    }

    pub fn from_point(x: Vec<f64>, y: Vec<f64>) -> Self {
        let (n, m) = (x.len(), y.len());
        PdhgState {
            k: 0,
            x_prev: x.clone(),
            y_prev: y.clone(),
            x,
            y,
            sum_x: vec![0.0; n],
            sum_y: vec![0.0; m],
            aty: vec![0.0; n],
            xbar: vec![0.0; n],
            axbar: vec![0.0; m],
        }
    }

    /// Records an externally computed next iterate.
    pub fn push(&mut self, x: &[f64], y: &[f64]) {
        self.x_prev.copy_from_slice(&self.x);
        self.y_prev.copy_from_slice(&self.y);
        self.x.copy_from_slice(x);
        self.y.copy_from_slice(y);
        self.k += 1;
        for (s, v) in self.sum_x.iter_mut().zip(&self.x) {
            *s += v;
        }
        for (s, v) in self.sum_y.iter_mut().zip(&self.y) {
            *s += v;
        }
    }

    /// Stacked current iterate.
    pub fn z(&self) -> Vec<f64> {
        let mut z = self.x.clone();
        z.extend_from_slice(&self.y);
        z
    }
}

/// One PDHG step in place. Fails on non-finite values or when the iterate
/// passes [`DIVERGENCE_GUARD`].
pub fn step<P: PdhgProblem + ?Sized>(s: &mut PdhgState, p: &P, steps: StepSizes) -> Result<()> {
    let (n, m) = (p.n(), p.m());
    if s.x.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: s.x.len() });
    }
    if s.y.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: s.y.len() });
    }
    let a = p.matrix();
    let sign = p.dual_sign();
    let (c, b) = (p.cost(), p.rhs());
    let StepSizes { eta, tau } = steps;

    a.spmv_t_into(&s.y, &mut s.aty)?;
    core::mem::swap(&mut s.x, &mut s.x_prev);
    let mut big: f64 = 0.0;
    for j in 0..n {
        let xo = s.x_prev[j];
        let xn = p.project_x(j, xo - eta * (c[j] + sign * s.aty[j]));
        s.x[j] = xn;
        s.xbar[j] = 2.0 * xn - xo;
        big = big.max(xn.abs());
    }
    a.spmv_into(&s.xbar, &mut s.axbar)?;
    core::mem::swap(&mut s.y, &mut s.y_prev);
    for i in 0..m {
        let yn = p.project_y(s.y_prev[i] + sign * tau * (s.axbar[i] - b[i]));
        s.y[i] = yn;
        big = big.max(yn.abs());
    }
    s.k += 1;
    for (acc, v) in s.sum_x.iter_mut().zip(&s.x) {
        *acc += v;
    }
    for (acc, v) in s.sum_y.iter_mut().zip(&s.y) {
        *acc += v;
    }
    if big.is_nan() || big.is_infinite() {
        return Err(Error::NonFinite { k: s.k });
    }
    if big > DIVERGENCE_GUARD {
        return Err(Error::Diverged { k: s.k, norm: big });
    }
    Ok(())
}

pub fn step_standard(s: &mut PdhgState, p: &StandardFormLp, steps: StepSizes) -> Result<()> {
    step(s, p, steps)
}

pub fn step_general(s: &mut PdhgState, p: &GeneralFormLp, steps: StepSizes) -> Result<()> {
    step(s, p, steps)
}

/// `T(x, y)` without touching any state.
pub fn apply<P: PdhgProblem + ?Sized>(p: &P, steps: StepSizes, x: &[f64], y: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut s = PdhgState::from_point(x.to_vec(), y.to_vec());
    step(&mut s, p, steps)?;
    Ok((s.x, s.y))
}

/// `T` on a stacked vector.
pub fn apply_stacked<P: PdhgProblem + ?Sized>(p: &P, steps: StepSizes, z: &[f64]) -> Result<Vec<f64>> {
    let n = p.n();
    let (x, y) = apply(p, steps, &z[..n], &z[n..])?;
    let mut out = x;
    out.extend_from_slice(&y);
    Ok(out)
}

pub fn recover_r(y: &[f64], p: &GeneralFormLp) -> Result<Vec<f64>> {
    certificates::recover_r(y, p)
}

/// The metric in which `T` is firmly nonexpansive for problem `p`.
pub struct ProblemMetric<'a> {
    norm: MNorm<'a>,
    sign: f64,
}

impl<'a> ProblemMetric<'a> {
    pub fn new<P: PdhgProblem + ?Sized>(p: &'a P, steps: StepSizes) -> Result<Self> {
        Ok(ProblemMetric { norm: MNorm::new(p.matrix(), steps)?, sign: p.dual_sign() })
    }

    pub fn norm_parts(&self, x: &[f64], y: &[f64]) -> f64 {
        if self.sign > 0.0 {
            self.norm.norm_parts(x, y)
        } else {
            let neg: Vec<f64> = y.iter().map(|v| -v).collect();
            self.norm.norm_parts(x, &neg)
        }
    }

    pub fn norm(&self, z: &[f64]) -> f64 {
        let n = self.norm.n();
        self.norm_parts(&z[..n], &z[n..])
    }
}

/// Largest violation of the inclusion `M(z^k − z^{k+1}) − F(z^{k+1}) ∈ N(z^{k+1})`
/// satisfied by one PDHG step, where `N` is the normal cone of the primal
/// (and dual) feasible box. Zero up to rounding for exact steps.
pub fn inclusion_residual<P: PdhgProblem + ?Sized>(
    p: &P,
    steps: StepSizes,
    x0: &[f64],
    y0: &[f64],
    x1: &[f64],
    y1: &[f64],
) -> f64 {
    let a = p.matrix();
    let s = p.dual_sign();
    let StepSizes { eta, tau } = steps;
    let dx: Vec<f64> = x0.iter().zip(x1).map(|(a, b)| a - b).collect();
    let dy: Vec<f64> = y0.iter().zip(y1).map(|(a, b)| a - b).collect();
    let at_dy = a.spmv_t_dense(&dy);
    let at_y1 = a.spmv_t_dense(y1);
    let a_dx = a.spmv_dense(&dx);
    let a_x1 = a.spmv_dense(x1);
    let scale = 1.0 + norm_inf(x1) / eta + norm_inf(y1) / tau + norm_inf(p.cost()) + norm_inf(p.rhs());
    let tol = 1e-12 * scale;
    let mut worst: f64 = 0.0;
    for j in 0..p.n() {
        // (M dz)_x − (c + s Aᵀy¹) with the sign-adjusted M
        let w = dx[j] / eta - s * at_dy[j] - (p.cost()[j] + s * at_y1[j]);
        worst = worst.max(normal_cone_violation(p, j, x1[j], w, tol));
    }
    for i in 0..p.m() {
        let w = dy[i] / tau - s * a_dx[i] + s * (a_x1[i] - p.rhs()[i]);
        // standard form: equality rows, w must vanish; general form: w lies
        // in the normal cone of y ≥ 0 for the flipped multiplier
        let viol = if s > 0.0 || y1[i] > tol { w.abs() } else { w.max(0.0) };
        worst = worst.max(viol);
    }
    worst
}

fn normal_cone_violation<P: PdhgProblem + ?Sized>(p: &P, j: usize, xj: f64, w: f64, tol: f64) -> f64 {
    // normal cone of the feasible interval of x_j at xj
    let lo = p.project_x(j, f64::NEG_INFINITY);
    let hi = p.project_x(j, f64::INFINITY);
    let at_lo = xj - lo <= tol;
    let at_hi = hi - xj <= tol;
    match (at_lo, at_hi) {
        (true, true) => 0.0,
        (true, false) => w.max(0.0),
        (false, true) => (-w).max(0.0),
        (false, false) => w.abs(),
    }
}

/// Outcome classes reported by [`run`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    BothInfeasible,
    IterationLimit,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Optimal => "optimal",
            Status::PrimalInfeasible => "primal_infeasible",
            Status::DualInfeasible => "dual_infeasible",
            Status::BothInfeasible => "both_infeasible",
            Status::IterationLimit => "iteration_limit",
        }
    }
}

/// Which candidate sequence and which test a trace record refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeqKind {
    /// Primal-infeasibility test on the `y` part of a candidate.
    Dual(CandidateKind),
    /// Dual-infeasibility test on the `x` part of a candidate.
    Primal(CandidateKind),
}

impl SeqKind {
    pub const ALL: [SeqKind; 6] = [
        SeqKind::Dual(CandidateKind::Difference),
        SeqKind::Dual(CandidateKind::NormalizedIterate),
        SeqKind::Dual(CandidateKind::NormalizedAverage),
        SeqKind::Primal(CandidateKind::Difference),
        SeqKind::Primal(CandidateKind::NormalizedIterate),
        SeqKind::Primal(CandidateKind::NormalizedAverage),
    ];

    pub fn label(self) -> &'static str {
        match self {
            SeqKind::Dual(CandidateKind::Difference) => "diff",
            SeqKind::Dual(CandidateKind::NormalizedIterate) => "iter",
            SeqKind::Dual(CandidateKind::NormalizedAverage) => "avg",
            SeqKind::Primal(CandidateKind::Difference) => "diff_x",
            SeqKind::Primal(CandidateKind::NormalizedIterate) => "iter_x",
            SeqKind::Primal(CandidateKind::NormalizedAverage) => "avg_x",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        SeqKind::ALL.into_iter().find(|k| k.label() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub k: u64,
    pub seq: SeqKind,
    /// `None` when the objective term is not positive.
    pub scaled_err: Option<f64>,
    pub obj_term: f64,
    pub kkt: f64,
    pub active_changed: bool,
}

pub trait TraceSink {
    fn record(&mut self, rec: &TraceRecord);
}

/// Discards all records.
pub struct NoTrace;

impl TraceSink for NoTrace {
    fn record(&mut self, _rec: &TraceRecord) {}
}

impl TraceSink for Vec<TraceRecord> {
    fn record(&mut self, rec: &TraceRecord) {
        self.push(*rec);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdhgConfig {
    pub steps: StepSizes,
    pub max_iters: u64,
    pub check_interval: u64,
    pub eps_pinf: f64,
    pub eps_dinf: f64,
    pub kkt_tol: f64,
}

impl PdhgConfig {
    pub fn new(steps: StepSizes) -> Self {
        PdhgConfig {
            steps,
            max_iters: DEFAULT_MAX_ITERS,
            check_interval: DEFAULT_CHECK_INTERVAL,
            eps_pinf: DEFAULT_EPS,
            eps_dinf: DEFAULT_EPS,
            kkt_tol: DEFAULT_KKT_TOL,
        }
    }

    /// Defaults with `eta = tau = theta / σ̂(A)`.
    pub fn for_matrix(a: &SparseMatrix, theta: f64) -> Result<Self> {
        Ok(Self::new(StepSizes::for_matrix(a, theta)?))
    }

    pub fn validate(&self) -> Result<()> {
        if self.check_interval == 0 {
            return Err(Error::InvalidConfig("check_interval must be at least 1"));
        }
        if !(self.eps_pinf > 0.0 && self.eps_dinf > 0.0 && self.kkt_tol > 0.0) {
            return Err(Error::InvalidConfig("tolerances must be positive"));
        }
        StepSizes::new(self.steps.eta, self.steps.tau)?;
        Ok(())
    }
}

/// A candidate that passed one of the infeasibility tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub kind: CandidateKind,
    pub k: u64,
    /// `y` for a primal-infeasibility certificate, `x` for a dual one.
    pub vector: Vec<f64>,
    pub report: CertCheckReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub status: Status,
    pub iterations: u64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub primal_certificate: Option<Certificate>,
    pub dual_certificate: Option<Certificate>,
    /// False when one infeasibility was certified but the run ended before
    /// the other side was either certified or seen to settle.
    pub other_side_confirmed: bool,
    pub kkt: f64,
    pub primal_objective: f64,
    /// Iteration of the last check at which the set of coordinates at a
    /// bound changed.
    pub last_active_change: u64,
}

/// Problems that can be classified: they know their certificate tests.
pub trait Certify: PdhgProblem {
    /// Primal-infeasibility test on a `y` candidate; the candidate may be
    /// adjusted (e.g. projected onto its sign constraint) and is returned.
    fn test_primal(&self, y: &[f64], eps: f64) -> Result<(Vec<f64>, CertCheckReport)>;
    fn test_dual(&self, x: &[f64], eps: f64) -> Result<CertCheckReport>;
    fn objective(&self, x: &[f64]) -> f64;
}

impl Certify for GeneralFormLp {
    fn test_primal(&self, y: &[f64], eps: f64) -> Result<(Vec<f64>, CertCheckReport)> {
        // multipliers live in y ≥ 0; differences of iterates may dip below
        let y: Vec<f64> = y.iter().map(|v| v.max(0.0)).collect();
        let rep = certificates::check_primal_ray(&y, self, eps)?;
        Ok((y, rep))
    }
    fn test_dual(&self, x: &[f64], eps: f64) -> Result<CertCheckReport> {
        certificates::check_dual_ray(x, self, eps)
    }
    fn objective(&self, x: &[f64]) -> f64 {
        GeneralFormLp::objective(self, x)
    }
}

impl Certify for StandardFormLp {
    fn test_primal(&self, y: &[f64], eps: f64) -> Result<(Vec<f64>, CertCheckReport)> {
        let mut rep = certificates::check_standard_primal(y, self, eps)?;
        rep.is_primal_cert &= rep.scaled_error <= eps;
        Ok((y.to_vec(), rep))
    }
    fn test_dual(&self, x: &[f64], eps: f64) -> Result<CertCheckReport> {
        let mut rep = certificates::check_standard_dual(x, self, eps)?;
        rep.is_dual_cert &= rep.scaled_error <= eps;
        Ok(rep)
    }
    fn objective(&self, x: &[f64]) -> f64 {
        dot(&self.c, x) + self.obj_offset
    }
}

/// Runs PDHG from `z⁰ = 0`, testing all three candidate sequences every
/// `check_interval` iterations.
///
/// Stops with `Optimal` once the KKT residual is below `kkt_tol`. After one
/// infeasibility is certified the run continues until the other side is
/// either certified too (`BothInfeasible`) or its iterate settles, i.e. the
/// last step moved it by less than `kkt_tol` in units of the data.
pub fn run<P: Certify + ?Sized>(p: &P, config: &PdhgConfig, sink: &mut dyn TraceSink) -> Result<SolveOutcome> {
    let state = PdhgState::new(p.n(), p.m());
    run_from(p, config, state, sink)
}

pub fn run_from<P: Certify + ?Sized>(
    p: &P,
    config: &PdhgConfig,
    mut state: PdhgState,
    sink: &mut dyn TraceSink,
) -> Result<SolveOutcome> {
    config.validate()?;
    let a = p.matrix();
    if a.n_cols() != p.n() || a.n_rows() != p.m() {
        return Err(Error::DimensionMismatch { expected: a.n_cols(), got: p.n() });
    }
    let steps = config.steps;
    let c_scale = 1.0 + norm_inf(p.cost());
    let b_scale = 1.0 + norm_inf(p.rhs());

    let mut primal_cert: Option<Certificate> = None;
    let mut dual_cert: Option<Certificate> = None;
    let mut pattern: Vec<i8> = Vec::new();
    let mut last_active_change = 0u64;
    let mut kkt = f64::INFINITY;

    let finish = |status, state: &PdhgState, pc, dc, confirmed, kkt, last| SolveOutcome {
        status,
        iterations: state.k,
        x: state.x.clone(),
        y: state.y.clone(),
        primal_certificate: pc,
        dual_certificate: dc,
        other_side_confirmed: confirmed,
        kkt,
        primal_objective: p.objective(&state.x),
        last_active_change: last,
    };

    while state.k < config.max_iters {
        step(&mut state, p, steps)?;
        let k = state.k;
        if !k.is_multiple_of(config.check_interval) && k != config.max_iters {
            continue;
        }
        kkt = p.kkt(&state.x, &state.y);
        let tol_a = ACTIVE_TOL * (1.0 + norm_inf(&state.x));
        let now: Vec<i8> = (0..p.n()).map(|j| p.bound_state(j, state.x[j], tol_a)).collect();
        let changed = now != pattern;
        if changed {
            last_active_change = k;
            pattern = now;
        }
        for kind in CandidateKind::ALL {
            let cand = certificates::extract(&state, kind)?;
            let (y, prep) = p.test_primal(&cand.y, config.eps_pinf)?;
            sink.record(&trace_record(k, SeqKind::Dual(kind), &prep, kkt, changed));
            if prep.is_primal_cert && primal_cert.is_none() {
                primal_cert = Some(Certificate { kind, k, vector: y, report: prep });
            }
            let drep = p.test_dual(&cand.x, config.eps_dinf)?;
            sink.record(&trace_record(k, SeqKind::Primal(kind), &drep, kkt, changed));
            if drep.is_dual_cert && dual_cert.is_none() {
                dual_cert = Some(Certificate { kind, k, vector: cand.x.clone(), report: drep });
            }
        }
        let x_settled = max_abs_diff(&state.x, &state.x_prev) <= config.kkt_tol * steps.eta * c_scale;
        let y_settled = max_abs_diff(&state.y, &state.y_prev) <= config.kkt_tol * steps.tau * b_scale;
        let status = match (&primal_cert, &dual_cert) {
            (Some(_), Some(_)) => Some(Status::BothInfeasible),
            (Some(_), None) if x_settled => Some(Status::PrimalInfeasible),
            (None, Some(_)) if y_settled => Some(Status::DualInfeasible),
            (None, None) if kkt <= config.kkt_tol => Some(Status::Optimal),
            _ => None,
        };
        if let Some(status) = status {
            return Ok(finish(status, &state, primal_cert, dual_cert, true, kkt, last_active_change));
        }
    }
    let status = match (&primal_cert, &dual_cert) {
        (Some(_), _) => Status::PrimalInfeasible,
        (None, Some(_)) => Status::DualInfeasible,
        (None, None) => Status::IterationLimit,
    };
    Ok(finish(status, &state, primal_cert, dual_cert, false, kkt, last_active_change))
}

fn trace_record(k: u64, seq: SeqKind, rep: &CertCheckReport, kkt: f64, changed: bool) -> TraceRecord {
    TraceRecord {
        k,
        seq,
        scaled_err: (rep.objective_term > 0.0).then_some(rep.scaled_error),
        obj_term: rep.objective_term,
        kkt,
        active_changed: changed,
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |acc, (u, v)| acc.max((u - v).abs()))
}
