//! Candidate certificates built from PDHG iterates and the tests deciding
//! whether they prove infeasibility.
//!
//! Sign conventions differ between the two forms. For `Ax = b, x ≥ 0` the
//! dual iterate carries the opposite sign, so a primal-infeasibility
//! certificate satisfies `bᵀy < 0, Aᵀy ≥ 0`. For `Ax ≥ b, l ≤ x ≤ u` it
//! satisfies `y ≥ 0, bᵀy + lᵀr₊ - uᵀr₋ > 0, r = -Aᵀy`.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm_inf, spmv, spmv_t};
use crate::model::{GeneralFormLp, StandardFormLp, VariableKind};
use crate::pdhg::PdhgState;

/// Dust threshold for negative multipliers, relative to `‖y‖∞`.
pub const DUAL_CLIP_REL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CandidateKind {
    /// `z^k - z^{k-1}`.
    Difference,
    /// `z^k / k`.
    NormalizedIterate,
    /// `2 / (k (k+1)) · Σ_{j≤k} z^j`.
    NormalizedAverage,
}

impl CandidateKind {
    pub const ALL: [CandidateKind; 3] =
        [CandidateKind::Difference, CandidateKind::NormalizedIterate, CandidateKind::NormalizedAverage];

    pub fn name(self) -> &'static str {
        match self {
            CandidateKind::Difference => "difference",
            CandidateKind::NormalizedIterate => "normalized_iterate",
            CandidateKind::NormalizedAverage => "normalized_average",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateCandidate {
    pub kind: CandidateKind,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub k: u64,
}

impl CertificateCandidate {
    /// Stacked `(x, y)`.
    pub fn stacked(&self) -> Vec<f64> {
        let mut z = self.x.clone();
        z.extend_from_slice(&self.y);
        z
    }
}

/// Builds one of the three candidate sequences from the iteration state.
pub fn extract(state: &PdhgState, kind: CandidateKind) -> Result<CertificateCandidate> {
    let k = state.k;
    if k == 0 {
        return Err(Error::ZeroIteration);
    }
    let (x, y) = match kind {
        CandidateKind::Difference => (
            state.x.iter().zip(&state.x_prev).map(|(a, b)| a - b).collect(),
            state.y.iter().zip(&state.y_prev).map(|(a, b)| a - b).collect(),
        ),
        CandidateKind::NormalizedIterate => {
            let s = 1.0 / k as f64;
            (state.x.iter().map(|v| v * s).collect(), state.y.iter().map(|v| v * s).collect())
        }
        CandidateKind::NormalizedAverage => {
            let kf = k as f64;
            let s = 2.0 / (kf * (kf + 1.0));
            (state.sum_x.iter().map(|v| v * s).collect(), state.sum_y.iter().map(|v| v * s).collect())
        }
    };
    Ok(CertificateCandidate { kind, x, y, k })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertCheckReport {
    pub is_primal_cert: bool,
    pub is_dual_cert: bool,
    /// Violation divided by the objective term; `+inf` when the objective
    /// term has the wrong sign.
    pub scaled_error: f64,
    /// Positive exactly when the candidate has the strict sign a
    /// certificate needs.
    pub objective_term: f64,
    pub tolerance_used: f64,
}

impl CertCheckReport {
    fn new(objective_term: f64, violation: f64, eps: f64) -> Self {
        let scaled_error = if objective_term > 0.0 { violation / objective_term } else { f64::INFINITY };
        CertCheckReport {
            is_primal_cert: false,
            is_dual_cert: false,
            scaled_error,
            objective_term,
            tolerance_used: eps,
        }
    }

    pub fn passes(&self) -> bool {
        self.is_primal_cert || self.is_dual_cert
    }
}

/// `proj_{C_r}(c - Aᵀy)`: the reduced costs closest to `c - Aᵀy` that keep
/// the dual objective finite.
pub fn recover_r(y: &[f64], p: &GeneralFormLp) -> Result<Vec<f64>> {
    let aty = spmv_t(&p.a, y)?;
    Ok((0..p.n()).map(|j| p.kind(j).project_reduced_cost(p.c[j] - aty[j])).collect())
}

/// `lᵀr₊ - uᵀr₋` with `r₋ = max(-r, 0)`; infinite bounds only ever meet a
/// zero part of `r` and contribute nothing.
pub fn bound_term(r: &[f64], p: &GeneralFormLp) -> f64 {
    let mut s = 0.0;
    for (j, &rj) in r.iter().enumerate() {
        if rj > 0.0 {
            if p.lower[j].is_finite() {
                s += p.lower[j] * rj;
            } else {
                return f64::NEG_INFINITY;
            }
        } else if rj < 0.0 {
            if p.upper[j].is_finite() {
                s += p.upper[j] * rj;
            } else {
                return f64::NEG_INFINITY;
            }
        }
    }
    s
}

/// Removes negative dust below `DUAL_CLIP_REL · ‖y‖∞`. Returns `None` if a
/// genuinely negative entry remains.
pub fn clip_dual(y: &[f64]) -> Option<Vec<f64>> {
    let thresh = DUAL_CLIP_REL * norm_inf(y);
    let mut out = Vec::with_capacity(y.len());
    for &v in y {
        if v >= 0.0 {
            out.push(v);
        } else if -v <= thresh {
            out.push(0.0);
        } else {
            return None;
        }
    }
    Some(out)
}

/// Tests `y` as an ε-approximate primal-infeasibility certificate for
/// `Ax ≥ b, l ≤ x ≤ u`: with `r = proj_{C_r}(-Aᵀy)` the objective term
/// `bᵀy + lᵀr₊ - uᵀr₋` must be positive and `‖r + Aᵀy‖∞` at most `eps`
/// times it.
pub fn check_primal_ray(y: &[f64], p: &GeneralFormLp, eps: f64) -> Result<CertCheckReport> {
    if y.len() != p.m() {
        return Err(Error::DimensionMismatch { expected: p.m(), got: y.len() });
    }
    let Some(y) = clip_dual(y) else {
        let mut rep = CertCheckReport::new(0.0, 0.0, eps);
        rep.objective_term = f64::NEG_INFINITY;
        return Ok(rep);
    };
    let aty = spmv_t(&p.a, &y)?;
    let mut violation: f64 = 0.0;
    let mut r = Vec::with_capacity(p.n());
    for j in 0..p.n() {
        let rj = p.kind(j).project_reduced_cost(-aty[j]);
        violation = violation.max((rj + aty[j]).abs());
        r.push(rj);
    }
    let obj = dot(&p.b, &y) + bound_term(&r, p);
    let mut rep = CertCheckReport::new(obj, violation, eps);
    rep.is_primal_cert = obj > 0.0 && rep.scaled_error <= eps;
    Ok(rep)
}

/// Tests `x` as an ε-approximate dual-infeasibility certificate (a recession
/// direction with `cᵀx < 0`, `x ∈ C_v`, `Ax ≥ 0`), with both violations
/// divided by `-cᵀx`.
pub fn check_dual_ray(x: &[f64], p: &GeneralFormLp, eps: f64) -> Result<CertCheckReport> {
    if x.len() != p.n() {
        return Err(Error::DimensionMismatch { expected: p.n(), got: x.len() });
    }
    let obj = -dot(&p.c, x);
    let mut cone: f64 = 0.0;
    for (j, &xj) in x.iter().enumerate() {
        cone = cone.max((xj - p.kind(j).project_ray(xj)).abs());
    }
    let ax = spmv(&p.a, x)?;
    let rows = ax.iter().fold(0.0f64, |acc, &v| acc.max(-v));
    let mut rep = CertCheckReport::new(obj, cone.max(rows), eps);
    rep.is_dual_cert = obj > 0.0 && rep.scaled_error <= eps;
    Ok(rep)
}

pub fn check_primal_infeasibility(cand: &CertificateCandidate, p: &GeneralFormLp, eps: f64) -> Result<CertCheckReport> {
    check_primal_ray(&cand.y, p, eps)
}

pub fn check_dual_infeasibility(cand: &CertificateCandidate, p: &GeneralFormLp, eps: f64) -> Result<CertCheckReport> {
    check_dual_ray(&cand.x, p, eps)
}

/// The `r` paired with a primal-infeasibility candidate `y`.
pub fn candidate_r(y: &[f64], p: &GeneralFormLp) -> Result<Vec<f64>> {
    let aty = spmv_t(&p.a, y)?;
    Ok((0..p.n()).map(|j| p.kind(j).project_reduced_cost(-aty[j])).collect())
}

/// Farkas tests for `Ax = b, x ≥ 0`.
///
/// Primal (`y` part): `bᵀy < 0` and `min_i (Aᵀy)_i ≥ -eps·‖y‖∞`.
/// Dual (`x` part): `cᵀx < 0`, `‖Ax‖∞ ≤ eps·‖x‖∞`, `x ≥ -eps·‖x‖∞`.
/// Returns `(primal report, dual report)`; `scaled_error` divides the
/// violation by `-bᵀy` (resp. `-cᵀx`).
pub fn check_standard_farkas(
    cand: &CertificateCandidate,
    p: &StandardFormLp,
    eps: f64,
) -> Result<(CertCheckReport, CertCheckReport)> {
    Ok((check_standard_primal(&cand.y, p, eps)?, check_standard_dual(&cand.x, p, eps)?))
}

pub fn check_standard_primal(y: &[f64], p: &StandardFormLp, eps: f64) -> Result<CertCheckReport> {
    if y.len() != p.m() {
        return Err(Error::DimensionMismatch { expected: p.m(), got: y.len() });
    }
    let aty = spmv_t(&p.a, y)?;
    let violation = aty.iter().fold(0.0f64, |acc, &v| acc.max(-v));
    let obj = -dot(&p.b, y);
    let mut rep = CertCheckReport::new(obj, violation, eps);
    rep.is_primal_cert = obj > 0.0 && violation <= eps * norm_inf(y);
    Ok(rep)
}

pub fn check_standard_dual(x: &[f64], p: &StandardFormLp, eps: f64) -> Result<CertCheckReport> {
    if x.len() != p.n() {
        return Err(Error::DimensionMismatch { expected: p.n(), got: x.len() });
    }
    let ax = spmv(&p.a, x)?;
    let rows = norm_inf(&ax);
    let neg = x.iter().fold(0.0f64, |acc, &v| acc.max(-v));
    let obj = -dot(&p.c, x);
    let scale = norm_inf(x);
    let mut rep = CertCheckReport::new(obj, rows.max(neg), eps);
    rep.is_dual_cert = obj > 0.0 && rows <= eps * scale && neg <= eps * scale;
    Ok(rep)
}

/// Kind-specific feasibility pattern, exposed for callers that need the
/// cone projections without a whole problem.
pub fn ray_cone_violation(x: &[f64], kinds: &[VariableKind]) -> f64 {
    x.iter().zip(kinds).fold(0.0f64, |acc, (&v, k)| acc.max((v - k.project_ray(v)).abs()))
}
