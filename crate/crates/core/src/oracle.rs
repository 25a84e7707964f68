//! Exact rational feasibility decisions for tiny LPs by Fourier–Motzkin
//! elimination, with Farkas multipliers on infeasibility and a witness point
//! on feasibility.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{GeneralFormLp, StandardFormLp, VariableKind};
use crate::pdhg::Status;

pub type Rational = BigRational;

pub const MAX_VARS: usize = 12;
pub const MAX_CONSTRAINTS: usize = 60;
/// Rows allowed to exist at once during elimination.
pub const MAX_ROWS: usize = 20_000;
/// Float certificate entries below this (after scaling to unit max norm)
/// are treated as zero.
pub const ROUND_TO_ZERO: f64 = 1e-12;
/// Largest denominator tried when snapping a float certificate to a simple
/// rational.
pub const MAX_DENOMINATOR: i64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    /// `aᵀx ≥ rhs`
    Ge,
    /// `aᵀx = rhs`
    Eq,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactConstraint {
    pub coeffs: Vec<Rational>,
    pub relation: Relation,
    pub rhs: Rational,
}

/// A linear system over the rationals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactLp {
    pub n_vars: usize,
    pub constraints: Vec<ExactConstraint>,
}

impl ExactLp {
    pub fn new(n_vars: usize) -> Self {
        ExactLp { n_vars, constraints: Vec::new() }
    }

    pub fn push(&mut self, coeffs: Vec<Rational>, relation: Relation, rhs: Rational) {
        debug_assert_eq!(coeffs.len(), self.n_vars);
        self.constraints.push(ExactConstraint { coeffs, relation, rhs });
    }

    /// Builds a system from float rows, converting every value exactly.
    pub fn from_f64(rows: &[(&[f64], Relation, f64)], n_vars: usize) -> Result<Self> {
        let mut sys = ExactLp::new(n_vars);
        for (a, rel, b) in rows {
            if a.len() != n_vars {
                return Err(Error::DimensionMismatch { expected: n_vars, got: a.len() });
            }
            let coeffs = a.iter().map(|&v| to_rational(v)).collect::<Result<Vec<_>>>()?;
            sys.push(coeffs, *rel, to_rational(*b)?);
        }
        Ok(sys)
    }

    pub fn is_satisfied_by(&self, x: &[Rational]) -> bool {
        self.constraints.iter().all(|c| {
            let lhs = dot(&c.coeffs, x);
            match c.relation {
                Relation::Ge => lhs >= c.rhs,
                Relation::Eq => lhs == c.rhs,
            }
        })
    }

    /// True when `λ` is a valid Farkas combination: nonnegative on `≥`
    /// rows, `Σ λ_i a_i = 0` and `Σ λ_i b_i > 0`.
    pub fn is_farkas_combination(&self, lambda: &[Rational]) -> bool {
        if lambda.len() != self.constraints.len() {
            return false;
        }
        let mut sum = vec![Rational::zero(); self.n_vars];
        let mut rhs = Rational::zero();
        for (l, c) in lambda.iter().zip(&self.constraints) {
            if c.relation == Relation::Ge && l.is_negative() {
                return false;
            }
            for (s, a) in sum.iter_mut().zip(&c.coeffs) {
                *s += l * a;
            }
            rhs += l * &c.rhs;
        }
        sum.iter().all(Zero::is_zero) && rhs.is_positive()
    }

    fn check_size(&self) -> Result<()> {
        if self.n_vars > MAX_VARS || self.constraints.len() > MAX_CONSTRAINTS {
            return Err(Error::OracleTooLarge {
                vars: self.n_vars,
                cons: self.constraints.len(),
                max_vars: MAX_VARS,
                max_cons: MAX_CONSTRAINTS,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Feasibility {
    /// A point satisfying every constraint.
    Feasible(Vec<Rational>),
    /// Multipliers, one per constraint, forming a Farkas combination.
    Infeasible(Vec<Rational>),
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible(_))
    }
}

/// Exact conversion of the shortest decimal form of `v`.
pub fn to_rational(v: f64) -> Result<Rational> {
    if !v.is_finite() {
        return Err(Error::NotRepresentable(v));
    }
    let s = alloc::format!("{:e}", v);
    parse_decimal(&s).ok_or(Error::NotRepresentable(v))
}

/// Parses `[-]d[.ddd][e[-]dd]` exactly.
pub fn parse_decimal(s: &str) -> Option<Rational> {
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, mant) = match mant.strip_prefix('-') {
        Some(r) => (true, r),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (int, frac) = mant.split_once('.').unwrap_or((mant, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    let mut digits = String::with_capacity(int.len() + frac.len());
    digits.push_str(int);
    digits.push_str(frac);
    if !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let mut num: BigInt = digits.parse().ok()?;
    if neg {
        num = -num;
    }
    let shift = exp - frac.len() as i32;
    let ten = BigInt::from(10u32);
    let r = if shift >= 0 {
        Rational::from_integer(num * num_traits::pow(ten, shift as usize))
    } else {
        Rational::new(num, num_traits::pow(ten, (-shift) as usize))
    };
    Some(r)
}

/// Nearest float, for reporting.
pub fn to_f64(r: &Rational) -> f64 {
    num_traits::ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
}

fn dot(a: &[Rational], x: &[Rational]) -> Rational {
    a.iter().zip(x).fold(Rational::zero(), |acc, (a, x)| acc + a * x)
}

#[derive(Debug, Clone)]
struct Row {
    a: Vec<Rational>,
    rhs: Rational,
    eq: bool,
    /// Combination of the original constraints producing this row.
    mult: Vec<Rational>,
    /// Original `≥` constraints with a nonzero multiplier.
    origins: u64,
}

impl Row {
    fn is_zero(&self) -> bool {
        self.a.iter().all(Zero::is_zero)
    }

    fn axpy(&mut self, s: &Rational, other: &Row) {
        for (a, b) in self.a.iter_mut().zip(&other.a) {
            *a += s * b;
        }
        for (a, b) in self.mult.iter_mut().zip(&other.mult) {
            *a += s * b;
        }
        self.rhs += s * &other.rhs;
    }

    fn scale(&mut self, s: &Rational) {
        for a in self.a.iter_mut().chain(self.mult.iter_mut()) {
            *a *= s;
        }
        self.rhs *= s;
    }

    /// Scales by a positive factor so the largest coefficient is one.
    fn normalize(&mut self) {
        let big = self.a.iter().map(|v| v.abs()).max().unwrap_or_else(Rational::zero);
        if !big.is_zero() && !big.is_one() {
            self.scale(&big.recip());
        }
    }
}

#[derive(Debug, Clone)]
enum Step {
    Substitute { var: usize, row: Row },
    Fourier { var: usize, rows: Vec<Row> },
}

enum Elimination {
    Infeasible(Vec<Rational>),
    Projected { rows: Vec<Row>, log: Vec<Step> },
}

/// Resolves a row with no coefficients left: either a contradiction (the
/// returned multipliers) or a tautology.
fn contradiction(row: &Row) -> Option<Vec<Rational>> {
    if row.eq {
        match row.rhs.cmp(&Rational::zero()) {
            Ordering::Equal => None,
            Ordering::Greater => Some(row.mult.clone()),
            Ordering::Less => Some(row.mult.iter().map(|v| -v).collect()),
        }
    } else if row.rhs.is_positive() {
        Some(row.mult.clone())
    } else {
        None
    }
}

/// Projects out every variable with `keep[j] == false`.
fn eliminate(sys: &ExactLp, keep: &[bool]) -> Result<Elimination> {
    let total = sys.constraints.len();
    let mut rows: Vec<Row> = sys
        .constraints
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let mut mult = vec![Rational::zero(); total];
            mult[i] = Rational::one();
            let eq = c.relation == Relation::Eq;
            Row { a: c.coeffs.clone(), rhs: c.rhs.clone(), eq, mult, origins: if eq { 0 } else { 1 << i } }
        })
        .collect();
    let mut log = Vec::new();
    if let Some(m) = settle_rows(&mut rows) {
        return Ok(Elimination::Infeasible(m));
    }

    // equalities first: each one removes a variable outright
    loop {
        let pick = rows.iter().position(|r| r.eq && (0..sys.n_vars).any(|j| !keep[j] && !r.a[j].is_zero()));
        let Some(i) = pick else { break };
        let pivot = rows.swap_remove(i);
        let var = (0..sys.n_vars).find(|&j| !keep[j] && !pivot.a[j].is_zero()).expect("picked");
        for r in rows.iter_mut() {
            if !r.a[var].is_zero() {
                let s = -(&r.a[var] / &pivot.a[var]);
                r.axpy(&s, &pivot);
                r.origins |= pivot.origins;
            }
        }
        log.push(Step::Substitute { var, row: pivot });
        if let Some(m) = settle_rows(&mut rows) {
            return Ok(Elimination::Infeasible(m));
        }
    }

    let mut stage = 0u32;
    loop {
        let mut best: Option<(usize, usize)> = None;
        for j in (0..sys.n_vars).filter(|&j| !keep[j]) {
            let pos = rows.iter().filter(|r| r.a[j].is_positive()).count();
            let neg = rows.iter().filter(|r| r.a[j].is_negative()).count();
            if pos + neg == 0 {
                continue;
            }
            let cost = pos * neg;
            if best.is_none_or(|(_, c)| cost < c) {
                best = Some((j, cost));
            }
        }
        let Some((var, _)) = best else { break };
        stage += 1;
        let (involved, mut rest): (Vec<Row>, Vec<Row>) = rows.into_iter().partition(|r| !r.a[var].is_zero());
        let (pos, neg): (Vec<&Row>, Vec<&Row>) = involved.iter().partition(|r| r.a[var].is_positive());
        for p in &pos {
            for q in &neg {
                let origins = p.origins | q.origins;
                // Chernikov: rows built from too many originals are implied
                if origins.count_ones() > stage + 1 {
                    continue;
                }
                let mut r = (*p).clone();
                r.scale(&(-&q.a[var]));
                r.axpy(&p.a[var], q);
                r.a[var] = Rational::zero();
                r.origins = origins;
                r.normalize();
                rest.push(r);
            }
        }
        log.push(Step::Fourier { var, rows: involved });
        dedup(&mut rest);
        if rest.len() > MAX_ROWS {
            return Err(Error::EliminationBlowup { limit: MAX_ROWS });
        }
        rows = rest;
        if let Some(m) = settle_rows(&mut rows) {
            return Ok(Elimination::Infeasible(m));
        }
    }
    Ok(Elimination::Projected { rows, log })
}

/// Drops tautologies; returns multipliers of the first contradiction.
fn settle_rows(rows: &mut Vec<Row>) -> Option<Vec<Rational>> {
    let mut out = None;
    rows.retain(|r| {
        if out.is_some() || !r.is_zero() {
            return true;
        }
        out = contradiction(r);
        false
    });
    out
}

fn dedup(rows: &mut Vec<Row>) {
    let mut kept: Vec<Row> = Vec::with_capacity(rows.len());
    for r in rows.drain(..) {
        match kept.iter_mut().find(|k| k.eq == r.eq && k.a == r.a && k.rhs == r.rhs) {
            Some(k) => {
                if r.origins.count_ones() < k.origins.count_ones() {
                    *k = r;
                }
            }
            None => kept.push(r),
        }
    }
    *rows = kept;
}

fn back_substitute(n: usize, log: &[Step]) -> Vec<Rational> {
    let mut x = vec![Rational::zero(); n];
    for step in log.iter().rev() {
        match step {
            Step::Substitute { var, row } => {
                let rest = dot(&row.a, &x) - &row.a[*var] * &x[*var];
                x[*var] = (&row.rhs - rest) / &row.a[*var];
            }
            Step::Fourier { var, rows } => {
                let mut lo: Option<Rational> = None;
                let mut hi: Option<Rational> = None;
                for r in rows {
                    let rest = dot(&r.a, &x) - &r.a[*var] * &x[*var];
                    let bound = (&r.rhs - rest) / &r.a[*var];
                    if r.a[*var].is_positive() {
                        lo = Some(lo.map_or(bound.clone(), |l| l.max(bound)));
                    } else {
                        hi = Some(hi.map_or(bound.clone(), |h| h.min(bound)));
                    }
                }
                x[*var] = lo.or(hi).unwrap_or_else(Rational::zero);
            }
        }
    }
    x
}

/// Decides whether `sys` has a solution.
pub fn decide_feasibility(sys: &ExactLp) -> Result<Feasibility> {
    sys.check_size()?;
    match eliminate(sys, &vec![false; sys.n_vars])? {
        Elimination::Infeasible(m) => {
            debug_assert!(sys.is_farkas_combination(&m));
            Ok(Feasibility::Infeasible(m))
        }
        Elimination::Projected { log, .. } => {
            let x = back_substitute(sys.n_vars, &log);
            debug_assert!(sys.is_satisfied_by(&x));
            Ok(Feasibility::Feasible(x))
        }
    }
}

/// Primal and dual feasibility systems of an LP and the maps from their
/// Farkas multipliers to certificates in the solver's conventions.
pub trait ExactSource {
    fn primal_system(&self) -> Result<ExactLp>;
    fn dual_system(&self) -> Result<ExactLp>;
    /// Cost vector and objective constant.
    fn exact_cost(&self) -> Result<(Vec<Rational>, Rational)>;
    /// `y` proving primal infeasibility, from multipliers on `primal_system`.
    fn primal_certificate(&self, mult: &[Rational]) -> Vec<Rational>;
    /// `x` proving dual infeasibility, from multipliers on `dual_system`.
    fn dual_certificate(&self, mult: &[Rational]) -> Vec<Rational>;
    fn is_primal_certificate(&self, y: &[Rational]) -> Result<bool>;
    fn is_dual_certificate(&self, x: &[Rational]) -> Result<bool>;
}

fn exact_vec(v: &[f64]) -> Result<Vec<Rational>> {
    v.iter().map(|&e| to_rational(e)).collect()
}

fn dense_rows(a: &crate::linalg::SparseMatrix) -> Result<Vec<Vec<Rational>>> {
    let mut rows = vec![vec![Rational::zero(); a.n_cols()]; a.n_rows()];
    for (i, j, v) in a.triplets() {
        rows[i][j] = to_rational(v)?;
    }
    Ok(rows)
}

fn mat_t_vec(rows: &[Vec<Rational>], y: &[Rational], n: usize) -> Vec<Rational> {
    let mut out = vec![Rational::zero(); n];
    for (row, yi) in rows.iter().zip(y) {
        for (o, a) in out.iter_mut().zip(row) {
            *o += a * yi;
        }
    }
    out
}

fn unit(n: usize, j: usize, s: i32) -> Vec<Rational> {
    let mut e = vec![Rational::zero(); n];
    e[j] = Rational::from_integer(BigInt::from(s));
    e
}

/// `Ax = b, x ≥ 0`. Primal rows: `m` equalities then `x_j ≥ 0`. Dual rows:
/// `-(Aᵀy)_j ≥ -c_j`.
impl ExactSource for StandardFormLp {
    fn primal_system(&self) -> Result<ExactLp> {
        let (n, m) = (self.n(), self.m());
        let rows = dense_rows(&self.a)?;
        let b = exact_vec(&self.b)?;
        let mut sys = ExactLp::new(n);
        for (row, bi) in rows.into_iter().zip(b) {
            sys.push(row, Relation::Eq, bi);
        }
        for j in 0..n {
            sys.push(unit(n, j, 1), Relation::Ge, Rational::zero());
        }
        debug_assert_eq!(sys.constraints.len(), m + n);
        Ok(sys)
    }

    fn dual_system(&self) -> Result<ExactLp> {
        let (n, m) = (self.n(), self.m());
        let rows = dense_rows(&self.a)?;
        let c = exact_vec(&self.c)?;
        let mut sys = ExactLp::new(m);
        for j in 0..n {
            let coeffs = (0..m).map(|i| -&rows[i][j]).collect();
            sys.push(coeffs, Relation::Ge, -&c[j]);
        }
        Ok(sys)
    }

    fn exact_cost(&self) -> Result<(Vec<Rational>, Rational)> {
        Ok((exact_vec(&self.c)?, to_rational(self.obj_offset)?))
    }

    fn primal_certificate(&self, mult: &[Rational]) -> Vec<Rational> {
        mult[..self.m()].iter().map(|v| -v).collect()
    }

    fn dual_certificate(&self, mult: &[Rational]) -> Vec<Rational> {
        mult[..self.n()].to_vec()
    }

    /// `bᵀy < 0` and `Aᵀy ≥ 0`.
    fn is_primal_certificate(&self, y: &[Rational]) -> Result<bool> {
        if y.len() != self.m() {
            return Err(Error::DimensionMismatch { expected: self.m(), got: y.len() });
        }
        let rows = dense_rows(&self.a)?;
        let aty = mat_t_vec(&rows, y, self.n());
        Ok(dot(&exact_vec(&self.b)?, y).is_negative() && aty.iter().all(|v| !v.is_negative()))
    }

    /// `cᵀx < 0`, `Ax = 0`, `x ≥ 0`.
    fn is_dual_certificate(&self, x: &[Rational]) -> Result<bool> {
        if x.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got: x.len() });
        }
        let rows = dense_rows(&self.a)?;
        Ok(dot(&exact_vec(&self.c)?, x).is_negative()
            && x.iter().all(|v| !v.is_negative())
            && rows.iter().all(|r| dot(r, x).is_zero()))
    }
}

/// Row layout of the general-form systems, needed to read multipliers.
struct GeneralLayout {
    /// Primal: `(column, +1 for x_j ≥ l_j | -1 for -x_j ≥ -u_j)` after the
    /// `m` rows of `Ax ≥ b`.
    primal_bounds: Vec<(usize, i32)>,
    /// Dual: `(column, sign)` after the `m` rows `y ≥ 0`, where the sign
    /// maps the row multiplier to `x_j`.
    dual_columns: Vec<(usize, i32)>,
}

fn general_layout(p: &GeneralFormLp) -> GeneralLayout {
    let mut primal_bounds = Vec::new();
    for j in 0..p.n() {
        if p.lower[j].is_finite() {
            primal_bounds.push((j, 1));
        }
        if p.upper[j].is_finite() {
            primal_bounds.push((j, -1));
        }
    }
    let dual_columns = (0..p.n())
        .filter_map(|j| match p.kind(j) {
            VariableKind::Boxed => None,
            VariableKind::LowerOnly | VariableKind::Free => Some((j, 1)),
            VariableKind::UpperOnly => Some((j, -1)),
        })
        .collect();
    GeneralLayout { primal_bounds, dual_columns }
}

/// `Ax ≥ b, l ≤ x ≤ u`. Primal rows: `Ax ≥ b`, then finite lower bounds and
/// negated finite upper bounds column by column. Dual rows: `y ≥ 0`, then
/// `c - Aᵀy ∈ C_r` column by column (nothing for boxed columns).
impl ExactSource for GeneralFormLp {
    fn primal_system(&self) -> Result<ExactLp> {
        let n = self.n();
        let rows = dense_rows(&self.a)?;
        let mut sys = ExactLp::new(n);
        for (row, bi) in rows.into_iter().zip(exact_vec(&self.b)?) {
            sys.push(row, Relation::Ge, bi);
        }
        for (j, s) in general_layout(self).primal_bounds {
            let bound = if s > 0 { to_rational(self.lower[j])? } else { -to_rational(self.upper[j])? };
            sys.push(unit(n, j, s), Relation::Ge, bound);
        }
        Ok(sys)
    }

    fn dual_system(&self) -> Result<ExactLp> {
        let m = self.m();
        let rows = dense_rows(&self.a)?;
        let c = exact_vec(&self.c)?;
        let mut sys = ExactLp::new(m);
        for i in 0..m {
            sys.push(unit(m, i, 1), Relation::Ge, Rational::zero());
        }
        for (j, s) in general_layout(self).dual_columns {
            let sign = Rational::from_integer(BigInt::from(s));
            // s·(c - Aᵀy)_j ≥ 0, i.e. -s(Aᵀy)_j ≥ -s c_j
            let coeffs = (0..m).map(|i| -&rows[i][j] * &sign).collect();
            let rel = if self.kind(j) == VariableKind::Free { Relation::Eq } else { Relation::Ge };
            sys.push(coeffs, rel, -&c[j] * &sign);
        }
        Ok(sys)
    }

    fn exact_cost(&self) -> Result<(Vec<Rational>, Rational)> {
        Ok((exact_vec(&self.c)?, to_rational(self.obj_offset)?))
    }

    fn primal_certificate(&self, mult: &[Rational]) -> Vec<Rational> {
        mult[..self.m()].to_vec()
    }

    fn dual_certificate(&self, mult: &[Rational]) -> Vec<Rational> {
        let m = self.m();
        let mut x = vec![Rational::zero(); self.n()];
        for (k, (j, s)) in general_layout(self).dual_columns.into_iter().enumerate() {
            x[j] = &mult[m + k] * Rational::from_integer(BigInt::from(s));
        }
        x
    }

    /// `y ≥ 0`, `r = -Aᵀy ∈ C_r` and `bᵀy + lᵀr₊ - uᵀr₋ > 0`.
    fn is_primal_certificate(&self, y: &[Rational]) -> Result<bool> {
        if y.len() != self.m() {
            return Err(Error::DimensionMismatch { expected: self.m(), got: y.len() });
        }
        if y.iter().any(|v| v.is_negative()) {
            return Ok(false);
        }
        let rows = dense_rows(&self.a)?;
        let r: Vec<Rational> = mat_t_vec(&rows, y, self.n()).into_iter().map(|v| -v).collect();
        let mut obj = dot(&exact_vec(&self.b)?, y);
        for (j, rj) in r.iter().enumerate() {
            let ok = match self.kind(j) {
                VariableKind::Boxed => true,
                VariableKind::LowerOnly => !rj.is_negative(),
                VariableKind::UpperOnly => !rj.is_positive(),
                VariableKind::Free => rj.is_zero(),
            };
            if !ok {
                return Ok(false);
            }
            if rj.is_positive() {
                obj += to_rational(self.lower[j])? * rj;
            } else if rj.is_negative() {
                obj += to_rational(self.upper[j])? * rj;
            }
        }
        Ok(obj.is_positive())
    }

    /// `x ∈ C_v`, `Ax ≥ 0` and `cᵀx < 0`.
    fn is_dual_certificate(&self, x: &[Rational]) -> Result<bool> {
        if x.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got: x.len() });
        }
        let in_cone = x.iter().enumerate().all(|(j, v)| match self.kind(j) {
            VariableKind::Boxed => v.is_zero(),
            VariableKind::LowerOnly => !v.is_negative(),
            VariableKind::UpperOnly => !v.is_positive(),
            VariableKind::Free => true,
        });
        let rows = dense_rows(&self.a)?;
        Ok(in_cone && rows.iter().all(|r| !dot(r, x).is_negative()) && dot(&exact_vec(&self.c)?, x).is_negative())
    }
}

/// The four feasibility cells of a primal-dual pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpClass {
    BothFeasible,
    BothInfeasible,
    PrimalInfDualFeas,
    PrimalFeasDualInf,
}

impl LpClass {
    pub fn name(self) -> &'static str {
        match self {
            LpClass::BothFeasible => "both_feasible",
            LpClass::BothInfeasible => "both_infeasible",
            LpClass::PrimalInfDualFeas => "primal_infeasible",
            LpClass::PrimalFeasDualInf => "dual_infeasible",
        }
    }

    /// The solver status that corresponds to this cell.
    pub fn expected_status(self) -> Status {
        match self {
            LpClass::BothFeasible => Status::Optimal,
            LpClass::BothInfeasible => Status::BothInfeasible,
            LpClass::PrimalInfDualFeas => Status::PrimalInfeasible,
            LpClass::PrimalFeasDualInf => Status::DualInfeasible,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classification {
    pub class: LpClass,
    pub primal: Feasibility,
    pub dual: Feasibility,
}

pub fn classify_lp<P: ExactSource + ?Sized>(p: &P) -> Result<Classification> {
    let primal = decide_feasibility(&p.primal_system()?)?;
    let dual = decide_feasibility(&p.dual_system()?)?;
    let class = match (primal.is_feasible(), dual.is_feasible()) {
        (true, true) => LpClass::BothFeasible,
        (false, false) => LpClass::BothInfeasible,
        (false, true) => LpClass::PrimalInfDualFeas,
        (true, false) => LpClass::PrimalFeasDualInf,
    };
    Ok(Classification { class, primal, dual })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OptimalValue {
    Infeasible,
    Unbounded,
    Finite(Rational),
}

/// `min cᵀx + offset` over the primal system, by projecting onto the
/// epigraph variable `t ≥ cᵀx`.
pub fn exact_optimal_value<P: ExactSource + ?Sized>(p: &P) -> Result<OptimalValue> {
    let base = p.primal_system()?;
    let (c, offset) = p.exact_cost()?;
    let n = base.n_vars;
    let mut sys = ExactLp::new(n + 1);
    for con in &base.constraints {
        let mut coeffs = con.coeffs.clone();
        coeffs.push(Rational::zero());
        sys.push(coeffs, con.relation, con.rhs.clone());
    }
    let mut epi: Vec<Rational> = c.iter().map(|v| -v).collect();
    epi.push(Rational::one());
    sys.push(epi, Relation::Ge, Rational::zero());
    if n + 1 > MAX_VARS + 1 || sys.constraints.len() > MAX_CONSTRAINTS {
        return Err(Error::OracleTooLarge {
            vars: n,
            cons: base.constraints.len(),
            max_vars: MAX_VARS,
            max_cons: MAX_CONSTRAINTS,
        });
    }
    let mut keep = vec![false; n + 1];
    keep[n] = true;
    let rows = match eliminate(&sys, &keep)? {
        Elimination::Infeasible(_) => return Ok(OptimalValue::Infeasible),
        Elimination::Projected { rows, .. } => rows,
    };
    let mut lower: Option<Rational> = None;
    for r in &rows {
        let a = &r.a[n];
        if a.is_positive() {
            let v = &r.rhs / a;
            lower = Some(lower.map_or(v.clone(), |l| l.max(v)));
        }
    }
    Ok(match lower {
        Some(v) => OptimalValue::Finite(v + offset),
        None => OptimalValue::Unbounded,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CertificateKind {
    /// A `y` proving the primal constraints inconsistent.
    Primal,
    /// An `x` proving the dual constraints inconsistent.
    Dual,
}

/// Converts a float certificate to rationals: scale to unit max norm, zero
/// entries below [`ROUND_TO_ZERO`], then snap each entry to the simplest
/// rational within `1e-9` (denominator at most [`MAX_DENOMINATOR`]), or
/// keep its exact decimal form when none exists.
pub fn exactify(cert: &[f64]) -> Result<Vec<Rational>> {
    let big = cert.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !big.is_finite() {
        return Err(Error::NotRepresentable(big));
    }
    if big == 0.0 {
        return Ok(vec![Rational::zero(); cert.len()]);
    }
    cert.iter()
        .map(|&v| {
            let s = v / big;
            if s.abs() < ROUND_TO_ZERO {
                Ok(Rational::zero())
            } else {
                match snap(s, 1e-9, MAX_DENOMINATOR) {
                    Some(r) => Ok(r),
                    None => to_rational(s),
                }
            }
        })
        .collect()
}

/// Continued-fraction approximation of `v` within `tol`.
fn snap(v: f64, tol: f64, max_den: i64) -> Option<Rational> {
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut x = v;
    for _ in 0..64 {
        let a = libm::floor(x);
        if a.abs() > 1e15 {
            return None;
        }
        let ai = a as i64;
        let h2 = ai.checked_mul(h1)?.checked_add(h0)?;
        let k2 = ai.checked_mul(k1)?.checked_add(k0)?;
        if k2 > max_den {
            return None;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if (h1 as f64 / k1 as f64 - v).abs() <= tol {
            return Some(Rational::new(BigInt::from(h1), BigInt::from(k1)));
        }
        let frac = x - a;
        if frac == 0.0 {
            return None;
        }
        x = 1.0 / frac;
    }
    None
}

/// Exact test of a float certificate after [`exactify`].
pub fn verify_certificate_exact<P: ExactSource + ?Sized>(cert: &[f64], p: &P, kind: CertificateKind) -> Result<bool> {
    let exact = exactify(cert)?;
    verify_rational_certificate(&exact, p, kind)
}

pub fn verify_rational_certificate<P: ExactSource + ?Sized>(
    cert: &[Rational],
    p: &P,
    kind: CertificateKind,
) -> Result<bool> {
    match kind {
        CertificateKind::Primal => p.is_primal_certificate(cert),
        CertificateKind::Dual => p.is_dual_certificate(cert),
    }
}
