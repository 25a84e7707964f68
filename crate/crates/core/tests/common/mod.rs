//! Helpers shared by the integration tests, including a vertex-enumeration
//! LP oracle that shares no code with the elimination oracle.
#![allow(dead_code)]

use num_traits::{Signed, Zero};
use pdhg_core::oracle::{ExactLp, Rational, Relation};
use pdhg_core::{GeneralFormLp, SparseMatrix, StandardFormLp};
use proptest::prelude::*;

pub fn sparse(rows: &[Vec<f64>]) -> SparseMatrix {
    let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
    SparseMatrix::from_dense(&refs).unwrap()
}

pub fn standard(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> StandardFormLp {
    StandardFormLp::new(c.to_vec(), sparse(a), b.to_vec()).unwrap()
}

/// Solves `M x = rhs` for square or tall `M` by exact elimination. `None`
/// when the system is inconsistent or the columns are dependent.
fn solve_exact(m: &[Vec<Rational>], rhs: &[Rational]) -> Option<Vec<Rational>> {
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    let mut aug: Vec<Vec<Rational>> = m
        .iter()
        .zip(rhs)
        .map(|(r, b)| {
            let mut r = r.clone();
            r.push(b.clone());
            r
        })
        .collect();
    let mut piv_row = 0;
    for col in 0..cols {
        let p = (piv_row..rows).find(|&i| !aug[i][col].is_zero())?;
        aug.swap(piv_row, p);
        let pv = aug[piv_row][col].clone();
        for v in aug[piv_row].iter_mut() {
            *v = &*v / &pv;
        }
        for i in 0..rows {
            if i != piv_row && !aug[i][col].is_zero() {
                let f = aug[i][col].clone();
                for j in 0..=cols {
                    let sub = &f * &aug[piv_row][j];
                    aug[i][j] -= sub;
                }
            }
        }
        piv_row += 1;
    }
    if aug[piv_row..].iter().any(|r| !r[cols].is_zero()) {
        return None;
    }
    Some((0..cols).map(|j| aug[j][cols].clone()).collect())
}

/// `{x : Mx = rhs, x ≥ 0}` as `(M, rhs)` over rationals.
pub struct Polyhedron {
    pub m: Vec<Vec<Rational>>,
    pub rhs: Vec<Rational>,
}

impl Polyhedron {
    pub fn n(&self) -> usize {
        self.m.first().map_or(0, |r| r.len())
    }

    /// Every basic feasible solution.
    pub fn vertices(&self) -> Vec<Vec<Rational>> {
        let n = self.n();
        let rank_cap = self.m.len().min(n);
        let mut out = Vec::new();
        let mut subset = Vec::new();
        self.walk(0, rank_cap, &mut subset, &mut out);
        if self.rhs.iter().all(Zero::is_zero) {
            out.push(vec![Rational::zero(); n]);
        }
        out
    }

    fn walk(&self, start: usize, cap: usize, subset: &mut Vec<usize>, out: &mut Vec<Vec<Rational>>) {
        if !subset.is_empty() {
            let cols: Vec<Vec<Rational>> =
                self.m.iter().map(|r| subset.iter().map(|&j| r[j].clone()).collect()).collect();
            if let Some(xs) = solve_exact(&cols, &self.rhs) {
                if xs.iter().all(|v| !v.is_negative()) {
                    let mut x = vec![Rational::zero(); self.n()];
                    for (k, &j) in subset.iter().enumerate() {
                        x[j] = xs[k].clone();
                    }
                    out.push(x);
                }
            }
        }
        if subset.len() == cap {
            return;
        }
        for j in start..self.n() {
            subset.push(j);
            self.walk(j + 1, cap, subset, out);
            subset.pop();
        }
    }

    /// Pointed polyhedra are nonempty exactly when they have a vertex.
    pub fn is_nonempty(&self) -> bool {
        !self.vertices().is_empty()
    }
}

/// Rewrites a mixed system over free variables as `Mx' = rhs, x' ≥ 0` by
/// splitting every variable and adding a surplus column per `≥` row.
pub fn to_polyhedron(sys: &ExactLp) -> Polyhedron {
    let n = sys.n_vars;
    let ge = sys.constraints.iter().filter(|c| c.relation == Relation::Ge).count();
    let width = 2 * n + ge;
    let mut m = Vec::new();
    let mut rhs = Vec::new();
    let mut slack = 2 * n;
    for c in &sys.constraints {
        let mut row = vec![Rational::zero(); width];
        for j in 0..n {
            row[j] = c.coeffs[j].clone();
            row[n + j] = -c.coeffs[j].clone();
        }
        if c.relation == Relation::Ge {
            row[slack] = Rational::from_integer((-1).into());
            slack += 1;
        }
        m.push(row);
        rhs.push(c.rhs.clone());
    }
    Polyhedron { m, rhs }
}

pub fn standard_polyhedron(p: &StandardFormLp) -> Polyhedron {
    let d = p.a.to_dense();
    let q = |v: f64| pdhg_core::oracle::to_rational(v).unwrap();
    Polyhedron {
        m: d.iter().map(|r| r.iter().map(|&v| q(v)).collect()).collect(),
        rhs: p.b.iter().map(|&v| q(v)).collect(),
    }
}

/// Minimum of `cᵀx` over the vertices; meaningful only when the LP is
/// known to be bounded.
pub fn vertex_minimum(p: &StandardFormLp) -> Option<Rational> {
    let poly = standard_polyhedron(p);
    let c: Vec<Rational> = p.c.iter().map(|&v| pdhg_core::oracle::to_rational(v).unwrap()).collect();
    poly.vertices().iter().map(|x| x.iter().zip(&c).fold(Rational::zero(), |acc, (x, c)| acc + x * c)).min()
}

/// Small integer standard-form LPs, `n, m ≤ 3`.
pub fn small_standard() -> impl Strategy<Value = pdhg_core::StandardFormLp> {
    (1usize..=3, 1usize..=3).prop_flat_map(|(n, m)| {
        (
            prop::collection::vec(prop::collection::vec(-2i32..=2, n), m),
            prop::collection::vec(-2i32..=2, m),
            prop::collection::vec(-2i32..=2, n),
        )
            .prop_map(|(a, b, c)| {
                let a: Vec<Vec<f64>> = a.iter().map(|r| r.iter().map(|&v| v as f64).collect()).collect();
                let b: Vec<f64> = b.iter().map(|&v| v as f64).collect();
                let c: Vec<f64> = c.iter().map(|&v| v as f64).collect();
                standard(&a, &b, &c)
            })
    })
}

pub fn bound_pair() -> impl Strategy<Value = (f64, f64)> {
    prop_oneof![
        Just((f64::NEG_INFINITY, f64::INFINITY)),
        (-1i32..=1).prop_map(|l| (l as f64, f64::INFINITY)),
        (-1i32..=1).prop_map(|u| (f64::NEG_INFINITY, u as f64)),
        (-1i32..=1, 0i32..=2).prop_map(|(l, w)| (l as f64, (l + w) as f64)),
    ]
}

pub fn small_general() -> impl Strategy<Value = GeneralFormLp> {
    (1usize..=3, 1usize..=3).prop_flat_map(|(n, m)| {
        (
            prop::collection::vec(prop::collection::vec(-2i32..=2, n), m),
            prop::collection::vec(-2i32..=2, m),
            prop::collection::vec(-2i32..=2, n),
            prop::collection::vec(bound_pair(), n),
        )
            .prop_map(|(a, b, c, bounds)| {
                let a: Vec<Vec<f64>> = a.iter().map(|r| r.iter().map(|&v| v as f64).collect()).collect();
                GeneralFormLp {
                    c: c.iter().map(|&v| v as f64).collect(),
                    a: sparse(&a),
                    b: b.iter().map(|&v| v as f64).collect(),
                    lower: bounds.iter().map(|p| p.0).collect(),
                    upper: bounds.iter().map(|p| p.1).collect(),
                    obj_offset: 0.0,
                }
            })
    })
}
