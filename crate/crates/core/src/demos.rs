//! Built-in instances used by the CLI demos and the test suites.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::linalg::SparseMatrix;
use crate::model::{to_standard_form, GeneralFormLp, IndexMap, StandardFormLp};
use crate::oracle::LpClass;
use crate::pdhg::{SignedLp, VarSign};

/// `min x0 + x1 - alpha x2` subject to `x0 + 2x1 ≤ 2`, `3x0 + x1 ≤ 2`,
/// `x0 + x1 ≥ beta`, all variables free.
///
/// `(0, 1)`: both feasible. `(1, 2)`: both infeasible. `(0, 2)`: primal
/// infeasible. `(1, 1)`: primal unbounded.
pub fn example1(alpha: f64, beta: f64) -> GeneralFormLp {
    let a = SparseMatrix::from_dense(&[&[-1.0, -2.0, 0.0], &[-3.0, -1.0, 0.0], &[1.0, 1.0, 0.0]]).expect("static data");
    GeneralFormLp {
        c: vec![1.0, 1.0, -alpha],
        a,
        b: vec![-2.0, -2.0, beta],
        lower: vec![f64::NEG_INFINITY; 3],
        upper: vec![f64::INFINITY; 3],
        obj_offset: 0.0,
    }
}

/// [`example1`] in `Ax = b, x ≥ 0` form: six split columns and three
/// surplus columns.
pub fn example1_standard(alpha: f64, beta: f64) -> (StandardFormLp, IndexMap) {
    to_standard_form(&example1(alpha, beta)).expect("valid bounds")
}

/// Unconstrained bilinear saddle problem `min_x max_y yᵀ(Ax - b) + cᵀx`
/// with a fixed invertible 4×4 `A`; no projection is ever active. The
/// data are chosen so that `x = (1, -1, 2, 0)`, `y = (0.5, 1, -1, 2)` is
/// the unique saddle point.
pub fn bilinear_game() -> SignedLp {
    let a = SparseMatrix::from_dense(&[
        &[2.0, 1.0, 0.0, 0.0],
        &[0.0, 1.5, 0.5, 0.0],
        &[0.0, 0.0, 1.0, 0.3],
        &[0.4, 0.0, 0.0, 0.8],
    ])
    .expect("static data");
    let xs = [1.0, -1.0, 2.0, 0.0];
    let ys = [0.5, 1.0, -1.0, 2.0];
    let b = crate::linalg::spmv(&a, &xs).expect("static data");
    let c = crate::linalg::spmv_t(&a, &ys).expect("static data").iter().map(|v| -v).collect();
    SignedLp { lp: StandardFormLp { c, a, b, obj_offset: 0.0 }, signs: vec![VarSign::Free; 4] }
}

/// Random small general-form LP placed in `cell` by construction, with
/// integer data. Columns are free or `x_j ≥ 0` at random.
///
/// Primal feasibility comes from a point `x0` and nonnegative slack,
/// primal infeasibility from a nonnegative `y0` with `Aᵀy0 = 0` and
/// `bᵀy0 > 0`. Dual feasibility comes from `c = Aᵀy1 + ρ`, dual
/// infeasibility from a direction `d` with `Ad ≥ 0` and `cᵀd < 0`.
/// Draws are repeated until `A` has no zero row.
///
/// With a single column both rays live on the same line, so every row in
/// the support of `y0` would vanish; `BothInfeasible` needs `n ≥ 2`.
pub fn random_cell_lp<R: Rng + ?Sized>(cell: LpClass, n: usize, m: usize, rng: &mut R) -> GeneralFormLp {
    assert!(n >= 1 && m >= 2, "need at least one column and two rows");
    assert!(n >= 2 || cell != LpClass::BothInfeasible, "both-infeasible instances need two columns");
    loop {
        let p = cell_lp_draw(cell, n, m, rng);
        if (0..m).all(|i| p.a.row(i).any(|(_, v)| v != 0.0)) {
            return p;
        }
    }
}

fn cell_lp_draw<R: Rng + ?Sized>(cell: LpClass, n: usize, m: usize, rng: &mut R) -> GeneralFormLp {
    let primal_inf = matches!(cell, LpClass::BothInfeasible | LpClass::PrimalInfDualFeas);
    let dual_inf = matches!(cell, LpClass::BothInfeasible | LpClass::PrimalFeasDualInf);
    let lower_only: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
    let mut a: Vec<Vec<i64>> = (0..m).map(|_| (0..n).map(|_| rng.gen_range(-3..=3)).collect()).collect();

    // support of y0 and the row rebuilt from the others
    let k = rng.gen_range(0..m);
    let y0: Vec<i64> = (0..m)
        .map(|i| {
            if i == k {
                1
            } else if rng.gen_bool(0.6) {
                rng.gen_range(1..=2)
            } else {
                0
            }
        })
        .collect();

    let jd = rng.gen_range(0..n);
    let mut d = vec![0i64; n];
    if dual_inf {
        for (j, dj) in d.iter_mut().enumerate() {
            *dj = if j == jd {
                1
            } else if lower_only[j] {
                rng.gen_range(0..=1)
            } else {
                rng.gen_range(-1..=1)
            };
        }
        for (i, row) in a.iter_mut().enumerate() {
            let ad: i64 = row.iter().zip(&d).map(|(x, y)| x * y).sum();
            // rows in the support of y0 must stay orthogonal to d
            let delta = if primal_inf && y0[i] > 0 { 0 } else { rng.gen_range(0..=2) };
            row[jd] += delta - ad;
        }
    }
    if primal_inf {
        let rebuilt: Vec<i64> =
            (0..n).map(|j| -(0..m).filter(|&i| i != k).map(|i| y0[i] * a[i][j]).sum::<i64>()).collect();
        a[k] = rebuilt;
    }

    let b: Vec<i64> = if primal_inf {
        let mut b: Vec<i64> = (0..m).map(|_| rng.gen_range(-3..=3)).collect();
        let s: i64 = b.iter().zip(&y0).map(|(x, y)| x * y).sum();
        b[k] += rng.gen_range(1..=3) - s;
        b
    } else {
        let x0: Vec<i64> =
            (0..n).map(|j| if lower_only[j] { rng.gen_range(0..=2) } else { rng.gen_range(-2..=2) }).collect();
        a.iter().map(|row| row.iter().zip(&x0).map(|(x, y)| x * y).sum::<i64>() - rng.gen_range(0..=2)).collect()
    };

    let c: Vec<i64> = if dual_inf {
        let mut c: Vec<i64> = (0..n).map(|_| rng.gen_range(-3..=3)).collect();
        let s: i64 = c.iter().zip(&d).map(|(x, y)| x * y).sum();
        c[jd] -= s + rng.gen_range(1..=3);
        c
    } else {
        let y1: Vec<i64> = (0..m).map(|_| rng.gen_range(0..=2)).collect();
        (0..n)
            .map(|j| {
                let aty: i64 = (0..m).map(|i| a[i][j] * y1[i]).sum();
                aty + if lower_only[j] { rng.gen_range(0..=2) } else { 0 }
            })
            .collect()
    };

    let dense: Vec<Vec<f64>> = a.iter().map(|r| r.iter().map(|&v| v as f64).collect()).collect();
    let refs: Vec<&[f64]> = dense.iter().map(|r| r.as_slice()).collect();
    GeneralFormLp {
        c: c.iter().map(|&v| v as f64).collect(),
        a: SparseMatrix::from_dense(&refs).expect("rectangular"),
        b: b.iter().map(|&v| v as f64).collect(),
        lower: lower_only.iter().map(|&l| if l { 0.0 } else { f64::NEG_INFINITY }).collect(),
        upper: vec![f64::INFINITY; n],
        obj_offset: 0.0,
    }
}

/// Two sources supplying 1 and 2 units must exactly meet two demands of 2
/// units each: primal infeasible, dual feasible.
pub fn transport_shortfall() -> StandardFormLp {
    let a = SparseMatrix::from_dense(&[
        &[1.0, 1.0, 0.0, 0.0],
        &[0.0, 0.0, 1.0, 1.0],
        &[1.0, 0.0, 1.0, 0.0],
        &[0.0, 1.0, 0.0, 1.0],
    ])
    .expect("static data");
    StandardFormLp { c: vec![1.0, 2.0, 3.0, 1.0], a, b: vec![1.0, 2.0, 2.0, 2.0], obj_offset: 0.0 }
}

/// `min -x0 + x2` subject to `x0 - x1 = 1`, `x2 = 2`: moving along
/// `x0 = 1 + x1` lowers the objective without bound.
pub fn unbounded_ray() -> StandardFormLp {
    let a = SparseMatrix::from_dense(&[&[1.0, -1.0, 0.0], &[0.0, 0.0, 1.0]]).expect("static data");
    StandardFormLp { c: vec![-1.0, 0.0, 1.0], a, b: vec![1.0, 2.0], obj_offset: 0.0 }
}

/// `min x2` subject to `x2 = 1`, `x0 = x1`. PDHG from zero settles on
/// `x = (0, 0, 1)`, `y = (1, 0)`, where `x0` and `x1` have zero value and
/// zero reduced cost: strict complementarity fails at the limit.
pub fn degenerate_tie() -> StandardFormLp {
    let a = SparseMatrix::from_dense(&[&[0.0, 0.0, -1.0], &[1.0, -1.0, 0.0]]).expect("static data");
    StandardFormLp { c: vec![0.0, 0.0, 1.0], a, b: vec![-1.0, 0.0], obj_offset: 0.0 }
}

/// A named standard-form instance with its known feasibility cell.
#[derive(Debug, Clone, PartialEq)]
pub struct DeskInstance {
    pub name: &'static str,
    pub lp: StandardFormLp,
    pub class: LpClass,
}

/// The small instances the analysis tests run on.
pub fn desk_instances() -> Vec<DeskInstance> {
    let ex1 = |a, b| example1_standard(a, b).0;
    vec![
        DeskInstance { name: "ex1_feasible", lp: ex1(0.0, 1.0), class: LpClass::BothFeasible },
        DeskInstance { name: "ex1_both_infeasible", lp: ex1(1.0, 2.0), class: LpClass::BothInfeasible },
        DeskInstance { name: "ex1_primal_infeasible", lp: ex1(0.0, 2.0), class: LpClass::PrimalInfDualFeas },
        DeskInstance { name: "ex1_dual_infeasible", lp: ex1(1.0, 1.0), class: LpClass::PrimalFeasDualInf },
        DeskInstance { name: "transport_shortfall", lp: transport_shortfall(), class: LpClass::PrimalInfDualFeas },
        DeskInstance { name: "unbounded_ray", lp: unbounded_ray(), class: LpClass::PrimalFeasDualInf },
        DeskInstance { name: "degenerate_tie", lp: degenerate_tie(), class: LpClass::BothFeasible },
    ]
}
