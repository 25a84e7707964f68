//! LP data in standard form (`min cᵀx, Ax = b, x ≥ 0`) and in the bounded
//! inequality form (`min cᵀx, Ax ≥ b, l ≤ x ≤ u`), plus conversion between
//! them.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardFormLp {
    pub c: Vec<f64>,
    pub a: SparseMatrix,
    pub b: Vec<f64>,
    /// Constant added to every reported objective value.
    #[serde(default)]
    pub obj_offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralFormLp {
    pub c: Vec<f64>,
    pub a: SparseMatrix,
    pub b: Vec<f64>,
    /// May contain `-inf`.
    pub lower: Vec<f64>,
    /// May contain `+inf`.
    pub upper: Vec<f64>,
    #[serde(default)]
    pub obj_offset: f64,
}

/// Bound pattern of one variable of a [`GeneralFormLp`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VariableKind {
    Boxed,
    LowerOnly,
    UpperOnly,
    Free,
}

impl VariableKind {
    pub fn from_bounds(lower: f64, upper: f64) -> Self {
        match (lower.is_finite(), upper.is_finite()) {
            (true, true) => VariableKind::Boxed,
            (true, false) => VariableKind::LowerOnly,
            (false, true) => VariableKind::UpperOnly,
            (false, false) => VariableKind::Free,
        }
    }

    /// Projection onto the sign pattern a dual-infeasibility ray must have
    /// in this coordinate (zero, nonnegative, nonpositive or free).
    pub fn project_ray(self, x: f64) -> f64 {
        match self {
            VariableKind::Boxed => 0.0,
            VariableKind::LowerOnly => x.max(0.0),
            VariableKind::UpperOnly => x.min(0.0),
            VariableKind::Free => x,
        }
    }

    /// Projection onto the set of reduced costs that keep the dual
    /// objective finite for this coordinate.
    pub fn project_reduced_cost(self, r: f64) -> f64 {
        match self {
            VariableKind::Boxed => r,
            VariableKind::LowerOnly => r.max(0.0),
            VariableKind::UpperOnly => r.min(0.0),
            VariableKind::Free => 0.0,
        }
    }
}

impl StandardFormLp {
    pub fn new(c: Vec<f64>, a: SparseMatrix, b: Vec<f64>) -> Result<Self> {
        let lp = StandardFormLp { c, a, b, obj_offset: 0.0 };
        lp.check_dims()?;
        Ok(lp)
    }

    pub fn n(&self) -> usize {
        self.c.len()
    }

    pub fn m(&self) -> usize {
        self.b.len()
    }

    pub fn check_dims(&self) -> Result<()> {
        if self.a.n_cols() != self.c.len() {
            return Err(Error::DimensionMismatch { expected: self.a.n_cols(), got: self.c.len() });
        }
        if self.a.n_rows() != self.b.len() {
            return Err(Error::DimensionMismatch { expected: self.a.n_rows(), got: self.b.len() });
        }
        Ok(())
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        dims(&mut report, &self.a, self.c.len(), self.b.len());
        scan_data(&mut report, &self.a, &self.c, &self.b, None);
        report
    }

    /// Same problem as `Ax ≥ b, -Ax ≥ -b, 0 ≤ x`.
    pub fn to_general_form(&self) -> GeneralFormLp {
        let m = self.m();
        let mut t = Vec::with_capacity(2 * self.a.nnz());
        for (r, c, v) in self.a.triplets() {
            t.push((2 * r, c, v));
            t.push((2 * r + 1, c, -v));
        }
        let mut b = Vec::with_capacity(2 * m);
        for &bi in &self.b {
            b.push(bi);
            b.push(-bi);
        }
        GeneralFormLp {
            c: self.c.clone(),
            a: SparseMatrix::from_triplets(2 * m, self.n(), &t).expect("valid pattern"),
            b,
            lower: vec![0.0; self.n()],
            upper: vec![f64::INFINITY; self.n()],
            obj_offset: self.obj_offset,
        }
    }
}

impl GeneralFormLp {
    pub fn n(&self) -> usize {
        self.c.len()
    }

    pub fn m(&self) -> usize {
        self.b.len()
    }

    pub fn kind(&self, j: usize) -> VariableKind {
        VariableKind::from_bounds(self.lower[j], self.upper[j])
    }

    pub fn kinds(&self) -> Vec<VariableKind> {
        (0..self.n()).map(|j| self.kind(j)).collect()
    }

    pub fn check_dims(&self) -> Result<()> {
        let n = self.c.len();
        if self.a.n_cols() != n {
            return Err(Error::DimensionMismatch { expected: self.a.n_cols(), got: n });
        }
        if self.a.n_rows() != self.b.len() {
            return Err(Error::DimensionMismatch { expected: self.a.n_rows(), got: self.b.len() });
        }
        for len in [self.lower.len(), self.upper.len()] {
            if len != n {
                return Err(Error::DimensionMismatch { expected: n, got: len });
            }
        }
        Ok(())
    }

    pub fn check_bounds(&self) -> Result<()> {
        for (j, (&l, &u)) in self.lower.iter().zip(&self.upper).enumerate() {
            if l > u || l.is_nan() || u.is_nan() || l == f64::INFINITY || u == f64::NEG_INFINITY {
                return Err(Error::InvalidBounds { index: j, lower: l, upper: u });
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        dims(&mut report, &self.a, self.c.len(), self.b.len());
        for (what, len) in [(Field::Lower, self.lower.len()), (Field::Upper, self.upper.len())] {
            if len != self.c.len() {
                report.push(Severity::Error, Issue::Dimension { field: what, expected: self.c.len(), got: len });
            }
        }
        if report.has_errors() {
            return report;
        }
        for (j, (&l, &u)) in self.lower.iter().zip(&self.upper).enumerate() {
            if l.is_nan() || u.is_nan() || l > u || l == f64::INFINITY || u == f64::NEG_INFINITY {
                report.push(Severity::Error, Issue::InvalidBounds { index: j });
            }
        }
        scan_data(&mut report, &self.a, &self.c, &self.b, Some(self));
        report
    }

    /// Primal objective including the constant term.
    pub fn objective(&self, x: &[f64]) -> f64 {
        crate::linalg::dot(&self.c, x) + self.obj_offset
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Field {
    Cost,
    Rhs,
    Lower,
    Upper,
    Matrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Issue {
    Dimension {
        field: Field,
        expected: usize,
        got: usize,
    },
    NonFinite {
        field: Field,
        index: usize,
    },
    InvalidBounds {
        index: usize,
    },
    EmptyRow {
        index: usize,
    },
    /// A column without entries whose cost can push the variable to an
    /// unbounded side.
    EmptyColumn {
        index: usize,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub issues: Vec<(Severity, Issue)>,
}

impl ValidationReport {
    fn push(&mut self, severity: Severity, issue: Issue) {
        self.issues.push((severity, issue));
    }

    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn has_errors(&self) -> bool {
        self.issues.iter().any(|(s, _)| *s == Severity::Error)
    }

    pub fn errors(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|(s, _)| *s == Severity::Error).map(|(_, i)| i)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|(s, _)| *s == Severity::Warning).map(|(_, i)| i)
    }
}

fn dims(report: &mut ValidationReport, a: &SparseMatrix, n: usize, m: usize) {
    if a.n_cols() != n {
        report.push(Severity::Error, Issue::Dimension { field: Field::Cost, expected: a.n_cols(), got: n });
    }
    if a.n_rows() != m {
        report.push(Severity::Error, Issue::Dimension { field: Field::Rhs, expected: a.n_rows(), got: m });
    }
}

fn scan_data(report: &mut ValidationReport, a: &SparseMatrix, c: &[f64], b: &[f64], general: Option<&GeneralFormLp>) {
    if report.has_errors() {
        return;
    }
    for (i, v) in c.iter().enumerate() {
        if !v.is_finite() {
            report.push(Severity::Error, Issue::NonFinite { field: Field::Cost, index: i });
        }
    }
    for (i, v) in b.iter().enumerate() {
        if !v.is_finite() {
            report.push(Severity::Error, Issue::NonFinite { field: Field::Rhs, index: i });
        }
    }
    let mut col_count = vec![0usize; a.n_cols()];
    for r in 0..a.n_rows() {
        let mut len = 0;
        for (col, _) in a.row(r) {
            col_count[col] += 1;
            len += 1;
        }
        if len == 0 {
            report.push(Severity::Warning, Issue::EmptyRow { index: r });
        }
    }
    for (j, &count) in col_count.iter().enumerate() {
        if count > 0 || !c[j].is_finite() || c[j] == 0.0 {
            continue;
        }
        // the cost pushes x_j down when positive, up when negative
        let unbounded_side = match general {
            None => c[j] < 0.0,
            Some(g) => (c[j] > 0.0 && g.lower[j] == f64::NEG_INFINITY) || (c[j] < 0.0 && g.upper[j] == f64::INFINITY),
        };
        if unbounded_side {
            report.push(Severity::Warning, Issue::EmptyColumn { index: j });
        }
    }
}

/// Where an original variable lives in the standard-form copy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ColumnMap {
    /// `x = lower + x'`.
    Shifted { col: usize, lower: f64 },
    /// `x = upper - x'`.
    Reflected { col: usize, upper: f64 },
    /// `x = x⁺ - x⁻`.
    Split { pos: usize, neg: usize },
    /// `x = lower + x'` with `x' + t = upper - lower`.
    Boxed { col: usize, lower: f64, bound_row: usize, slack: usize },
}

/// Where an original `≥` row lives in the standard-form copy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RowMap {
    /// `a x' - s = b'` with surplus column `slack`.
    Surplus { row: usize, slack: usize },
    /// One half of an opposing pair merged into an equality; `negated` marks
    /// the `-a x ≥ -b` half.
    Equality { row: usize, negated: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexMap {
    pub columns: Vec<ColumnMap>,
    pub rows: Vec<RowMap>,
    pub n_std: usize,
    pub m_std: usize,
}

impl IndexMap {
    /// Maps a standard-form point back to original coordinates.
    pub fn pull_back_point(&self, x_std: &[f64]) -> Vec<f64> {
        self.columns
            .iter()
            .map(|c| match *c {
                ColumnMap::Shifted { col, lower } => lower + x_std[col],
                ColumnMap::Reflected { col, upper } => upper - x_std[col],
                ColumnMap::Split { pos, neg } => x_std[pos] - x_std[neg],
                ColumnMap::Boxed { col, lower, .. } => lower + x_std[col],
            })
            .collect()
    }

    /// Maps a standard-form direction (e.g. a dual-infeasibility ray) back to
    /// original coordinates; shifts drop out.
    pub fn pull_back_ray(&self, d_std: &[f64]) -> Vec<f64> {
        self.columns
            .iter()
            .map(|c| match *c {
                ColumnMap::Shifted { col, .. } | ColumnMap::Boxed { col, .. } => d_std[col],
                ColumnMap::Reflected { col, .. } => -d_std[col],
                ColumnMap::Split { pos, neg } => d_std[pos] - d_std[neg],
            })
            .collect()
    }

    /// Maps a standard-form primal-infeasibility multiplier (`bᵀy < 0`,
    /// `Aᵀy ≥ 0`) to a nonnegative multiplier on the original `≥` rows
    /// (`bᵀy + lᵀr₊ - uᵀr₋ > 0`, `r = -Aᵀy`). The sign flips between forms.
    pub fn pull_back_dual_ray(&self, y_std: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| match *r {
                RowMap::Surplus { row, .. } => -y_std[row],
                RowMap::Equality { row, negated: false } => (-y_std[row]).max(0.0),
                RowMap::Equality { row, negated: true } => y_std[row].max(0.0),
            })
            .collect()
    }
}

/// Converts `Ax ≥ b, l ≤ x ≤ u` to `A'x' = b', x' ≥ 0`.
///
/// Column order: one column per original variable (two for free ones), then
/// surplus columns in row order, then slacks of boxed variables. Pairs of
/// rows `a x ≥ β`, `-a x ≥ -β` are merged into a single equality row without
/// a surplus column.
pub fn to_standard_form(p: &GeneralFormLp) -> Result<(StandardFormLp, IndexMap)> {
    p.check_dims()?;
    p.check_bounds()?;
    let n = p.n();
    let m = p.m();

    let mut columns = Vec::with_capacity(n);
    let mut c_std = Vec::new();
    // per original variable: (std column, sign) pairs; shift value
    let mut expand: Vec<([(usize, f64); 2], usize, f64)> = Vec::with_capacity(n);
    let mut shift = vec![0.0; n];
    for j in 0..n {
        let (l, u) = (p.lower[j], p.upper[j]);
        let col = c_std.len();
        match p.kind(j) {
            VariableKind::LowerOnly => {
                columns.push(ColumnMap::Shifted { col, lower: l });
                c_std.push(p.c[j]);
                shift[j] = l;
                expand.push(([(col, 1.0), (0, 0.0)], 1, l));
            }
            VariableKind::UpperOnly => {
                columns.push(ColumnMap::Reflected { col, upper: u });
                c_std.push(-p.c[j]);
                shift[j] = u;
                expand.push(([(col, -1.0), (0, 0.0)], 1, u));
            }
            VariableKind::Free => {
                columns.push(ColumnMap::Split { pos: col, neg: col + 1 });
                c_std.push(p.c[j]);
                c_std.push(-p.c[j]);
                expand.push(([(col, 1.0), (col + 1, -1.0)], 2, 0.0));
            }
            VariableKind::Boxed => {
                // bound_row and slack patched below
                columns.push(ColumnMap::Boxed { col, lower: l, bound_row: 0, slack: 0 });
                c_std.push(p.c[j]);
                shift[j] = l;
                expand.push(([(col, 1.0), (0, 0.0)], 1, l));
            }
        }
    }
    let n_struct = c_std.len();

    let rows_dense: Vec<Vec<(usize, f64)>> = (0..m).map(|i| p.a.row(i).collect()).collect();
    let partner = opposing_pairs(&rows_dense, &p.b);

    let mut rows = vec![RowMap::Surplus { row: 0, slack: 0 }; m];
    let mut triplets = Vec::new();
    let mut b_std = Vec::new();
    let mut obj_offset = p.obj_offset;
    for j in 0..n {
        obj_offset += p.c[j] * shift[j];
    }
    let mut surplus_rows = Vec::new();
    for i in 0..m {
        if let Some(&first) = partner.get(&i) {
            if first < i {
                let RowMap::Equality { row, .. } = rows[first] else { unreachable!() };
                rows[i] = RowMap::Equality { row, negated: true };
                continue;
            }
        }
        let row = b_std.len();
        let mut rhs = p.b[i];
        for &(j, v) in &rows_dense[i] {
            rhs -= v * shift[j];
            let (parts, count, _) = expand[j];
            for &(col, sign) in &parts[..count] {
                triplets.push((row, col, v * sign));
            }
        }
        b_std.push(rhs);
        if partner.contains_key(&i) {
            rows[i] = RowMap::Equality { row, negated: false };
        } else {
            surplus_rows.push((i, row));
        }
    }
    let mut next_col = n_struct;
    for (i, row) in surplus_rows {
        triplets.push((row, next_col, -1.0));
        rows[i] = RowMap::Surplus { row, slack: next_col };
        c_std.push(0.0);
        next_col += 1;
    }
    for j in 0..n {
        if let ColumnMap::Boxed { col, lower, .. } = columns[j] {
            let row = b_std.len();
            triplets.push((row, col, 1.0));
            triplets.push((row, next_col, 1.0));
            b_std.push(p.upper[j] - p.lower[j]);
            c_std.push(0.0);
            columns[j] = ColumnMap::Boxed { col, lower, bound_row: row, slack: next_col };
            next_col += 1;
        }
    }
    let a = SparseMatrix::from_triplets(b_std.len(), next_col, &triplets)?;
    let map = IndexMap { columns, rows, n_std: next_col, m_std: b_std.len() };
    let lp = StandardFormLp { c: c_std, a, b: b_std, obj_offset };
    Ok((lp, map))
}

/// Finds rows `i < j` with `a_j = -a_i` and `b_j = -b_i`; each row is used
/// in at most one pair. Returns both directions of every pair.
fn opposing_pairs(rows: &[Vec<(usize, f64)>], b: &[f64]) -> BTreeMap<usize, usize> {
    let key = |i: usize, negate: bool| -> Vec<(usize, u64)> {
        let s = if negate { -1.0 } else { 1.0 };
        let mut k: Vec<(usize, u64)> = rows[i].iter().map(|&(c, v)| (c, (s * v + 0.0).to_bits())).collect();
        k.push((usize::MAX, (s * b[i] + 0.0).to_bits()));
        k
    };
    let mut waiting: BTreeMap<Vec<(usize, u64)>, Vec<usize>> = BTreeMap::new();
    let mut pairs = BTreeMap::new();
    for i in 0..rows.len() {
        let neg = key(i, true);
        if let Some(list) = waiting.get_mut(&neg) {
            if let Some(first) = list.pop() {
                pairs.insert(first, i);
                pairs.insert(i, first);
                continue;
            }
        }
        waiting.entry(key(i, false)).or_default().push(i);
    }
    pairs
}

#[cfg(test)]
mod tests {
    use super::*;

    fn standard_fixture() -> StandardFormLp {
        let a = SparseMatrix::from_dense(&[&[1.0, 1.0, 0.0], &[0.0, 2.0, -1.0]]).unwrap();
        StandardFormLp::new(vec![1.0, 2.0, 0.5], a, vec![3.0, 1.0]).unwrap()
    }

    #[test]
    fn standard_round_trip_is_unchanged() {
        let s = standard_fixture();
        let (back, map) = to_standard_form(&s.to_general_form()).unwrap();
        assert_eq!(back.a, s.a);
        assert_eq!(back.b, s.b);
        assert_eq!(back.c, s.c);
        assert_eq!(back.obj_offset, 0.0);
        assert_eq!(map.rows[1], RowMap::Equality { row: 0, negated: true });
    }

    #[test]
    fn free_variable_is_split() {
        let a = SparseMatrix::from_dense(&[&[2.0]]).unwrap();
        let g = GeneralFormLp {
            c: vec![3.0],
            a,
            b: vec![1.0],
            lower: vec![f64::NEG_INFINITY],
            upper: vec![f64::INFINITY],
            obj_offset: 0.0,
        };
        let (s, map) = to_standard_form(&g).unwrap();
        assert_eq!(s.c, vec![3.0, -3.0, 0.0]);
        assert_eq!(s.a.get(0, 0), 2.0);
        assert_eq!(s.a.get(0, 1), -2.0);
        assert_eq!(s.a.get(0, 2), -1.0);
        assert_eq!(map.pull_back_point(&[1.5, 0.5, 0.0]), vec![1.0]);
    }

    #[test]
    fn bounds_are_shifted_reflected_and_boxed() {
        let a = SparseMatrix::from_dense(&[&[1.0, 1.0, 1.0]]).unwrap();
        let g = GeneralFormLp {
            c: vec![1.0, 1.0, 1.0],
            a,
            b: vec![0.0],
            lower: vec![2.0, f64::NEG_INFINITY, -1.0],
            upper: vec![f64::INFINITY, 5.0, 1.0],
            obj_offset: 0.25,
        };
        let (s, map) = to_standard_form(&g).unwrap();
        // x0 = 2 + x0', x1 = 5 - x1', x2 = -1 + x2'
        assert_eq!(s.b[0], -(2.0 + 5.0 - 1.0));
        assert_eq!(s.obj_offset, 0.25 + 2.0 + 5.0 - 1.0);
        assert_eq!(s.m(), 2);
        assert_eq!(s.b[1], 2.0);
        let x = map.pull_back_point(&[1.0, 1.0, 0.5, 0.0, 1.5]);
        assert_eq!(x, vec![3.0, 4.0, -0.5]);
    }

    #[test]
    fn inverted_bounds_rejected() {
        let g = GeneralFormLp {
            c: vec![0.0],
            a: SparseMatrix::zeros(0, 1),
            b: vec![],
            lower: vec![1.0],
            upper: vec![0.0],
            obj_offset: 0.0,
        };
        assert!(matches!(to_standard_form(&g), Err(Error::InvalidBounds { index: 0, .. })));
        assert!(g.validate().has_errors());
    }

    #[test]
    fn validation_flags() {
        assert!(standard_fixture().validate().is_empty());
        let mut s = standard_fixture();
        s.b[1] = f64::NAN;
        let r = s.validate();
        assert!(r.errors().any(|i| *i == Issue::NonFinite { field: Field::Rhs, index: 1 }));

        let a = SparseMatrix::from_dense(&[&[1.0, 0.0]]).unwrap();
        let s = StandardFormLp::new(vec![1.0, -2.0], a, vec![1.0]).unwrap();
        let r = s.validate();
        assert!(!r.has_errors());
        assert_eq!(r.warnings().collect::<Vec<_>>(), vec![&Issue::EmptyColumn { index: 1 }]);
    }

    #[test]
    fn validation_dimension_errors() {
        let mut s = standard_fixture();
        s.c.pop();
        assert!(s.validate().has_errors());
        assert!(s.check_dims().is_err());
    }

    #[test]
    fn reduced_cost_projection() {
        assert_eq!(VariableKind::Boxed.project_reduced_cost(-4.0), -4.0);
        assert_eq!(VariableKind::Free.project_reduced_cost(-4.0), 0.0);
        assert_eq!(VariableKind::LowerOnly.project_reduced_cost(-3.0), 0.0);
        assert_eq!(VariableKind::UpperOnly.project_reduced_cost(2.0), 0.0);
    }
}
