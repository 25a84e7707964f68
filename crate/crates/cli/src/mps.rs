//! Reader and writer for LP files in MPS format.
//!
//! Lines are split on whitespace first. Only when that reading fails (wrong
//! field count, a bad number or an unknown name) is the line cut into the
//! fixed-format column windows, which allows names containing spaces.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use pdhg_core::{GeneralFormLp, SparseMatrix};
use thiserror::Error;

/// Values at or beyond this magnitude in BOUNDS mean "no bound".
pub const INFINITY_CUTOFF: f64 = 1e30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RowKind {
    N,
    L,
    G,
    E,
}

impl RowKind {
    fn code(self) -> &'static str {
        match self {
            RowKind::N => "N",
            RowKind::L => "L",
            RowKind::G => "G",
            RowKind::E => "E",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundKind {
    Lo,
    Up,
    Fx,
    Fr,
    Mi,
    Pl,
}

impl BoundKind {
    fn code(self) -> &'static str {
        match self {
            BoundKind::Lo => "LO",
            BoundKind::Up => "UP",
            BoundKind::Fx => "FX",
            BoundKind::Fr => "FR",
            BoundKind::Mi => "MI",
            BoundKind::Pl => "PL",
        }
    }

    fn takes_value(self) -> bool {
        matches!(self, BoundKind::Lo | BoundKind::Up | BoundKind::Fx)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bound {
    pub kind: BoundKind,
    pub column: usize,
    /// `None` for FR, MI and PL.
    pub value: Option<f64>,
}

/// An MPS file as written, before any conversion. Only the first RHS,
/// RANGES and BOUNDS set of the file is kept.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MpsDocument {
    pub name: String,
    pub rows: Vec<(RowKind, String)>,
    pub columns: Vec<String>,
    /// `(row, column, value)`, sorted by column and then row. Explicit
    /// zeros are dropped.
    pub entries: Vec<(usize, usize, f64)>,
    /// Keyed by row index. A value on the objective row is the negated
    /// objective constant.
    pub rhs: BTreeMap<usize, f64>,
    pub ranges: BTreeMap<usize, f64>,
    pub bounds: Vec<Bound>,
}

impl MpsDocument {
    /// Index of the first N row.
    pub fn objective_row(&self) -> Option<usize> {
        self.rows.iter().position(|(k, _)| *k == RowKind::N)
    }

    /// Number of L, G and E rows.
    pub fn constraint_count(&self) -> usize {
        self.rows.iter().filter(|(k, _)| *k != RowKind::N).count()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MpsError {
    #[error("line {line}: unknown section `{name}`")]
    UnknownSection { line: usize, name: String },
    #[error("line {line}: duplicate row `{name}`")]
    DuplicateRow { line: usize, name: String },
    #[error("line {line}: unknown row `{name}`")]
    UnknownRow { line: usize, name: String },
    #[error("line {line}: unknown column `{name}`")]
    UnknownColumn { line: usize, name: String },
    #[error("line {line}: bound type `{code}` is not supported (only LO, UP, FX, FR, MI, PL)")]
    UnsupportedBound { line: usize, code: String },
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("column `{name}`: lower bound {lower} exceeds upper bound {upper}")]
    ConflictingBounds { name: String, lower: f64, upper: f64 },
    #[error("name `{0}` cannot be written in free format")]
    Unwritable(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Rows,
    Columns,
    Rhs,
    Ranges,
    Bounds,
}

/// One data line, interpreted but not yet applied.
enum Item {
    Row(RowKind, String),
    Column { name: String, cells: Vec<(usize, f64)> },
    Rhs { set: String, cells: Vec<(usize, f64)> },
    Range { set: String, cells: Vec<(usize, f64)> },
    Bound { set: String, bound: Bound },
}

#[derive(Default)]
struct Parser {
    doc: MpsDocument,
    section: Option<Section>,
    row_index: HashMap<String, usize>,
    col_index: HashMap<String, usize>,
    seen: HashSet<(usize, usize)>,
    rhs_set: Option<String>,
    range_set: Option<String>,
    bound_set: Option<String>,
}

pub fn parse_mps(input: &[u8]) -> Result<MpsDocument, MpsError> {
    let text = String::from_utf8_lossy(input);
    let mut p = Parser::default();
    let mut last = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last = line;
        let raw = raw.trim_end();
        if raw.trim_start().is_empty() || raw.trim_start().starts_with('*') {
            continue;
        }
        if !raw.starts_with(char::is_whitespace) {
            let mut words = raw.split_whitespace();
            let key = words.next().unwrap_or_default().to_ascii_uppercase();
            p.section = match key.as_str() {
                "NAME" => {
                    p.doc.name = raw[4..].trim().to_string();
                    None
                }
                "ROWS" => Some(Section::Rows),
                "COLUMNS" => Some(Section::Columns),
                "RHS" => Some(Section::Rhs),
                "RANGES" => Some(Section::Ranges),
                "BOUNDS" => Some(Section::Bounds),
                "ENDATA" => return p.finish(line),
                _ => return Err(MpsError::UnknownSection { line, name: key }),
            };
            continue;
        }
        let section = p.section.ok_or_else(|| MpsError::Malformed { line, msg: "data outside any section".into() })?;
        let free: Vec<&str> = raw.split_whitespace().collect();
        let item = match p.interpret(section, &free, line) {
            Ok(item) => item,
            Err(err) => match fixed_fields(raw, section) {
                Some(fields) => {
                    let fields: Vec<&str> = fields.iter().map(String::as_str).collect();
                    p.interpret(section, &fields, line).map_err(|_| err)?
                }
                None => return Err(err),
            },
        };
        p.apply(item);
    }
    Err(MpsError::Malformed { line: last, msg: "missing ENDATA".into() })
}

/// Splits a line into the fixed-format fields used by `section`, or `None`
/// when the line does not respect the column layout.
fn fixed_fields(raw: &str, section: Section) -> Option<Vec<String>> {
    const WINDOWS: [(usize, usize); 6] = [(1, 3), (4, 12), (14, 22), (24, 36), (39, 47), (49, 61)];
    let chars: Vec<char> = raw.chars().collect();
    if chars.len() > 61 {
        return None;
    }
    let mut inside = vec![false; chars.len()];
    for &(a, b) in &WINDOWS {
        for flag in inside.iter_mut().take(b.min(chars.len())).skip(a) {
            *flag = true;
        }
    }
    if chars.iter().zip(&inside).any(|(c, &ok)| !ok && !c.is_whitespace()) {
        return None;
    }
    let field = |(a, b): (usize, usize)| -> String {
        chars.get(a..b.min(chars.len())).map(|s| s.iter().collect::<String>().trim().to_string()).unwrap_or_default()
    };
    let mut fields: Vec<String> = WINDOWS.iter().map(|&w| field(w)).collect();
    while fields.last().is_some_and(|f| f.is_empty()) {
        fields.pop();
    }
    match section {
        Section::Rows | Section::Bounds => Some(fields),
        _ => {
            if fields.first().is_some_and(|f| !f.is_empty()) {
                return None;
            }
            Some(fields.into_iter().skip(1).collect())
        }
    }
}

fn number(tok: &str, line: usize) -> Result<f64, MpsError> {
    match tok.parse::<f64>() {
        Ok(v) if !v.is_nan() => Ok(v),
        _ => Err(MpsError::Malformed { line, msg: format!("`{tok}` is not a number") }),
    }
}

impl Parser {
    fn row(&self, name: &str, line: usize) -> Result<usize, MpsError> {
        self.row_index.get(name).copied().ok_or_else(|| MpsError::UnknownRow { line, name: name.into() })
    }

    fn cells(&self, toks: &[&str], line: usize) -> Result<Vec<(usize, f64)>, MpsError> {
        if toks.is_empty() || !toks.len().is_multiple_of(2) || toks.len() > 4 {
            return Err(MpsError::Malformed { line, msg: "expected one or two (row, value) pairs".into() });
        }
        let mut out = Vec::new();
        for pair in toks.chunks(2) {
            let row = self.row(pair[0], line)?;
            if out.iter().any(|&(r, _)| r == row) {
                return Err(MpsError::Malformed { line, msg: format!("row `{}` repeated on one line", pair[0]) });
            }
            out.push((row, number(pair[1], line)?));
        }
        Ok(out)
    }

    /// Set name and cells of an RHS or RANGES line, whose set name may be
    /// omitted in free format.
    fn set_cells(&self, toks: &[&str], line: usize) -> Result<(String, Vec<(usize, f64)>), MpsError> {
        if toks.len() % 2 == 1 {
            Ok((toks[0].to_string(), self.cells(&toks[1..], line)?))
        } else {
            Ok((String::new(), self.cells(toks, line)?))
        }
    }

    fn interpret(&self, section: Section, toks: &[&str], line: usize) -> Result<Item, MpsError> {
        match section {
            Section::Rows => {
                let [code, name] = toks else {
                    return Err(MpsError::Malformed { line, msg: "expected row type and name".into() });
                };
                let kind = match code.to_ascii_uppercase().as_str() {
                    "N" => RowKind::N,
                    "L" => RowKind::L,
                    "G" => RowKind::G,
                    "E" => RowKind::E,
                    other => return Err(MpsError::Malformed { line, msg: format!("unknown row type `{other}`") }),
                };
                if self.row_index.contains_key(*name) {
                    return Err(MpsError::DuplicateRow { line, name: name.to_string() });
                }
                Ok(Item::Row(kind, name.to_string()))
            }
            Section::Columns => {
                if toks.iter().any(|t| t.contains("'MARKER'")) {
                    return Err(MpsError::Malformed { line, msg: "integer markers are not supported".into() });
                }
                let Some((name, rest)) = toks.split_first() else {
                    return Err(MpsError::Malformed { line, msg: "empty COLUMNS line".into() });
                };
                let cells = self.cells(rest, line)?;
                if let Some(&col) = self.col_index.get(*name) {
                    if let Some(&(r, _)) = cells.iter().find(|(r, _)| self.seen.contains(&(*r, col))) {
                        let row = &self.doc.rows[r].1;
                        return Err(MpsError::Malformed { line, msg: format!("second entry for ({row}, {name})") });
                    }
                }
                Ok(Item::Column { name: name.to_string(), cells })
            }
            Section::Rhs => {
                let (set, cells) = self.set_cells(toks, line)?;
                Ok(Item::Rhs { set, cells })
            }
            Section::Ranges => {
                let (set, cells) = self.set_cells(toks, line)?;
                if let Some(&(r, _)) = cells.iter().find(|(r, _)| self.doc.rows[*r].0 == RowKind::N) {
                    let row = &self.doc.rows[r].1;
                    return Err(MpsError::Malformed { line, msg: format!("RANGES on objective row `{row}`") });
                }
                Ok(Item::Range { set, cells })
            }
            Section::Bounds => {
                let Some((code, rest)) = toks.split_first() else {
                    return Err(MpsError::Malformed { line, msg: "empty BOUNDS line".into() });
                };
                let kind = match code.to_ascii_uppercase().as_str() {
                    "LO" => BoundKind::Lo,
                    "UP" => BoundKind::Up,
                    "FX" => BoundKind::Fx,
                    "FR" => BoundKind::Fr,
                    "MI" => BoundKind::Mi,
                    "PL" => BoundKind::Pl,
                    other => return Err(MpsError::UnsupportedBound { line, code: other.to_string() }),
                };
                let (set, col, value) = match (kind.takes_value(), rest) {
                    (true, [set, col, v]) => (*set, *col, Some(number(v, line)?)),
                    (true, [col, v]) => ("", *col, Some(number(v, line)?)),
                    (false, [set, col, _]) | (false, [set, col]) => (*set, *col, None),
                    (false, [col]) => ("", *col, None),
                    _ => return Err(MpsError::Malformed { line, msg: format!("wrong field count for {code} bound") }),
                };
                let column = self
                    .col_index
                    .get(col)
                    .copied()
                    .ok_or_else(|| MpsError::UnknownColumn { line, name: col.to_string() })?;
                Ok(Item::Bound { set: set.to_string(), bound: Bound { kind, column, value } })
            }
        }
    }

    fn apply(&mut self, item: Item) {
        let keep = |slot: &mut Option<String>, set: &str| slot.get_or_insert_with(|| set.to_string()).as_str() == set;
        match item {
            Item::Row(kind, name) => {
                self.row_index.insert(name.clone(), self.doc.rows.len());
                self.doc.rows.push((kind, name));
            }
            Item::Column { name, cells } => {
                let next = self.doc.columns.len();
                let col = *self.col_index.entry(name.clone()).or_insert(next);
                if col == next {
                    self.doc.columns.push(name);
                }
                for (row, v) in cells {
                    self.seen.insert((row, col));
                    if v != 0.0 {
                        self.doc.entries.push((row, col, v));
                    }
                }
            }
            Item::Rhs { set, cells } => {
                if keep(&mut self.rhs_set, &set) {
                    self.doc.rhs.extend(cells);
                }
            }
            Item::Range { set, cells } => {
                if keep(&mut self.range_set, &set) {
                    self.doc.ranges.extend(cells);
                }
            }
            Item::Bound { set, bound } => {
                if keep(&mut self.bound_set, &set) {
                    self.doc.bounds.push(bound);
                }
            }
        }
    }

    fn finish(mut self, line: usize) -> Result<MpsDocument, MpsError> {
        if self.doc.objective_row().is_none() {
            return Err(MpsError::Malformed { line, msg: "no objective (N) row declared".into() });
        }
        self.doc.entries.sort_by_key(|&(r, c, _)| (c, r));
        Ok(self.doc)
    }
}

/// Column bounds after applying BOUNDS to the defaults `0 ≤ x < ∞`.
///
/// An UP bound below zero on a column whose lower bound was never set
/// makes the column unbounded below, as most MPS readers do.
pub fn column_bounds(doc: &MpsDocument) -> Result<(Vec<f64>, Vec<f64>), MpsError> {
    let n = doc.columns.len();
    let mut lower = vec![0.0; n];
    let mut upper = vec![f64::INFINITY; n];
    let mut lower_set = vec![false; n];
    let clip = |v: f64| {
        if v >= INFINITY_CUTOFF {
            f64::INFINITY
        } else if v <= -INFINITY_CUTOFF {
            f64::NEG_INFINITY
        } else {
            v
        }
    };
    for b in &doc.bounds {
        let j = b.column;
        let v = clip(b.value.unwrap_or(0.0));
        match b.kind {
            BoundKind::Lo => {
                lower[j] = v;
                lower_set[j] = true;
            }
            BoundKind::Up => {
                upper[j] = v;
                if v < 0.0 && !lower_set[j] && lower[j] == 0.0 {
                    lower[j] = f64::NEG_INFINITY;
                }
            }
            BoundKind::Fx => {
                lower[j] = v;
                upper[j] = v;
                lower_set[j] = true;
            }
            BoundKind::Fr => {
                lower[j] = f64::NEG_INFINITY;
                upper[j] = f64::INFINITY;
                lower_set[j] = true;
            }
            BoundKind::Mi => {
                lower[j] = f64::NEG_INFINITY;
                lower_set[j] = true;
            }
            BoundKind::Pl => upper[j] = f64::INFINITY,
        }
    }
    for j in 0..n {
        if lower[j] > upper[j] || lower[j] == f64::INFINITY || upper[j] == f64::NEG_INFINITY {
            return Err(MpsError::ConflictingBounds { name: doc.columns[j].clone(), lower: lower[j], upper: upper[j] });
        }
    }
    Ok((lower, upper))
}

/// The `≥` rows one MPS row turns into, as `(sign, rhs)`: the row reads
/// `sign · aᵀx ≥ rhs`. N rows give nothing.
pub fn row_pieces(kind: RowKind, b: f64, range: Option<f64>) -> Vec<(f64, f64)> {
    let r = range.unwrap_or(0.0);
    match kind {
        RowKind::N => vec![],
        RowKind::G if range.is_some() => vec![(1.0, b), (-1.0, -(b + r.abs()))],
        RowKind::G => vec![(1.0, b)],
        RowKind::L if range.is_some() => vec![(-1.0, -b), (1.0, b - r.abs())],
        RowKind::L => vec![(-1.0, -b)],
        RowKind::E if r > 0.0 => vec![(1.0, b), (-1.0, -(b + r))],
        RowKind::E if r < 0.0 => vec![(1.0, b + r), (-1.0, -b)],
        RowKind::E => vec![(1.0, b), (-1.0, -b)],
    }
}

/// `min cᵀx, Ax ≥ b, l ≤ x ≤ u`. Rows keep the file order; a ranged or
/// equality row contributes two consecutive rows.
pub fn to_general_form(doc: &MpsDocument) -> Result<GeneralFormLp, MpsError> {
    let obj = doc.objective_row().ok_or(MpsError::Malformed { line: 0, msg: "no objective (N) row".into() })?;
    let n = doc.columns.len();
    let (lower, upper) = column_bounds(doc)?;
    let mut c = vec![0.0; n];
    let mut by_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); doc.rows.len()];
    for &(r, j, v) in &doc.entries {
        if r == obj {
            c[j] += v;
        }
        by_row[r].push((j, v));
    }
    let mut triplets = Vec::new();
    let mut b = Vec::new();
    for (i, (kind, _)) in doc.rows.iter().enumerate() {
        let rhs = doc.rhs.get(&i).copied().unwrap_or(0.0);
        for (sign, bi) in row_pieces(*kind, rhs, doc.ranges.get(&i).copied()) {
            let r = b.len();
            triplets.extend(by_row[i].iter().map(|&(j, v)| (r, j, sign * v)));
            b.push(bi);
        }
    }
    let a = SparseMatrix::from_triplets(b.len(), n, &triplets)
        .map_err(|e| MpsError::Malformed { line: 0, msg: e.to_string() })?;
    let obj_offset = -doc.rhs.get(&obj).copied().unwrap_or(0.0);
    Ok(GeneralFormLp { c, a, b, lower, upper, obj_offset })
}

fn writable(name: &str) -> Result<&str, MpsError> {
    if name.is_empty() || name.contains(char::is_whitespace) || name.starts_with('*') {
        return Err(MpsError::Unwritable(name.to_string()));
    }
    Ok(name)
}

/// Free-format text that [`parse_mps`] reads back to an equal document.
/// Columns without entries get an explicit zero on the objective row.
pub fn write_mps(doc: &MpsDocument) -> Result<String, MpsError> {
    let obj = doc.objective_row().ok_or(MpsError::Malformed { line: 0, msg: "no objective (N) row".into() })?;
    let mut out = String::new();
    let w = &mut out;
    // writing to a String cannot fail
    let _ = writeln!(w, "NAME          {}", doc.name.trim());
    let _ = writeln!(w, "ROWS");
    for (kind, name) in &doc.rows {
        let _ = writeln!(w, " {}  {}", kind.code(), writable(name)?);
    }
    let _ = writeln!(w, "COLUMNS");
    let mut per_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); doc.columns.len()];
    for &(r, j, v) in &doc.entries {
        per_col[j].push((r, v));
    }
    for (j, name) in doc.columns.iter().enumerate() {
        let name = writable(name)?;
        if per_col[j].is_empty() {
            let _ = writeln!(w, "    {name}  {}  0", doc.rows[obj].1);
        }
        for &(r, v) in &per_col[j] {
            let _ = writeln!(w, "    {name}  {}  {v:?}", doc.rows[r].1);
        }
    }
    for (title, map) in [("RHS", &doc.rhs), ("RANGES", &doc.ranges)] {
        if map.is_empty() {
            continue;
        }
        let _ = writeln!(w, "{title}");
        for (&r, v) in map {
            let _ = writeln!(w, "    SET  {}  {v:?}", doc.rows[r].1);
        }
    }
    if !doc.bounds.is_empty() {
        let _ = writeln!(w, "BOUNDS");
        for b in &doc.bounds {
            let col = &doc.columns[b.column];
            match b.value {
                Some(v) if b.kind.takes_value() => {
                    let _ = writeln!(w, " {} BND  {col}  {v:?}", b.kind.code());
                }
                _ => {
                    let _ = writeln!(w, " {} BND  {col}", b.kind.code());
                }
            }
        }
    }
    let _ = writeln!(w, "ENDATA");
    Ok(out)
}
