use std::collections::BTreeMap;

use pdhg_cli::mps::{
    column_bounds, parse_mps, to_general_form, write_mps, Bound, BoundKind, MpsDocument, MpsError, RowKind,
};
use proptest::prelude::*;

const INF: f64 = f64::INFINITY;

fn data(name: &str) -> Vec<u8> {
    std::fs::read(format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

const MINIMAL: &str = "\
NAME          MINIMAL
ROWS
 N  obj
 G  c1
COLUMNS
    x         obj          3.0   c1           1.0
    y         obj          2.0   c1           4.0
RHS
    rhs       c1           5.0
ENDATA
";

#[test]
fn minimal_fixture_triplets() {
    let doc = parse_mps(MINIMAL.as_bytes()).unwrap();
    assert_eq!(doc.name, "MINIMAL");
    assert_eq!(doc.rows, vec![(RowKind::N, "obj".to_string()), (RowKind::G, "c1".to_string())]);
    assert_eq!(doc.columns, vec!["x", "y"]);
    assert_eq!(doc.entries, vec![(0, 0, 3.0), (1, 0, 1.0), (0, 1, 2.0), (1, 1, 4.0)]);
    assert_eq!(doc.rhs, BTreeMap::from([(1, 5.0)]));

    let lp = to_general_form(&doc).unwrap();
    assert_eq!(lp.c, vec![3.0, 2.0]);
    assert_eq!(lp.a.to_dense(), vec![vec![1.0, 4.0]]);
    assert_eq!(lp.b, vec![5.0]);
    assert_eq!((lp.lower, lp.upper, lp.obj_offset), (vec![0.0, 0.0], vec![INF, INF], 0.0));
}

#[test]
fn missing_rhs_defaults_to_zero() {
    let text = MINIMAL.replace("RHS\n    rhs       c1           5.0\n", "");
    let lp = to_general_form(&parse_mps(text.as_bytes()).unwrap()).unwrap();
    assert_eq!(lp.b, vec![0.0]);
}

#[test]
fn free_bound_opens_both_sides() {
    let text = MINIMAL.replace("ENDATA", "BOUNDS\n FR bnd       y\nENDATA");
    let (l, u) = column_bounds(&parse_mps(text.as_bytes()).unwrap()).unwrap();
    assert_eq!((l, u), (vec![0.0, -INF], vec![INF, INF]));
}

#[test]
fn less_equal_row_is_negated() {
    let text = "\
NAME
ROWS
 N  obj
 L  c1
COLUMNS
    x         c1           1.0
RHS
    rhs       c1           2.0
ENDATA
";
    let lp = to_general_form(&parse_mps(text.as_bytes()).unwrap()).unwrap();
    assert_eq!(lp.a.to_dense(), vec![vec![-1.0]]);
    assert_eq!(lp.b, vec![-2.0]);
}

#[test]
fn equality_row_becomes_two_opposite_rows() {
    let text = MINIMAL.replace(" G  c1", " E  c1");
    let lp = to_general_form(&parse_mps(text.as_bytes()).unwrap()).unwrap();
    assert_eq!(lp.a.to_dense(), vec![vec![1.0, 4.0], vec![-1.0, -4.0]]);
    assert_eq!(lp.b, vec![5.0, -5.0]);
}

/// Each MPS row becomes one or two rows `±aᵀx ≥ b`; recover the interval
/// `[lo, hi]` on `aᵀx` they describe.
fn row_intervals(text: &[u8]) -> Vec<(f64, f64)> {
    let doc = parse_mps(text).unwrap();
    let lp = to_general_form(&doc).unwrap();
    let dense = lp.a.to_dense();
    let mut out = Vec::new();
    let mut r = 0;
    for (i, (kind, _)) in doc.rows.iter().enumerate() {
        let pieces = match kind {
            RowKind::N => continue,
            RowKind::E => 2,
            _ if doc.ranges.contains_key(&i) => 2,
            _ => 1,
        };
        let a: Vec<f64> = (0..doc.columns.len())
            .map(|j| doc.entries.iter().find(|e| e.0 == i && e.1 == j).map_or(0.0, |e| e.2))
            .collect();
        let neg: Vec<f64> = a.iter().map(|v| -v).collect();
        let (mut lo, mut hi) = (-INF, INF);
        for _ in 0..pieces {
            if dense[r] == a {
                lo = lo.max(lp.b[r]);
            } else {
                assert_eq!(dense[r], neg);
                hi = hi.min(-lp.b[r]);
            }
            r += 1;
        }
        out.push((lo, hi));
    }
    assert_eq!(r, dense.len());
    out
}

#[test]
fn ranges_match_an_independent_reader() {
    // row_lower_ / row_upper_ reported by HiGHS for tests/data/ranges.mps
    let lower = [1.0, 2.5, 2.0, 1.0, 1.5, -2.0, 4.5];
    let upper = [3.5, 4.0, 6.0, 3.0, 1.5, 1.0, 5.0];
    let got = row_intervals(&data("ranges.mps"));
    let want: Vec<(f64, f64)> = lower.into_iter().zip(upper).collect();
    assert_eq!(got, want);
}

#[test]
fn ranged_g_row_is_a_two_sided_pair() {
    let text = MINIMAL.replace("ENDATA", "RANGES\n    rng       c1           -2.0\nENDATA");
    let lp = to_general_form(&parse_mps(text.as_bytes()).unwrap()).unwrap();
    assert_eq!(lp.a.to_dense(), vec![vec![1.0, 4.0], vec![-1.0, -4.0]]);
    assert_eq!(lp.b, vec![5.0, -7.0]);
}

#[test]
fn bounds_match_an_independent_reader() {
    // col_lower_ / col_upper_ and the objective offset reported by HiGHS for
    // tests/data/bounds.mps, except column F: HiGHS keeps F ≥ 0 under
    // `UP -3`, which makes the column empty, while a negative upper bound
    // on a column without a lower bound is read here as x ≤ -3.
    let lower = [-1.5, 0.0, 2.0, -INF, -INF, -INF, 1.0, 0.0, -INF];
    let upper = [INF, 4.0, 2.0, INF, INF, -3.0, INF, INF, 7.0];
    let lp = to_general_form(&parse_mps(&data("bounds.mps")).unwrap()).unwrap();
    assert_eq!(lp.lower, lower);
    assert_eq!(lp.upper, upper);
    assert_eq!(lp.obj_offset, -2.5);
}

#[test]
fn default_bounds_are_nonnegative() {
    let text = MINIMAL.replace("ENDATA", "BOUNDS\n UP bnd       x            4.0\nENDATA");
    let (l, u) = column_bounds(&parse_mps(text.as_bytes()).unwrap()).unwrap();
    assert_eq!((l, u), (vec![0.0, 0.0], vec![4.0, INF]));
}

#[test]
fn binary_bounds_are_rejected() {
    let text = MINIMAL.replace("ENDATA", "BOUNDS\n BV bnd       x\nENDATA");
    let err = parse_mps(text.as_bytes()).unwrap_err();
    assert_eq!(err, MpsError::UnsupportedBound { line: 11, code: "BV".into() });
    assert!(err.to_string().contains("BV"));
}

#[test]
fn conflicting_bounds_are_rejected() {
    let text =
        MINIMAL.replace("ENDATA", "BOUNDS\n LO bnd       x            3.0\n UP bnd       x            1.0\nENDATA");
    let err = to_general_form(&parse_mps(text.as_bytes()).unwrap()).unwrap_err();
    assert_eq!(err, MpsError::ConflictingBounds { name: "x".into(), lower: 3.0, upper: 1.0 });
}

#[test]
fn errors_carry_line_numbers() {
    let cases: [(String, MpsError); 5] = [
        (MINIMAL.replace("RHS\n", "OBJSENSE\n"), MpsError::UnknownSection { line: 8, name: "OBJSENSE".into() }),
        (MINIMAL.replace(" G  c1", " G  obj"), MpsError::DuplicateRow { line: 4, name: "obj".into() }),
        (MINIMAL.replace("    rhs       c1", "    rhs       c9"), MpsError::UnknownRow { line: 9, name: "c9".into() }),
        (
            MINIMAL.replace("y         obj          2.0   c1", "y         obj          2.0   c2"),
            MpsError::UnknownRow { line: 7, name: "c2".into() },
        ),
        (
            MINIMAL.replace("ENDATA", "BOUNDS\n UP bnd       z            1.0\nENDATA"),
            MpsError::UnknownColumn { line: 11, name: "z".into() },
        ),
    ];
    for (text, want) in cases {
        assert_eq!(parse_mps(text.as_bytes()).unwrap_err(), want);
    }
}

#[test]
fn garbage_is_a_parse_error() {
    let err = parse_mps(b"this is not an lp\n").unwrap_err();
    assert_eq!(err, MpsError::UnknownSection { line: 1, name: "THIS".into() });
    assert!(matches!(parse_mps(b"ROWS\n N  obj\n X  c1\nENDATA\n"), Err(MpsError::Malformed { line: 3, .. })));
    assert!(matches!(parse_mps(b"ROWS\n G  c1\nENDATA\n"), Err(MpsError::Malformed { line: 3, .. })));
    assert!(matches!(parse_mps(MINIMAL.replace("3.0", "three").as_bytes()), Err(MpsError::Malformed { line: 6, .. })));
}

#[test]
fn fixed_and_free_layouts_agree() {
    let fixed = data("bounds.mps");
    let free: String = String::from_utf8(fixed.clone())
        .unwrap()
        .lines()
        .map(|l| {
            if l.starts_with(' ') {
                format!(" {}\n", l.split_whitespace().collect::<Vec<_>>().join(" "))
            } else {
                format!("{l}\n")
            }
        })
        .collect();
    assert_eq!(parse_mps(free.as_bytes()).unwrap(), parse_mps(&fixed).unwrap());
}

#[test]
fn files_round_trip_through_the_writer() {
    for name in ["ranges.mps", "bounds.mps"] {
        let doc = parse_mps(&data(name)).unwrap();
        let again = parse_mps(write_mps(&doc).unwrap().as_bytes()).unwrap();
        assert_eq!(again, doc, "{name}");
    }
}

#[test]
fn names_with_spaces_cannot_be_written() {
    let mut doc = parse_mps(MINIMAL.as_bytes()).unwrap();
    doc.columns[0] = "x 1".into();
    assert_eq!(write_mps(&doc).unwrap_err(), MpsError::Unwritable("x 1".into()));
}

fn document() -> impl Strategy<Value = MpsDocument> {
    let kinds = prop::collection::vec(
        prop_oneof![Just(RowKind::L), Just(RowKind::G), Just(RowKind::E), Just(RowKind::N)],
        0..5,
    );
    (kinds, 1usize..5)
        .prop_flat_map(|(extra, n)| {
            let mut rows = vec![(RowKind::N, "obj".to_string())];
            rows.extend(extra.into_iter().enumerate().map(|(i, k)| (k, format!("r{i}"))));
            let m = rows.len();
            let value = prop_oneof![-1e3..1e3f64, (-5i32..5).prop_map(f64::from)];
            let entries =
                prop::collection::btree_map((0..n, 0..m), value.clone().prop_filter("nonzero", |v| *v != 0.0), 0..12);
            let rhs = prop::collection::btree_map(0..m, value.clone(), 0..m);
            let ranges = prop::collection::btree_map(1..m.max(2), value.clone(), 0..m);
            let kind = prop_oneof![
                Just(BoundKind::Lo),
                Just(BoundKind::Up),
                Just(BoundKind::Fx),
                Just(BoundKind::Fr),
                Just(BoundKind::Mi),
                Just(BoundKind::Pl)
            ];
            let bounds = prop::collection::vec((kind, 0..n, value), 0..6);
            (Just(rows), Just(n), entries, rhs, ranges, bounds)
        })
        .prop_map(|(rows, n, entries, rhs, ranges, bounds)| {
            let m = rows.len();
            let not_n = |r: &usize| *r < m && rows[*r].0 != RowKind::N;
            MpsDocument {
                name: "GEN".into(),
                columns: (0..n).map(|j| format!("x{j}")).collect(),
                entries: entries.into_iter().map(|((j, r), v)| (r, j, v)).collect(),
                rhs: rhs.into_iter().collect(),
                ranges: ranges.into_iter().filter(|(r, _)| not_n(r)).collect(),
                bounds: bounds
                    .into_iter()
                    .map(|(kind, column, v)| Bound {
                        kind,
                        column,
                        value: matches!(kind, BoundKind::Lo | BoundKind::Up | BoundKind::Fx).then_some(v),
                    })
                    .collect(),
                rows,
            }
        })
}

proptest! {
    #[test]
    fn write_then_parse_is_the_identity(doc in document()) {
        let text = write_mps(&doc).unwrap();
        let again = parse_mps(text.as_bytes()).unwrap();
        prop_assert_eq!(&again, &doc);
        prop_assert_eq!(write_mps(&again).unwrap(), text);
    }
}
