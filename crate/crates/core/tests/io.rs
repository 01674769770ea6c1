use std::path::Path;

use dcnmf::io::{load_constraints, load_matrix, parse_constraints, save_matrix};
use dcnmf::Error;
use ndarray::Array2;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_round_trip_is_exact(rows in 1usize..6, cols in 1usize..6, seed in prop::collection::vec(-1e6..1e6f64, 36)) {
        let m = Array2::from_shape_fn((rows, cols), |(r, c)| seed[r * 6 + c] * 10f64.powi((r as i32) - 3));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        save_matrix(&m, &path).unwrap();
        prop_assert_eq!(load_matrix(&path).unwrap(), m);
    }
}

#[test]
fn matrix_market_array() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.mtx");
    std::fs::write(&path, "%%MatrixMarket matrix array real general\n% c\n2 2\n1\n2\n3\n4\n").unwrap();
    let m = load_matrix(&path).unwrap();
    assert_eq!(m, ndarray::array![[1.0, 3.0], [2.0, 4.0]]);
}

#[test]
fn ragged_csv_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "1,2\n3\n").unwrap();
    let err = load_matrix(&path).unwrap_err();
    assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    assert_eq!(err.exit_code(), 4);
    assert!(matches!(load_matrix(dir.path().join("missing.csv")), Err(Error::Io { .. })));
}

#[test]
fn constraint_file() {
    let text = "# H columns\nlinear 1 0,0 1,0\nlinear 2 0,1:2 1,1\nfactor W\nlinear 1 0,0 1,0\nsphere 1 0.5\n";
    let cf = parse_constraints(text, Path::new("c.txt")).unwrap();
    assert_eq!(cf.h.linear.len(), 2);
    assert_eq!(cf.h.linear[1].weights, vec![2.0, 1.0]);
    assert_eq!(cf.w.linear.len(), 1);
    assert_eq!(cf.w.spheres.len(), 1);

    let err = parse_constraints("linear 1 0,0\nlinear x 0,1\n", Path::new("c.txt")).unwrap_err();
    match err {
        Error::Parse { line, col, .. } => assert_eq!((line, col), (2, 8)),
        other => panic!("{other}"),
    }
    assert!(parse_constraints("bogus 1\n", Path::new("c.txt")).is_err());

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.txt");
    std::fs::write(&path, text).unwrap();
    assert_eq!(load_constraints(&path).unwrap(), cf);
}
