// Copyright 2026 hyperqec Contributors
// SPDX-License-Identifier: Apache-2.0

mod common;

use common::{gaussian_matrix, rng};
use hyperqec::io::{distribution_csv, format_sig17, MatrixFile, NetlistFile, RunReport};
use hyperqec::{reck_decompose, Error, ModeTransform};
use proptest::prelude::*;

proptest! {
    #[test]
    fn sig17_text_parses_back_exactly(bits in any::<u64>()) {
        let x = f64::from_bits(bits);
        prop_assume!(x.is_finite());
        let back: f64 = format_sig17(x).parse().unwrap();
        prop_assert_eq!(back.to_bits(), x.to_bits());
    }

    #[test]
    fn matrix_files_preserve_every_bit(seed in any::<u64>(), n in 1usize..=6) {
        let t = ModeTransform::new(gaussian_matrix(n, &mut rng(seed))).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        MatrixFile::from_transform(&t, "x", "test").write(&path).unwrap();
        let back = MatrixFile::read(&path).unwrap().to_transform().unwrap();
        prop_assert_eq!(back, t);
    }
}

#[test]
fn malformed_matrix_files_are_rejected() {
    let cases = [
        "not json",
        r#"{"format":"other","version":1,"mode_count":1,"entries":[[1,0]]}"#,
        r#"{"format":"hyperqec-matrix","version":1,"mode_count":2,"entries":[[1,0]]}"#,
    ];
    for text in cases {
        assert!(
            matches!(MatrixFile::parse(text), Err(Error::MalformedMatrix(_))),
            "{text}"
        );
    }
}

#[test]
fn netlist_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("n.json");
    let u = common::random_unitary(4, &mut rng(8));
    let file = NetlistFile::new(reck_decompose(&u).unwrap());
    file.write(&path).unwrap();
    assert_eq!(NetlistFile::read(&path).unwrap(), file);
}

#[test]
fn distribution_csv_has_header_and_rows() {
    let csv = distribution_csv(&[(0.25, 1.0), (0.5, 0.1)]);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "cycle_rank,fidelity,success_probability");
    assert_eq!(lines[2], "1,5.0000000000000000e-1,1.0000000000000001e-1");
}

#[test]
fn run_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let report = RunReport::new(
        "qec",
        serde_json::json!({"seed": 3}),
        serde_json::json!({"fidelity": 0.1 + 0.2}),
    );
    report.write(&path).unwrap();
    assert_eq!(RunReport::read(&path).unwrap(), report);
}
