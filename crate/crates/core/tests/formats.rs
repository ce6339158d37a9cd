use std::fs;
use std::path::Path;

use proptest::prelude::*;
use segrand::io::{
    decode_pgm, decode_text, encode_pgm, encode_text, read_label_map, read_manifest, render_report,
    write_label_map, LabelFormat, ReportData, ReportFormat, SampleReport,
};
use segrand::{evaluate_pair, Error, EvalOptions, SegmentationMap};

fn map_strategy(max_label: u32) -> impl Strategy<Value = SegmentationMap> {
    (1usize..12, 1usize..12).prop_flat_map(move |(h, w)| {
        prop::collection::vec(0..=max_label, h * w)
            .prop_map(move |labels| SegmentationMap::from_rows(h, w, labels).unwrap())
    })
}

proptest! {
    #[test]
    fn pgm_round_trip_8bit(map in map_strategy(255)) {
        let bytes = encode_pgm(&map).unwrap();
        prop_assert_eq!(decode_pgm(&bytes, Path::new("x.pgm")).unwrap(), map);
    }

    #[test]
    fn pgm_round_trip_16bit(map in map_strategy(65_535)) {
        let bytes = encode_pgm(&map).unwrap();
        prop_assert_eq!(decode_pgm(&bytes, Path::new("x.pgm")).unwrap(), map);
    }

    #[test]
    fn text_round_trip(map in map_strategy(u32::MAX)) {
        let text = encode_text(&map).unwrap();
        prop_assert_eq!(decode_text(&text, Path::new("x.txt")).unwrap(), map);
    }
}

#[test]
fn pgm_bytes_are_exact() {
    let map = SegmentationMap::from_rows(2, 3, vec![0, 1, 2, 3, 4, 5]).unwrap();
    let bytes = encode_pgm(&map).unwrap();
    assert_eq!(bytes, b"P5\n3 2\n255\n\x00\x01\x02\x03\x04\x05");
}

#[test]
fn files_round_trip_and_frames_stack() {
    let dir = tempfile::tempdir().unwrap();
    let frames = dir.path().join("video");
    fs::create_dir(&frames).unwrap();
    let a = SegmentationMap::from_rows(2, 2, vec![0, 1, 1, 0]).unwrap();
    let b = SegmentationMap::from_rows(2, 2, vec![2, 2, 3, 3]).unwrap();
    write_label_map(&a, &frames.join("f0.pgm"), LabelFormat::Pgm).unwrap();
    write_label_map(&b, &frames.join("f1.txt"), LabelFormat::Text).unwrap();
    let video = read_label_map(&frames).unwrap();
    assert_eq!(video.shape().frames, 2);
    assert_eq!(video.labels(), &[0, 1, 1, 0, 2, 2, 3, 3]);
    assert_eq!(read_label_map(&frames.join("f1.txt")).unwrap(), b);
}

#[test]
fn unsupported_and_truncated_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let ppm = dir.path().join("x.ppm");
    fs::write(&ppm, b"P6\n1 1\n255\n\x00\x00\x00").unwrap();
    assert!(matches!(read_label_map(&ppm), Err(Error::UnsupportedFormat(_))));
    let short = dir.path().join("short.pgm");
    fs::write(&short, b"P5\n2 2\n255\n\x00\x01").unwrap();
    assert!(matches!(read_label_map(&short), Err(Error::TruncatedData { .. })));
    let missing = dir.path().join("missing.pgm");
    assert_eq!(read_label_map(&missing).unwrap_err().kind(), "IoFailure");
}

#[test]
fn manifest_to_report() {
    let dir = tempfile::tempdir().unwrap();
    let truth = SegmentationMap::from_rows(2, 3, vec![0, 0, 1, 1, 2, 2]).unwrap();
    let pred = SegmentationMap::from_rows(2, 3, vec![5, 5, 0, 1, 2, 2]).unwrap();
    write_label_map(&truth, &dir.path().join("t.pgm"), LabelFormat::Pgm).unwrap();
    write_label_map(&pred, &dir.path().join("p.txt"), LabelFormat::Text).unwrap();
    let manifest_path = dir.path().join("m.csv");
    fs::write(&manifest_path, "sample_id,truth,pred\n a , t.pgm , p.txt \n").unwrap();

    let manifest = read_manifest(&manifest_path).unwrap();
    assert_eq!(manifest.entries.len(), 1);
    let entry = &manifest.entries[0];
    assert_eq!(entry.sample_id, "a");
    let report = evaluate_pair(
        &read_label_map(&entry.truth_path).unwrap(),
        &read_label_map(&entry.pred_path).unwrap(),
        &EvalOptions::default(),
    )
    .unwrap();
    let samples = [SampleReport {
        sample_id: entry.sample_id.clone(),
        report,
    }];
    let csv = render_report(ReportData::Samples(&samples), ReportFormat::Csv).unwrap();
    assert_eq!(
        csv.lines().nth(1).unwrap(),
        "a,6,4,2,,,,0.5714285714285714,1.0,0.4,1.0,0.5,none"
    );
}

#[test]
fn manifest_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.csv");
    fs::write(&path, "id,truth,pred\n").unwrap();
    assert!(matches!(read_manifest(&path), Err(Error::MalformedHeader { .. })));
    fs::write(&path, "sample_id,truth,pred\n").unwrap();
    assert!(matches!(read_manifest(&path), Err(Error::EmptyManifest(_))));
    fs::write(&path, "sample_id,truth,pred\na,t,p\na,t,p\n").unwrap();
    assert!(matches!(read_manifest(&path), Err(Error::DuplicateSampleId(_))));
}
