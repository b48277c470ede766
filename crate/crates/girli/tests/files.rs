use std::fs;

use girli::io::{
    read_idx_images, read_idx_labels, read_pgm, to_gray_bytes, write_idx_images, write_idx_labels,
    write_pgm,
};
use girli::output::{file_stem, write_results_csv, RESULTS_HEADER};
use girli::{RunError, RunRecord};
use girli_core::GridImage;
use proptest::prelude::*;

fn record(method: &str, iterations: usize) -> RunRecord {
    RunRecord {
        method: method.into(),
        sigma2: 0.5,
        delta: 59.5,
        tau: 1.1,
        iterations,
        wall_time_s: 0.25,
        rel_error_l2: 0.3,
        stop_reason: "MAX_ITER".into(),
        assumption_report: None,
    }
}

#[test]
fn pgm_round_trip_is_exact_on_gray_levels() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("img.pgm");
    let img = GridImage::from_fn(7, 5, |r, c| ((r * 7 + c) * 7 % 256) as f64 / 255.0);
    write_pgm(&path, &img).unwrap();
    let back = read_pgm(&path).unwrap();
    assert_eq!((back.width(), back.height()), (7, 5));
    assert_eq!(back.values(), img.values());
}

#[test]
fn pgm_clamps_out_of_range_values() {
    let img = GridImage::new(4, 1, vec![-0.5, 0.0, 0.5, 2.0]).unwrap();
    assert_eq!(to_gray_bytes(&img), [0, 0, 128, 255]);
}

#[test]
fn pgm_reader_skips_comments_and_rejects_bad_files() {
    let dir = tempfile::tempdir().unwrap();
    let ok = dir.path().join("ok.pgm");
    let mut bytes = b"P5\n# made by hand\n2 1\n255\n".to_vec();
    bytes.extend([0, 255]);
    fs::write(&ok, &bytes).unwrap();
    assert_eq!(read_pgm(&ok).unwrap().values(), [0.0, 1.0]);

    for (name, content) in [
        ("ascii.pgm", b"P2\n2 1\n255\n0 255\n".to_vec()),
        ("short.pgm", b"P5\n2 2\n255\n\x00".to_vec()),
        ("deep.pgm", b"P5\n1 1\n65535\n\x00\x00".to_vec()),
        ("empty.pgm", Vec::new()),
    ] {
        let path = dir.path().join(name);
        fs::write(&path, content).unwrap();
        assert!(
            matches!(read_pgm(&path), Err(RunError::Format { .. })),
            "{name}"
        );
    }
    assert!(matches!(
        read_pgm(&dir.path().join("missing.pgm")),
        Err(RunError::Io { .. })
    ));
}

#[test]
fn idx_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (ip, lp) = (dir.path().join("img.idx"), dir.path().join("lab.idx"));
    let images: Vec<GridImage> = (0..3)
        .map(|k| GridImage::from_fn(4, 3, |r, c| ((r + c + k) % 2) as f64))
        .collect();
    write_idx_images(&ip, &images).unwrap();
    write_idx_labels(&lp, &[3, 1, 4]).unwrap();
    assert_eq!(read_idx_images(&ip).unwrap(), images);
    assert_eq!(read_idx_labels(&lp).unwrap(), [3, 1, 4]);
    assert!(matches!(read_idx_images(&lp), Err(RunError::Format { .. })));
}

#[test]
fn results_csv_has_header_and_one_row_per_scheme() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("results.csv");
    let records: Vec<RunRecord> = ["GIRLI", "DDIRLI", "IRLI", "LANDWEBER"]
        .iter()
        .enumerate()
        .map(|(i, m)| record(m, 10 * i))
        .collect();
    write_results_csv(&path, &records).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5);
    assert_eq!(lines[0], RESULTS_HEADER.join(","));
    assert_eq!(lines[2], "DDIRLI,0.5,59.5,1.1,10,0.25,0.3,MAX_ITER");
}

#[test]
fn file_stems_are_path_safe() {
    assert_eq!(file_stem("GIRLI-GM-0.05"), "GIRLI-GM-0.05");
    assert_eq!(file_stem("a/b c"), "a_b_c");
}

proptest! {
    #[test]
    fn pgm_bytes_survive_a_round_trip(w in 1usize..12, h in 1usize..12, seed in any::<u64>()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.pgm");
        let img = GridImage::from_fn(w, h, |r, c| {
            ((seed >> ((r * w + c) % 56)) & 0xff) as f64 / 255.0
        });
        write_pgm(&path, &img).unwrap();
        let back = read_pgm(&path).unwrap();
        prop_assert_eq!(to_gray_bytes(&back), to_gray_bytes(&img));
    }
}
