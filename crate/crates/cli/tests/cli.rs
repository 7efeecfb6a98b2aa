use std::path::Path;
use std::process::{Command, Output};

use seequant_core::codec::{self, ImageGrid};

fn seequant(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seequant")).args(args).output().unwrap()
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

fn sample_image() -> ImageGrid {
    let samples = (0..23 * 13).map(|i| ((i * 37) % 200 + i / 23) as u16).collect();
    ImageGrid::new(23, 13, 8, samples).unwrap()
}

#[test]
fn encode_decode_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (img, seeq, back) = (path(dir.path(), "a.pgm"), path(dir.path(), "a.seeq"), path(dir.path(), "b.pgm"));
    let pgm = codec::write_pgm(&sample_image());
    std::fs::write(&img, &pgm).unwrap();
    assert!(seequant(&["encode", "--in", &img, "--out", &seeq, "--block", "3x2"]).status.success());
    assert!(seequant(&["decode", "--in", &seeq, "--out", &back]).status.success());
    assert_eq!(std::fs::read(&back).unwrap(), pgm);
}

#[test]
fn decode_depth_is_lossy_but_valid() {
    let dir = tempfile::tempdir().unwrap();
    let (img, seeq, back) = (path(dir.path(), "a.pgm"), path(dir.path(), "a.seeq"), path(dir.path(), "b.pgm"));
    std::fs::write(&img, codec::write_pgm(&sample_image())).unwrap();
    assert!(seequant(&["encode", "--in", &img, "--out", &seeq]).status.success());
    assert!(seequant(&["decode", "--in", &seeq, "--out", &back, "--depth", "1"]).status.success());
    let decoded = codec::load_pgm(&std::fs::read(&back).unwrap()).unwrap();
    assert_eq!((decoded.width(), decoded.height()), (23, 13));
    assert_eq!(seequant(&["decode", "--in", &seeq, "--out", &back, "--depth", "0"]).status.code(), Some(2));
}

#[test]
fn malformed_inputs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = path(dir.path(), "bad.bin");
    let out = path(dir.path(), "out");
    std::fs::write(&bad, b"P2 not binary").unwrap();
    assert_eq!(seequant(&["encode", "--in", &bad, "--out", &out]).status.code(), Some(2));
    assert_eq!(seequant(&["decode", "--in", &bad, "--out", &out]).status.code(), Some(2));
    assert_eq!(seequant(&["object", "see", "--in", &bad]).status.code(), Some(2));
    assert_eq!(seequant(&["encode", "--in", &bad, "--out", &out, "--block", "0x4"]).status.code(), Some(2));
    assert_eq!(seequant(&["--threads", "0", "object", "see", "--in", &bad]).status.code(), Some(2));
}

#[test]
fn missing_file_exits_1() {
    let out = seequant(&["decode", "--in", "/nonexistent/x.seeq", "--out", "/nonexistent/y.pgm"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn oversized_searches_are_refused() {
    let dir = tempfile::tempdir().unwrap();
    let objects = path(dir.path(), "objects.json");
    let many: Vec<String> = (0..9).map(|i| format!("[[{i},0],[0,{i}]]")).collect();
    std::fs::write(&objects, format!("[{}]", many.join(","))).unwrap();
    assert_eq!(seequant(&["object", "see", "--in", &objects]).status.code(), Some(3));

    let points = path(dir.path(), "points.csv");
    std::fs::write(&points, (0..9).map(|i| format!("{i},{}\n", i * i)).collect::<String>()).unwrap();
    assert_eq!(seequant(&["object", "partition", "--in", &points]).status.code(), Some(3));
}

#[test]
fn chi_reports_scale_and_permutation() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (path(dir.path(), "a.csv"), path(dir.path(), "b.csv"));
    std::fs::write(&a, "# triangle\n0,0\n2,0\n0,1\n").unwrap();
    std::fs::write(&b, "0,0\n0,2\n4,0\n").unwrap();
    let out = seequant(&["object", "chi", "--a", &a, "--b", &b, "--search"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let chi: f64 = text.lines().find_map(|l| l.strip_prefix("chi,")).unwrap().parse().unwrap();
    let alpha: f64 = text.lines().find_map(|l| l.strip_prefix("alpha,")).unwrap().parse().unwrap();
    assert!(chi < 1e-9);
    assert!((alpha - 0.5).abs() < 1e-12);
}

#[test]
fn analyze_writes_report_and_tree() {
    let dir = tempfile::tempdir().unwrap();
    let (img, report, tree) = (path(dir.path(), "a.pgm"), path(dir.path(), "r.csv"), path(dir.path(), "t.json"));
    std::fs::write(&img, codec::write_pgm(&sample_image())).unwrap();
    assert!(seequant(&["analyze", "--in", &img, "--out", &report, "--tree", &tree]).status.success());
    let csv = std::fs::read_to_string(&report).unwrap();
    assert!(csv.starts_with("metric,value\n"));
    assert!(csv.contains("\npsnr,inf\n"));
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(&tree).unwrap()).unwrap();
    assert!(json.is_object());
}
