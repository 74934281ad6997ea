#![allow(dead_code)]

use std::path::{Path, PathBuf};

use lexplain_core::{parse_trace, TraceDocument};

pub fn fixture_path(rel: &str) -> PathBuf {
    [env!("CARGO_MANIFEST_DIR"), "..", "..", "fixtures", rel].iter().collect()
}

pub fn fixture(rel: &str) -> String {
    let p = fixture_path(rel);
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

pub fn listing1() -> TraceDocument {
    parse_trace(&fixture("traces/listing1.trace")).unwrap()
}

pub fn listing2() -> TraceDocument {
    parse_trace(&fixture("traces/listing2.trace")).unwrap()
}

/// EU explanation, Polish explanation, comparison.
pub fn recorded_outputs() -> [String; 3] {
    [fixture("outputs/eu_explanation.txt"), fixture("outputs/pl_explanation.txt"), fixture("outputs/comparison.txt")]
}

/// Writes `responses` as `001.txt`, `002.txt`, ... into `dir`.
pub fn write_mock_dir(dir: &Path, responses: &[String]) {
    std::fs::create_dir_all(dir).unwrap();
    for (i, r) in responses.iter().enumerate() {
        std::fs::write(dir.join(format!("{:03}.txt", i + 1)), r).unwrap();
    }
}
