#![allow(dead_code)]

pub mod generate;
pub mod montecarlo;
pub mod naive;

use std::path::PathBuf;

use regcheck::checker::{prepare, CheckConfig, Prepared, Stage};

pub const FIXTURES: [&str; 5] = ["bathroom", "bathroom_clear", "fire", "classification", "mixed"];

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(format!("{name}.ifc"))
}

pub fn fixture(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap_or_else(|e| panic!("fixture {name}: {e}"))
}

pub fn prepared(name: &str) -> Prepared {
    prepare(&fixture(name), &CheckConfig::default(), Stage::Inferred).expect("fixture prepares")
}

pub const INST: &str = "http://example.org/regcheck/inst/";

pub fn inst(id: u64) -> String {
    format!("{INST}{id}")
}
