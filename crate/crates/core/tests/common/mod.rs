#![allow(dead_code)]

pub mod beta;
pub mod props;
pub mod random;
pub mod tamper;

use std::path::PathBuf;

use compacts::lang::{parse_compact, CompactSpec};
use compacts::ledger::{parse_scenario, NetworkConfig, Submission};

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(rel)
}

pub fn read(rel: &str) -> String {
    std::fs::read_to_string(fixture(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

pub fn spec(name: &str) -> CompactSpec {
    parse_compact(&read(&format!("compacts/{name}.cpt"))).unwrap()
}

pub fn scenario(name: &str) -> Vec<Submission> {
    parse_scenario(&read(&format!("scenarios/{name}.jsonl"))).unwrap()
}

pub fn net(name: &str) -> NetworkConfig {
    serde_json::from_str(&read(&format!("net/{name}.json"))).unwrap()
}

pub fn golden(name: &str) -> String {
    read(&format!("golden/{name}")).trim_end().to_string()
}

pub fn golden_chain() -> compacts::ledger::Chain {
    serde_json::from_str(&read("golden/chain10.json")).unwrap()
}

/// Every `.cpt` file in the fixture corpus as (file name, source), sorted.
pub fn corpus() -> Vec<(String, String)> {
    let mut files: Vec<_> = std::fs::read_dir(fixture("compacts"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "cpt"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read_to_string(&p).unwrap()))
        .collect()
}
