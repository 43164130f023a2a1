#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use cap_core::harness::{RunConfig, Variant};
use cap_core::ingest::{write_component_csv, write_truth_csv};
use cap_core::synthetic::{generate, SyntheticData, SyntheticSpec};
use cap_core::Horizon;

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/small")
}

/// Writes `data` as forecasts.csv and truth.csv under `dir` and returns a
/// config replaying every season of `spec`.
pub fn write_dataset(dir: &Path, spec: &SyntheticSpec, data: &SyntheticData<f64>) -> RunConfig {
    fs::create_dir_all(dir).unwrap();
    let forecasts = dir.join("forecasts.csv");
    let truth = dir.join("truth.csv");
    write_component_csv(&data.panel, fs::File::create(&forecasts).unwrap()).unwrap();
    write_truth_csv(&data.truth, fs::File::create(&truth).unwrap()).unwrap();
    let mut cfg = RunConfig::new(vec![forecasts], truth, spec.seasons.clone());
    cfg.targets = spec.targets.clone();
    cfg
}

pub fn synthetic_config(dir: &Path, spec: &SyntheticSpec, variants: &[Variant]) -> RunConfig {
    let data = generate::<f64>(spec).unwrap();
    let mut cfg = write_dataset(dir, spec, &data);
    cfg.variants = variants.to_vec();
    cfg
}

pub fn horizons(hs: &[u8]) -> Vec<Horizon> {
    hs.iter().map(|&h| Horizon::new(h).unwrap()).collect()
}

/// Relative path to contents for every file below `root`.
pub fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    out
}

/// First differing file between two trees, if any.
pub fn tree_diff(a: &Path, b: &Path) -> Option<String> {
    let (ta, tb) = (tree(a), tree(b));
    if ta.keys().ne(tb.keys()) {
        let only: Vec<_> = ta.keys().filter(|k| !tb.contains_key(*k)).chain(tb.keys().filter(|k| !ta.contains_key(*k))).collect();
        return Some(format!("file sets differ: {only:?}"));
    }
    ta.iter()
        .find(|(k, v)| tb[*k] != **v)
        .map(|(k, _)| format!("{} differs", k.display()))
}
