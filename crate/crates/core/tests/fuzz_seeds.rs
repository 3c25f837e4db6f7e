//! Replays the checked-in fuzz corpus, plus truncated and bit-flipped
//! variants of every seed, through the parsers.

use std::fs;
use std::path::PathBuf;

use fastmwem::harness::{read_csv, ExperimentConfig};
use fastmwem::lpsolve::LPInstance;
use fastmwem::mips::MipsIndex;

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fuzz/corpus").join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|entry| {
            let path = entry.unwrap().path();
            (path.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&path).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

fn variants(bytes: &[u8]) -> impl Iterator<Item = Vec<u8>> + '_ {
    let truncated = (0..bytes.len()).map(|len| bytes[..len].to_vec());
    let flipped = (0..bytes.len()).map(|i| {
        let mut b = bytes.to_vec();
        b[i] ^= 0x5a;
        b
    });
    truncated.chain(flipped)
}

fn text(bytes: &[u8]) -> Option<&str> {
    std::str::from_utf8(bytes).ok()
}

#[test]
fn index_seeds_load() {
    for (name, bytes) in seeds("index_load") {
        let index = MipsIndex::from_bytes(&bytes).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(index.to_bytes(), bytes, "{name}");
        for v in variants(&bytes) {
            let _ = MipsIndex::from_bytes(&v);
        }
    }
}

#[test]
fn lp_seeds_parse() {
    for (name, bytes) in seeds("lp_parse") {
        let lp = LPInstance::parse(text(&bytes).unwrap()).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(LPInstance::parse(&lp.to_text()).unwrap(), lp);
        for v in variants(&bytes) {
            if let Some(t) = text(&v) {
                let _ = LPInstance::parse(t);
            }
        }
    }
}

#[test]
fn config_seeds_parse() {
    for (name, bytes) in seeds("config_parse") {
        ExperimentConfig::from_json(text(&bytes).unwrap()).unwrap_or_else(|e| panic!("{name}: {e}"));
        for v in variants(&bytes) {
            if let Some(t) = text(&v) {
                let _ = ExperimentConfig::from_json(t);
            }
        }
    }
}

#[test]
fn csv_seeds_parse() {
    for (name, bytes) in seeds("csv_parse") {
        read_csv(bytes.as_slice()).unwrap_or_else(|e| panic!("{name}: {e}"));
        for v in variants(&bytes) {
            let _ = read_csv(v.as_slice());
        }
    }
}
