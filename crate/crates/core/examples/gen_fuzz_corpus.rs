//! Writes the fuzz corpus seeds: `cargo run --example gen_fuzz_corpus`.

use std::fs;
use std::path::Path;

use fastmwem::harness::{emit_csv, gen_lp_instance, run_experiment, Experiment, ExperimentConfig};
use fastmwem::mips::{build_index, IndexConfig, VectorSet};

fn write(target: &str, name: &str, bytes: &[u8]) -> std::io::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fuzz/corpus").join(target);
    fs::create_dir_all(&dir)?;
    fs::write(dir.join(name), bytes)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rows: Vec<Vec<f64>> = (0..12).map(|i| (0..3).map(|j| ((i * 7 + j * 3) % 5) as f64 / 4.0).collect()).collect();
    let vectors = VectorSet::from_rows(&rows)?;
    let configs = [
        ("flat", IndexConfig::flat()),
        ("ivf", IndexConfig { nlist: Some(3), nprobe: Some(2), ..IndexConfig::ivf() }),
        ("hnsw", IndexConfig { m_neighbors: 4, ..IndexConfig::hnsw() }),
    ];
    for (name, config) in configs {
        write("index_load", &format!("{name}.fmwm"), &build_index(vectors.clone(), &config)?.to_bytes())?;
    }

    write("lp_parse", "generated.lp", gen_lp_instance(4, 3, 1)?.to_text().as_bytes())?;
    write("lp_parse", "tiny.lp", b"1 1\n0.5\n1\n1\n0.1 1 1\n")?;

    write("config_parse", "empty.json", b"{}")?;
    write(
        "config_parse",
        "full.json",
        br#"{"experiment": "query-scaling", "seed": 4, "m": [100, 200], "U": 64, "n": [500], "T": 5,
"epsilon": 0.5, "delta": 1e-4, "alpha": 0.3, "flavors": ["flat", "hnsw"],
"index": {"m_neighbors": 8, "ef_construction": 40, "ef_search": 20, "seed": 9},
"mode": "private", "slack": 0.01, "repetitions": 2, "error_every": 1, "paper_scale": false}"#,
    )?;

    let config = ExperimentConfig {
        m: vec![6],
        u: Some(8),
        n: vec![20],
        t: Some(3),
        repetitions: Some(1),
        ..ExperimentConfig::for_experiment(Experiment::QueryParity)
    };
    let mut csv = Vec::new();
    emit_csv(&run_experiment(&config)?, &mut csv)?;
    write("csv_parse", "parity.csv", &csv)?;
    let mut header = Vec::new();
    emit_csv(&[], &mut header)?;
    write("csv_parse", "header.csv", &header)?;
    Ok(())
}
