use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column order of the results CSV.
pub const CSV_COLUMNS: [&str; 14] = [
    "config_hash",
    "seed",
    "experiment",
    "m",
    "U",
    "n",
    "d",
    "flavor",
    "iteration",
    "selected",
    "error",
    "samples_drawn",
    "wall_nanos",
    "build_nanos",
];

/// One measured event. Empty optional fields mean "not applicable".
///
/// `flavor` names the selection path: `classic` or `exhaustive` for the
/// unindexed baselines, an index flavor for Fast-MWEM, and `diff` for
/// derived classic-minus-fast error rows. Iteration 0 carries the starting
/// error and the index build time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_hash: String,
    pub seed: u64,
    pub experiment: String,
    pub m: Option<usize>,
    #[serde(rename = "U")]
    pub u: Option<usize>,
    pub n: Option<usize>,
    pub d: Option<usize>,
    pub flavor: String,
    pub iteration: usize,
    pub selected: Option<usize>,
    pub error: Option<f64>,
    pub samples_drawn: Option<usize>,
    pub wall_nanos: Option<u64>,
    pub build_nanos: Option<u64>,
}

/// Writes a header row and one line per record.
pub fn emit_csv<W: Write>(records: &[RunRecord], w: W) -> Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record(CSV_COLUMNS)?;
    for r in records {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

/// Parses a results CSV, checking the header against [`CSV_COLUMNS`].
pub fn read_csv<R: Read>(r: R) -> Result<Vec<RunRecord>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let header = reader.headers()?;
    if header.iter().ne(CSV_COLUMNS) {
        return Err(Error::Parse(format!("unexpected CSV header {:?}", header.iter().collect::<Vec<_>>())));
    }
    reader.deserialize().map(|row| row.map_err(Error::from)).collect()
}
