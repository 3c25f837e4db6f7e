#![no_main]

use fastmwem::harness::{emit_csv, read_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(records) = read_csv(data) {
        let mut buf = Vec::new();
        emit_csv(&records, &mut buf).unwrap();
        assert_eq!(read_csv(buf.as_slice()).unwrap().len(), records.len());
    }
});
