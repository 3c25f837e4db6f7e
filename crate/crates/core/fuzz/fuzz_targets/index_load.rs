#![no_main]

use fastmwem::mips::MipsIndex;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(index) = MipsIndex::from_bytes(data) {
        assert_eq!(MipsIndex::from_bytes(&index.to_bytes()).unwrap().to_bytes(), index.to_bytes());
        if index.len() > 0 {
            let q = vec![1.0; index.dim()];
            let _ = fastmwem::mips::query_topk(&index, &q, 1);
        }
    }
});
