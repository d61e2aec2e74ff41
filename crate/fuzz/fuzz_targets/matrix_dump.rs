#![no_main]
use libfuzzer_sys::fuzz_target;

use abelfem::assembly::{read_dump, write_dump};

fuzz_target!(|data: &[u8]| {
    if let Ok((matrix, rhs)) = read_dump(data) {
        let mut out = Vec::new();
        write_dump(&matrix, &rhs, &mut out).unwrap();
        assert_eq!(out, data);
    }
});
