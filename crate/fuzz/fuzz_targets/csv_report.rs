#![no_main]
use libfuzzer_sys::fuzz_target;

use abelfem::harness::ConvergenceReport;

fuzz_target!(|data: &[u8]| {
    if let Ok(report) = ConvergenceReport::read_csv("fuzz", data) {
        let mut out = Vec::new();
        report.write_csv(&mut out).unwrap();
        let again = ConvergenceReport::read_csv("fuzz", out.as_slice()).unwrap();
        assert_eq!(again.rows.len(), report.rows.len());
        let _ = report.fit();
    }
});
