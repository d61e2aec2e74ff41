#![no_main]
use libfuzzer_sys::fuzz_target;

use abelfem::quadrature::OrderMode;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(mode) = text.parse::<OrderMode>() {
        assert_eq!(mode.to_string().parse::<OrderMode>().unwrap(), mode);
    }
});
