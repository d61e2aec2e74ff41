#![no_main]
use libfuzzer_sys::fuzz_target;

use abelfem::operator::ProblemId;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(id) = text.parse::<ProblemId>() {
        let again: ProblemId = id.to_string().parse().expect("display output parses");
        assert_eq!(again, id);
    }
});
