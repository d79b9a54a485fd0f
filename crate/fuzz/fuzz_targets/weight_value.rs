#![no_main]

use gramfreq::spec::AtomId;
use gramfreq::Weights;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Some(v) = gramfreq::spec::parse_weight_value(text) {
            // Anything the parser accepts is a valid weight.
            Weights::uniform().set(AtomId(0), v).expect("parsed weights are positive");
        }
    }
});
