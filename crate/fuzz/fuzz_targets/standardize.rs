#![no_main]

use gramfreq::counting::build_count_table;
use gramfreq::spec::{parse_spec, standardize, validate};
use gramfreq::Weights;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(parsed) = parse_spec(text) else { return };
    let Ok((spec, _)) = standardize(&parsed) else { return };
    validate(&spec).expect("standardized grammars validate");
    if spec.classes().len() < 200 {
        let _ = build_count_table(&spec, &Weights::declared(&spec), 12);
    }
});
