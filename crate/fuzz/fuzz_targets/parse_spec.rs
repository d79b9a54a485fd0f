#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(spec) = gramfreq::spec::parse_spec(text) {
            // The canonical text must parse back to the same grammar.
            let again = gramfreq::spec::parse_spec(&spec.canonical_text()).expect("canonical text parses");
            assert_eq!(again.canonical_text(), spec.canonical_text());
        }
    }
});
