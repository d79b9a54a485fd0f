#![no_main]

use gramfreq::spec::{parse_spec, standardize};
use gramfreq::Weights;
use libfuzzer_sys::fuzz_target;
use std::sync::OnceLock;

fn spec() -> &'static gramfreq::spec::Specification {
    static SPEC: OnceLock<gramfreq::spec::Specification> = OnceLock::new();
    SPEC.get_or_init(|| standardize(&parse_spec("S -> a S b S | c S | _ ;").unwrap()).unwrap().0)
}

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let mut w = Weights::uniform();
        let _ = w.apply_file(spec(), text);
        let _ = w.set_from_text(spec(), text);
    }
});
