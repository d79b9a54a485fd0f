//! Example grammars shipped with the crate.

pub const MOTZKIN: &str = include_str!("../fixtures/motzkin.gram");
pub const FIBONACCI: &str = include_str!("../fixtures/fibonacci.gram");
pub const MOTIF: &str = include_str!("../fixtures/motif.gram");
pub const STEM_LOOP: &str = include_str!("../fixtures/stemloop.gram");
pub const QUADTREE: &str = include_str!("../fixtures/quadtree.gram");
pub const RNA: &str = include_str!("../fixtures/rna.gram");
pub const RNA_LOOPS: &str = include_str!("../fixtures/rna_loops.gram");
pub const RNA_HELICES: &str = include_str!("../fixtures/rna_helices.gram");
pub const ARITH: &str = include_str!("../fixtures/arith.gram");

/// Every fixture with its file stem.
pub const ALL: &[(&str, &str)] = &[
    ("motzkin", MOTZKIN),
    ("fibonacci", FIBONACCI),
    ("motif", MOTIF),
    ("stemloop", STEM_LOOP),
    ("quadtree", QUADTREE),
    ("rna", RNA),
    ("rna_loops", RNA_LOOPS),
    ("rna_helices", RNA_HELICES),
    ("arith", ARITH),
];

/// Parse and standardize a fixture.
pub fn load(text: &str) -> crate::spec::Specification {
    let spec = crate::spec::parse_spec(text).expect("fixture parses");
    crate::spec::standardize(&spec).expect("fixture standardizes").0
}
