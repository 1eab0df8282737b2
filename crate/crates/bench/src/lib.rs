//! Fixtures shared by the benchmarks.

use gridperturb::GridCase;

/// The IEEE 118-bus case bundled under `data/`.
pub fn case118() -> GridCase {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/case118.json");
    let text = std::fs::read_to_string(path).expect("bundled case118.json");
    gridperturb::parse_case_json(&text).expect("bundled case parses")
}
