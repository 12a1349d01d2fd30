//! Fixtures shared by the construction benchmarks.

use flexperm::words::atom_sequence;
use flexperm::{AtomSequence, PartialBijection, Point, Word};

/// The partial cycle `0 -> 1 -> ... -> n-1`.
pub fn path_map(n: Point) -> PartialBijection {
    let mut g = PartialBijection::new();
    for a in 1..n {
        g.insert(a - 1, a).unwrap();
    }
    g
}

pub fn atoms(text: &str) -> AtomSequence {
    let w: Word = text.parse().unwrap();
    atom_sequence(&w).unwrap()
}
